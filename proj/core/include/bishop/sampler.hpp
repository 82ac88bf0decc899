#pragma once

// No-U-Turn sampler with multinomial trajectory sampling, dual-averaging
// step size adaptation and windowed diagonal metric adaptation.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace bishop {

struct NutsConfig {
  std::size_t chains = 4;
  std::size_t warmup = 600;
  std::size_t samples = 900;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  std::uint64_t seed = 0;

  /// Throws ValidationError unless warmup >= 100, samples >= 1, chains >= 1,
  /// 0 < target_accept < 1 and max_tree_depth >= 1.
  void validate() const;
};

struct DrawStats {
  bool divergent = false;
  int tree_depth = 0;
  int n_leapfrog = 0;
  double accept = 0.0;        // mean Metropolis probability over the trajectory
  double energy = 0.0;        // Hamiltonian at the selected point
  double energy_error = 0.0;  // H(selected) - H(start)
  double step_size = 0.0;
  double lp = 0.0;
};

struct ChainDraws {
  std::vector<double> values;  // draws x parameters, row-major
  std::vector<DrawStats> stats;
  double step_size = 0.0;
  std::vector<double> inv_metric;
  std::size_t warmup_divergences = 0;
};

/// chains x draws x named parameters plus per-draw statistics.
class PosteriorDraws {
 public:
  PosteriorDraws() = default;
  /// Throws ValidationError when chains disagree in draw count or a value
  /// table does not match draws x names.
  PosteriorDraws(std::vector<std::string> names, std::vector<ChainDraws> chains);

  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<ChainDraws>& chains() const noexcept { return chains_; }
  std::size_t num_chains() const noexcept { return chains_.size(); }
  std::size_t num_draws() const noexcept { return draws_; }
  std::size_t num_params() const noexcept { return names_.size(); }
  std::size_t total_draws() const noexcept { return draws_ * chains_.size(); }

  double value(std::size_t chain, std::size_t draw, std::size_t param) const {
    return chains_[chain].values[draw * names_.size() + param];
  }
  /// Throws ValidationError for an unknown name.
  std::size_t index_of(const std::string& name) const;
  std::vector<std::vector<double>> per_chain(std::size_t param) const;
  std::vector<double> pooled(std::size_t param) const;

  std::size_t divergences() const;
  std::size_t depth_hits(int max_depth) const;

 private:
  std::vector<std::string> names_;
  std::vector<ChainDraws> chains_;
  std::size_t draws_ = 0;
};

/// Log density at an unconstrained point; writes the gradient into grad.
/// May throw on a non-finite evaluation, which the sampler treats as a
/// divergent point.
using LogDensityFn = std::function<double(std::span<const double>, std::span<double>)>;

struct SampleSpace {
  std::size_t dimension = 0;
  std::vector<std::string> names;  // constrained output names
  std::function<void(std::span<const double>, std::span<double>)> constrain;

  /// Reports the unconstrained coordinates as <prefix>.<i>.
  static SampleSpace identity(std::size_t dimension, const std::string& prefix = "x");
};

/// Per-chain generator for a given purpose. Streams for different
/// (seed, chain, stream) triples are independently seeded.
std::mt19937_64 chain_rng(std::uint64_t seed, std::size_t chain, std::uint64_t stream);

/// Uniform [-2, 2] starting points, one independent stream per chain.
std::vector<std::vector<double>> init_points(const SampleSpace& space, std::uint64_t seed,
                                             std::size_t chains);

/// Worker threads for chain-level parallelism: BISHOP_THREADS when set to a
/// positive integer, otherwise the hardware concurrency, capped at chains.
std::size_t sampler_threads(std::size_t chains);

/// Runs cfg.chains chains. Throws NumericalError when no finite starting
/// point is found in 100 attempts or when every warmup transition diverges.
PosteriorDraws sample(const LogDensityFn& logp, const SampleSpace& space, const NutsConfig& cfg);

}  // namespace bishop
