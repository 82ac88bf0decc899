#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bishop/sampler.hpp"

namespace bishop {

using ChainSet = std::vector<std::vector<double>>;

/// Classic split-chain potential scale reduction. Needs at least 2 chains of
/// at least 4 equal-length draws; throws NumericalError when every half-chain
/// is constant.
double split_rhat(const ChainSet& chains);

/// Bulk effective sample size: ranks of the pooled draws are mapped through
/// the normal quantile function, chains are split in half, and the
/// autocorrelation sum is truncated by Geyer's initial monotone sequence.
/// Accepts a single chain. Throws NumericalError for constant input.
double ess_bulk(const ChainSet& chains);

/// Effective sample size of the raw draws (no rank normalisation, no split).
double ess_basic(const ChainSet& chains);

/// Narrowest interval covering ceil(mass * N) of the sorted samples.
/// Needs N >= 20 and 0 < mass < 1.
std::pair<double, double> hdr(std::span<const double> samples, double mass);

/// Index range [first, last] of the sorted samples chosen by hdr.
std::pair<std::size_t, std::size_t> hdr_indices(std::span<const double> sorted, double mass);

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double hdr_lo = 0.0;
  double hdr_hi = 0.0;
  double prob_direction = 0.0;  // max(P(x > 0), P(x < 0))
  std::optional<double> rhat;   // absent with one chain or constant draws
  std::optional<double> ess;    // absent for constant draws

  /// The HDR excludes zero.
  bool significant() const { return hdr_lo > 0.0 || hdr_hi < 0.0; }
};

struct FitReport {
  double hdr_mass = 0.95;
  std::size_t chains = 0;
  std::size_t draws_per_chain = 0;
  std::size_t divergences = 0;
  std::size_t depth_hits = 0;
  int max_tree_depth = 0;
  std::vector<double> step_sizes;
  std::vector<ParameterSummary> parameters;

  std::optional<double> max_rhat() const;
  std::optional<double> min_ess() const;
  double divergence_rate() const;
  const ParameterSummary& at(const std::string& name) const;

  std::string to_json() const;
};

FitReport build_report(const PosteriorDraws& draws, double hdr_mass, int max_tree_depth);

/// parameter,mean,hdr_lo,hdr_hi,significant for every beta.* entry, in
/// report order.
std::string forest_csv(const FitReport& report);

}  // namespace bishop
