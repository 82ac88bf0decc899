#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "bishop/cohort.hpp"
#include "bishop/model.hpp"
#include "bishop/sampler.hpp"
#include "bishop/transform.hpp"

namespace bishop {

inline constexpr std::size_t kPpcChannels = 6;
inline constexpr std::size_t kContinuousBins = 20;

struct PpcChannel {
  std::string name;
  std::vector<double> edges;  // bins are [edges[i], edges[i+1])
  std::vector<std::size_t> observed_counts;
  std::vector<std::vector<std::size_t>> replicate_counts;
  double observed_mean = 0.0, observed_sd = 0.0;
  std::vector<double> replicate_means, replicate_sds;

  /// Observed statistic inside the central 95% of the replicated ones.
  bool mean_inside() const;
  bool sd_inside() const;
  bool pass() const { return mean_inside() && sd_inside(); }
};

struct PpcResult {
  std::vector<PpcChannel> channels;  // four time outcomes, cs, poscon_pts
  std::vector<std::size_t> draw_indices;  // into the chain-major pooled draws
  std::size_t clamped = 0;  // replicate times clamped at the Box-Cox boundary

  std::size_t passing_channels() const;
  /// channel,replicate,bin_lo,bin_hi,count with replicate "observed" first.
  std::string to_csv() const;
  std::string summary_json() const;
};

/// Thinned draw indices: floor(j * total / n_rep) for j < n_rep.
std::vector<std::size_t> thin_indices(std::size_t total, std::size_t n_rep);

/// Replicates every channel for n_rep evenly thinned draws. Only parameters,
/// covariates and the presence pattern feed the replicates; observed outcome
/// values are used only for the observed histograms. Replicated poscon comes
/// from the ordinal block; outcomes are generated at the observed poscon
/// where one was recorded and at the replicated value otherwise. Throws
/// ValidationError when n_rep is 0 or exceeds the available draws, or when
/// the draws lack a model parameter.
PpcResult posterior_predictive(const PosteriorDraws& draws, const Model& model,
                               const Cohort& cohort,
                               const std::vector<OutcomeTransform>& transforms, std::size_t n_rep,
                               std::uint64_t seed);

}  // namespace bishop
