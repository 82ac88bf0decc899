#pragma once

// Synthetic cohorts from a simulated assignment process: the examining
// physician scores the cervix with error, compares the score against a
// personal threshold, and picks PIT above it and MISO otherwise. Outcomes
// depend on the true exam, so arm membership and outcomes share a cause.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "bishop/cohort.hpp"
#include "bishop/model_spec.hpp"
#include "bishop/transform.hpp"

namespace bishop {

struct PopulationParams {
  double nullip_rate = 0.45;
  double epidural_rate = 0.6;
  double fgr_rate = 0.1;
  double gbs_rate = 0.25;
  double bmi_mean = 31.0, bmi_sd = 6.0;
  double ga_mean = 38.5, ga_sd = 1.5;
  std::array<double, 4> dilation_probs{0.25, 0.45, 0.22, 0.08};
  std::array<double, 4> effacement_probs{0.2, 0.35, 0.3, 0.15};
  std::array<double, 4> station_probs{0.25, 0.35, 0.3, 0.1};
};

/// Generator of position + consistency: ordered logistic with
/// eta = w_nullip * nullip + intercept.
struct OrdinalTruth {
  double w_nullip = -0.5;
  double intercept = 0.0;
  std::array<double, 4> cutpoints{-1.5, -0.2, 1.0, 2.5};
};

/// Ground truth. Effects are per Bishop point, per indicator, or per
/// standard deviation of bmi and ga; time outcomes use Box-Cox units, cs uses
/// logit units. Every predictor is centred on its cohort mean, so baseline
/// is the transformed mean time at an average patient and cs has no
/// intercept.
struct SimTruth {
  std::array<std::array<double, kCovariates>, kOutcomes> effects{};
  std::array<double, kTimeOutcomes> baseline{};
  std::array<double, kTimeOutcomes> noise_sd{};
  std::array<double, kTimeOutcomes> lambda{};
  OrdinalTruth ordinal;
  PopulationParams population;
  double threshold_mean = 4.0;
  double threshold_sd = 1.0;
  double measurement_noise_sd = 1.0;
  double missing_rate = 36.0 / 82.0;

  double effect(Outcome o, Covariate c) const {
    return effects[static_cast<std::size_t>(o)][static_cast<std::size_t>(c)];
  }
  double& effect(Outcome o, Covariate c) {
    return effects[static_cast<std::size_t>(o)][static_cast<std::size_t>(c)];
  }

  /// Throws ValidationError for non-positive noise, a missing rate outside
  /// [0, 1), a negative threshold spread, invalid probabilities or an effect
  /// on a covariate the standard wiring does not connect.
  void validate() const;

  std::string to_json() const;
  /// Every field is required; a missing one is named in the ValidationError.
  static SimTruth from_json(const std::string& text);
};

/// Nonzero Bishop and covariate effects, zero treatment effect.
SimTruth default_truth();

struct HiddenRow {
  std::string id;
  int position_pts = 0;
  int consistency_pts = 0;
  int true_poscon = 0;
  int true_total = 0;
  int measured_total = 0;
  double threshold = 0.0;
  bool pit = false;
  bool poscon_masked = false;
};

struct SimResult {
  Cohort cohort;
  std::vector<HiddenRow> hidden;
  std::size_t redraws = 0;

  std::string hidden_csv() const;
};

/// Throws ValidationError for n = 0 or invalid truth, NumericalError when a
/// time cell needs more than 1000 redraws to land inside the Box-Cox range.
SimResult simulate_cohort(const SimTruth& truth, std::size_t n, std::uint64_t seed);

/// True value of each standard-spec coefficient on the scale the model fits:
/// time effects divided by the cohort's outcome scale, cs effects unchanged.
std::vector<double> coefficient_truth(const SimTruth& truth, const ModelSpec& spec,
                                      const std::vector<OutcomeTransform>& transforms);

}  // namespace bishop
