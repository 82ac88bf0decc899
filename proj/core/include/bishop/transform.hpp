#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bishop/cohort.hpp"

namespace bishop {

/// Box-Cox power transform: (y^lambda - 1) / lambda, or ln(y) at lambda = 0.
/// Throws ValidationError for y <= 0.
double boxcox(double y, double lambda);

/// Inverse of boxcox. Returns nullopt when lambda * t + 1 <= 0, where the
/// transform has no preimage.
std::optional<double> inverse_boxcox(double t, double lambda);

inline constexpr double kLambdaMin = -2.0;
inline constexpr double kLambdaMax = 2.0;
inline constexpr double kLambdaStep = 0.01;

/// Gaussian profile log-likelihood of lambda for the positive sample `y`.
double boxcox_profile_loglik(std::span<const double> y, double lambda);

/// Lambda maximising boxcox_profile_loglik over the grid [-2, 2] step 0.01.
/// Needs at least five positive values with non-zero spread.
double fit_lambda(std::span<const double> y);

/// Box-Cox followed by standardisation: z = (boxcox(y, lambda) - center) / scale.
struct OutcomeTransform {
  std::string outcome;
  double lambda = 1.0;
  double center = 0.0;
  double scale = 1.0;

  double forward(double y) const;
  /// nullopt where the Box-Cox inverse is undefined.
  std::optional<double> inverse(double z) const;
};

/// One cohort row on the modelling scale.
struct DesignRow {
  double dilation = 0.0;    // points minus cohort mean
  double effacement = 0.0;  // points minus cohort mean
  double station = 0.0;     // points minus cohort mean
  std::optional<int> poscon;  // raw 0..4 points; centred by DesignTable::poscon_mean
  double nullip = 0.0;
  double epidural = 0.0;
  double fgr = 0.0;
  double gbs = 0.0;
  double pit = 0.0;  // PIT = 1, MISO = 0
  double ga = 0.0;   // z-score
  double bmi = 0.0;  // z-score
  std::array<std::optional<double>, kTimeOutcomes> y;  // transformed + standardised
  bool cs = false;
};

struct DesignTable {
  std::vector<DesignRow> rows;
  double dilation_mean = 0.0;
  double effacement_mean = 0.0;
  double station_mean = 0.0;
  double poscon_mean = 0.0;  // over observed values
  double ga_mean = 0.0, ga_sd = 1.0;
  double bmi_mean = 0.0, bmi_sd = 1.0;
};

struct PreprocessOptions {
  /// Use these Box-Cox exponents instead of fitting them.
  std::optional<std::array<double, kTimeOutcomes>> lambdas;
};

struct Preprocessed {
  DesignTable table;
  std::vector<OutcomeTransform> transforms;  // one per time outcome, column order
};

Preprocessed preprocess_outcomes(const Cohort& cohort, const PreprocessOptions& options = {});

std::string transforms_to_json(const std::vector<OutcomeTransform>& transforms);
std::vector<OutcomeTransform> transforms_from_json(const std::string& text);

}  // namespace bishop
