#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "bishop/model_spec.hpp"
#include "bishop/ordinal.hpp"
#include "bishop/parameters.hpp"
#include "bishop/transform.hpp"

namespace bishop {

/// One patient on the modelling scale. Covariate values are mean-centred
/// across the cohort and stored per outcome in predictor order, poscon
/// excluded (it enters through the ordinal block).
struct PreparedRow {
  std::array<std::vector<double>, kOutcomes> x;
  int poscon = -1;  // observed 0..4, or -1 when missing
  double nullip = 0.0;  // raw 0/1, used by the ordinal linear predictor
  double pit = 0.0;     // raw 0/1, used by the ordinal linear predictor
  std::array<double, kContinuousOutcomes> y{};
  std::array<bool, kContinuousOutcomes> present{};
  bool cs = false;
};

struct PreparedData {
  std::vector<PreparedRow> rows;
  double poscon_mean = 0.0;
  /// For each outcome, the coefficient indices matching PreparedRow::x.
  std::array<std::vector<std::size_t>, kOutcomes> x_coefficients;
  /// Per-outcome poscon coefficient index.
  std::array<std::size_t, kOutcomes> poscon_coefficient{};

  std::size_t missing_poscon() const;
  std::size_t present_count(std::size_t outcome) const;

  /// Builds model inputs from a design table. Every covariate column is
  /// centred on its cohort mean; binary indicators included.
  static PreparedData build(const DesignTable& table, const ModelSpec& spec);
};

/// Joint log-density over priors, the ordinal imputation block and the five
/// outcome likelihoods, with missing poscon summed out row by row.
class Model {
 public:
  Model(ModelSpec spec, PreparedData data);

  const ModelSpec& spec() const noexcept { return spec_; }
  const PreparedData& data() const noexcept { return data_; }
  const ParameterSpace& space() const noexcept { return space_; }
  std::size_t dimension() const noexcept { return space_.dimension(); }

  /// Log posterior (up to a constant) at an unconstrained point, including
  /// the transform Jacobians.
  double log_density(std::span<const double> theta) const;
  /// Same value as log_density; gradient by reverse-mode differentiation.
  double log_density_gradient(std::span<const double> theta, std::span<double> grad) const;

  /// Prior log-density with Jacobians at an unconstrained point.
  double prior_logdensity(std::span<const double> theta) const;
  /// Likelihood part only (sum of row contributions) at an unconstrained point.
  double log_likelihood(std::span<const double> theta) const;

  /// Row contribution: ordinal term plus outcome terms at the observed
  /// poscon, or the five-category mixture when poscon is missing.
  double row_loglik(std::size_t row, const Parameters& p) const;
  /// Mixture over poscon categories regardless of whether it was observed.
  double row_loglik_marginal(std::size_t row, const Parameters& p) const;
  /// Outcome terms only (no ordinal term) with poscon fixed to k.
  double row_outcome_loglik(std::size_t row, const Parameters& p, int k) const;

  /// Linear predictor for one outcome; the cs predictor is a logit.
  double outcome_mean(std::size_t row, const Parameters& p, Outcome o, int poscon_value) const;
  /// Ordinal linear predictor eta for a row.
  double ordinal_eta(std::size_t row, const Parameters& p) const;

  /// Per-row posterior category probabilities of poscon given all of that
  /// row's data at parameters p. Observed rows are one-hot.
  std::vector<std::array<double, kPosconCategories>> poscon_posterior(const Parameters& p) const;

 private:
  void check_theta(std::span<const double> theta) const;

  ModelSpec spec_;
  PreparedData data_;
  ParameterSpace space_;
};

}  // namespace bishop
