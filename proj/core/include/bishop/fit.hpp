#pragma once

#include <array>
#include <string>
#include <vector>

#include "bishop/cohort.hpp"
#include "bishop/diagnostics.hpp"
#include "bishop/model.hpp"
#include "bishop/model_spec.hpp"
#include "bishop/ordinal.hpp"
#include "bishop/sampler.hpp"
#include "bishop/transform.hpp"

namespace bishop {

struct FitOptions {
  NutsConfig nuts;
  PreprocessOptions preprocess;
  double hdr_mass = 0.95;
};

struct FitResult {
  ModelSpec spec;
  Preprocessed preprocessed;
  Model model;
  PosteriorDraws draws;
  FitReport report;
  /// Posterior mean category probabilities of poscon per row; observed rows
  /// are one-hot.
  std::vector<std::array<double, kPosconCategories>> imputation;

  std::string imputation_csv(const Cohort& cohort) const;
};

/// Preprocesses, samples the standard model and summarises the draws.
FitResult fit_cohort(const Cohort& cohort, const FitOptions& options);

/// Builds the model for a cohort the way fit_cohort does.
Model build_model(const Preprocessed& pre, const ModelSpec& spec = ModelSpec::standard());

}  // namespace bishop
