#include "bishop/fit.hpp"

#include <sstream>

#include "bishop/errors.hpp"
#include "bishop/text.hpp"

namespace bishop {

Model build_model(const Preprocessed& pre, const ModelSpec& spec) {
  return Model(spec, PreparedData::build(pre.table, spec));
}

namespace {

std::vector<std::array<double, kPosconCategories>> average_imputation(const Model& model,
                                                                      const PosteriorDraws& draws) {
  const auto& names = model.space().constrained_names();
  std::vector<std::size_t> column(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) column[i] = draws.index_of(names[i]);
  std::vector<std::array<double, kPosconCategories>> acc(model.data().rows.size());
  for (auto& a : acc) a.fill(0.0);
  std::vector<double> flat(names.size());
  for (std::size_t c = 0; c < draws.num_chains(); ++c) {
    for (std::size_t d = 0; d < draws.num_draws(); ++d) {
      for (std::size_t i = 0; i < names.size(); ++i) flat[i] = draws.value(c, d, column[i]);
      const auto probs = model.poscon_posterior(model.space().unflatten(flat));
      for (std::size_t r = 0; r < acc.size(); ++r) {
        for (std::size_t k = 0; k < kPosconCategories; ++k) acc[r][k] += probs[r][k];
      }
    }
  }
  const double n = static_cast<double>(draws.total_draws());
  for (auto& a : acc) {
    for (double& v : a) v /= n;
  }
  return acc;
}

}  // namespace

FitResult fit_cohort(const Cohort& cohort, const FitOptions& options) {
  options.nuts.validate();
  ModelSpec spec = ModelSpec::standard();
  Preprocessed pre = preprocess_outcomes(cohort, options.preprocess);
  Model model = build_model(pre, spec);

  const LogDensityFn logp = [&model](std::span<const double> theta, std::span<double> grad) {
    return model.log_density_gradient(theta, grad);
  };
  SampleSpace space;
  space.dimension = model.dimension();
  space.names = model.space().constrained_names();
  space.constrain = [&model](std::span<const double> theta, std::span<double> out) {
    model.space().write_constrained(theta, out);
  };
  PosteriorDraws draws = sample(logp, space, options.nuts);
  FitReport report = build_report(draws, options.hdr_mass, options.nuts.max_tree_depth);
  auto imputation = average_imputation(model, draws);
  return FitResult{std::move(spec),   std::move(pre),    std::move(model),
                   std::move(draws),  std::move(report), std::move(imputation)};
}

std::string FitResult::imputation_csv(const Cohort& cohort) const {
  if (cohort.size() != imputation.size()) throw ValidationError("cohort does not match the fit");
  std::ostringstream out;
  out << "id,observed_poscon,p0,p1,p2,p3,p4,mode\n";
  for (std::size_t i = 0; i < imputation.size(); ++i) {
    const auto& rec = cohort[i];
    out << rec.id << ',';
    if (rec.poscon_pts) out << *rec.poscon_pts;
    std::size_t mode = 0;
    for (std::size_t k = 0; k < kPosconCategories; ++k) {
      out << ',' << format_real(imputation[i][k]);
      if (imputation[i][k] > imputation[i][mode]) mode = k;
    }
    out << ',' << mode << '\n';
  }
  return out.str();
}

}  // namespace bishop
