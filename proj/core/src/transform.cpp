#include "bishop/transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "bishop/errors.hpp"

namespace bishop {

double boxcox(double y, double lambda) {
  if (!(y > 0)) throw ValidationError("Box-Cox requires y > 0");
  const double ly = std::log(y);
  if (lambda == 0.0) return ly;
  return std::expm1(lambda * ly) / lambda;
}

std::optional<double> inverse_boxcox(double t, double lambda) {
  if (lambda == 0.0) return std::exp(t);
  const double u = lambda * t;
  if (!(u > -1.0)) return std::nullopt;
  return std::exp(std::log1p(u) / lambda);
}

double boxcox_profile_loglik(std::span<const double> y, double lambda) {
  const auto n = static_cast<double>(y.size());
  double log_sum = 0.0;
  double mean = 0.0;
  std::vector<double> t(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    t[i] = boxcox(y[i], lambda);
    log_sum += std::log(y[i]);
    mean += t[i];
  }
  mean /= n;
  double ss = 0.0;
  for (double ti : t) ss += (ti - mean) * (ti - mean);
  if (!(ss > 0)) return -std::numeric_limits<double>::infinity();
  return -0.5 * n * std::log(ss / n) + (lambda - 1.0) * log_sum;
}

double fit_lambda(std::span<const double> y) {
  if (y.size() < 5) throw ValidationError("fit_lambda needs at least 5 values");
  for (double v : y) {
    if (!(v > 0) || !std::isfinite(v)) throw ValidationError("fit_lambda needs positive values");
  }
  if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); })) {
    throw ValidationError("fit_lambda: sample has zero variance");
  }
  const int steps = static_cast<int>(std::lround((kLambdaMax - kLambdaMin) / kLambdaStep));
  double best = 0.0;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps; ++i) {
    // Integer grid so lambda = 0 is hit exactly.
    const double lambda = static_cast<double>(i - steps / 2) / 100.0;
    const double ll = boxcox_profile_loglik(y, lambda);
    if (ll > best_ll) {
      best_ll = ll;
      best = lambda;
    }
  }
  if (!std::isfinite(best_ll)) throw ValidationError("fit_lambda: degenerate sample");
  return best;
}

double OutcomeTransform::forward(double y) const { return (boxcox(y, lambda) - center) / scale; }

std::optional<double> OutcomeTransform::inverse(double z) const {
  return inverse_boxcox(center + scale * z, lambda);
}

namespace {

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

MeanSd mean_sd(const std::vector<double>& v) {
  MeanSd r;
  if (v.empty()) return r;
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() < 2) return r;
  double ss = 0.0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return r;
}

double zscore(double x, const MeanSd& m) { return m.sd > 0 ? (x - m.mean) / m.sd : 0.0; }

}  // namespace

Preprocessed preprocess_outcomes(const Cohort& cohort, const PreprocessOptions& options) {
  const auto& recs = cohort.records();
  const std::size_t n = recs.size();
  Preprocessed out;
  DesignTable& table = out.table;

  std::vector<double> dil, eff, sta, pc, ga, bmi;
  for (const auto& r : recs) {
    dil.push_back(r.dilation_pts);
    eff.push_back(r.effacement_pts);
    sta.push_back(r.station_pts);
    if (r.poscon_pts) pc.push_back(*r.poscon_pts);
    ga.push_back(r.ga_weeks);
    bmi.push_back(r.bmi);
  }
  table.dilation_mean = mean_sd(dil).mean;
  table.effacement_mean = mean_sd(eff).mean;
  table.station_mean = mean_sd(sta).mean;
  // With no observed value the midpoint of the 0..4 range stands in.
  table.poscon_mean = pc.empty() ? 2.0 : mean_sd(pc).mean;
  const MeanSd ga_ms = mean_sd(ga);
  const MeanSd bmi_ms = mean_sd(bmi);
  table.ga_mean = ga_ms.mean;
  table.ga_sd = ga_ms.sd;
  table.bmi_mean = bmi_ms.mean;
  table.bmi_sd = bmi_ms.sd;

  table.rows.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = recs[i];
    DesignRow& d = table.rows[i];
    d.dilation = r.dilation_pts - table.dilation_mean;
    d.effacement = r.effacement_pts - table.effacement_mean;
    d.station = r.station_pts - table.station_mean;
    d.poscon = r.poscon_pts;
    d.nullip = r.nullip ? 1.0 : 0.0;
    d.epidural = r.epidural ? 1.0 : 0.0;
    d.fgr = r.fgr ? 1.0 : 0.0;
    d.gbs = r.gbs ? 1.0 : 0.0;
    d.pit = r.treatment == Treatment::Pit ? 1.0 : 0.0;
    d.ga = zscore(r.ga_weeks, ga_ms);
    d.bmi = zscore(r.bmi, bmi_ms);
    d.cs = r.cs;
  }

  for (std::size_t o = 0; o < kTimeOutcomes; ++o) {
    std::vector<double> present;
    for (const auto& r : recs) {
      if (r.times[o]) present.push_back(*r.times[o]);
    }
    const std::string name(kTimeOutcomeColumns[o]);
    if (present.size() < 5) {
      throw ValidationError(name + " has " + std::to_string(present.size()) +
                            " present values; at least 5 are required");
    }
    OutcomeTransform tr;
    tr.outcome = name;
    tr.lambda = options.lambdas ? (*options.lambdas)[o] : fit_lambda(present);
    std::vector<double> t;
    t.reserve(present.size());
    for (double y : present) t.push_back(boxcox(y, tr.lambda));
    const MeanSd ms = mean_sd(t);
    if (!(ms.sd > 0)) throw ValidationError(name + " has zero spread after transformation");
    tr.center = ms.mean;
    tr.scale = ms.sd;
    for (std::size_t i = 0; i < n; ++i) {
      if (recs[i].times[o]) table.rows[i].y[o] = tr.forward(*recs[i].times[o]);
    }
    out.transforms.push_back(tr);
  }
  return out;
}

std::string transforms_to_json(const std::vector<OutcomeTransform>& transforms) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& t : transforms) {
    j.push_back({{"outcome", t.outcome},
                 {"lambda", t.lambda},
                 {"center", t.center},
                 {"scale", t.scale}});
  }
  return j.dump(2) + "\n";
}

std::vector<OutcomeTransform> transforms_from_json(const std::string& text) {
  std::vector<OutcomeTransform> out;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& e : j) {
      OutcomeTransform t;
      t.outcome = e.at("outcome").get<std::string>();
      t.lambda = e.at("lambda").get<double>();
      t.center = e.at("center").get<double>();
      t.scale = e.at("scale").get<double>();
      if (!(t.scale > 0)) throw ValidationError("transform scale must be positive");
      out.push_back(t);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed transforms JSON: ") + e.what());
  }
  if (out.size() != kTimeOutcomes) throw ValidationError("transforms JSON needs 4 entries");
  return out;
}

}  // namespace bishop
