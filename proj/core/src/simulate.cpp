#include "bishop/simulate.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bishop/errors.hpp"
#include "bishop/scalar_math.hpp"
#include "bishop/text.hpp"

namespace bishop {

namespace {

using nlohmann::ordered_json;
using C = Covariate;
using O = Outcome;

constexpr int kMaxRedraws = 1000;

void check_probs(const std::array<double, 4>& p, const char* name) {
  double s = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw ValidationError(std::string(name) + " has a negative entry");
    s += v;
  }
  if (std::fabs(s - 1.0) > 1e-9) throw ValidationError(std::string(name) + " must sum to 1");
}

const ordered_json& field(const ordered_json& j, const std::string& key, const std::string& path) {
  const std::string full = path.empty() ? key : path + "." + key;
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError("truth JSON is missing field '" + full + "'");
  }
  return j.at(key);
}

double number(const ordered_json& j, const std::string& key, const std::string& path) {
  const auto& v = field(j, key, path);
  if (!v.is_number()) {
    throw ValidationError("truth JSON field '" + (path.empty() ? key : path + "." + key) +
                          "' must be a number");
  }
  return v.get<double>();
}

template <std::size_t N>
std::array<double, N> number_array(const ordered_json& j, const std::string& key,
                                   const std::string& path) {
  const auto& v = field(j, key, path);
  const std::string full = path.empty() ? key : path + "." + key;
  if (!v.is_array() || v.size() != N) {
    throw ValidationError("truth JSON field '" + full + "' must be an array of " +
                          std::to_string(N) + " numbers");
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!v[i].is_number()) throw ValidationError("truth JSON field '" + full + "' must be numeric");
    out[i] = v[i].get<double>();
  }
  return out;
}

int draw_category(std::mt19937_64& rng, const std::array<double, 4>& probs) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = u(rng);
  double acc = 0.0;
  for (int k = 0; k < 3; ++k) {
    acc += probs[static_cast<std::size_t>(k)];
    if (x < acc) return k;
  }
  return 3;
}

int draw_ordinal(std::mt19937_64& rng, double eta, const std::array<double, 4>& c) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = u(rng);
  // P(score <= k) = 1 - inv_logit(eta - c_k).
  for (int k = 0; k < 4; ++k) {
    if (x < 1.0 - inv_logit(eta - c[static_cast<std::size_t>(k)])) return k;
  }
  return 4;
}

double round1(double v) { return std::round(v * 10.0) / 10.0; }

struct Latent {
  PatientRecord rec;
  HiddenRow hidden;
};

double covariate_value(const Latent& l, Covariate c, double bmi_z, double ga_z) {
  const auto& r = l.rec;
  switch (c) {
    case C::Dilation: return r.dilation_pts;
    case C::Effacement: return r.effacement_pts;
    case C::Station: return r.station_pts;
    case C::Poscon: return l.hidden.true_poscon;
    case C::Treatment: return r.treatment == Treatment::Pit ? 1.0 : 0.0;
    case C::Gbs: return r.gbs;
    case C::Nullip: return r.nullip;
    case C::Epidural: return r.epidural;
    case C::Fgr: return r.fgr;
    case C::Bmi: return bmi_z;
    case C::Ga: return ga_z;
  }
  return 0.0;
}

}  // namespace

void SimTruth::validate() const {
  const ModelSpec spec = ModelSpec::standard();
  for (std::size_t o = 0; o < kOutcomes; ++o) {
    for (std::size_t c = 0; c < kCovariates; ++c) {
      if (!std::isfinite(effects[o][c])) throw ValidationError("non-finite effect in truth");
      if (effects[o][c] != 0.0 && !spec.uses(static_cast<Outcome>(o), static_cast<Covariate>(c))) {
        throw ValidationError("truth sets an effect of " + std::string(kCovariateNames[c]) +
                              " on " + std::string(kOutcomeNames[o]) +
                              ", which the model does not wire");
      }
    }
  }
  for (std::size_t o = 0; o < kTimeOutcomes; ++o) {
    if (!(noise_sd[o] > 0.0)) throw ValidationError("noise_sd must be positive");
    if (!std::isfinite(baseline[o]) || !std::isfinite(lambda[o])) {
      throw ValidationError("baseline and lambda must be finite");
    }
  }
  for (std::size_t k = 1; k < 4; ++k) {
    if (!(ordinal.cutpoints[k] > ordinal.cutpoints[k - 1])) {
      throw ValidationError("ordinal cutpoints must be strictly increasing");
    }
  }
  if (!(missing_rate >= 0.0 && missing_rate < 1.0)) {
    throw ValidationError("missing_rate must lie in [0, 1)");
  }
  if (!(threshold_sd >= 0.0)) throw ValidationError("threshold_sd must be non-negative");
  if (!(measurement_noise_sd >= 0.0)) {
    throw ValidationError("measurement_noise_sd must be non-negative");
  }
  const auto& p = population;
  for (double rate : {p.nullip_rate, p.epidural_rate, p.fgr_rate, p.gbs_rate}) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw ValidationError("population rates must lie in [0, 1]");
  }
  if (!(p.bmi_sd > 0.0) || !(p.ga_sd > 0.0)) {
    throw ValidationError("population sds must be positive");
  }
  check_probs(p.dilation_probs, "dilation_probs");
  check_probs(p.effacement_probs, "effacement_probs");
  check_probs(p.station_probs, "station_probs");
}

SimTruth default_truth() {
  SimTruth t;
  auto set = [&](O o, std::initializer_list<std::pair<C, double>> values) {
    for (const auto& [c, v] : values) t.effect(o, c) = v;
  };
  set(O::RomAdmit, {{C::Dilation, -0.25}, {C::Effacement, -0.10}, {C::Station, -0.15},
                    {C::Poscon, -0.05}, {C::Gbs, 0.2}});
  set(O::RomAgent, {{C::Dilation, -0.20}, {C::Effacement, 0.05}, {C::Station, -0.10},
                    {C::Poscon, 0.10}, {C::Gbs, -0.3}});
  set(O::AugFully, {{C::Dilation, -0.25}, {C::Effacement, -0.15}, {C::Station, -0.25},
                    {C::Poscon, -0.20}, {C::Nullip, 0.5}, {C::Epidural, 0.2}});
  set(O::AugDeliv, {{C::Dilation, -0.25}, {C::Effacement, -0.15}, {C::Station, -0.30},
                    {C::Poscon, -0.20}, {C::Nullip, 0.5}, {C::Epidural, 0.2}, {C::Fgr, -0.4}});
  set(O::Cs, {{C::Dilation, -0.30}, {C::Effacement, -0.20}, {C::Station, -0.30},
              {C::Poscon, -0.20}, {C::Bmi, 0.4}, {C::Ga, -0.2}});
  t.lambda = {0.0, 0.0, 0.25, 0.25};
  t.baseline = {std::log(4.0), std::log(6.0), boxcox(10.0, 0.25), boxcox(13.0, 0.25)};
  t.noise_sd = {0.9, 0.7, 0.6, 0.6};
  return t;
}

std::string SimTruth::to_json() const {
  const ModelSpec spec = ModelSpec::standard();
  ordered_json j;
  auto& eff = j["effects"] = ordered_json::object();
  for (std::size_t o = 0; o < kOutcomes; ++o) {
    auto& row = eff[std::string(kOutcomeNames[o])] = ordered_json::object();
    for (std::size_t ci : spec.outcome_coefficients(static_cast<Outcome>(o))) {
      const Covariate c = spec.coefficients()[ci].covariate;
      row[std::string(name_of(c))] = effects[o][static_cast<std::size_t>(c)];
    }
  }
  for (const auto& [key, values] : {std::pair{"baseline", &baseline}, std::pair{"noise_sd", &noise_sd},
                                    std::pair{"lambda", &lambda}}) {
    auto& obj = j[key] = ordered_json::object();
    for (std::size_t o = 0; o < kTimeOutcomes; ++o) obj[std::string(kOutcomeNames[o])] = (*values)[o];
  }
  j["ordinal"] = {{"w_nullip", ordinal.w_nullip},
                  {"intercept", ordinal.intercept},
                  {"cutpoints", ordinal.cutpoints}};
  const auto& p = population;
  j["population"] = {{"nullip_rate", p.nullip_rate},       {"epidural_rate", p.epidural_rate},
                     {"fgr_rate", p.fgr_rate},             {"gbs_rate", p.gbs_rate},
                     {"bmi_mean", p.bmi_mean},             {"bmi_sd", p.bmi_sd},
                     {"ga_mean", p.ga_mean},               {"ga_sd", p.ga_sd},
                     {"dilation_probs", p.dilation_probs}, {"effacement_probs", p.effacement_probs},
                     {"station_probs", p.station_probs}};
  j["threshold_mean"] = threshold_mean;
  j["threshold_sd"] = threshold_sd;
  j["measurement_noise_sd"] = measurement_noise_sd;
  j["missing_rate"] = missing_rate;
  return j.dump(2) + "\n";
}

SimTruth SimTruth::from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("truth JSON does not parse: ") + e.what());
  }
  const ModelSpec spec = ModelSpec::standard();
  SimTruth t;
  const auto& eff = field(j, "effects", "");
  for (std::size_t o = 0; o < kOutcomes; ++o) {
    const std::string on(kOutcomeNames[o]);
    const auto& row = field(eff, on, "effects");
    for (std::size_t ci : spec.outcome_coefficients(static_cast<Outcome>(o))) {
      const Covariate c = spec.coefficients()[ci].covariate;
      t.effects[o][static_cast<std::size_t>(c)] = number(row, std::string(name_of(c)), "effects." + on);
    }
  }
  for (const auto& [key, values] : {std::pair{"baseline", &t.baseline},
                                    std::pair{"noise_sd", &t.noise_sd},
                                    std::pair{"lambda", &t.lambda}}) {
    const auto& obj = field(j, key, "");
    for (std::size_t o = 0; o < kTimeOutcomes; ++o) {
      (*values)[o] = number(obj, std::string(kOutcomeNames[o]), key);
    }
  }
  const auto& ord = field(j, "ordinal", "");
  t.ordinal.w_nullip = number(ord, "w_nullip", "ordinal");
  t.ordinal.intercept = number(ord, "intercept", "ordinal");
  t.ordinal.cutpoints = number_array<4>(ord, "cutpoints", "ordinal");
  const auto& pop = field(j, "population", "");
  auto& p = t.population;
  p.nullip_rate = number(pop, "nullip_rate", "population");
  p.epidural_rate = number(pop, "epidural_rate", "population");
  p.fgr_rate = number(pop, "fgr_rate", "population");
  p.gbs_rate = number(pop, "gbs_rate", "population");
  p.bmi_mean = number(pop, "bmi_mean", "population");
  p.bmi_sd = number(pop, "bmi_sd", "population");
  p.ga_mean = number(pop, "ga_mean", "population");
  p.ga_sd = number(pop, "ga_sd", "population");
  p.dilation_probs = number_array<4>(pop, "dilation_probs", "population");
  p.effacement_probs = number_array<4>(pop, "effacement_probs", "population");
  p.station_probs = number_array<4>(pop, "station_probs", "population");
  t.threshold_mean = number(j, "threshold_mean", "");
  t.threshold_sd = number(j, "threshold_sd", "");
  t.measurement_noise_sd = number(j, "measurement_noise_sd", "");
  t.missing_rate = number(j, "missing_rate", "");
  t.validate();
  return t;
}

std::string SimResult::hidden_csv() const {
  std::ostringstream out;
  out << "id,position_pts,consistency_pts,true_poscon,true_total,measured_total,threshold,pit,"
         "poscon_masked\n";
  for (const auto& h : hidden) {
    out << h.id << ',' << h.position_pts << ',' << h.consistency_pts << ',' << h.true_poscon
        << ',' << h.true_total << ',' << h.measured_total << ',' << format_real(h.threshold) << ','
        << h.pit << ',' << h.poscon_masked << '\n';
  }
  return out.str();
}

SimResult simulate_cohort(const SimTruth& truth, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ValidationError("cohort size must be at least 1");
  truth.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x51u};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto bern = [&](double p) { return unif(rng) < p; };
  const auto& pop = truth.population;

  // Exam, covariates and arm assignment.
  std::vector<Latent> people(n);
  const int width = std::max<int>(4, static_cast<int>(std::to_string(n).size()));
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = people[i].rec;
    auto& h = people[i].hidden;
    std::string num = std::to_string(i + 1);
    r.id = "S" + std::string(static_cast<std::size_t>(width) - num.size(), '0') + num;
    h.id = r.id;
    r.nullip = bern(pop.nullip_rate);
    r.epidural = bern(pop.epidural_rate);
    r.fgr = bern(pop.fgr_rate);
    r.gbs = bern(pop.gbs_rate);
    r.bmi = round1(pop.bmi_mean + pop.bmi_sd * normal(rng));
    r.ga_weeks = round1(pop.ga_mean + pop.ga_sd * normal(rng));
    r.dilation_pts = draw_category(rng, pop.dilation_probs);
    r.effacement_pts = draw_category(rng, pop.effacement_probs);
    r.station_pts = draw_category(rng, pop.station_probs);
    const double eta = truth.ordinal.w_nullip * (r.nullip ? 1.0 : 0.0) + truth.ordinal.intercept;
    h.true_poscon = draw_ordinal(rng, eta, truth.ordinal.cutpoints);
    // Position and consistency each score 0..2; split the sum uniformly
    // over the feasible pairs.
    const int lo = std::max(0, h.true_poscon - 2), hi = std::min(2, h.true_poscon);
    h.position_pts = lo + static_cast<int>(unif(rng) * (hi - lo + 1));
    h.position_pts = std::min(h.position_pts, hi);
    h.consistency_pts = h.true_poscon - h.position_pts;
    h.true_total = r.dilation_pts + r.effacement_pts + r.station_pts + h.position_pts +
                   h.consistency_pts;
    h.measured_total =
        h.true_total + static_cast<int>(std::lround(truth.measurement_noise_sd * normal(rng)));
    h.threshold = truth.threshold_mean + truth.threshold_sd * normal(rng);
    h.pit = h.measured_total > h.threshold;
    r.treatment = h.pit ? Treatment::Pit : Treatment::Miso;
    h.poscon_masked = bern(truth.missing_rate);
    if (!h.poscon_masked) r.poscon_pts = h.true_poscon;
  }

  // Cohort means, matching the centring the model applies.
  std::array<double, kCovariates> mean{};
  double bmi_mean = 0.0, ga_mean = 0.0;
  for (const auto& l : people) {
    bmi_mean += l.rec.bmi;
    ga_mean += l.rec.ga_weeks;
  }
  bmi_mean /= static_cast<double>(n);
  ga_mean /= static_cast<double>(n);
  double bmi_ss = 0.0, ga_ss = 0.0;
  for (const auto& l : people) {
    bmi_ss += square(l.rec.bmi - bmi_mean);
    ga_ss += square(l.rec.ga_weeks - ga_mean);
  }
  const double bmi_sd = n > 1 ? std::sqrt(bmi_ss / static_cast<double>(n - 1)) : 0.0;
  const double ga_sd = n > 1 ? std::sqrt(ga_ss / static_cast<double>(n - 1)) : 0.0;
  auto z_bmi = [&](const Latent& l) { return bmi_sd > 0 ? (l.rec.bmi - bmi_mean) / bmi_sd : 0.0; };
  auto z_ga = [&](const Latent& l) { return ga_sd > 0 ? (l.rec.ga_weeks - ga_mean) / ga_sd : 0.0; };
  for (const auto& l : people) {
    for (std::size_t c = 0; c < kCovariates; ++c) {
      mean[c] += covariate_value(l, static_cast<Covariate>(c), z_bmi(l), z_ga(l));
    }
  }
  for (double& m : mean) m /= static_cast<double>(n);

  // Outcomes.
  const ModelSpec spec = ModelSpec::standard();
  std::vector<PatientRecord> records;
  std::vector<HiddenRow> hidden;
  records.reserve(n);
  hidden.reserve(n);
  std::size_t redraws = 0;
  for (auto& l : people) {
    std::array<double, kOutcomes> lin{};
    for (std::size_t o = 0; o < kOutcomes; ++o) {
      for (std::size_t ci : spec.outcome_coefficients(static_cast<Outcome>(o))) {
        const Covariate c = spec.coefficients()[ci].covariate;
        const double x = covariate_value(l, c, z_bmi(l), z_ga(l)) - mean[static_cast<std::size_t>(c)];
        lin[o] += truth.effects[o][static_cast<std::size_t>(c)] * x;
      }
    }
    for (std::size_t o = 0; o < kTimeOutcomes; ++o) {
      int attempts = 0;
      while (true) {
        const double t = truth.baseline[o] + lin[o] + truth.noise_sd[o] * normal(rng);
        const auto y = inverse_boxcox(t, truth.lambda[o]);
        if (y && std::isfinite(*y) && *y > 0.0) {
          l.rec.times[o] = *y;
          break;
        }
        ++redraws;
        if (++attempts > kMaxRedraws) {
          throw NumericalError("simulated " + std::string(kTimeOutcomeColumns[o]) + " for " +
                               l.rec.id + " left the Box-Cox range after " +
                               std::to_string(kMaxRedraws) + " redraws");
        }
      }
    }
    l.rec.cs = bern(inv_logit(lin[kOutcomes - 1]));
    records.push_back(l.rec);
    hidden.push_back(l.hidden);
  }
  return SimResult{Cohort(std::move(records), Provenance::Synthetic), std::move(hidden), redraws};
}

std::vector<double> coefficient_truth(const SimTruth& truth, const ModelSpec& spec,
                                      const std::vector<OutcomeTransform>& transforms) {
  if (transforms.size() != kTimeOutcomes) throw ValidationError("expected four outcome transforms");
  std::vector<double> out;
  out.reserve(spec.coefficients().size());
  for (const auto& coef : spec.coefficients()) {
    const auto o = static_cast<std::size_t>(coef.outcome);
    double v = truth.effects[o][static_cast<std::size_t>(coef.covariate)];
    if (o < kTimeOutcomes) v /= transforms[o].scale;
    out.push_back(v);
  }
  return out;
}

}  // namespace bishop
