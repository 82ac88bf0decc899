#include "bishop/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <type_traits>

#include "bishop/autodiff.hpp"
#include "bishop/errors.hpp"

namespace bishop {

std::size_t PreparedData::missing_poscon() const {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.poscon < 0 ? 1 : 0;
  return n;
}

std::size_t PreparedData::present_count(std::size_t outcome) const {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.present[outcome] ? 1 : 0;
  return n;
}

namespace {

double raw_value(const DesignRow& r, Covariate c) {
  switch (c) {
    case Covariate::Dilation: return r.dilation;
    case Covariate::Effacement: return r.effacement;
    case Covariate::Station: return r.station;
    case Covariate::Treatment: return r.pit;
    case Covariate::Gbs: return r.gbs;
    case Covariate::Nullip: return r.nullip;
    case Covariate::Epidural: return r.epidural;
    case Covariate::Fgr: return r.fgr;
    case Covariate::Bmi: return r.bmi;
    case Covariate::Ga: return r.ga;
    case Covariate::Poscon: break;
  }
  throw ValidationError("poscon has no fixed column value");
}

}  // namespace

PreparedData PreparedData::build(const DesignTable& table, const ModelSpec& spec) {
  if (table.rows.empty()) throw ValidationError("design table is empty");
  PreparedData d;
  d.poscon_mean = table.poscon_mean;

  std::array<double, kCovariates> mean{};
  for (std::size_t c = 0; c < kCovariates; ++c) {
    const auto cov = static_cast<Covariate>(c);
    if (cov == Covariate::Poscon) continue;
    double s = 0.0;
    for (const auto& r : table.rows) s += raw_value(r, cov);
    mean[c] = s / static_cast<double>(table.rows.size());
  }

  for (std::size_t o = 0; o < kOutcomes; ++o) {
    for (std::size_t ci : spec.outcome_coefficients(static_cast<Outcome>(o))) {
      if (spec.coefficients()[ci].covariate == Covariate::Poscon) {
        d.poscon_coefficient[o] = ci;
      } else {
        d.x_coefficients[o].push_back(ci);
      }
    }
  }

  d.rows.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    PreparedRow p;
    for (std::size_t o = 0; o < kOutcomes; ++o) {
      for (std::size_t ci : d.x_coefficients[o]) {
        const Covariate cov = spec.coefficients()[ci].covariate;
        p.x[o].push_back(raw_value(r, cov) - mean[static_cast<std::size_t>(cov)]);
      }
    }
    p.poscon = r.poscon ? *r.poscon : -1;
    p.nullip = r.nullip;
    p.pit = r.pit;
    for (std::size_t o = 0; o < kContinuousOutcomes; ++o) {
      p.present[o] = r.y[o].has_value();
      p.y[o] = r.y[o].value_or(0.0);
    }
    p.cs = r.cs;
    d.rows.push_back(std::move(p));
  }
  return d;
}

namespace {

constexpr std::size_t K = kPosconCategories;
constexpr std::size_t J = kPosconCutpoints;

/// Per-evaluation quantities reused by every row.
template <class T>
struct Shared {
  T aleph_nullip, aleph_pit, b_pc;
  std::array<T, J> c;
  std::array<T, J - 1> log_gap;
  std::array<std::vector<T>, kOutcomes> coefs;  // matching PreparedRow::x
  std::array<T, kOutcomes> beta_pc;
  std::array<T, kContinuousOutcomes> sigma_y, log_sigma_y;
};

template <class T>
Shared<T> make_shared_terms(const T& aleph_nullip, const T& aleph_pit, const T& b_pc,
                            const std::array<T, J>& c, const std::array<T, J - 1>& log_gap,
                            const std::vector<T>& beta,
                            const std::array<T, kContinuousOutcomes>& sigma_y,
                            const std::array<T, kContinuousOutcomes>& log_sigma_y,
                            const PreparedData& d) {
  Shared<T> s;
  s.aleph_nullip = aleph_nullip;
  s.aleph_pit = aleph_pit;
  s.b_pc = b_pc;
  s.c = c;
  s.log_gap = log_gap;
  for (std::size_t o = 0; o < kOutcomes; ++o) {
    s.coefs[o].reserve(d.x_coefficients[o].size());
    for (std::size_t ci : d.x_coefficients[o]) s.coefs[o].push_back(beta[ci]);
    s.beta_pc[o] = beta[d.poscon_coefficient[o]];
  }
  s.sigma_y = sigma_y;
  s.log_sigma_y = log_sigma_y;
  return s;
}

template <std::size_t N>
std::array<double, N> values_of(const std::array<ad::Var, N>& xs) {
  std::array<double, N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = xs[i].value();
  return out;
}

Shared<double> values_of(const Shared<ad::Var>& s) {
  Shared<double> v;
  v.aleph_nullip = s.aleph_nullip.value();
  v.aleph_pit = s.aleph_pit.value();
  v.b_pc = s.b_pc.value();
  v.c = values_of(s.c);
  v.log_gap = values_of(s.log_gap);
  for (std::size_t o = 0; o < kOutcomes; ++o) {
    v.coefs[o].reserve(s.coefs[o].size());
    for (const auto& b : s.coefs[o]) v.coefs[o].push_back(b.value());
  }
  v.beta_pc = values_of(s.beta_pc);
  v.sigma_y = values_of(s.sigma_y);
  v.log_sigma_y = values_of(s.log_sigma_y);
  return v;
}

Shared<double> shared_from(const Parameters& p, const PreparedData& d) {
  std::array<double, J - 1> gap;
  for (std::size_t k = 0; k + 1 < J; ++k) gap[k] = log1m_exp(p.cutpoints[k] - p.cutpoints[k + 1]);
  std::array<double, kContinuousOutcomes> log_sigma_y;
  for (std::size_t o = 0; o < kContinuousOutcomes; ++o) log_sigma_y[o] = std::log(p.sigma_y[o]);
  return make_shared_terms<double>(p.aleph_nullip, p.aleph_pit, p.b_pc, p.cutpoints, gap, p.beta,
                                   p.sigma_y, log_sigma_y, d);
}

double row_eta(const PreparedRow& r, const Shared<double>& s) {
  return s.aleph_nullip * r.nullip + s.aleph_pit * r.pit + s.b_pc;
}

std::array<double, kOutcomes> row_bases(const PreparedRow& r, const Shared<double>& s) {
  std::array<double, kOutcomes> base;
  for (std::size_t o = 0; o < kOutcomes; ++o) {
    base[o] = dot(std::span<const double>(s.coefs[o]), std::span<const double>(r.x[o]));
  }
  return base;
}

/// Partials of one row's log-likelihood with respect to what it reads.
struct RowGrad {
  double eta = 0.0;
  std::array<double, kOutcomes> base{};
  std::array<double, kOutcomes> beta_pc{};
  std::array<double, J> c{};
  std::array<double, J - 1> log_gap{};
  std::array<double, kContinuousOutcomes> log_sigma_y{};
};

/// log inv_logit(a), log inv_logit(-a), inv_logit(a), inv_logit(-a) from one
/// exp and one log1p.
struct Sigmoid {
  double above, below, sig, cosig;
};

Sigmoid sigmoid_pieces(double a) {
  const double e = std::exp(-std::fabs(a));
  const double l = std::log1p(e);
  const double inv = 1.0 / (1.0 + e);
  if (a >= 0) return {-l, -a - l, inv, e * inv};
  return {a - l, -l, e * inv, inv};
}

struct OrdinalTerm {
  double value = 0.0;
  double d_eta = 0.0;
  double d_c_lo = 0.0;  // w.r.t. c[k-1]
  double d_c_hi = 0.0;  // w.r.t. c[k]
};

OrdinalTerm ordinal_term(std::size_t k, const std::array<Sigmoid, J>& sp,
                         const std::array<double, J - 1>& log_gap) {
  OrdinalTerm t;
  if (k == 0) {
    t.value = sp[0].below;
    t.d_eta = -sp[0].sig;
    t.d_c_hi = sp[0].sig;
  } else if (k == J) {
    t.value = sp[J - 1].above;
    t.d_eta = sp[J - 1].cosig;
    t.d_c_lo = -sp[J - 1].cosig;
  } else {
    t.value = sp[k - 1].above + sp[k].below + log_gap[k - 1];
    t.d_eta = sp[k - 1].cosig - sp[k].sig;
    t.d_c_lo = -sp[k - 1].cosig;
    t.d_c_hi = sp[k].sig;
  }
  return t;
}

struct OutcomeTerms {
  double value = 0.0;
  std::array<double, kOutcomes> d_mu{};
  std::array<double, kContinuousOutcomes> d_log_sigma{};
};

/// Present Gaussian time terms plus the cs term at poscon = k.
OutcomeTerms outcome_terms(const PreparedRow& r, const Shared<double>& s,
                           const std::array<double, kOutcomes>& base, std::size_t k,
                           double poscon_mean) {
  OutcomeTerms t;
  const double centred = static_cast<double>(k) - poscon_mean;
  for (std::size_t o = 0; o < kContinuousOutcomes; ++o) {
    if (!r.present[o]) continue;
    const double mu = base[o] + s.beta_pc[o] * centred;
    const double z = (r.y[o] - mu) / s.sigma_y[o];
    t.value += -0.5 * z * z - s.log_sigma_y[o] - kLogSqrtTwoPi;
    t.d_mu[o] = z / s.sigma_y[o];
    t.d_log_sigma[o] = z * z - 1.0;
  }
  const double x = base[kOutcomes - 1] + s.beta_pc[kOutcomes - 1] * centred;
  const Sigmoid sp = sigmoid_pieces(x);
  t.value += r.cs ? sp.above : sp.below;
  t.d_mu[kOutcomes - 1] = r.cs ? sp.cosig : -sp.sig;
  return t;
}

/// One row's log-likelihood: ordinal plus outcome terms at the observed
/// poscon, or the log-sum-exp over all categories when poscon is missing or
/// `marginalize` is set. `joint`, when given, receives the per-category terms
/// and forces the mixture.
double row_kernel(const PreparedRow& r, const Shared<double>& s, double poscon_mean,
                  bool marginalize, RowGrad* grad, std::array<double, K>* joint = nullptr) {
  const double eta = row_eta(r, s);
  const auto base = row_bases(r, s);
  std::array<Sigmoid, J> sp;
  const bool mixture = r.poscon < 0 || marginalize || joint != nullptr;
  for (std::size_t j = 0; j < J; ++j) {
    // An observed category k reads only cutpoints k-1 and k.
    const auto k = static_cast<std::size_t>(r.poscon);
    if (mixture || j + 1 == k || j == k) sp[j] = sigmoid_pieces(eta - s.c[j]);
  }

  auto accumulate = [&](std::size_t k, double w, const OrdinalTerm& ot, const OutcomeTerms& ut) {
    const double centred = static_cast<double>(k) - poscon_mean;
    grad->eta += w * ot.d_eta;
    if (k >= 1) grad->c[k - 1] += w * ot.d_c_lo;
    if (k < J) grad->c[k] += w * ot.d_c_hi;
    if (k >= 1 && k < J) grad->log_gap[k - 1] += w;
    for (std::size_t o = 0; o < kOutcomes; ++o) {
      grad->base[o] += w * ut.d_mu[o];
      grad->beta_pc[o] += w * ut.d_mu[o] * centred;
    }
    for (std::size_t o = 0; o < kContinuousOutcomes; ++o) {
      grad->log_sigma_y[o] += w * ut.d_log_sigma[o];
    }
  };

  if (!mixture) {
    const auto k = static_cast<std::size_t>(r.poscon);
    const OrdinalTerm ot = ordinal_term(k, sp, s.log_gap);
    const OutcomeTerms ut = outcome_terms(r, s, base, k, poscon_mean);
    if (grad) accumulate(k, 1.0, ot, ut);
    return ot.value + ut.value;
  }

  std::array<OrdinalTerm, K> ots;
  std::array<OutcomeTerms, K> uts;
  std::array<double, K> terms;
  for (std::size_t k = 0; k < K; ++k) {
    ots[k] = ordinal_term(k, sp, s.log_gap);
    uts[k] = outcome_terms(r, s, base, k, poscon_mean);
    terms[k] = ots[k].value + uts[k].value;
  }
  if (joint) *joint = terms;
  const double top = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(top)) return top;
  std::array<double, K> w;
  double z = 0.0;
  for (std::size_t k = 0; k < K; ++k) z += w[k] = std::exp(terms[k] - top);
  if (grad) {
    for (std::size_t k = 0; k < K; ++k) accumulate(k, w[k] / z, ots[k], uts[k]);
  }
  return top + std::log(z);
}

void push_nonzero(ad::Tape& tape, const ad::Var& v, double partial) {
  if (partial != 0.0) tape.push_edge(v, partial);
}

/// Sum of every row's log-likelihood. With `s_var`, the total is recorded as
/// one tape node whose partials are accumulated over rows.
double likelihood_total(const PreparedData& data, const Shared<double>& s,
                        const Shared<ad::Var>* s_var, ad::Var* node) {
  double total = 0.0;
  if (s_var == nullptr) {
    for (const auto& r : data.rows) total += row_kernel(r, s, data.poscon_mean, false, nullptr);
    return total;
  }
  double d_nullip = 0.0, d_pit = 0.0, d_bpc = 0.0;
  std::array<std::vector<double>, kOutcomes> d_coefs;
  for (std::size_t o = 0; o < kOutcomes; ++o) d_coefs[o].assign(s.coefs[o].size(), 0.0);
  RowGrad sum_g;
  for (const auto& r : data.rows) {
    RowGrad g;
    total += row_kernel(r, s, data.poscon_mean, false, &g);
    d_nullip += g.eta * r.nullip;
    d_pit += g.eta * r.pit;
    d_bpc += g.eta;
    for (std::size_t o = 0; o < kOutcomes; ++o) {
      for (std::size_t j = 0; j < d_coefs[o].size(); ++j) d_coefs[o][j] += g.base[o] * r.x[o][j];
      sum_g.beta_pc[o] += g.beta_pc[o];
    }
    for (std::size_t j = 0; j < J; ++j) sum_g.c[j] += g.c[j];
    for (std::size_t j = 0; j + 1 < J; ++j) sum_g.log_gap[j] += g.log_gap[j];
    for (std::size_t o = 0; o < kContinuousOutcomes; ++o) sum_g.log_sigma_y[o] += g.log_sigma_y[o];
  }
  const Shared<ad::Var>& v = *s_var;
  ad::Tape& tape = *v.b_pc.tape();
  push_nonzero(tape, v.aleph_nullip, d_nullip);
  push_nonzero(tape, v.aleph_pit, d_pit);
  push_nonzero(tape, v.b_pc, d_bpc);
  for (std::size_t o = 0; o < kOutcomes; ++o) {
    for (std::size_t j = 0; j < d_coefs[o].size(); ++j) push_nonzero(tape, v.coefs[o][j], d_coefs[o][j]);
    push_nonzero(tape, v.beta_pc[o], sum_g.beta_pc[o]);
  }
  for (std::size_t j = 0; j < J; ++j) push_nonzero(tape, v.c[j], sum_g.c[j]);
  for (std::size_t j = 0; j + 1 < J; ++j) push_nonzero(tape, v.log_gap[j], sum_g.log_gap[j]);
  for (std::size_t o = 0; o < kContinuousOutcomes; ++o) {
    push_nonzero(tape, v.log_sigma_y[o], sum_g.log_sigma_y[o]);
  }
  *node = tape.finish_node(total);
  return total;
}

/// Prior terms with Jacobians. Constant parts accumulate into `constant`.
template <class T>
void push_prior_terms(const Unpacked<T>& u, std::vector<T>& terms, double& constant) {
  constexpr double kLog2 = std::numbers::ln2;
  // aleph ~ N(0, 1)
  terms.push_back(square(u.aleph_nullip) * -0.5);
  terms.push_back(square(u.aleph_pit) * -0.5);
  constant -= 2 * kLogSqrtTwoPi;
  // b_pc ~ Cauchy(0, 1)
  terms.push_back(-log1p(square(u.b_pc)));
  constant -= std::log(std::numbers::pi);
  // phi ~ U(0, 4): density -log 4 cancels the log 4 of its Jacobian.
  terms.push_back(log_sigmoid(u.phi_u));
  terms.push_back(log_sigmoid(-u.phi_u));
  // simplex ~ Dirichlet(1): constant log Gamma(5), plus stick-breaking Jacobian.
  constant += std::lgamma(static_cast<double>(kPosconCategories));
  for (std::size_t k = 0; k < kPosconCutpoints; ++k) {
    terms.push_back(u.stick_log_z[k]);
    terms.push_back(u.stick_log_1mz[k]);
    if (k > 0) terms.push_back(u.stick_log_rem[k]);
  }
  // mu ~ N(0, 1); sigma ~ HalfNormal(1) on the log scale.
  for (std::size_t f = 0; f < u.mu.size(); ++f) {
    terms.push_back(square(u.mu[f]) * -0.5);
    terms.push_back(square(u.sigma[f]) * -0.5);
    terms.push_back(u.log_sigma[f]);
    constant += kLog2 - 2 * kLogSqrtTwoPi;
  }
  // Non-centred raw scores ~ N(0, 1).
  for (const T& z : u.z) terms.push_back(square(z) * -0.5);
  constant -= static_cast<double>(u.z.size()) * kLogSqrtTwoPi;
  // Outcome noise ~ HalfNormal(1) on the log scale.
  for (std::size_t o = 0; o < kContinuousOutcomes; ++o) {
    terms.push_back(square(u.sigma_y[o]) * -0.5);
    terms.push_back(u.log_sigma_y[o]);
    constant += kLog2 - kLogSqrtTwoPi;
  }
}

template <class T>
T log_density_impl(const Model& m, std::span<const T> theta, bool prior, bool likelihood) {
  const Unpacked<T> u = unpack<T>(m.space(), theta);
  std::vector<T> terms;
  terms.reserve(m.data().rows.size() + 4 * theta.size());
  double constant = 0.0;
  if (prior) push_prior_terms(u, terms, constant);
  if (likelihood) {
    const Shared<T> s = make_shared_terms<T>(u.aleph_nullip, u.aleph_pit, u.b_pc, u.cutpoints,
                                             u.log_gap, u.beta, u.sigma_y, u.log_sigma_y,
                                             m.data());
    if constexpr (std::is_same_v<T, double>) {
      terms.push_back(likelihood_total(m.data(), s, nullptr, nullptr));
    } else {
      ad::Var node;
      likelihood_total(m.data(), values_of(s), &s, &node);
      terms.push_back(node);
    }
  }
  return sum(std::span<const T>(terms)) + constant;
}

}  // namespace

Model::Model(ModelSpec spec, PreparedData data)
    : spec_(std::move(spec)), data_(std::move(data)), space_(spec_) {
  if (data_.rows.empty()) throw ValidationError("model needs at least one row");
}

void Model::check_theta(std::span<const double> theta) const {
  if (theta.size() != dimension()) {
    throw ValidationError("parameter vector has " + std::to_string(theta.size()) +
                          " entries, expected " + std::to_string(dimension()));
  }
  for (double t : theta) {
    if (!std::isfinite(t)) throw ValidationError("non-finite parameter value");
  }
}

double Model::log_density(std::span<const double> theta) const {
  check_theta(theta);
  return log_density_impl<double>(*this, theta, true, true);
}

double Model::log_density_gradient(std::span<const double> theta, std::span<double> grad) const {
  check_theta(theta);
  if (grad.size() != theta.size()) throw ValidationError("gradient buffer size mismatch");
  return ad::grad(
      [this](std::span<const ad::Var> x) { return log_density_impl<ad::Var>(*this, x, true, true); },
      theta, grad);
}

double Model::prior_logdensity(std::span<const double> theta) const {
  check_theta(theta);
  return log_density_impl<double>(*this, theta, true, false);
}

double Model::log_likelihood(std::span<const double> theta) const {
  check_theta(theta);
  return log_density_impl<double>(*this, theta, false, true);
}

double Model::row_loglik(std::size_t row, const Parameters& p) const {
  return row_kernel(data_.rows.at(row), shared_from(p, data_), data_.poscon_mean, false, nullptr);
}

double Model::row_loglik_marginal(std::size_t row, const Parameters& p) const {
  return row_kernel(data_.rows.at(row), shared_from(p, data_), data_.poscon_mean, true, nullptr);
}

double Model::row_outcome_loglik(std::size_t row, const Parameters& p, int k) const {
  if (k < 0 || k >= static_cast<int>(K)) throw ValidationError("poscon value must be in 0..4");
  const auto& r = data_.rows.at(row);
  const auto s = shared_from(p, data_);
  return outcome_terms(r, s, row_bases(r, s), static_cast<std::size_t>(k), data_.poscon_mean).value;
}

double Model::outcome_mean(std::size_t row, const Parameters& p, Outcome o,
                           int poscon_value) const {
  if (poscon_value < 0 || poscon_value >= static_cast<int>(kPosconCategories)) {
    throw ValidationError("poscon value must be in 0..4");
  }
  const auto oi = static_cast<std::size_t>(o);
  const auto& r = data_.rows.at(row);
  double v = 0.0;
  for (std::size_t j = 0; j < data_.x_coefficients[oi].size(); ++j) {
    v += p.beta[data_.x_coefficients[oi][j]] * r.x[oi][j];
  }
  return v + p.beta[data_.poscon_coefficient[oi]] * (poscon_value - data_.poscon_mean);
}

double Model::ordinal_eta(std::size_t row, const Parameters& p) const {
  return row_eta(data_.rows.at(row), shared_from(p, data_));
}

std::vector<std::array<double, kPosconCategories>> Model::poscon_posterior(
    const Parameters& p) const {
  const auto s = shared_from(p, data_);
  std::vector<std::array<double, kPosconCategories>> out(data_.rows.size());
  for (std::size_t i = 0; i < data_.rows.size(); ++i) {
    const auto& r = data_.rows[i];
    auto& probs = out[i];
    if (r.poscon >= 0) {
      probs.fill(0.0);
      probs[static_cast<std::size_t>(r.poscon)] = 1.0;
      continue;
    }
    std::array<double, K> joint;
    const double lse = row_kernel(r, s, data_.poscon_mean, true, nullptr, &joint);
    for (std::size_t k = 0; k < kPosconCategories; ++k) probs[k] = std::exp(joint[k] - lse);
  }
  return out;
}

}  // namespace bishop
