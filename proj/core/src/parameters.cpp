#include "bishop/parameters.hpp"

#include <algorithm>
#include <unordered_map>

#include "bishop/errors.hpp"

namespace bishop {

ParameterSpace::ParameterSpace(const ModelSpec& spec)
    : families_(spec.families().size()), coefficients_(spec.coefficients().size()) {
  names_ = {"aleph_nullip", "aleph_pit", "b_pc", "phi"};
  for (std::size_t k = 0; k < kPosconCategories; ++k) names_.push_back("p." + std::to_string(k));
  for (std::size_t k = 0; k < kPosconCutpoints; ++k) {
    names_.push_back("c." + std::to_string(k + 1));
  }
  for (Covariate f : spec.families()) names_.push_back("mu." + std::string(name_of(f)));
  for (Covariate f : spec.families()) names_.push_back("sigma." + std::string(name_of(f)));
  for (const auto& c : spec.coefficients()) {
    names_.push_back(c.name());
    coef_family_.push_back(c.family);
  }
  for (std::size_t o = 0; o < kContinuousOutcomes; ++o) {
    names_.push_back("sigma_y." + std::string(kOutcomeNames[o]));
  }
}

std::vector<std::string> ParameterSpace::unconstrained_names() const {
  std::vector<std::string> out = {"aleph_nullip", "aleph_pit", "b_pc", "logit(phi/4)"};
  for (std::size_t k = 0; k < kPosconCutpoints; ++k) out.push_back("stick." + std::to_string(k));
  const std::size_t first_mu = 4 + kPosconCategories + kPosconCutpoints;
  for (std::size_t f = 0; f < families_; ++f) {
    out.push_back(names_[first_mu + f]);
    out.push_back("log(" + names_[first_mu + families_ + f] + ")");
  }
  const std::size_t first_beta = first_mu + 2 * families_;
  for (std::size_t c = 0; c < coefficients_; ++c) out.push_back("z." + names_[first_beta + c]);
  for (std::size_t o = 0; o < kContinuousOutcomes; ++o) {
    out.push_back("log(" + names_[first_beta + coefficients_ + o] + ")");
  }
  return out;
}

Parameters ParameterSpace::to_constrained(std::span<const double> theta) const {
  if (theta.size() != dimension()) throw ValidationError("parameter dimension mismatch");
  const Unpacked<double> u = unpack<double>(*this, theta);
  Parameters p;
  p.aleph_nullip = u.aleph_nullip;
  p.aleph_pit = u.aleph_pit;
  p.b_pc = u.b_pc;
  p.phi = u.phi;
  for (std::size_t k = 0; k < kPosconCategories; ++k) p.simplex[k] = std::exp(u.log_simplex[k]);
  p.cutpoints = u.cutpoints;
  p.mu = u.mu;
  p.sigma = u.sigma;
  p.beta = u.beta;
  p.sigma_y = u.sigma_y;
  return p;
}

std::vector<double> ParameterSpace::to_unconstrained(const Parameters& p) const {
  if (p.mu.size() != families_ || p.sigma.size() != families_ || p.beta.size() != coefficients_) {
    throw ValidationError("parameter block sizes do not match the space");
  }
  std::vector<double> theta(dimension());
  theta[0] = p.aleph_nullip;
  theta[1] = p.aleph_pit;
  theta[2] = p.b_pc;
  theta[phi_offset()] = logit(p.phi / kPhiUpper);
  double rem = 1.0;
  for (std::size_t k = 0; k < kPosconCutpoints; ++k) {
    const double offset = std::log(static_cast<double>(kPosconCutpoints - k));
    const double z = p.simplex[k] / rem;
    theta[simplex_offset() + k] = logit(z) + offset;
    rem -= p.simplex[k];
  }
  for (std::size_t f = 0; f < families_; ++f) {
    theta[family_offset(f)] = p.mu[f];
    theta[family_offset(f) + 1] = std::log(p.sigma[f]);
  }
  for (std::size_t c = 0; c < coefficients_; ++c) {
    const std::size_t f = coef_family_[c];
    theta[z_offset() + c] = (p.beta[c] - p.mu[f]) / p.sigma[f];
  }
  for (std::size_t o = 0; o < kContinuousOutcomes; ++o) {
    theta[sigma_y_offset() + o] = std::log(p.sigma_y[o]);
  }
  return theta;
}

std::vector<double> ParameterSpace::flatten(const Parameters& p) const {
  std::vector<double> v = {p.aleph_nullip, p.aleph_pit, p.b_pc, p.phi};
  v.insert(v.end(), p.simplex.begin(), p.simplex.end());
  v.insert(v.end(), p.cutpoints.begin(), p.cutpoints.end());
  v.insert(v.end(), p.mu.begin(), p.mu.end());
  v.insert(v.end(), p.sigma.begin(), p.sigma.end());
  v.insert(v.end(), p.beta.begin(), p.beta.end());
  v.insert(v.end(), p.sigma_y.begin(), p.sigma_y.end());
  return v;
}

Parameters ParameterSpace::unflatten(std::span<const double> v) const {
  if (v.size() != names_.size()) throw ValidationError("constrained vector size mismatch");
  Parameters p;
  std::size_t i = 0;
  p.aleph_nullip = v[i++];
  p.aleph_pit = v[i++];
  p.b_pc = v[i++];
  p.phi = v[i++];
  for (auto& x : p.simplex) x = v[i++];
  for (auto& x : p.cutpoints) x = v[i++];
  p.mu.assign(v.begin() + i, v.begin() + i + families_);
  i += families_;
  p.sigma.assign(v.begin() + i, v.begin() + i + families_);
  i += families_;
  p.beta.assign(v.begin() + i, v.begin() + i + coefficients_);
  i += coefficients_;
  for (auto& x : p.sigma_y) x = v[i++];
  return p;
}

Parameters ParameterSpace::from_named(std::span<const std::string> names,
                                      std::span<const double> values) const {
  if (names.size() != values.size()) throw ValidationError("names/values size mismatch");
  std::unordered_map<std::string, double> lookup;
  for (std::size_t i = 0; i < names.size(); ++i) lookup[names[i]] = values[i];
  std::vector<double> ordered;
  ordered.reserve(names_.size());
  for (const auto& n : names_) {
    const auto it = lookup.find(n);
    if (it == lookup.end()) throw ValidationError("missing parameter '" + n + "'");
    ordered.push_back(it->second);
  }
  return unflatten(ordered);
}

void ParameterSpace::write_constrained(std::span<const double> theta, std::span<double> out) const {
  const auto flat = flatten(to_constrained(theta));
  std::copy(flat.begin(), flat.end(), out.begin());
}

double ParameterSpace::log_jacobian(std::span<const double> theta) const {
  if (theta.size() != dimension()) throw ValidationError("parameter dimension mismatch");
  const Unpacked<double> u = unpack<double>(*this, theta);
  double lj = std::log(kPhiUpper) + log_sigmoid(u.phi_u) + log_sigmoid(-u.phi_u);
  for (std::size_t k = 0; k < kPosconCutpoints; ++k) {
    lj += u.stick_log_z[k] + u.stick_log_1mz[k];
    if (k > 0) lj += u.stick_log_rem[k];
  }
  for (const double ls : u.log_sigma) lj += ls;
  for (const double ls : u.log_sigma_y) lj += ls;
  return lj;
}

}  // namespace bishop
