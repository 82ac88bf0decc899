#pragma once

// Named parameter blocks and their unconstrained parameterisation.
//
// Unconstrained layout (F families, C coefficients):
//   [0]            aleph_nullip             identity
//   [1]            aleph_pit                identity
//   [2]            b_pc                     identity
//   [3]            phi                      4 * inv_logit(u), support (0, 4)
//   [4, 8)         simplex p (5 entries)    stick-breaking, 4 free coordinates
//   [8, 8+2F)      per family: mu, sigma    identity, exp(u)
//   [8+2F, +C)     raw coefficient scores z beta = mu + sigma * z
//   [8+2F+C, +4)   outcome noise scales     exp(u)
//
// The constrained (reported) vector lists aleph_nullip, aleph_pit, b_pc,
// phi, p.0..p.4, c.1..c.4, mu.<family>, sigma.<family>, beta.<cov>.<out>,
// sigma_y.<outcome>. Cutpoints are derived from phi and p.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bishop/model_spec.hpp"
#include "bishop/ordinal.hpp"
#include "bishop/scalar_math.hpp"

namespace bishop {

inline constexpr std::size_t kContinuousOutcomes = 4;
inline constexpr double kPhiUpper = 4.0;

/// Constrained parameter values.
struct Parameters {
  double aleph_nullip = 0.0;
  double aleph_pit = 0.0;
  double b_pc = 0.0;
  double phi = 2.0;
  std::array<double, kPosconCategories> simplex{};
  std::array<double, kPosconCutpoints> cutpoints{};
  std::vector<double> mu;     // per family
  std::vector<double> sigma;  // per family
  std::vector<double> beta;   // per coefficient
  std::array<double, kContinuousOutcomes> sigma_y{};
};

class ParameterSpace {
 public:
  explicit ParameterSpace(const ModelSpec& spec);

  std::size_t families() const noexcept { return families_; }
  std::size_t coefficients() const noexcept { return coefficients_; }
  std::size_t dimension() const noexcept { return 8 + 2 * families_ + coefficients_ + 4; }

  std::size_t phi_offset() const noexcept { return 3; }
  std::size_t simplex_offset() const noexcept { return 4; }
  std::size_t family_offset(std::size_t f) const noexcept { return 8 + 2 * f; }
  std::size_t z_offset() const noexcept { return 8 + 2 * families_; }
  std::size_t sigma_y_offset() const noexcept { return z_offset() + coefficients_; }

  /// Names of the constrained vector, in order.
  const std::vector<std::string>& constrained_names() const noexcept { return names_; }
  /// Names of the unconstrained coordinates (for diagnostics).
  std::vector<std::string> unconstrained_names() const;

  Parameters to_constrained(std::span<const double> theta) const;
  std::vector<double> to_unconstrained(const Parameters& p) const;

  std::vector<double> flatten(const Parameters& p) const;
  Parameters unflatten(std::span<const double> values) const;
  /// Builds Parameters from a named constrained vector in any order.
  Parameters from_named(std::span<const std::string> names, std::span<const double> values) const;

  /// Writes the constrained vector for theta into out (size = names().size()).
  void write_constrained(std::span<const double> theta, std::span<double> out) const;

  /// Family index of each coefficient.
  const std::vector<std::size_t>& coefficient_families() const noexcept { return coef_family_; }

  /// Sum of the log-Jacobians of every constraining transform at theta.
  double log_jacobian(std::span<const double> theta) const;

 private:
  std::size_t families_;
  std::size_t coefficients_;
  std::vector<std::string> names_;
  std::vector<std::size_t> coef_family_;
};

/// Transform results shared by the prior and the likelihood. Works for
/// double and for taped scalars.
template <class T>
struct Unpacked {
  T aleph_nullip, aleph_pit, b_pc;
  T phi_u;
  T phi;
  std::array<T, kPosconCategories> log_simplex;
  std::array<T, kPosconCutpoints> cutpoints;
  std::array<T, kPosconCutpoints - 1> log_gap;
  std::array<T, kPosconCutpoints> stick_log_z;    // log z_k
  std::array<T, kPosconCutpoints> stick_log_1mz;  // log (1 - z_k)
  std::array<T, kPosconCutpoints> stick_log_rem;  // log remaining stick before piece k (k >= 1; 0 at k = 0)
  std::vector<T> mu, log_sigma, sigma;
  std::vector<T> z, beta;
  std::array<T, kContinuousOutcomes> log_sigma_y, sigma_y;
};

template <class T>
Unpacked<T> unpack(const ParameterSpace& space, std::span<const T> theta) {
  const auto& coef_family = space.coefficient_families();
  using std::exp;
  Unpacked<T> u;
  u.aleph_nullip = theta[0];
  u.aleph_pit = theta[1];
  u.b_pc = theta[2];
  u.phi_u = theta[space.phi_offset()];
  u.phi = inv_logit(u.phi_u) * kPhiUpper;

  // Stick-breaking: z_k = inv_logit(y_k - log(K - 1 - k)) puts y = 0 at the
  // uniform simplex. log_rem tracks log(1 - p_0 - ... - p_{k-1}).
  const std::size_t so = space.simplex_offset();
  std::array<T, kPosconCutpoints> log_rem_after;
  for (std::size_t k = 0; k < kPosconCutpoints; ++k) {
    const double offset = std::log(static_cast<double>(kPosconCutpoints - k));
    const T y = theta[so + k] - offset;
    u.stick_log_z[k] = log_sigmoid(y);
    u.stick_log_1mz[k] = log_sigmoid(offset - theta[so + k]);
    if (k == 0) {
      u.log_simplex[k] = u.stick_log_z[k];
      log_rem_after[k] = u.stick_log_1mz[k];
    } else {
      u.stick_log_rem[k] = log_rem_after[k - 1];
      u.log_simplex[k] = log_rem_after[k - 1] + u.stick_log_z[k];
      log_rem_after[k] = log_rem_after[k - 1] + u.stick_log_1mz[k];
    }
  }
  u.log_simplex[kPosconCategories - 1] = log_rem_after[kPosconCutpoints - 1];

  // c_k = phi + logit(p_0 + ... + p_k) = phi + log(1 - rem) - log(rem).
  for (std::size_t k = 0; k < kPosconCutpoints; ++k) {
    u.cutpoints[k] = u.phi + log1m_exp(log_rem_after[k]) - log_rem_after[k];
  }
  for (std::size_t k = 0; k + 1 < kPosconCutpoints; ++k) {
    u.log_gap[k] = log1m_exp(u.cutpoints[k] - u.cutpoints[k + 1]);
  }

  const std::size_t nf = space.families();
  u.mu.reserve(nf);
  u.log_sigma.reserve(nf);
  u.sigma.reserve(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    u.mu.push_back(theta[space.family_offset(f)]);
    u.log_sigma.push_back(theta[space.family_offset(f) + 1]);
    u.sigma.push_back(exp(u.log_sigma.back()));
  }
  const std::size_t nc = space.coefficients();
  u.z.reserve(nc);
  u.beta.reserve(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    const T& z = theta[space.z_offset() + c];
    u.z.push_back(z);
    const std::size_t f = coef_family[c];
    u.beta.push_back(u.mu[f] + u.sigma[f] * z);
  }
  for (std::size_t o = 0; o < kContinuousOutcomes; ++o) {
    u.log_sigma_y[o] = theta[space.sigma_y_offset() + o];
    u.sigma_y[o] = exp(u.log_sigma_y[o]);
  }
  return u;
}

}  // namespace bishop
