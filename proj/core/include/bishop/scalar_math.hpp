#pragma once

// Plain double kernels. The reverse-mode types in autodiff.hpp reuse these
// for their forward values, so double and taped evaluations agree bitwise.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

namespace bishop {

inline constexpr double kLogSqrtTwoPi = 0.91893853320467274178;  // log(sqrt(2*pi))
inline constexpr double kLogFloor = -690.77552789821368;         // log(1e-300)
inline constexpr double kGapFloor = 1e-300;

inline double square(double x) { return x * x; }

inline double inv_logit(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(inv_logit(x)) without overflow for large |x|.
inline double log_sigmoid(double x) {
  return x < 0 ? x - std::log1p(std::exp(x)) : -std::log1p(std::exp(-x));
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// log(1 - exp(x)) for x < 0. Arguments closer to zero than 1e-300 are
/// floored so a collapsed gap yields log(1e-300) rather than -inf.
inline double log1m_exp(double x) {
  x = std::min(x, -kGapFloor);
  return x > -std::numbers::ln2 ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x));
}

inline double log_sum_exp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

inline double log_sum_exp(double a, double b) {
  const double xs[2] = {a, b};
  return log_sum_exp(std::span<const double>(xs, 2));
}

inline double sum(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Gaussian log density with the scale's log supplied by the caller.
inline double normal_lpdf(double y, double mu, double sigma, double log_sigma) {
  const double z = (y - mu) / sigma;
  return -0.5 * z * z - log_sigma - kLogSqrtTwoPi;
}

inline double normal_lpdf(double y, double mu, double sigma) {
  return normal_lpdf(y, mu, sigma, std::log(sigma));
}

/// log Bernoulli(y | inv_logit(x)).
inline double bernoulli_logit_lpmf(bool y, double x) {
  return y ? log_sigmoid(x) : log_sigmoid(-x);
}

}  // namespace bishop
