#include "bishop/ordinal.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bishop/errors.hpp"

namespace bishop {

namespace {

void check_increasing(std::span<const double> c) {
  if (c.empty()) throw ValidationError("ordered logistic needs at least one cutpoint");
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!std::isfinite(c[i])) throw ValidationError("cutpoints must be finite");
    if (i > 0 && !(c[i] > c[i - 1])) throw ValidationError("cutpoints must be strictly increasing");
  }
}

void check_simplex(std::span<const double> probs) {
  double total = 0.0;
  for (double p : probs) {
    if (!(p > 0) || !std::isfinite(p)) throw ValidationError("simplex entries must be > 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("simplex must sum to 1");
}

}  // namespace

CutpointSet cutpoints_from_simplex(std::span<const double> probs, double phi) {
  if (probs.size() != kPosconCategories) {
    throw ValidationError("simplex must have " + std::to_string(kPosconCategories) + " entries");
  }
  if (!std::isfinite(phi)) throw ValidationError("anchor phi must be finite");
  check_simplex(probs);
  CutpointSet cs;
  cs.phi = phi;
  std::copy(probs.begin(), probs.end(), cs.probs.begin());
  double head = 0.0;
  for (std::size_t k = 0; k < kPosconCutpoints; ++k) {
    head += probs[k];
    double tail = 0.0;
    for (std::size_t i = k + 1; i < kPosconCategories; ++i) tail += probs[i];
    if (!(tail > 1e-15)) {
      throw ValidationError("cumulative simplex reaches 1 before the last category");
    }
    cs.cutpoints[k] = phi + std::log(head) - std::log(tail);
  }
  check_increasing(cs.cutpoints);
  return cs;
}

double ordered_logistic_lpmf(int k, double eta, std::span<const double> cutpoints) {
  check_increasing(cutpoints);
  const int last = static_cast<int>(cutpoints.size());
  if (k < 0 || k > last) throw ValidationError("ordinal category out of range");
  std::vector<double> gaps(cutpoints.size() > 1 ? cutpoints.size() - 1 : 0);
  for (std::size_t j = 0; j + 1 < cutpoints.size(); ++j) {
    gaps[j] = log1m_exp(cutpoints[j] - cutpoints[j + 1]);
  }
  return ordinal_lpmf<double>(k, eta, cutpoints, gaps);
}

double ordered_logistic_pmf(int k, double eta, std::span<const double> cutpoints) {
  return std::exp(ordered_logistic_lpmf(k, eta, cutpoints));
}

double dirichlet_logpdf(std::span<const double> probs, std::span<const double> alpha) {
  if (probs.size() != alpha.size()) throw ValidationError("Dirichlet size mismatch");
  check_simplex(probs);
  double alpha_sum = 0.0;
  double lp = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(alpha[i] > 0)) throw ValidationError("Dirichlet concentration must be > 0");
    alpha_sum += alpha[i];
    lp += (alpha[i] - 1.0) * std::log(probs[i]) - std::lgamma(alpha[i]);
  }
  return lp + std::lgamma(alpha_sum);
}

double ordinal_prior_logdensity(const CutpointSet& cs, std::span<const double> alpha) {
  return dirichlet_logpdf(cs.probs, alpha);
}

}  // namespace bishop
