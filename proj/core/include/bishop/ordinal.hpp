#pragma once

// Ordered-logistic likelihood and the anchored Dirichlet construction of its
// cutpoints.
//
// Cutpoints are never sampled directly. The sampler moves over a probability
// simplex p and an anchor phi, and the cutpoints follow deterministically as
// c_k = phi + logit(p_1 + ... + p_k). Because p is the sampled
// parameterisation, its Dirichlet density is the whole prior; there is no
// separate Jacobian from c back to p to account for.

#include <array>
#include <cstddef>
#include <span>

#include "bishop/scalar_math.hpp"

namespace bishop {

inline constexpr std::size_t kPosconCategories = 5;  // scores 0..4
inline constexpr std::size_t kPosconCutpoints = kPosconCategories - 1;

struct CutpointSet {
  double phi = 0.0;
  std::array<double, kPosconCategories> probs{};
  std::array<double, kPosconCutpoints> cutpoints{};
};

/// Throws ValidationError for non-positive entries, a sum away from one, or
/// a cumulative sum that saturates before the last category.
CutpointSet cutpoints_from_simplex(std::span<const double> probs, double phi);

/// Category probability f(k | eta, c) for K = cutpoints.size() + 1
/// categories. Throws ValidationError if c is not strictly increasing or k is
/// outside 0..K-1.
double ordered_logistic_pmf(int k, double eta, std::span<const double> cutpoints);

/// log f(k | eta, c) evaluated through log-sigmoid differences.
double ordered_logistic_lpmf(int k, double eta, std::span<const double> cutpoints);

/// log Dirichlet(probs | alpha).
double dirichlet_logpdf(std::span<const double> probs, std::span<const double> alpha);

/// Prior log-density of a cutpoint set: Dirichlet over its simplex.
double ordinal_prior_logdensity(const CutpointSet& cs, std::span<const double> alpha);

/// Generic log f(k | eta, c) given precomputed log1m_exp(c[j] - c[j+1]).
/// Works for double and for taped scalars.
template <class T>
T ordinal_lpmf(int k, const T& eta, std::span<const T> c, std::span<const T> log_gap) {
  const int last = static_cast<int>(c.size());
  if (k == 0) return log_sigmoid(c[0] - eta);
  if (k == last) return log_sigmoid(eta - c[last - 1]);
  return log_sigmoid(eta - c[k - 1]) + log_sigmoid(c[k] - eta) + log_gap[k - 1];
}

/// All K = 5 category log-probabilities sharing one set of sigmoid
/// evaluations. Values match ordinal_lpmf term for term.
template <class T>
std::array<T, kPosconCategories> ordinal_lpmf_all(const T& eta, std::span<const T> c,
                                                  std::span<const T> log_gap) {
  std::array<T, kPosconCutpoints> above;  // log inv_logit(eta - c_j)
  std::array<T, kPosconCutpoints> below;  // log inv_logit(c_j - eta)
  for (std::size_t j = 0; j < kPosconCutpoints; ++j) {
    above[j] = log_sigmoid(eta - c[j]);
    below[j] = log_sigmoid(c[j] - eta);
  }
  std::array<T, kPosconCategories> out;
  out[0] = below[0];
  for (std::size_t k = 1; k < kPosconCutpoints; ++k) {
    out[k] = above[k - 1] + below[k] + log_gap[k - 1];
  }
  out[kPosconCutpoints] = above[kPosconCutpoints - 1];
  return out;
}

}  // namespace bishop
