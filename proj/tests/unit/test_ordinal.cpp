#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "bishop/errors.hpp"
#include "bishop/ordinal.hpp"

using namespace bishop;

namespace {

// Oracle: difference of logistic CDFs, P(Y <= k) = 1 / (1 + exp(eta - c_k)).
double cdf_oracle(int k, double eta, const std::vector<double>& c) {
  if (k < 0) return 0.0;
  if (k >= static_cast<int>(c.size())) return 1.0;
  return 1.0 / (1.0 + std::exp(eta - c[static_cast<std::size_t>(k)]));
}

double pmf_oracle(int k, double eta, const std::vector<double>& c) {
  return cdf_oracle(k, eta, c) - cdf_oracle(k - 1, eta, c);
}

std::vector<double> random_cutpoints(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> start(0.0, 2.0);
  std::exponential_distribution<double> gap(1.0);
  std::vector<double> c(n);
  c[0] = start(rng);
  for (std::size_t i = 1; i < n; ++i) c[i] = c[i - 1] + 0.01 + gap(rng);
  return c;
}

}  // namespace

TEST(Ordinal, PmfSumsToOne) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> eta_dist(0.0, 4.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto c = random_cutpoints(rng, kPosconCutpoints);
    const double eta = eta_dist(rng);
    double total = 0.0;
    for (int k = 0; k < static_cast<int>(kPosconCategories); ++k) {
      total += ordered_logistic_pmf(k, eta, c);
    }
    ASSERT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Ordinal, PmfMatchesCdfDifferenceOracle) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> eta_dist(0.0, 2.0);
  for (int rep = 0; rep < 200; ++rep) {
    const auto c = random_cutpoints(rng, kPosconCutpoints);
    const double eta = eta_dist(rng);
    for (int k = 0; k < static_cast<int>(kPosconCategories); ++k) {
      EXPECT_NEAR(ordered_logistic_pmf(k, eta, c), pmf_oracle(k, eta, c), 1e-13);
    }
  }
}

TEST(Ordinal, LogPmfStaysFiniteInTheTails) {
  const std::vector<double> c = {-1.0, 0.0, 1.0, 2.0};
  EXPECT_NEAR(ordered_logistic_lpmf(0, 60.0, c), -61.0, 1e-9);
  EXPECT_NEAR(ordered_logistic_lpmf(4, -60.0, c), -62.0, 1e-9);
  EXPECT_TRUE(std::isfinite(ordered_logistic_lpmf(2, 800.0, c)));
}

TEST(Ordinal, GenericKernelMatchesScalarPath) {
  const std::vector<double> c = {-1.3, -0.2, 0.9, 2.4};
  std::vector<double> gap(c.size() - 1);
  for (std::size_t k = 0; k + 1 < c.size(); ++k) gap[k] = log1m_exp(c[k] - c[k + 1]);
  const auto all = ordinal_lpmf_all<double>(0.35, c, gap);
  for (int k = 0; k < 5; ++k) {
    EXPECT_EQ(all[static_cast<std::size_t>(k)], ordinal_lpmf<double>(k, 0.35, c, gap));
    EXPECT_NEAR(all[static_cast<std::size_t>(k)], std::log(pmf_oracle(k, 0.35, c)), 1e-12);
  }
}

TEST(Ordinal, RejectsBadCutpointsAndCategories) {
  const std::vector<double> unordered = {0.0, -1.0, 1.0, 2.0};
  EXPECT_THROW(ordered_logistic_pmf(0, 0.0, unordered), ValidationError);
  const std::vector<double> ok = {-1.0, 0.0, 1.0, 2.0};
  EXPECT_THROW(ordered_logistic_pmf(5, 0.0, ok), ValidationError);
  EXPECT_THROW(ordered_logistic_pmf(-1, 0.0, ok), ValidationError);
  EXPECT_THROW(ordered_logistic_pmf(0, 0.0, std::vector<double>{}), ValidationError);
}

TEST(Ordinal, CutpointsAreAnchoredCumulativeLogits) {
  const std::vector<double> p = {0.1, 0.2, 0.3, 0.25, 0.15};
  const auto cs = cutpoints_from_simplex(p, 1.5);
  double cum = 0.0;
  for (std::size_t k = 0; k < kPosconCutpoints; ++k) {
    cum += p[k];
    EXPECT_NEAR(cs.cutpoints[k], 1.5 + std::log(cum / (1 - cum)), 1e-12);
  }
  // At eta = phi the category probabilities are the simplex itself.
  const std::vector<double> c(cs.cutpoints.begin(), cs.cutpoints.end());
  for (int k = 0; k < 5; ++k) {
    EXPECT_NEAR(ordered_logistic_pmf(k, 1.5, c), p[static_cast<std::size_t>(k)], 1e-12);
  }
}

TEST(Ordinal, SimplexValidation) {
  EXPECT_THROW(cutpoints_from_simplex(std::vector<double>{0.2, 0.2, 0.2, 0.2, 0.3}, 0.0),
               ValidationError);
  EXPECT_THROW(cutpoints_from_simplex(std::vector<double>{0.5, 0.5, 0.0, 0.0, 0.0}, 0.0),
               ValidationError);
  EXPECT_THROW(cutpoints_from_simplex(std::vector<double>{0.25, 0.25, 0.25, 0.25}, 0.0),
               ValidationError);
}

TEST(Ordinal, FlatDirichletDensityIsLogGammaK) {
  const std::vector<double> p = {0.1, 0.2, 0.3, 0.25, 0.15};
  const std::vector<double> ones(5, 1.0);
  EXPECT_NEAR(dirichlet_logpdf(p, ones), std::log(24.0), 1e-12);
  // Dirichlet(2,...): log Gamma(10) - 5 log Gamma(2) + sum log p.
  const std::vector<double> twos(5, 2.0);
  double expected = std::lgamma(10.0);
  for (double x : p) expected += std::log(x);
  EXPECT_NEAR(dirichlet_logpdf(p, twos), expected, 1e-12);
}
