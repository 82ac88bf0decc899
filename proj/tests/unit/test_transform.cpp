#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "bishop/errors.hpp"
#include "bishop/simulate.hpp"
#include "bishop/transform.hpp"

using namespace bishop;

TEST(BoxCox, KnownValues) {
  EXPECT_DOUBLE_EQ(boxcox(std::exp(2.0), 0.0), 2.0);
  EXPECT_DOUBLE_EQ(boxcox(4.0, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(boxcox(3.0, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(boxcox(2.0, -1.0), 0.5);
  EXPECT_THROW(boxcox(0.0, 0.5), ValidationError);
  EXPECT_THROW(boxcox(-1.0, 0.0), ValidationError);
}

TEST(BoxCox, ContinuousAtLambdaZero) {
  EXPECT_NEAR(boxcox(5.0, 1e-9), std::log(5.0), 1e-8);
  EXPECT_NEAR(boxcox(5.0, -1e-9), std::log(5.0), 1e-8);
}

TEST(BoxCox, RoundTripAcrossLambdaGrid) {
  const std::vector<double> ys = {1e-3, 0.05, 0.7, 1.0, 2.5, 13.0, 48.0, 300.0};
  double worst = 0.0;
  for (int i = -200; i <= 200; ++i) {
    const double lambda = i / 100.0;
    for (double y : ys) {
      const auto back = inverse_boxcox(boxcox(y, lambda), lambda);
      ASSERT_TRUE(back.has_value()) << "lambda " << lambda << " y " << y;
      worst = std::max(worst, std::fabs(*back - y) / y);
    }
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(BoxCox, InverseUndefinedOutsideRange) {
  EXPECT_FALSE(inverse_boxcox(-2.0, 0.5).has_value());   // 0.5 * -2 + 1 = 0
  EXPECT_FALSE(inverse_boxcox(1.0, -1.0).has_value());   // -1 + 1 = 0
  EXPECT_TRUE(inverse_boxcox(-1.9, 0.5).has_value());
  EXPECT_TRUE(inverse_boxcox(-50.0, 0.0).has_value());
}

// Reference values from tests/oracles/transform_oracle.py (scipy.stats.boxcox_llf).
TEST(BoxCox, ProfileLikelihoodMatchesReference) {
  const std::vector<double> y = {1.2, 3.4, 2.2, 8.9, 5.1, 0.7, 12.5, 4.4, 6.0, 2.9};
  EXPECT_NEAR(boxcox_profile_loglik(y, -1.0), -15.78298761478136, 1e-10);
  EXPECT_NEAR(boxcox_profile_loglik(y, 0.0), -10.707817251603661, 1e-10);
  EXPECT_NEAR(boxcox_profile_loglik(y, 0.5), -10.756074734233636, 1e-10);
  EXPECT_NEAR(boxcox_profile_loglik(y, 1.0), -12.417903855996641, 1e-10);
  EXPECT_DOUBLE_EQ(fit_lambda(y), 0.23);
}

TEST(BoxCox, FitLambdaRecoversGeneratingExponent) {
  // Data that are exactly normal after a lambda = 0.5 transform.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(10.0, 1.0);
  std::vector<double> y;
  for (int i = 0; i < 4000; ++i) y.push_back(*inverse_boxcox(n(rng), 0.5));
  EXPECT_NEAR(fit_lambda(y), 0.5, 0.05);
}

TEST(BoxCox, FitLambdaStaysOnGrid) {
  std::mt19937_64 rng(5);
  std::lognormal_distribution<double> ln(1.0, 0.8);
  std::vector<double> y;
  for (int i = 0; i < 60; ++i) y.push_back(ln(rng));
  const double lambda = fit_lambda(y);
  EXPECT_GE(lambda, kLambdaMin);
  EXPECT_LE(lambda, kLambdaMax);
  EXPECT_DOUBLE_EQ(lambda * 100.0, std::round(lambda * 100.0));
}

TEST(BoxCox, FitLambdaValidation) {
  EXPECT_THROW(fit_lambda(std::vector<double>{1, 2, 3, 4}), ValidationError);
  EXPECT_THROW(fit_lambda(std::vector<double>{2, 2, 2, 2, 2}), ValidationError);
  EXPECT_THROW(fit_lambda(std::vector<double>{1, 2, 3, 4, -5}), ValidationError);
}

TEST(OutcomeTransform, StandardisesAndInverts) {
  const OutcomeTransform t{"aug_deliv_h", 0.25, 3.0, 1.5};
  for (double y : {0.5, 4.0, 20.0}) {
    const double z = t.forward(y);
    EXPECT_NEAR(z, (boxcox(y, 0.25) - 3.0) / 1.5, 1e-15);
    EXPECT_NEAR(*t.inverse(z), y, 1e-12);
  }
}

TEST(Preprocess, TransformedOutcomesAreStandardised) {
  const auto sim = simulate_cohort(default_truth(), 120, 9);
  const auto pre = preprocess_outcomes(sim.cohort);
  ASSERT_EQ(pre.transforms.size(), kTimeOutcomes);
  for (std::size_t o = 0; o < kTimeOutcomes; ++o) {
    double s = 0.0, ss = 0.0;
    std::size_t n = 0;
    for (const auto& r : pre.table.rows) {
      if (!r.y[o]) continue;
      s += *r.y[o];
      ss += *r.y[o] * *r.y[o];
      ++n;
    }
    const double mean = s / n;
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR((ss - n * mean * mean) / (n - 1), 1.0, 1e-12);
  }
}

TEST(Preprocess, FixedLambdasAreHonoured) {
  const auto sim = simulate_cohort(default_truth(), 60, 2);
  PreprocessOptions opts;
  opts.lambdas = std::array<double, kTimeOutcomes>{0.0, 0.1, 0.2, 0.3};
  const auto pre = preprocess_outcomes(sim.cohort, opts);
  for (std::size_t o = 0; o < kTimeOutcomes; ++o) {
    EXPECT_EQ(pre.transforms[o].lambda, (*opts.lambdas)[o]);
  }
}

TEST(Preprocess, CovariatesAreCentredAndScaled) {
  const auto sim = simulate_cohort(default_truth(), 90, 4);
  const auto pre = preprocess_outcomes(sim.cohort);
  double dil = 0.0, ga = 0.0, ga2 = 0.0;
  for (const auto& r : pre.table.rows) {
    dil += r.dilation;
    ga += r.ga;
    ga2 += r.ga * r.ga;
  }
  const double n = static_cast<double>(pre.table.rows.size());
  EXPECT_NEAR(dil / n, 0.0, 1e-12);
  EXPECT_NEAR(ga / n, 0.0, 1e-12);
  EXPECT_NEAR(ga2 / (n - 1), 1.0, 1e-12);
}

TEST(Preprocess, TransformsJsonRoundTrip) {
  const auto sim = simulate_cohort(default_truth(), 50, 8);
  const auto pre = preprocess_outcomes(sim.cohort);
  const auto back = transforms_from_json(transforms_to_json(pre.transforms));
  ASSERT_EQ(back.size(), pre.transforms.size());
  for (std::size_t o = 0; o < back.size(); ++o) {
    EXPECT_EQ(back[o].outcome, pre.transforms[o].outcome);
    EXPECT_EQ(back[o].lambda, pre.transforms[o].lambda);
    EXPECT_EQ(back[o].center, pre.transforms[o].center);
    EXPECT_EQ(back[o].scale, pre.transforms[o].scale);
  }
  EXPECT_THROW(transforms_from_json("{"), ValidationError);
  EXPECT_THROW(transforms_from_json("[]"), ValidationError);
}
