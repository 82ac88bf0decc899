#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "bishop/diagnostics.hpp"
#include "bishop/errors.hpp"
#include "bishop/sampler.hpp"

using namespace bishop;

namespace {

LogDensityFn scaled_normal(std::vector<double> sd) {
  return [sd](std::span<const double> x, std::span<double> g) {
    double lp = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double z = x[i] / sd[i];
      lp -= 0.5 * z * z;
      g[i] = -z / sd[i];
    }
    return lp;
  };
}

NutsConfig small_config(std::uint64_t seed) {
  NutsConfig cfg;
  cfg.chains = 2;
  cfg.warmup = 300;
  cfg.samples = 500;
  cfg.seed = seed;
  return cfg;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

class ThreadsEnv {
 public:
  explicit ThreadsEnv(const char* value) { setenv("BISHOP_THREADS", value, 1); }
  ~ThreadsEnv() { unsetenv("BISHOP_THREADS"); }
};

}  // namespace

TEST(Sampler, RecoversIndependentNormalMoments) {
  const auto draws = sample(scaled_normal({1.0, 3.0}), SampleSpace::identity(2), small_config(1));
  ASSERT_EQ(draws.num_chains(), 2u);
  ASSERT_EQ(draws.num_draws(), 500u);
  for (std::size_t p = 0; p < 2; ++p) {
    const double sd = p == 0 ? 1.0 : 3.0;
    const auto pooled = draws.pooled(p);
    const double ess = ess_bulk(draws.per_chain(p));
    const double m = mean_of(pooled);
    EXPECT_LT(std::fabs(m), 4 * sd / std::sqrt(ess));
    double var = 0.0;
    for (double x : pooled) var += (x - m) * (x - m);
    var /= static_cast<double>(pooled.size() - 1);
    // sd of the variance estimate for a normal is about var * sqrt(2 / ess).
    EXPECT_LT(std::fabs(var - sd * sd), 4 * sd * sd * std::sqrt(2.0 / ess));
  }
  EXPECT_EQ(draws.divergences(), 0u);
}

TEST(Sampler, MetricAdaptsToScale) {
  const auto draws = sample(scaled_normal({0.01, 100.0}), SampleSpace::identity(2), small_config(2));
  for (const auto& c : draws.chains()) {
    ASSERT_EQ(c.inv_metric.size(), 2u);
    EXPECT_NEAR(std::log10(c.inv_metric[0]), -4.0, 0.5);
    EXPECT_NEAR(std::log10(c.inv_metric[1]), 4.0, 0.5);
  }
}

TEST(Sampler, AcceptanceNearTarget) {
  auto cfg = small_config(3);
  cfg.target_accept = 0.9;
  const auto draws = sample(scaled_normal({1.0, 1.0, 1.0, 1.0}), SampleSpace::identity(4), cfg);
  double acc = 0.0;
  for (const auto& c : draws.chains()) {
    for (const auto& s : c.stats) acc += s.accept;
  }
  acc /= static_cast<double>(draws.total_draws());
  EXPECT_NEAR(acc, 0.9, 0.07);
}

TEST(Sampler, SameSeedSameDraws) {
  const auto a = sample(scaled_normal({1.0, 2.0}), SampleSpace::identity(2), small_config(11));
  const auto b = sample(scaled_normal({1.0, 2.0}), SampleSpace::identity(2), small_config(11));
  for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(a.chains()[c].values, b.chains()[c].values);
  const auto other = sample(scaled_normal({1.0, 2.0}), SampleSpace::identity(2), small_config(12));
  EXPECT_NE(a.chains()[0].values, other.chains()[0].values);
  EXPECT_NE(a.chains()[0].values, a.chains()[1].values);
}

TEST(Sampler, ThreadCountDoesNotChangeDraws) {
  PosteriorDraws one, many;
  {
    ThreadsEnv env("1");
    EXPECT_EQ(sampler_threads(4), 1u);
    one = sample(scaled_normal({1.0, 2.0}), SampleSpace::identity(2), small_config(5));
  }
  {
    ThreadsEnv env("3");
    EXPECT_EQ(sampler_threads(2), 2u);
    many = sample(scaled_normal({1.0, 2.0}), SampleSpace::identity(2), small_config(5));
  }
  for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(one.chains()[c].values, many.chains()[c].values);
}

TEST(Sampler, InvalidThreadEnvFallsBack) {
  ThreadsEnv env("zero");
  EXPECT_GE(sampler_threads(4), 1u);
  EXPECT_LE(sampler_threads(4), 4u);
}

TEST(Sampler, ConstrainMapsReportedDraws) {
  SampleSpace space = SampleSpace::identity(1);
  space.names = {"scale"};
  space.constrain = [](std::span<const double> x, std::span<double> out) { out[0] = std::exp(x[0]); };
  const auto draws = sample(scaled_normal({1.0}), space, small_config(6));
  for (double v : draws.pooled(0)) EXPECT_GT(v, 0.0);
  EXPECT_EQ(draws.index_of("scale"), 0u);
}

TEST(Sampler, HardWallsCountAsDivergencesAndAreNeverAccepted) {
  auto logp = [](std::span<const double> x, std::span<double> g) {
    if (std::fabs(x[0]) > 1.0) return -std::numeric_limits<double>::infinity();
    g[0] = 0.0;
    return 0.0;
  };
  const auto draws = sample(logp, SampleSpace::identity(1), small_config(7));
  for (double v : draws.pooled(0)) EXPECT_LE(std::fabs(v), 1.0);
}

TEST(Sampler, ThrowingDensityTreatedAsDivergent) {
  auto logp = [](std::span<const double> x, std::span<double> g) {
    if (x[0] > 1.5) throw NumericalError("outside support");
    g[0] = -x[0];
    return -0.5 * x[0] * x[0];
  };
  const auto draws = sample(logp, SampleSpace::identity(1), small_config(8));
  for (double v : draws.pooled(0)) EXPECT_LE(v, 1.5);
}

TEST(Sampler, NoFiniteStartIsNumericalError) {
  auto logp = [](std::span<const double>, std::span<double>) { return std::nan(""); };
  EXPECT_THROW(sample(logp, SampleSpace::identity(1), small_config(9)), NumericalError);
}

TEST(Sampler, ConfigValidation) {
  auto bad = small_config(1);
  bad.samples = 0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = small_config(1);
  bad.warmup = 99;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = small_config(1);
  bad.target_accept = 1.0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = small_config(1);
  bad.chains = 0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = small_config(1);
  bad.max_tree_depth = 0;
  EXPECT_THROW(bad.validate(), ValidationError);
  EXPECT_THROW(sample(scaled_normal({1.0}), SampleSpace::identity(0), small_config(1)), ValidationError);
}

TEST(Sampler, TreeDepthIsCapped) {
  auto cfg = small_config(10);
  cfg.max_tree_depth = 2;
  const auto draws = sample(scaled_normal({1.0, 50.0}), SampleSpace::identity(2), cfg);
  for (const auto& c : draws.chains()) {
    for (const auto& s : c.stats) {
      EXPECT_LE(s.tree_depth, 2);
      EXPECT_LE(s.n_leapfrog, 3);
    }
  }
}

TEST(Sampler, InitPointsAreDeterministicAndBounded) {
  const auto space = SampleSpace::identity(5);
  const auto a = init_points(space, 42, 3);
  const auto b = init_points(space, 42, 3);
  EXPECT_EQ(a, b);
  for (const auto& p : a) {
    for (double x : p) {
      EXPECT_GE(x, -2.0);
      EXPECT_LE(x, 2.0);
    }
  }
  EXPECT_NE(a[0], a[1]);
}

TEST(Sampler, ChainStreamsAreDistinct) {
  auto a = chain_rng(1, 0, 0);
  auto b = chain_rng(1, 0, 1);
  auto c = chain_rng(1, 1, 0);
  auto a2 = chain_rng(1, 0, 0);
  const auto va = a();
  EXPECT_NE(va, b());
  EXPECT_NE(va, c());
  EXPECT_EQ(va, a2());
}

TEST(PosteriorDraws, ValidatesShape) {
  ChainDraws c;
  c.stats.resize(3);
  c.values.resize(5);
  EXPECT_THROW(PosteriorDraws({"a", "b"}, {c}), ValidationError);
  c.values.resize(6);
  ChainDraws d = c;
  d.stats.resize(2);
  d.values.resize(4);
  EXPECT_THROW(PosteriorDraws({"a", "b"}, {c, d}), ValidationError);
  const PosteriorDraws ok({"a", "b"}, {c, c});
  EXPECT_EQ(ok.total_draws(), 6u);
  EXPECT_THROW(ok.index_of("zzz"), ValidationError);
}

namespace {

LogDensityFn correlated_normal(double rho) {
  return [rho](std::span<const double> x, std::span<double> g) {
    const double d = 1.0 - rho * rho;
    g[0] = -(x[0] - rho * x[1]) / d;
    g[1] = -(x[1] - rho * x[0]) / d;
    return -0.5 * (x[0] * x[0] - 2.0 * rho * x[0] * x[1] + x[1] * x[1]) / d;
  };
}

NutsConfig reference_config(std::uint64_t seed) {
  NutsConfig cfg;
  cfg.seed = seed;  // 4 chains, 600 warmup, 900 draws
  return cfg;
}

}  // namespace

TEST(Sampler, CorrelatedGaussianMoments) {
  const auto draws = sample(correlated_normal(0.9), SampleSpace::identity(2), reference_config(31));
  EXPECT_EQ(draws.divergences(), 0u);
  for (std::size_t p = 0; p < 2; ++p) {
    const auto pooled = draws.pooled(p);
    const double m = mean_of(pooled);
    EXPECT_LT(std::fabs(m), 4.0 / std::sqrt(ess_basic(draws.per_chain(p))));
    double var = 0.0;
    for (double x : pooled) var += (x - m) * (x - m);
    var /= static_cast<double>(pooled.size() - 1);
    EXPECT_NEAR(var, 1.0, 0.1);
  }
}

TEST(Sampler, StandardGaussianVarianceWithinTenPercent) {
  const auto draws = sample(correlated_normal(0.0), SampleSpace::identity(2), reference_config(32));
  for (std::size_t p = 0; p < 2; ++p) {
    const auto pooled = draws.pooled(p);
    const double m = mean_of(pooled);
    EXPECT_LT(std::fabs(m), 4.0 / std::sqrt(ess_basic(draws.per_chain(p))));
    double var = 0.0;
    for (double x : pooled) var += (x - m) * (x - m);
    EXPECT_NEAR(var / static_cast<double>(pooled.size() - 1), 1.0, 0.1);
  }
}

TEST(Sampler, PooledDrawsMatchNormalCdf) {
  const auto draws = sample(scaled_normal({1.0}), SampleSpace::identity(1), reference_config(33));
  auto pooled = draws.pooled(0);
  ASSERT_EQ(pooled.size(), 3600u);
  std::sort(pooled.begin(), pooled.end());
  double ks = 0.0;
  const double n = static_cast<double>(pooled.size());
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    const double cdf = 0.5 * std::erfc(-pooled[i] / std::sqrt(2.0));
    ks = std::max({ks, cdf - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - cdf});
  }
  EXPECT_LT(ks, 0.03);
}

TEST(Sampler, EnergyErrorStaysSmallOnGaussians) {
  for (double rho : {0.0, 0.9}) {
    const auto draws = sample(correlated_normal(rho), SampleSpace::identity(2), small_config(34));
    double total = 0.0;
    for (const auto& c : draws.chains()) {
      for (const auto& s : c.stats) total += std::fabs(s.energy_error);
    }
    EXPECT_LT(total / static_cast<double>(draws.total_draws()), 1.0) << "rho " << rho;
  }
}

TEST(Sampler, AdaptationIsFrozenAfterWarmup) {
  const auto draws = sample(scaled_normal({1.0, 5.0, 0.2}), SampleSpace::identity(3), small_config(35));
  for (const auto& c : draws.chains()) {
    ASSERT_GT(c.step_size, 0.0);
    for (const auto& s : c.stats) ASSERT_EQ(s.step_size, c.step_size);
  }
}

TEST(Sampler, InitPointsNeverCollideAcrossChains) {
  const auto space = SampleSpace::identity(3);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto pts = init_points(space, seed, 4);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) ASSERT_NE(pts[i], pts[j]) << "seed " << seed;
    }
  }
}
