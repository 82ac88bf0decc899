#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "bishop/errors.hpp"
#include "bishop/parameters.hpp"

using namespace bishop;

namespace {

std::vector<double> random_theta(const ParameterSpace& space, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> theta(space.dimension());
  for (auto& t : theta) t = u(rng);
  return theta;
}

// log |det A| by Gaussian elimination with partial pivoting.
double log_abs_det(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  double out = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    }
    std::swap(a[c], a[piv]);
    out += std::log(std::fabs(a[c][c]));
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  return out;
}

// Free constrained coordinates: phi, p.0..p.3, every sigma, every sigma_y.
std::vector<double> free_coordinates(const Parameters& p) {
  std::vector<double> v = {p.phi};
  for (std::size_t k = 0; k < kPosconCutpoints; ++k) v.push_back(p.simplex[k]);
  v.insert(v.end(), p.sigma.begin(), p.sigma.end());
  v.insert(v.end(), p.sigma_y.begin(), p.sigma_y.end());
  return v;
}

std::vector<std::size_t> free_theta_indices(const ParameterSpace& s) {
  std::vector<std::size_t> idx = {s.phi_offset()};
  for (std::size_t k = 0; k < kPosconCutpoints; ++k) idx.push_back(s.simplex_offset() + k);
  for (std::size_t f = 0; f < s.families(); ++f) idx.push_back(s.family_offset(f) + 1);
  for (std::size_t o = 0; o < kContinuousOutcomes; ++o) idx.push_back(s.sigma_y_offset() + o);
  return idx;
}

}  // namespace

TEST(Parameters, DimensionAndNames) {
  const ParameterSpace space(ModelSpec::standard());
  EXPECT_EQ(space.families(), 11u);
  EXPECT_EQ(space.coefficients(), 34u);
  EXPECT_EQ(space.dimension(), 8u + 22u + 34u + 4u);
  const auto& names = space.constrained_names();
  EXPECT_EQ(names.front(), "aleph_nullip");
  EXPECT_EQ(names.size(), 3u + 1u + 5u + 4u + 22u + 34u + 4u);
  EXPECT_EQ(space.unconstrained_names().size(), space.dimension());
}

TEST(Parameters, ConstrainedValuesRespectSupports) {
  const ParameterSpace space(ModelSpec::standard());
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 100; ++rep) {
    const auto p = space.to_constrained(random_theta(space, rng));
    EXPECT_GT(p.phi, 0.0);
    EXPECT_LT(p.phi, kPhiUpper);
    double total = 0.0;
    for (double x : p.simplex) {
      EXPECT_GT(x, 0.0);
      total += x;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    for (std::size_t k = 1; k < kPosconCutpoints; ++k) EXPECT_GT(p.cutpoints[k], p.cutpoints[k - 1]);
    for (double s : p.sigma) EXPECT_GT(s, 0.0);
    for (double s : p.sigma_y) EXPECT_GT(s, 0.0);
    for (double b : p.beta) EXPECT_TRUE(std::isfinite(b));
  }
}

TEST(Parameters, ZeroSimplexCoordinatesGiveUniformSimplex) {
  const ParameterSpace space(ModelSpec::standard());
  std::vector<double> theta(space.dimension(), 0.0);
  const auto p = space.to_constrained(theta);
  for (double x : p.simplex) EXPECT_NEAR(x, 0.2, 1e-15);
  EXPECT_NEAR(p.phi, 2.0, 1e-15);
}

TEST(Parameters, UnconstrainRoundTrip) {
  const ParameterSpace space(ModelSpec::standard());
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    const auto theta = random_theta(space, rng);
    const auto back = space.to_unconstrained(space.to_constrained(theta));
    ASSERT_EQ(back.size(), theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) EXPECT_NEAR(back[i], theta[i], 1e-9) << i;
  }
}

TEST(Parameters, FlattenRoundTripAndNamedLookup) {
  const ParameterSpace space(ModelSpec::standard());
  std::mt19937_64 rng(3);
  const auto p = space.to_constrained(random_theta(space, rng));
  const auto flat = space.flatten(p);
  ASSERT_EQ(flat.size(), space.constrained_names().size());
  const auto q = space.unflatten(flat);
  EXPECT_EQ(space.flatten(q), flat);

  // Reversed order through from_named.
  std::vector<std::string> names(space.constrained_names().rbegin(), space.constrained_names().rend());
  std::vector<double> values(flat.rbegin(), flat.rend());
  EXPECT_EQ(space.flatten(space.from_named(names, values)), flat);

  std::vector<double> out(flat.size());
  const auto theta = space.to_unconstrained(p);
  space.write_constrained(theta, out);
  for (std::size_t i = 0; i < flat.size(); ++i) EXPECT_NEAR(out[i], flat[i], 1e-12);
}

TEST(Parameters, FromNamedRejectsMissingNames) {
  const ParameterSpace space(ModelSpec::standard());
  std::vector<std::string> names = {"aleph_nullip"};
  std::vector<double> values = {0.0};
  EXPECT_THROW(space.from_named(names, values), ValidationError);
}

TEST(Parameters, LogJacobianMatchesNumericalDeterminant) {
  const ParameterSpace space(ModelSpec::standard());
  const auto idx = free_theta_indices(space);
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 10; ++rep) {
    const auto theta = random_theta(space, rng);
    std::vector<std::vector<double>> jac(idx.size(), std::vector<double>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
      auto up = theta, down = theta;
      const double h = 1e-6;
      up[idx[j]] += h;
      down[idx[j]] -= h;
      const auto fu = free_coordinates(space.to_constrained(up));
      const auto fd = free_coordinates(space.to_constrained(down));
      for (std::size_t i = 0; i < idx.size(); ++i) jac[i][j] = (fu[i] - fd[i]) / (2 * h);
    }
    EXPECT_NEAR(space.log_jacobian(theta), log_abs_det(jac), 1e-6);
  }
}
