#pragma once

// The unadjusted two-arm comparison: rank tests on each time outcome and a
// two-proportion test on cs, ignoring every covariate.

#include <array>
#include <cstddef>
#include <span>
#include <string>

#include "bishop/cohort.hpp"

namespace bishop {

struct MannWhitneyResult {
  double u = 0.0;  // U of group a: rank sum of a minus n_a (n_a + 1) / 2
  double p = 1.0;  // two-sided
  bool exact = false;
};

inline constexpr std::size_t kExactMannWhitneyMax = 12;

/// Midranks for ties. Exact p by enumeration when n_a + n_b <= 12 and there
/// are no ties, otherwise the normal approximation with tie and continuity
/// corrections. Throws ValidationError for an empty group.
MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

struct TwoProportionResult {
  double rate_a = 0.0;
  double rate_b = 0.0;
  double z = 0.0;
  double p = 1.0;  // two-sided, pooled standard error
};

TwoProportionResult two_proportion(std::size_t successes_a, std::size_t n_a,
                                   std::size_t successes_b, std::size_t n_b);

struct BaselineOutcome {
  std::string outcome;
  std::size_t n_pit = 0;
  std::size_t n_miso = 0;
  MannWhitneyResult test;
};

/// Group a is PIT, group b is MISO throughout.
struct BaselineResult {
  std::array<BaselineOutcome, kTimeOutcomes> times;
  std::size_t n_pit = 0;
  std::size_t n_miso = 0;
  TwoProportionResult cs;

  std::string to_json() const;
};

/// Throws ValidationError when either arm is empty or an outcome has no
/// present value in one arm.
BaselineResult run_baseline(const Cohort& cohort);

}  // namespace bishop
