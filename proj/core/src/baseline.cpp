#include "bishop/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "bishop/errors.hpp"

namespace bishop {

namespace {

double two_sided_normal(double z) { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

}  // namespace

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ValidationError("Mann-Whitney needs two non-empty groups");
  const std::size_t na = a.size(), nb = b.size(), n = na + nb;
  std::vector<std::pair<double, bool>> pooled;  // value, belongs to a
  pooled.reserve(n);
  for (double v : a) pooled.emplace_back(v, true);
  for (double v : b) pooled.emplace_back(v, false);
  for (const auto& [v, in_a] : pooled) {
    if (std::isnan(v)) throw ValidationError("Mann-Whitney input contains NaN");
  }
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });

  double rank_sum_a = 0.0;
  double tie_term = 0.0;  // sum of t^3 - t over tie groups
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && pooled[j + 1].first == pooled[i].first) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    for (std::size_t k = i; k <= j; ++k) rank_sum_a += pooled[k].second ? rank : 0.0;
    i = j + 1;
  }
  MannWhitneyResult r;
  const double dna = static_cast<double>(na), dnb = static_cast<double>(nb);
  r.u = rank_sum_a - dna * (dna + 1.0) / 2.0;

  if (n <= kExactMannWhitneyMax && tie_term == 0.0) {
    // Under the null every choice of na ranks from n is equally likely; U of
    // a subset is its rank sum minus na (na + 1) / 2.
    const auto u_obs = static_cast<long>(std::lround(r.u));
    std::size_t total = 0, le = 0, ge = 0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      if (static_cast<std::size_t>(__builtin_popcount(mask)) != na) continue;
      long rs = 0;
      for (std::size_t k = 0; k < n; ++k) rs += (mask >> k) & 1u ? static_cast<long>(k + 1) : 0;
      const long u = rs - static_cast<long>(na * (na + 1) / 2);
      ++total;
      le += u <= u_obs ? 1 : 0;
      ge += u >= u_obs ? 1 : 0;
    }
    const double tail = static_cast<double>(std::min(le, ge)) / static_cast<double>(total);
    r.p = std::min(1.0, 2.0 * tail);
    r.exact = true;
    return r;
  }

  const double dn = static_cast<double>(n);
  const double mu = dna * dnb / 2.0;
  const double var = dna * dnb / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (!(var > 0.0)) {
    r.p = 1.0;
    return r;
  }
  const double z = std::max(0.0, std::fabs(r.u - mu) - 0.5) / std::sqrt(var);
  r.p = std::min(1.0, two_sided_normal(z));
  return r;
}

TwoProportionResult two_proportion(std::size_t successes_a, std::size_t n_a,
                                   std::size_t successes_b, std::size_t n_b) {
  if (n_a == 0 || n_b == 0) throw ValidationError("two-proportion test needs two non-empty groups");
  if (successes_a > n_a || successes_b > n_b) {
    throw ValidationError("successes exceed group size");
  }
  TwoProportionResult r;
  r.rate_a = static_cast<double>(successes_a) / static_cast<double>(n_a);
  r.rate_b = static_cast<double>(successes_b) / static_cast<double>(n_b);
  const double pooled =
      static_cast<double>(successes_a + successes_b) / static_cast<double>(n_a + n_b);
  const double se = std::sqrt(pooled * (1.0 - pooled) *
                              (1.0 / static_cast<double>(n_a) + 1.0 / static_cast<double>(n_b)));
  if (!(se > 0.0)) return r;
  r.z = (r.rate_a - r.rate_b) / se;
  r.p = two_sided_normal(r.z);
  return r;
}

BaselineResult run_baseline(const Cohort& cohort) {
  BaselineResult out;
  for (const auto& rec : cohort.records()) {
    (rec.treatment == Treatment::Pit ? out.n_pit : out.n_miso) += 1;
  }
  if (out.n_pit == 0 || out.n_miso == 0) {
    throw ValidationError("baseline needs both treatment arms; found " + std::to_string(out.n_pit) +
                          " PIT and " + std::to_string(out.n_miso) + " MISO");
  }
  for (std::size_t o = 0; o < kTimeOutcomes; ++o) {
    std::vector<double> pit, miso;
    for (const auto& rec : cohort.records()) {
      if (!rec.times[o]) continue;
      (rec.treatment == Treatment::Pit ? pit : miso).push_back(*rec.times[o]);
    }
    auto& res = out.times[o];
    res.outcome = std::string(kTimeOutcomeColumns[o]);
    res.n_pit = pit.size();
    res.n_miso = miso.size();
    if (pit.empty() || miso.empty()) {
      throw ValidationError(res.outcome + " has no recorded value in one treatment arm");
    }
    res.test = mann_whitney_u(pit, miso);
  }
  std::size_t cs_pit = 0, cs_miso = 0;
  for (const auto& rec : cohort.records()) {
    if (rec.cs) (rec.treatment == Treatment::Pit ? cs_pit : cs_miso) += 1;
  }
  out.cs = two_proportion(cs_pit, out.n_pit, cs_miso, out.n_miso);
  return out;
}

std::string BaselineResult::to_json() const {
  nlohmann::ordered_json j;
  j["groups"] = {{"a", "PIT"}, {"b", "MISO"}, {"n_pit", n_pit}, {"n_miso", n_miso}};
  auto& tests = j["mann_whitney"] = nlohmann::ordered_json::array();
  for (const auto& t : times) {
    tests.push_back({{"outcome", t.outcome},
                     {"n_pit", t.n_pit},
                     {"n_miso", t.n_miso},
                     {"u", t.test.u},
                     {"p", t.test.p},
                     {"exact", t.test.exact}});
  }
  j["cs_two_proportion"] = {
      {"rate_pit", cs.rate_a}, {"rate_miso", cs.rate_b}, {"z", cs.z}, {"p", cs.p}};
  return j.dump(2) + "\n";
}

}  // namespace bishop
