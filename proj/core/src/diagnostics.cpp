#include "bishop/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

#include "bishop/errors.hpp"
#include "bishop/text.hpp"

namespace bishop {

namespace {

void check_chains(const ChainSet& chains, std::size_t min_chains) {
  if (chains.size() < min_chains) {
    throw ValidationError("need at least " + std::to_string(min_chains) + " chain(s)");
  }
  const std::size_t n = chains.front().size();
  if (n < 4) throw ValidationError("need at least 4 draws per chain");
  for (const auto& c : chains) {
    if (c.size() != n) throw ValidationError("chains differ in length");
  }
}

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double var_of(std::span<const double> x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

ChainSet split_halves(const ChainSet& chains) {
  const std::size_t n = chains.front().size();
  const std::size_t half = n / 2;
  ChainSet out;
  for (const auto& c : chains) {
    out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  return out;
}

/// Lazily computed biased autocovariances of one chain.
class Autocov {
 public:
  explicit Autocov(const std::vector<double>& x) : x_(x), mean_(mean_of(x)) {}
  double at(std::size_t lag) {
    while (cache_.size() <= lag) {
      const std::size_t t = cache_.size();
      double s = 0.0;
      for (std::size_t i = 0; i + t < x_.size(); ++i) s += (x_[i] - mean_) * (x_[i + t] - mean_);
      cache_.push_back(s / static_cast<double>(x_.size()));
    }
    return cache_[lag];
  }
  double mean() const { return mean_; }

 private:
  const std::vector<double>& x_;
  double mean_;
  std::vector<double> cache_;
};

double ess_of(const ChainSet& chains) {
  const std::size_t m = chains.size();
  const std::size_t n = chains.front().size();
  std::vector<Autocov> acov;
  acov.reserve(m);
  for (const auto& c : chains) acov.emplace_back(c);

  std::vector<double> chain_mean(m), chain_var(m);
  for (std::size_t i = 0; i < m; ++i) {
    chain_mean[i] = acov[i].mean();
    chain_var[i] = acov[i].at(0) * static_cast<double>(n) / static_cast<double>(n - 1);
  }
  const double mean_var = mean_of(chain_var);
  double var_plus = mean_var * static_cast<double>(n - 1) / static_cast<double>(n);
  if (m > 1) var_plus += var_of(chain_mean);
  if (!(var_plus > 0.0)) throw NumericalError("effective sample size undefined for constant draws");

  auto mean_acov = [&](std::size_t t) {
    double s = 0.0;
    for (auto& a : acov) s += a.at(t);
    return s / static_cast<double>(m);
  };
  auto rho_at = [&](std::size_t t) { return 1.0 - (mean_var - mean_acov(t)) / var_plus; };

  std::vector<double> rho(n, 0.0);
  rho[0] = 1.0;
  double rho_even = 1.0;
  double rho_odd = rho_at(1);
  rho[1] = rho_odd;
  std::size_t t = 0;
  while (t + 5 < n && !std::isnan(rho_even + rho_odd) && rho_even + rho_odd > 0) {
    t += 2;
    rho_even = rho_at(t);
    rho_odd = rho_at(t + 1);
    if (rho_even + rho_odd >= 0) {
      rho[t] = rho_even;
      rho[t + 1] = rho_odd;
    }
  }
  const std::size_t max_t = t;
  if (rho_even > 0) rho[max_t] = rho_even;

  // Initial monotone sequence over paired sums.
  t = 0;
  while (t + 4 <= max_t) {
    t += 2;
    if (rho[t] + rho[t + 1] > rho[t - 2] + rho[t - 1]) {
      rho[t] = (rho[t - 1] + rho[t - 2]) / 2.0;
      rho[t + 1] = rho[t];
    }
  }
  const double total = static_cast<double>(m * n);
  double tau = -1.0 + rho[max_t];
  for (std::size_t i = 0; i < max_t; ++i) tau += 2.0 * rho[i];
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

/// Midranks of the pooled draws, returned chain by chain.
ChainSet rank_normalise(const ChainSet& chains) {
  std::vector<std::pair<double, std::size_t>> pooled;
  for (const auto& c : chains) {
    for (double v : c) pooled.emplace_back(v, pooled.size());
  }
  std::sort(pooled.begin(), pooled.end());
  const std::size_t s = pooled.size();
  std::vector<double> z(s);
  const boost::math::normal_distribution<double> normal;
  for (std::size_t i = 0; i < s;) {
    std::size_t j = i;
    while (j + 1 < s && pooled[j + 1].first == pooled[i].first) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    const double p = (rank - 0.375) / (static_cast<double>(s) + 0.25);
    const double q = boost::math::quantile(normal, p);
    for (std::size_t k = i; k <= j; ++k) z[pooled[k].second] = q;
    i = j + 1;
  }
  ChainSet out;
  std::size_t pos = 0;
  for (const auto& c : chains) {
    out.emplace_back(z.begin() + static_cast<std::ptrdiff_t>(pos),
                     z.begin() + static_cast<std::ptrdiff_t>(pos + c.size()));
    pos += c.size();
  }
  return out;
}

bool is_constant(const ChainSet& chains) {
  const double first = chains.front().front();
  for (const auto& c : chains) {
    for (double v : c) {
      if (v != first) return false;
    }
  }
  return true;
}

}  // namespace

double split_rhat(const ChainSet& chains) {
  check_chains(chains, 2);
  const ChainSet halves = split_halves(chains);
  const double n = static_cast<double>(halves.front().size());
  std::vector<double> means, vars;
  for (const auto& h : halves) {
    means.push_back(mean_of(h));
    vars.push_back(var_of(h));
  }
  const double w = mean_of(vars);
  if (!(w > 0.0)) throw NumericalError("split R-hat undefined: zero within-chain variance");
  const double b = n * var_of(means);
  return std::sqrt(((n - 1.0) / n * w + b / n) / w);
}

double ess_bulk(const ChainSet& chains) {
  check_chains(chains, 1);
  if (is_constant(chains)) throw NumericalError("effective sample size undefined for constant draws");
  return ess_of(split_halves(rank_normalise(chains)));
}

double ess_basic(const ChainSet& chains) {
  check_chains(chains, 1);
  return ess_of(chains);
}

std::pair<std::size_t, std::size_t> hdr_indices(std::span<const double> sorted, double mass) {
  if (!(mass > 0.0 && mass < 1.0)) throw ValidationError("HDR mass must lie in (0, 1)");
  if (sorted.size() < 20) throw ValidationError("HDR needs at least 20 samples");
  const std::size_t n = sorted.size();
  // Guard against mass * n landing a hair above an integer.
  const auto k = static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n) - 1e-9));
  const std::size_t width = std::max<std::size_t>(k, 1);
  std::size_t best = 0;
  double best_len = sorted[width - 1] - sorted[0];
  for (std::size_t i = 1; i + width <= n; ++i) {
    const double len = sorted[i + width - 1] - sorted[i];
    if (len < best_len) {
      best_len = len;
      best = i;
    }
  }
  return {best, best + width - 1};
}

std::pair<double, double> hdr(std::span<const double> samples, double mass) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto [lo, hi] = hdr_indices(sorted, mass);
  return {sorted[lo], sorted[hi]};
}

std::optional<double> FitReport::max_rhat() const {
  std::optional<double> out;
  for (const auto& p : parameters) {
    if (p.rhat) out = out ? std::max(*out, *p.rhat) : *p.rhat;
  }
  return out;
}

std::optional<double> FitReport::min_ess() const {
  std::optional<double> out;
  for (const auto& p : parameters) {
    if (p.ess) out = out ? std::min(*out, *p.ess) : *p.ess;
  }
  return out;
}

double FitReport::divergence_rate() const {
  const std::size_t total = chains * draws_per_chain;
  return total ? static_cast<double>(divergences) / static_cast<double>(total) : 0.0;
}

const ParameterSummary& FitReport::at(const std::string& name) const {
  for (const auto& p : parameters) {
    if (p.name == name) return p;
  }
  throw ValidationError("report has no parameter '" + name + "'");
}

FitReport build_report(const PosteriorDraws& draws, double hdr_mass, int max_tree_depth) {
  if (!(hdr_mass > 0.0 && hdr_mass < 1.0)) throw ValidationError("HDR mass must lie in (0, 1)");
  FitReport r;
  r.hdr_mass = hdr_mass;
  r.chains = draws.num_chains();
  r.draws_per_chain = draws.num_draws();
  r.divergences = draws.divergences();
  r.max_tree_depth = max_tree_depth;
  r.depth_hits = draws.depth_hits(max_tree_depth);
  for (const auto& c : draws.chains()) r.step_sizes.push_back(c.step_size);

  for (std::size_t j = 0; j < draws.num_params(); ++j) {
    ParameterSummary s;
    s.name = draws.names()[j];
    const ChainSet chains = draws.per_chain(j);
    std::vector<double> pooled = draws.pooled(j);
    s.mean = mean_of(pooled);
    s.sd = pooled.size() > 1 ? std::sqrt(var_of(pooled)) : 0.0;
    std::size_t pos = 0, neg = 0;
    for (double v : pooled) {
      pos += v > 0 ? 1 : 0;
      neg += v < 0 ? 1 : 0;
    }
    s.prob_direction = static_cast<double>(std::max(pos, neg)) / static_cast<double>(pooled.size());
    std::sort(pooled.begin(), pooled.end());
    const auto [lo, hi] = hdr_indices(pooled, hdr_mass);
    s.hdr_lo = pooled[lo];
    s.hdr_hi = pooled[hi];
    if (!is_constant(chains)) {
      if (chains.size() >= 2) {
        try {
          s.rhat = split_rhat(chains);
        } catch (const NumericalError&) {
          // Every half-chain is constant but they disagree: no mixing at all.
          s.rhat = std::numeric_limits<double>::infinity();
        }
      }
      s.ess = ess_bulk(chains);
    }
    r.parameters.push_back(std::move(s));
  }
  return r;
}

std::string FitReport::to_json() const {
  using nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(); };
  ordered_json j;
  j["hdr_mass"] = hdr_mass;
  j["chains"] = chains;
  j["draws_per_chain"] = draws_per_chain;
  j["divergences"] = divergences;
  j["divergence_rate"] = divergence_rate();
  j["max_tree_depth"] = max_tree_depth;
  j["max_tree_depth_hits"] = depth_hits;
  j["step_sizes"] = step_sizes;
  j["max_rhat"] = opt(max_rhat());
  j["min_ess_bulk"] = opt(min_ess());
  auto& params = j["parameters"] = ordered_json::array();
  for (const auto& p : parameters) {
    ordered_json e;
    e["name"] = p.name;
    e["mean"] = p.mean;
    e["sd"] = p.sd;
    e["hdr_lo"] = p.hdr_lo;
    e["hdr_hi"] = p.hdr_hi;
    e["prob_direction"] = p.prob_direction;
    e["rhat"] = opt(p.rhat);
    e["ess_bulk"] = opt(p.ess);
    params.push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

std::string forest_csv(const FitReport& report) {
  std::ostringstream out;
  out << "parameter,mean,hdr_lo,hdr_hi,significant\n";
  for (const auto& p : report.parameters) {
    if (p.name.rfind("beta.", 0) != 0) continue;
    out << p.name << ',' << format_real(p.mean) << ',' << format_real(p.hdr_lo) << ','
        << format_real(p.hdr_hi) << ',' << (p.significant() ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace bishop
