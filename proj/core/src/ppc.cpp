#include "bishop/ppc.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bishop/errors.hpp"
#include "bishop/text.hpp"

namespace bishop {

namespace {

/// Linear-interpolation sample quantile.
double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

bool inside(double x, const std::vector<double>& reps) {
  if (reps.empty()) return false;
  return x >= quantile(reps, 0.025) && x <= quantile(reps, 0.975);
}

std::pair<double, double> mean_sd(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  if (v.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

std::vector<std::size_t> histogram(const std::vector<double>& v, const std::vector<double>& edges) {
  std::vector<std::size_t> counts(edges.size() - 1, 0);
  for (double x : v) {
    auto it = std::upper_bound(edges.begin(), edges.end(), x);
    std::size_t bin = it == edges.begin() ? 0 : static_cast<std::size_t>(it - edges.begin()) - 1;
    bin = std::min(bin, counts.size() - 1);  // right edge is inclusive for the last bin
    ++counts[bin];
  }
  return counts;
}

std::vector<double> continuous_edges(double lo, double hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  std::vector<double> edges(kContinuousBins + 1);
  for (std::size_t i = 0; i <= kContinuousBins; ++i) {
    edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kContinuousBins);
  }
  edges.back() = hi;
  return edges;
}

}  // namespace

bool PpcChannel::mean_inside() const { return inside(observed_mean, replicate_means); }
bool PpcChannel::sd_inside() const { return inside(observed_sd, replicate_sds); }

std::size_t PpcResult::passing_channels() const {
  std::size_t n = 0;
  for (const auto& c : channels) n += c.pass() ? 1 : 0;
  return n;
}

std::vector<std::size_t> thin_indices(std::size_t total, std::size_t n_rep) {
  if (n_rep == 0) throw ValidationError("need at least one replicate draw");
  if (n_rep > total) {
    throw ValidationError("requested " + std::to_string(n_rep) + " replicate draws but the posterior has " +
                          std::to_string(total));
  }
  std::vector<std::size_t> out(n_rep);
  for (std::size_t j = 0; j < n_rep; ++j) out[j] = j * total / n_rep;
  return out;
}

PpcResult posterior_predictive(const PosteriorDraws& draws, const Model& model,
                               const Cohort& cohort,
                               const std::vector<OutcomeTransform>& transforms, std::size_t n_rep,
                               std::uint64_t seed) {
  const auto& rows = model.data().rows;
  if (cohort.size() != rows.size()) throw ValidationError("cohort and model data differ in size");
  if (transforms.size() != kTimeOutcomes) throw ValidationError("expected four outcome transforms");

  PpcResult result;
  result.draw_indices = thin_indices(draws.total_draws(), n_rep);

  // Map the model's constrained names onto draw columns once.
  const auto& names = model.space().constrained_names();
  std::vector<std::size_t> column(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) column[i] = draws.index_of(names[i]);

  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x99cu};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  // replicate values per channel: [channel][replicate] -> values
  std::vector<std::vector<std::vector<double>>> reps(kPpcChannels,
                                                     std::vector<std::vector<double>>(n_rep));
  std::vector<double> flat(names.size());
  for (std::size_t r = 0; r < n_rep; ++r) {
    const std::size_t idx = result.draw_indices[r];
    const std::size_t chain = idx / draws.num_draws(), draw = idx % draws.num_draws();
    for (std::size_t i = 0; i < names.size(); ++i) flat[i] = draws.value(chain, draw, column[i]);
    const Parameters p = model.space().unflatten(flat);

    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& row = rows[i];
      const double eta = model.ordinal_eta(i, p);
      // Replicated poscon from the ordinal block.
      const double u = unif(rng);
      int k_rep = static_cast<int>(kPosconCutpoints);
      for (std::size_t k = 0; k < kPosconCutpoints; ++k) {
        if (u < 1.0 - inv_logit(eta - p.cutpoints[k])) {
          k_rep = static_cast<int>(k);
          break;
        }
      }
      if (row.poscon >= 0) reps[5][r].push_back(k_rep);
      const int k_use = row.poscon >= 0 ? row.poscon : k_rep;

      for (std::size_t o = 0; o < kTimeOutcomes; ++o) {
        const double z = model.outcome_mean(i, p, static_cast<Outcome>(o), k_use) +
                         p.sigma_y[o] * normal(rng);
        if (!row.present[o]) continue;
        const auto& tr = transforms[o];
        auto y = tr.inverse(z);
        if (!y) {
          // Clamp to the edge of the Box-Cox range.
          ++result.clamped;
          const double t = (1e-12 - 1.0) / tr.lambda;
          y = inverse_boxcox(t, tr.lambda).value_or(0.0);
        }
        reps[o][r].push_back(*y);
      }
      const double logit_cs = model.outcome_mean(i, p, Outcome::Cs, k_use);
      reps[4][r].push_back(unif(rng) < inv_logit(logit_cs) ? 1.0 : 0.0);
    }
  }

  // Observed channels.
  std::vector<std::vector<double>> observed(kPpcChannels);
  for (const auto& rec : cohort.records()) {
    for (std::size_t o = 0; o < kTimeOutcomes; ++o) {
      if (rec.times[o]) observed[o].push_back(*rec.times[o]);
    }
    observed[4].push_back(rec.cs ? 1.0 : 0.0);
    if (rec.poscon_pts) observed[5].push_back(*rec.poscon_pts);
  }

  const std::array<std::string, kPpcChannels> channel_names = {
      std::string(kTimeOutcomeColumns[0]), std::string(kTimeOutcomeColumns[1]),
      std::string(kTimeOutcomeColumns[2]), std::string(kTimeOutcomeColumns[3]), "cs",
      "poscon_pts"};
  for (std::size_t c = 0; c < kPpcChannels; ++c) {
    PpcChannel ch;
    ch.name = channel_names[c];
    if (c < kTimeOutcomes) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (double v : observed[c]) lo = std::min(lo, v), hi = std::max(hi, v);
      for (const auto& rep : reps[c]) {
        for (double v : rep) lo = std::min(lo, v), hi = std::max(hi, v);
      }
      if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
      ch.edges = continuous_edges(lo, hi);
    } else if (c == 4) {
      ch.edges = {-0.5, 0.5, 1.5};
    } else {
      ch.edges = {-0.5, 0.5, 1.5, 2.5, 3.5, 4.5};
    }
    ch.observed_counts = histogram(observed[c], ch.edges);
    std::tie(ch.observed_mean, ch.observed_sd) = mean_sd(observed[c]);
    for (const auto& rep : reps[c]) {
      ch.replicate_counts.push_back(histogram(rep, ch.edges));
      const auto [m, s] = mean_sd(rep);
      ch.replicate_means.push_back(m);
      ch.replicate_sds.push_back(s);
    }
    result.channels.push_back(std::move(ch));
  }
  return result;
}

std::string PpcResult::to_csv() const {
  std::ostringstream out;
  out << "channel,replicate,bin_lo,bin_hi,count\n";
  for (const auto& ch : channels) {
    auto emit = [&](const std::string& label, const std::vector<std::size_t>& counts) {
      for (std::size_t b = 0; b < counts.size(); ++b) {
        out << ch.name << ',' << label << ',' << format_real(ch.edges[b]) << ','
            << format_real(ch.edges[b + 1]) << ',' << counts[b] << '\n';
      }
    };
    emit("observed", ch.observed_counts);
    for (std::size_t r = 0; r < ch.replicate_counts.size(); ++r) {
      emit(std::to_string(r), ch.replicate_counts[r]);
    }
  }
  return out.str();
}

std::string PpcResult::summary_json() const {
  nlohmann::ordered_json j;
  j["replicates"] = draw_indices.size();
  j["clamped_values"] = clamped;
  j["passing_channels"] = passing_channels();
  auto& arr = j["channels"] = nlohmann::ordered_json::array();
  for (const auto& ch : channels) {
    arr.push_back({{"channel", ch.name},
                   {"observed_mean", ch.observed_mean},
                   {"observed_sd", ch.observed_sd},
                   {"replicate_mean_central95",
                    {quantile(ch.replicate_means, 0.025), quantile(ch.replicate_means, 0.975)}},
                   {"replicate_sd_central95",
                    {quantile(ch.replicate_sds, 0.025), quantile(ch.replicate_sds, 0.975)}},
                   {"mean_inside", ch.mean_inside()},
                   {"sd_inside", ch.sd_inside()}});
  }
  return j.dump(2) + "\n";
}

}  // namespace bishop
