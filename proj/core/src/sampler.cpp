#include "bishop/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <thread>

#include "bishop/errors.hpp"
#include "bishop/scalar_math.hpp"

namespace bishop {

void NutsConfig::validate() const {
  if (chains < 1) throw ValidationError("chains must be at least 1");
  if (warmup < 100) throw ValidationError("warmup must be at least 100");
  if (samples < 1) throw ValidationError("samples must be at least 1");
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw ValidationError("target_accept must lie in (0, 1)");
  }
  if (max_tree_depth < 1) throw ValidationError("max_tree_depth must be at least 1");
}

PosteriorDraws::PosteriorDraws(std::vector<std::string> names, std::vector<ChainDraws> chains)
    : names_(std::move(names)), chains_(std::move(chains)) {
  if (!chains_.empty()) draws_ = chains_.front().stats.size();
  for (const auto& c : chains_) {
    if (c.stats.size() != draws_) throw ValidationError("chains disagree in draw count");
    if (c.values.size() != draws_ * names_.size()) {
      throw ValidationError("draw table does not match parameter names");
    }
  }
}

std::size_t PosteriorDraws::index_of(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw ValidationError("no parameter named '" + name + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

std::vector<std::vector<double>> PosteriorDraws::per_chain(std::size_t param) const {
  std::vector<std::vector<double>> out(chains_.size());
  for (std::size_t c = 0; c < chains_.size(); ++c) {
    out[c].reserve(draws_);
    for (std::size_t d = 0; d < draws_; ++d) out[c].push_back(value(c, d, param));
  }
  return out;
}

std::vector<double> PosteriorDraws::pooled(std::size_t param) const {
  std::vector<double> out;
  out.reserve(total_draws());
  for (std::size_t c = 0; c < chains_.size(); ++c) {
    for (std::size_t d = 0; d < draws_; ++d) out.push_back(value(c, d, param));
  }
  return out;
}

std::size_t PosteriorDraws::divergences() const {
  std::size_t n = 0;
  for (const auto& c : chains_) {
    for (const auto& s : c.stats) n += s.divergent ? 1 : 0;
  }
  return n;
}

std::size_t PosteriorDraws::depth_hits(int max_depth) const {
  std::size_t n = 0;
  for (const auto& c : chains_) {
    for (const auto& s : c.stats) n += s.tree_depth >= max_depth ? 1 : 0;
  }
  return n;
}

SampleSpace SampleSpace::identity(std::size_t dimension, const std::string& prefix) {
  SampleSpace s;
  s.dimension = dimension;
  for (std::size_t i = 0; i < dimension; ++i) s.names.push_back(prefix + "." + std::to_string(i));
  s.constrain = [](std::span<const double> theta, std::span<double> out) {
    std::copy(theta.begin(), theta.end(), out.begin());
  };
  return s;
}

std::mt19937_64 chain_rng(std::uint64_t seed, std::size_t chain, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chain), static_cast<std::uint32_t>(stream),
                    0x5eedu};
  return std::mt19937_64(seq);
}

namespace {

constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kTransitionStream = 1;
constexpr double kMaxDeltaH = 1000.0;
constexpr int kInitAttempts = 100;

std::vector<double> uniform_point(std::mt19937_64& rng, std::size_t dim) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> x(dim);
  for (auto& v : x) v = u(rng);
  return x;
}

struct PhasePoint {
  std::vector<double> q, p, grad;
  double lp = 0.0;
};

double dot_vec(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

class DualAveraging {
 public:
  DualAveraging(double delta) : delta_(delta) {}

  void set_mu(double mu) { mu_ = mu; }
  void restart() {
    counter_ = 0;
    s_bar_ = 0.0;
    x_bar_ = 0.0;
  }
  double learn(double accept) {
    ++counter_;
    accept = std::min(accept, 1.0);
    const double n = static_cast<double>(counter_);
    const double eta = 1.0 / (n + kT0);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (delta_ - accept);
    const double x = mu_ - s_bar_ * std::sqrt(n) / kGamma;
    const double x_eta = std::pow(n, -kKappa);
    x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
    return std::exp(x);
  }
  double final_step() const { return std::exp(x_bar_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;
  double delta_;
  double mu_ = 0.0;
  std::size_t counter_ = 0;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
};

/// Warmup schedule for the diagonal metric: an initial fast buffer, slow
/// windows doubling in length, and a terminal fast buffer.
class MetricWindows {
 public:
  MetricWindows(std::size_t warmup, std::size_t dim) : warmup_(warmup), mean_(dim), m2_(dim) {
    init_buffer_ = 75;
    term_buffer_ = 50;
    base_window_ = 25;
    if (init_buffer_ + base_window_ + term_buffer_ > warmup) {
      init_buffer_ = static_cast<std::size_t>(0.15 * static_cast<double>(warmup));
      term_buffer_ = static_cast<std::size_t>(0.1 * static_cast<double>(warmup));
      base_window_ = warmup - (init_buffer_ + term_buffer_);
    }
    window_size_ = base_window_;
    next_window_ = init_buffer_ + window_size_ - 1;
  }

  /// Records q for iteration counter_. Returns true when a window closed and
  /// inv_metric was updated.
  bool learn(const std::vector<double>& q, std::vector<double>& inv_metric) {
    const bool in_window = counter_ >= init_buffer_ && counter_ < warmup_ - term_buffer_ &&
                           counter_ != warmup_;
    if (in_window) add(q);
    if (counter_ == next_window_ && counter_ != warmup_) {
      compute_next_window();
      const double n = static_cast<double>(count_);
      for (std::size_t i = 0; i < inv_metric.size(); ++i) {
        const double var = count_ > 1 ? m2_[i] / (n - 1.0) : 1.0;
        inv_metric[i] = (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0));
        if (!std::isfinite(inv_metric[i])) throw NumericalError("non-finite metric estimate");
      }
      count_ = 0;
      std::fill(mean_.begin(), mean_.end(), 0.0);
      std::fill(m2_.begin(), m2_.end(), 0.0);
      ++counter_;
      return true;
    }
    ++counter_;
    return false;
  }

 private:
  void add(const std::vector<double>& q) {
    ++count_;
    const double n = static_cast<double>(count_);
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double d = q[i] - mean_[i];
      mean_[i] += d / n;
      m2_[i] += d * (q[i] - mean_[i]);
    }
  }

  void compute_next_window() {
    const std::size_t last = warmup_ - term_buffer_ - 1;
    if (next_window_ == last) return;
    window_size_ *= 2;
    next_window_ = counter_ + window_size_;
    if (next_window_ != last && next_window_ + 2 * window_size_ >= warmup_ - term_buffer_) {
      next_window_ = last;
    }
  }

  std::size_t warmup_;
  std::size_t init_buffer_, term_buffer_, base_window_;
  std::size_t window_size_, next_window_;
  std::size_t counter_ = 0;
  std::size_t count_ = 0;
  std::vector<double> mean_, m2_;
};

class Chain {
 public:
  Chain(const LogDensityFn& logp, std::size_t dim, int max_depth, std::mt19937_64 rng)
      : logp_(logp), dim_(dim), max_depth_(max_depth), rng_(std::move(rng)),
        inv_metric_(dim, 1.0) {}

  /// Sets the position; returns false when the density or gradient there is
  /// not finite.
  bool set_position(const std::vector<double>& q) {
    z_.q = q;
    z_.p.assign(dim_, 0.0);
    z_.grad.assign(dim_, 0.0);
    evaluate(z_);
    if (!std::isfinite(z_.lp)) return false;
    for (double g : z_.grad) {
      if (!std::isfinite(g)) return false;
    }
    return true;
  }

  double step_size() const { return eps_; }
  void set_step_size(double e) { eps_ = e; }
  std::vector<double>& inv_metric() { return inv_metric_; }
  const std::vector<double>& position() const { return z_.q; }

  /// Doubles or halves the step size until one leapfrog step crosses a
  /// Metropolis acceptance of 0.5.
  void init_step_size() {
    if (eps_ == 0.0 || eps_ > 1e7 || std::isnan(eps_)) return;
    const PhasePoint start = z_;
    const double log_target = std::log(0.5);
    auto trial = [&] {
      z_ = start;
      sample_momentum();
      const double h0 = hamiltonian(z_);
      leapfrog(z_, eps_);
      double h = hamiltonian(z_);
      if (std::isnan(h)) h = std::numeric_limits<double>::infinity();
      return h0 - h;
    };
    const int direction = trial() > log_target ? 1 : -1;
    while (true) {
      const double dh = trial();
      if (direction == 1 && !(dh > log_target)) break;
      if (direction == -1 && !(dh < log_target)) break;
      eps_ = direction == 1 ? 2.0 * eps_ : 0.5 * eps_;
      if (eps_ > 1e7) throw NumericalError("step size diverged upward; posterior may be improper");
      if (eps_ == 0.0) throw NumericalError("step size collapsed to zero");
    }
    z_ = start;
  }

  DrawStats transition() {
    sample_momentum();
    const double h0 = hamiltonian(z_);

    PhasePoint z_fwd = z_, z_bck = z_;
    PhasePoint z_sample = z_, z_propose = z_;
    std::vector<double> p_sharp_fwd_bck = velocity(z_.p);
    std::vector<double> p_sharp_fwd_fwd = p_sharp_fwd_bck;
    std::vector<double> p_sharp_bck_fwd = p_sharp_fwd_bck;
    std::vector<double> p_sharp_bck_bck = p_sharp_fwd_bck;
    std::vector<double> p_fwd_bck = z_.p, p_fwd_fwd = z_.p, p_bck_fwd = z_.p, p_bck_bck = z_.p;
    std::vector<double> rho = z_.p;

    double log_sum_weight = 0.0;
    int depth = 0;
    int n_leapfrog = 0;
    double sum_metro = 0.0;
    divergent_ = false;

    while (depth < max_depth_) {
      std::vector<double> rho_fwd(dim_, 0.0), rho_bck(dim_, 0.0);
      bool valid = false;
      double log_sum_weight_subtree = -std::numeric_limits<double>::infinity();
      if (uniform_(rng_) > 0.5) {
        z_ = z_fwd;
        rho_bck = rho;
        p_bck_fwd = p_fwd_bck;
        p_sharp_bck_fwd = p_sharp_fwd_bck;
        valid = build_tree(depth, z_propose, p_sharp_fwd_bck, p_sharp_fwd_fwd, rho_fwd,
                           p_fwd_bck, p_fwd_fwd, h0, eps_, n_leapfrog, log_sum_weight_subtree,
                           sum_metro);
        z_fwd = z_;
      } else {
        z_ = z_bck;
        rho_fwd = rho;
        p_fwd_bck = p_bck_fwd;
        p_sharp_fwd_bck = p_sharp_bck_fwd;
        valid = build_tree(depth, z_propose, p_sharp_bck_fwd, p_sharp_bck_bck, rho_bck,
                           p_bck_fwd, p_bck_bck, h0, -eps_, n_leapfrog, log_sum_weight_subtree,
                           sum_metro);
        z_bck = z_;
      }
      if (!valid) break;
      ++depth;

      if (log_sum_weight_subtree > log_sum_weight) {
        z_sample = z_propose;
      } else if (uniform_(rng_) < std::exp(log_sum_weight_subtree - log_sum_weight)) {
        z_sample = z_propose;
      }
      log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);

      for (std::size_t i = 0; i < dim_; ++i) rho[i] = rho_bck[i] + rho_fwd[i];
      bool persist = no_u_turn(p_sharp_bck_bck, p_sharp_fwd_fwd, rho);
      std::vector<double> rho_ext(dim_);
      for (std::size_t i = 0; i < dim_; ++i) rho_ext[i] = rho_bck[i] + p_fwd_bck[i];
      persist = persist && no_u_turn(p_sharp_bck_bck, p_sharp_fwd_bck, rho_ext);
      for (std::size_t i = 0; i < dim_; ++i) rho_ext[i] = rho_fwd[i] + p_bck_fwd[i];
      persist = persist && no_u_turn(p_sharp_bck_fwd, p_sharp_fwd_fwd, rho_ext);
      if (!persist) break;
    }

    z_ = z_sample;
    DrawStats s;
    s.divergent = divergent_;
    s.tree_depth = depth;
    s.n_leapfrog = n_leapfrog;
    s.accept = n_leapfrog > 0 ? sum_metro / n_leapfrog : 0.0;
    s.energy = hamiltonian(z_);
    s.energy_error = s.energy - h0;
    s.step_size = eps_;
    s.lp = z_.lp;
    return s;
  }

 private:
  void evaluate(PhasePoint& z) {
    try {
      z.lp = logp_(z.q, z.grad);
    } catch (const std::exception&) {
      z.lp = -std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(z.lp)) {
      z.lp = -std::numeric_limits<double>::infinity();
      std::fill(z.grad.begin(), z.grad.end(), 0.0);
    }
  }

  void sample_momentum() {
    for (std::size_t i = 0; i < dim_; ++i) z_.p[i] = normal_(rng_) / std::sqrt(inv_metric_[i]);
  }

  std::vector<double> velocity(const std::vector<double>& p) const {
    std::vector<double> v(dim_);
    for (std::size_t i = 0; i < dim_; ++i) v[i] = inv_metric_[i] * p[i];
    return v;
  }

  double hamiltonian(const PhasePoint& z) const {
    double k = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) k += inv_metric_[i] * z.p[i] * z.p[i];
    return -z.lp + 0.5 * k;
  }

  void leapfrog(PhasePoint& z, double eps) {
    for (std::size_t i = 0; i < dim_; ++i) z.p[i] += 0.5 * eps * z.grad[i];
    for (std::size_t i = 0; i < dim_; ++i) z.q[i] += eps * inv_metric_[i] * z.p[i];
    evaluate(z);
    for (std::size_t i = 0; i < dim_; ++i) z.p[i] += 0.5 * eps * z.grad[i];
  }

  static bool no_u_turn(const std::vector<double>& p_sharp_minus,
                        const std::vector<double>& p_sharp_plus, const std::vector<double>& rho) {
    return dot_vec(p_sharp_plus, rho) > 0 && dot_vec(p_sharp_minus, rho) > 0;
  }

  bool build_tree(int depth, PhasePoint& z_propose, std::vector<double>& p_sharp_beg,
                  std::vector<double>& p_sharp_end, std::vector<double>& rho,
                  std::vector<double>& p_beg, std::vector<double>& p_end, double h0,
                  double eps, int& n_leapfrog, double& log_sum_weight, double& sum_metro) {
    if (depth == 0) {
      leapfrog(z_, eps);
      ++n_leapfrog;
      double h = hamiltonian(z_);
      if (std::isnan(h)) h = std::numeric_limits<double>::infinity();
      if (h - h0 > kMaxDeltaH) divergent_ = true;
      log_sum_weight = log_sum_exp(log_sum_weight, h0 - h);
      sum_metro += h0 - h > 0 ? 1.0 : std::exp(h0 - h);
      z_propose = z_;
      p_sharp_beg = velocity(z_.p);
      p_sharp_end = p_sharp_beg;
      for (std::size_t i = 0; i < dim_; ++i) rho[i] += z_.p[i];
      p_beg = z_.p;
      p_end = p_beg;
      return !divergent_;
    }

    double log_sum_weight_init = -std::numeric_limits<double>::infinity();
    std::vector<double> p_init_end(dim_), p_sharp_init_end(dim_), rho_init(dim_, 0.0);
    if (!build_tree(depth - 1, z_propose, p_sharp_beg, p_sharp_init_end, rho_init, p_beg,
                    p_init_end, h0, eps, n_leapfrog, log_sum_weight_init, sum_metro)) {
      return false;
    }

    PhasePoint z_propose_final = z_;
    double log_sum_weight_final = -std::numeric_limits<double>::infinity();
    std::vector<double> p_final_beg(dim_), p_sharp_final_beg(dim_), rho_final(dim_, 0.0);
    if (!build_tree(depth - 1, z_propose_final, p_sharp_final_beg, p_sharp_end, rho_final,
                    p_final_beg, p_end, h0, eps, n_leapfrog, log_sum_weight_final, sum_metro)) {
      return false;
    }

    const double log_sum_weight_subtree = log_sum_exp(log_sum_weight_init, log_sum_weight_final);
    log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);
    if (log_sum_weight_final > log_sum_weight_subtree) {
      z_propose = z_propose_final;
    } else if (uniform_(rng_) < std::exp(log_sum_weight_final - log_sum_weight_subtree)) {
      z_propose = z_propose_final;
    }

    std::vector<double> rho_subtree(dim_), rho_ext(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      rho_subtree[i] = rho_init[i] + rho_final[i];
      rho[i] += rho_subtree[i];
    }
    bool persist = no_u_turn(p_sharp_beg, p_sharp_end, rho_subtree);
    for (std::size_t i = 0; i < dim_; ++i) rho_ext[i] = rho_init[i] + p_final_beg[i];
    persist = persist && no_u_turn(p_sharp_beg, p_sharp_final_beg, rho_ext);
    for (std::size_t i = 0; i < dim_; ++i) rho_ext[i] = rho_final[i] + p_init_end[i];
    persist = persist && no_u_turn(p_sharp_init_end, p_sharp_end, rho_ext);
    return persist;
  }

  const LogDensityFn& logp_;
  std::size_t dim_;
  int max_depth_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::vector<double> inv_metric_;
  double eps_ = 1.0;
  bool divergent_ = false;
  PhasePoint z_;
};

ChainDraws run_chain(const LogDensityFn& logp, const SampleSpace& space, const NutsConfig& cfg,
                     std::size_t chain_index, std::vector<double> start) {
  std::mt19937_64 init_rng = chain_rng(cfg.seed, chain_index, kInitStream);
  // Advance past the draws init_points consumed for this chain.
  (void)uniform_point(init_rng, space.dimension);

  Chain chain(logp, space.dimension, cfg.max_tree_depth,
              chain_rng(cfg.seed, chain_index, kTransitionStream));
  int attempt = 0;
  while (!chain.set_position(start)) {
    if (++attempt >= kInitAttempts) {
      throw NumericalError("chain " + std::to_string(chain_index) + ": no finite starting point in " +
                           std::to_string(kInitAttempts) + " attempts");
    }
    start = uniform_point(init_rng, space.dimension);
  }

  chain.init_step_size();
  DualAveraging da(cfg.target_accept);
  da.set_mu(std::log(10.0 * chain.step_size()));
  da.restart();
  MetricWindows windows(cfg.warmup, space.dimension);

  ChainDraws out;
  for (std::size_t it = 0; it < cfg.warmup; ++it) {
    const DrawStats s = chain.transition();
    out.warmup_divergences += s.divergent ? 1 : 0;
    chain.set_step_size(da.learn(s.accept));
    if (windows.learn(chain.position(), chain.inv_metric())) {
      chain.init_step_size();
      da.set_mu(std::log(10.0 * chain.step_size()));
      da.restart();
    }
  }
  if (out.warmup_divergences == cfg.warmup) {
    throw NumericalError("chain " + std::to_string(chain_index) + ": every warmup transition diverged");
  }
  chain.set_step_size(da.final_step());
  out.step_size = chain.step_size();
  out.inv_metric = chain.inv_metric();

  const std::size_t np = space.names.size();
  out.values.resize(cfg.samples * np);
  out.stats.reserve(cfg.samples);
  for (std::size_t it = 0; it < cfg.samples; ++it) {
    out.stats.push_back(chain.transition());
    space.constrain(chain.position(), std::span<double>(out.values.data() + it * np, np));
  }
  return out;
}

}  // namespace

std::vector<std::vector<double>> init_points(const SampleSpace& space, std::uint64_t seed,
                                             std::size_t chains) {
  std::vector<std::vector<double>> out;
  out.reserve(chains);
  for (std::size_t c = 0; c < chains; ++c) {
    auto rng = chain_rng(seed, c, kInitStream);
    out.push_back(uniform_point(rng, space.dimension));
  }
  return out;
}

std::size_t sampler_threads(std::size_t chains) {
  std::size_t n = std::thread::hardware_concurrency();
  if (const char* env = std::getenv("BISHOP_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = static_cast<std::size_t>(v);
  }
  return std::clamp<std::size_t>(n, 1, std::max<std::size_t>(chains, 1));
}

PosteriorDraws sample(const LogDensityFn& logp, const SampleSpace& space, const NutsConfig& cfg) {
  cfg.validate();
  if (space.dimension == 0) throw ValidationError("sample space has no coordinates");
  const auto starts = init_points(space, cfg.seed, cfg.chains);

  std::vector<ChainDraws> chains(cfg.chains);
  std::vector<std::exception_ptr> errors(cfg.chains);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < cfg.chains; c = next++) {
      try {
        chains[c] = run_chain(logp, space, cfg, c, starts[c]);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  const std::size_t nthreads = sampler_threads(cfg.chains);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return PosteriorDraws(space.names, std::move(chains));
}

}  // namespace bishop
