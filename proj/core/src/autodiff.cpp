#include "bishop/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace bishop::ad {

void Tape::clear() noexcept {
  value_.clear();
  edge_end_.clear();
  parent_.clear();
  partial_.clear();
}

void Tape::reserve(std::size_t nodes, std::size_t edges) {
  value_.reserve(nodes);
  edge_end_.reserve(nodes);
  adjoint_.reserve(nodes);
  parent_.reserve(edges);
  partial_.reserve(edges);
}

Var Tape::input(double value) { return finish_node(value); }

Var Tape::finish_node(double value) {
  const auto index = static_cast<std::uint32_t>(value_.size());
  value_.push_back(value);
  edge_end_.push_back(static_cast<std::uint32_t>(parent_.size()));
  return Var(this, index, value);
}

Var Tape::unary(double value, const Var& a, double da) {
  push_edge(a, da);
  return finish_node(value);
}

Var Tape::binary(double value, const Var& a, double da, const Var& b, double db) {
  push_edge(a, da);
  push_edge(b, db);
  return finish_node(value);
}

Var Tape::ternary(double value, const Var& a, double da, const Var& b, double db,
                  const Var& c, double dc) {
  push_edge(a, da);
  push_edge(b, db);
  push_edge(c, dc);
  return finish_node(value);
}

void Tape::backward(const Var& output) {
  adjoint_.assign(value_.size(), 0.0);
  adjoint_[output.index()] = 1.0;
  for (std::size_t i = output.index() + 1; i-- > 0;) {
    const double a = adjoint_[i];
    if (a == 0.0) continue;
    const std::uint32_t begin = i == 0 ? 0 : edge_end_[i - 1];
    const std::uint32_t end = edge_end_[i];
    for (std::uint32_t e = begin; e < end; ++e) adjoint_[parent_[e]] += partial_[e] * a;
  }
}

std::size_t Tape::first_non_finite() const noexcept {
  const auto it = std::find_if(value_.begin(), value_.end(),
                               [](double v) { return !std::isfinite(v); });
  return static_cast<std::size_t>(it - value_.begin());
}

namespace {

Tape& tape_of(const Var& a, const Var& b) { return a.tape() ? *a.tape() : *b.tape(); }

}  // namespace

Var operator+(const Var& a, const Var& b) {
  return tape_of(a, b).binary(a.value() + b.value(), a, 1.0, b, 1.0);
}
Var operator+(const Var& a, double b) { return a.tape()->unary(a.value() + b, a, 1.0); }
Var operator+(double a, const Var& b) { return b.tape()->unary(a + b.value(), b, 1.0); }
Var operator-(const Var& a, const Var& b) {
  return tape_of(a, b).binary(a.value() - b.value(), a, 1.0, b, -1.0);
}
Var operator-(const Var& a, double b) { return a.tape()->unary(a.value() - b, a, 1.0); }
Var operator-(double a, const Var& b) { return b.tape()->unary(a - b.value(), b, -1.0); }
Var operator-(const Var& a) { return a.tape()->unary(-a.value(), a, -1.0); }
Var operator*(const Var& a, const Var& b) {
  return tape_of(a, b).binary(a.value() * b.value(), a, b.value(), b, a.value());
}
Var operator*(const Var& a, double b) { return a.tape()->unary(a.value() * b, a, b); }
Var operator*(double a, const Var& b) { return b.tape()->unary(a * b.value(), b, a); }
Var operator/(const Var& a, const Var& b) {
  const double q = a.value() / b.value();
  return tape_of(a, b).binary(q, a, 1.0 / b.value(), b, -q / b.value());
}
Var operator/(const Var& a, double b) { return a.tape()->unary(a.value() / b, a, 1.0 / b); }
Var operator/(double a, const Var& b) {
  const double q = a / b.value();
  return b.tape()->unary(q, b, -q / b.value());
}

Var exp(const Var& a) {
  const double e = std::exp(a.value());
  return a.tape()->unary(e, a, e);
}

Var log(const Var& a) { return a.tape()->unary(std::log(a.value()), a, 1.0 / a.value()); }

Var log1p(const Var& a) {
  return a.tape()->unary(std::log1p(a.value()), a, 1.0 / (1.0 + a.value()));
}

Var square(const Var& a) {
  return a.tape()->unary(a.value() * a.value(), a, 2.0 * a.value());
}

Var pow(const Var& a, double exponent) {
  const double v = std::pow(a.value(), exponent);
  return a.tape()->unary(v, a, exponent * std::pow(a.value(), exponent - 1.0));
}

Var inv_logit(const Var& a) {
  const double s = bishop::inv_logit(a.value());
  return a.tape()->unary(s, a, s * (1.0 - s));
}

Var log_sigmoid(const Var& a) {
  return a.tape()->unary(bishop::log_sigmoid(a.value()), a, bishop::inv_logit(-a.value()));
}

Var log1m_exp(const Var& a) {
  const double x = a.value();
  const double d = x > -kGapFloor ? 0.0 : -1.0 / std::expm1(-x);
  return a.tape()->unary(bishop::log1m_exp(x), a, d);
}

Var sum(std::span<const Var> xs) {
  Tape& tape = *xs.front().tape();
  double s = 0.0;
  for (const Var& x : xs) {
    s += x.value();
    tape.push_edge(x, 1.0);
  }
  return tape.finish_node(s);
}

Var dot(std::span<const Var> coefs, std::span<const double> x) {
  Tape& tape = *coefs.front().tape();
  double s = 0.0;
  for (std::size_t i = 0; i < coefs.size(); ++i) {
    s += coefs[i].value() * x[i];
    tape.push_edge(coefs[i], x[i]);
  }
  return tape.finish_node(s);
}

Var log_sum_exp(std::span<const Var> xs) {
  Tape& tape = *xs.front().tape();
  double m = -std::numeric_limits<double>::infinity();
  for (const Var& x : xs) m = std::max(m, x.value());
  if (!std::isfinite(m)) {
    for (const Var& x : xs) tape.push_edge(x, 0.0);
    return tape.finish_node(m);
  }
  double s = 0.0;
  for (const Var& x : xs) s += std::exp(x.value() - m);
  for (const Var& x : xs) tape.push_edge(x, std::exp(x.value() - m) / s);
  return tape.finish_node(m + std::log(s));
}

Var normal_lpdf(double y, const Var& mu, const Var& sigma, const Var& log_sigma) {
  const double value = bishop::normal_lpdf(y, mu.value(), sigma.value(), log_sigma.value());
  const double r = y - mu.value();
  const double inv_var = 1.0 / (sigma.value() * sigma.value());
  return mu.tape()->ternary(value, mu, r * inv_var, sigma, r * r * inv_var / sigma.value(),
                            log_sigma, -1.0);
}

Var bernoulli_logit_lpmf(bool y, const Var& x) {
  const double v = bishop::bernoulli_logit_lpmf(y, x.value());
  const double d = y ? bishop::inv_logit(-x.value()) : -bishop::inv_logit(x.value());
  return x.tape()->unary(v, x, d);
}

namespace detail {

namespace {
thread_local Tape tls_tape;
thread_local bool tls_in_use = false;
}  // namespace

TapeLease::TapeLease() : tape_(nullptr), borrowed_(!tls_in_use) {
  if (borrowed_) {
    tls_in_use = true;
    tape_ = &tls_tape;
  } else {
    tape_ = &owned_;
  }
  tape_->clear();
}

TapeLease::~TapeLease() {
  if (borrowed_) {
    tls_tape.clear();
    tls_in_use = false;
  }
}

void check_output(const Tape& tape, const Var& out) {
  if (std::isfinite(out.value())) return;
  const std::size_t node = tape.first_non_finite();
  throw NonFiniteError(node, "non-finite value at tape node " + std::to_string(node));
}

}  // namespace detail

}  // namespace bishop::ad
