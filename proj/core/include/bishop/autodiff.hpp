#pragma once

// Reverse-mode automatic differentiation over a flat tape.
//
// Every operation appends one node holding its value and the local partials
// with respect to its parents. A single backward sweep from the output
// accumulates adjoints for every node. Tapes are plain values owned by the
// thread evaluating them; nothing here is shared between threads.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bishop/errors.hpp"
#include "bishop/scalar_math.hpp"

namespace bishop::ad {

class Tape;

/// Raised when a recorded value or a propagated adjoint is not finite.
class NonFiniteError : public NumericalError {
 public:
  NonFiniteError(std::size_t node, const std::string& what)
      : NumericalError(what), node_(node) {}
  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t node_;
};

class Var {
 public:
  Var() = default;

  double value() const noexcept { return value_; }
  std::uint32_t index() const noexcept { return index_; }
  Tape* tape() const noexcept { return tape_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t index, double value) noexcept
      : tape_(tape), index_(index), value_(value) {}

  Tape* tape_ = nullptr;
  std::uint32_t index_ = 0;
  double value_ = 0.0;
};

class Tape {
 public:
  Tape() = default;

  void clear() noexcept;
  void reserve(std::size_t nodes, std::size_t edges);
  std::size_t size() const noexcept { return value_.size(); }
  std::size_t edge_count() const noexcept { return parent_.size(); }

  /// Leaf node (independent variable).
  Var input(double value);

  Var unary(double value, const Var& a, double da);
  Var binary(double value, const Var& a, double da, const Var& b, double db);
  Var ternary(double value, const Var& a, double da, const Var& b, double db,
              const Var& c, double dc);

  /// Incremental construction for n-ary nodes: add edges, then finish.
  void push_edge(const Var& parent, double partial) {
    parent_.push_back(parent.index());
    partial_.push_back(partial);
  }
  Var finish_node(double value);

  /// Adjoints of every node with respect to `output`.
  void backward(const Var& output);
  double adjoint(const Var& v) const { return adjoint_[v.index()]; }

  /// Index of the first node holding a non-finite value, or size() if none.
  std::size_t first_non_finite() const noexcept;

 private:
  std::vector<double> value_;
  std::vector<double> adjoint_;
  std::vector<std::uint32_t> edge_end_;
  std::vector<std::uint32_t> parent_;
  std::vector<double> partial_;
};

// Arithmetic.
Var operator+(const Var& a, const Var& b);
Var operator+(const Var& a, double b);
Var operator+(double a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator-(const Var& a, double b);
Var operator-(double a, const Var& b);
Var operator-(const Var& a);
Var operator*(const Var& a, const Var& b);
Var operator*(const Var& a, double b);
Var operator*(double a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator/(const Var& a, double b);
Var operator/(double a, const Var& b);

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator+=(Var& a, double b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }
inline Var& operator*=(Var& a, double b) { return a = a * b; }

// Elementary functions.
Var exp(const Var& a);
Var log(const Var& a);
Var log1p(const Var& a);
Var square(const Var& a);
Var pow(const Var& a, double exponent);
Var inv_logit(const Var& a);
Var log_sigmoid(const Var& a);
Var log1m_exp(const Var& a);

// Fused n-ary primitives.
Var sum(std::span<const Var> xs);
Var dot(std::span<const Var> coefs, std::span<const double> x);
Var log_sum_exp(std::span<const Var> xs);
Var normal_lpdf(double y, const Var& mu, const Var& sigma, const Var& log_sigma);
Var bernoulli_logit_lpmf(bool y, const Var& x);

/// Value and gradient of a scalar function.
struct Gradient {
  double value = 0.0;
  std::vector<double> gradient;
};

namespace detail {

/// Tape reused across evaluations on the calling thread. Nested calls get a
/// fresh tape so an outer evaluation is never clobbered.
class TapeLease {
 public:
  TapeLease();
  ~TapeLease();
  TapeLease(const TapeLease&) = delete;
  TapeLease& operator=(const TapeLease&) = delete;
  Tape& tape() noexcept { return *tape_; }

 private:
  Tape* tape_;
  Tape owned_;
  bool borrowed_;
};

void check_output(const Tape& tape, const Var& out);

}  // namespace detail

/// Evaluates `f` on a taped copy of `x` and writes df/dx into `grad_out`.
/// `f` is any callable taking std::span<const Var> and returning Var.
template <class F>
double grad(F&& f, std::span<const double> x, std::span<double> grad_out) {
  detail::TapeLease lease;
  Tape& tape = lease.tape();
  std::vector<Var> inputs;
  inputs.reserve(x.size());
  for (double xi : x) inputs.push_back(tape.input(xi));
  const Var out = f(std::span<const Var>(inputs));
  detail::check_output(tape, out);
  tape.backward(out);
  for (std::size_t i = 0; i < x.size(); ++i) {
    grad_out[i] = tape.adjoint(inputs[i]);
    if (!std::isfinite(grad_out[i])) {
      throw NonFiniteError(inputs[i].index(),
                           "non-finite gradient for input " + std::to_string(i));
    }
  }
  return out.value();
}

template <class F>
Gradient grad(F&& f, std::span<const double> x) {
  Gradient g;
  g.gradient.resize(x.size());
  g.value = grad(std::forward<F>(f), x, std::span<double>(g.gradient));
  return g;
}

}  // namespace bishop::ad
