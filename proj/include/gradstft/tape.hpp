// Copyright 2026 The gradstft Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace gradstft {

class Tape;

// A scalar node on a Tape. Cheap to copy; the tape owns the graph.
// A Var with no tape is a constant and records nothing.
struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;
  std::uint32_t generation = 0;
  double value = 0.0;

  bool is_constant() const { return tape == nullptr; }
};

inline Var constant(double x) { return Var{nullptr, 0, 0, x}; }

// Adjoints produced by Tape::backward, indexed by node.
class Gradient {
 public:
  Gradient() = default;
  Gradient(const Tape* tape, std::uint32_t generation,
           std::vector<double> adjoints);

  // d(root)/d(v). Throws if v is not from the tape pass that produced this.
  double wrt(const Var& v) const;
  double operator[](const Var& v) const { return wrt(v); }
  std::size_t size() const { return adjoints_.size(); }

 private:
  const Tape* tape_ = nullptr;
  std::uint32_t generation_ = 0;
  std::vector<double> adjoints_;
};

// Append-only reverse-mode tape over scalars. Every node stores its parents
// and the local partial derivative with respect to each one, so nodes of any
// arity are supported. Parents always precede children.
//
// Not thread-safe; use one Tape per thread.
class Tape {
 public:
  Tape();

  // Leaf node. Throws std::domain_error on a non-finite value.
  Var variable(double x);

  // A node whose value and partials are computed by the caller. The parent
  // and partial spans must have equal length.
  Var custom(double value, std::span<const Var> parents,
             std::span<const double> partials);

  // Σ coeffs[i]·terms[i] + constant as a single node.
  Var linear(std::span<const Var> terms, std::span<const double> coeffs,
             double constant = 0.0);
  Var sum(std::span<const Var> terms);
  // Σ a[i]·b[i] as a single node.
  Var dot(std::span<const Var> a, std::span<const Var> b);

  Gradient backward(const Var& root) const;

  // Drops every node. Vars created before the reset become invalid.
  void reset();

  std::size_t size() const { return values_.size(); }
  std::size_t edge_count() const { return parents_.size(); }
  std::uint32_t generation() const { return generation_; }
  bool owns(const Var& v) const;

  // Internal node constructors used by the free-function operators.
  Var unary(double value, const Var& a, double da);
  Var binary(double value, const Var& a, double da, const Var& b, double db);

 private:
  void check(const Var& v) const;

  std::uint32_t generation_;
  std::vector<double> values_;
  std::vector<std::uint32_t> edge_begin_;
  std::vector<std::uint32_t> parents_;
  std::vector<double> partials_;
};

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);

Var operator+(const Var& a, double b);
Var operator+(double a, const Var& b);
Var operator-(const Var& a, double b);
Var operator-(double a, const Var& b);
Var operator*(const Var& a, double b);
Var operator*(double a, const Var& b);
Var operator/(const Var& a, double b);
Var operator/(double a, const Var& b);

Var exp(const Var& a);
Var log(const Var& a);
Var sqrt(const Var& a);
Var pow(const Var& a, double p);
Var pow(const Var& a, const Var& p);
Var sin(const Var& a);
Var cos(const Var& a);
Var tanh(const Var& a);
Var softplus(const Var& a);
Var logistic(const Var& a);
// min(a, c) for a constant cap; gradient flows only when a < c.
Var min(const Var& a, double c);

// re² + im²
Var abs2(const Var& re, const Var& im);

// Tape-agnostic forms of Tape::linear/sum/dot: they record on whichever tape
// the operands live on and fold to a constant when none do.
Var linear(std::span<const Var> terms, std::span<const double> coeffs,
           double constant_term = 0.0);
Var sum(std::span<const Var> terms);
Var dot(std::span<const Var> a, std::span<const Var> b);

// Max over parameters of |analytic − central difference| /
// max(|analytic|, |central difference|, 1e-12).
//
// f receives a fresh tape and leaf Vars for the parameters and must return
// the scalar output on that tape.
using TapeFunction =
    std::function<Var(Tape&, std::span<const Var>)>;
double grad_check(const TapeFunction& f, std::span<const double> params,
                  double step);

// Value and gradient of f at params, evaluated on a private tape.
struct ValueAndGradient {
  double value = 0.0;
  std::vector<double> gradient;
};
ValueAndGradient value_and_gradient(const TapeFunction& f,
                                    std::span<const double> params);

}  // namespace gradstft
