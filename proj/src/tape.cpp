// Copyright 2026 The gradstft Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gradstft/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gradstft {

Gradient::Gradient(const Tape* tape, std::uint32_t generation,
                   std::vector<double> adjoints)
    : tape_(tape), generation_(generation), adjoints_(std::move(adjoints)) {}

double Gradient::wrt(const Var& v) const {
  if (v.is_constant()) return 0.0;
  if (v.tape != tape_ || v.generation != generation_ ||
      v.id >= adjoints_.size()) {
    throw std::invalid_argument("gradient queried for a Var from another tape");
  }
  return adjoints_[v.id];
}

Tape::Tape() : generation_(1) { edge_begin_.push_back(0); }

void Tape::check(const Var& v) const {
  if (!owns(v)) throw std::invalid_argument("Var does not belong to this tape");
}

bool Tape::owns(const Var& v) const {
  return v.tape == this && v.generation == generation_ && v.id < values_.size();
}

Var Tape::variable(double x) {
  if (!std::isfinite(x)) throw std::domain_error("cannot lift a non-finite value");
  return custom(x, {}, {});
}

Var Tape::custom(double value, std::span<const Var> parents,
                 std::span<const double> partials) {
  if (parents.size() != partials.size()) {
    throw std::invalid_argument("parents and partials differ in length");
  }
  const auto id = static_cast<std::uint32_t>(values_.size());
  for (std::size_t i = 0; i < parents.size(); ++i) {
    if (parents[i].is_constant()) continue;
    check(parents[i]);
    parents_.push_back(parents[i].id);
    partials_.push_back(partials[i]);
  }
  values_.push_back(value);
  edge_begin_.push_back(static_cast<std::uint32_t>(parents_.size()));
  return Var{this, id, generation_, value};
}

Var Tape::linear(std::span<const Var> terms, std::span<const double> coeffs,
                 double constant_term) {
  if (terms.size() != coeffs.size()) {
    throw std::invalid_argument("terms and coefficients differ in length");
  }
  double value = constant_term;
  for (std::size_t i = 0; i < terms.size(); ++i) value += coeffs[i] * terms[i].value;
  return custom(value, terms, coeffs);
}

Var Tape::sum(std::span<const Var> terms) {
  std::vector<double> ones(terms.size(), 1.0);
  return linear(terms, ones);
}

Var Tape::dot(std::span<const Var> a, std::span<const Var> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot of unequal lengths");
  std::vector<Var> parents;
  std::vector<double> partials;
  parents.reserve(2 * a.size());
  partials.reserve(2 * a.size());
  double value = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    value += a[i].value * b[i].value;
    parents.push_back(a[i]);
    partials.push_back(b[i].value);
    parents.push_back(b[i]);
    partials.push_back(a[i].value);
  }
  return custom(value, parents, partials);
}

Var Tape::unary(double value, const Var& a, double da) {
  const Var parents[] = {a};
  const double partials[] = {da};
  return custom(value, parents, partials);
}

Var Tape::binary(double value, const Var& a, double da, const Var& b,
                 double db) {
  const Var parents[] = {a, b};
  const double partials[] = {da, db};
  return custom(value, parents, partials);
}

Gradient Tape::backward(const Var& root) const {
  if (root.is_constant() || !owns(root)) {
    throw std::invalid_argument("backward root is not on this tape");
  }
  std::vector<double> adjoint(values_.size(), 0.0);
  adjoint[root.id] = 1.0;
  for (std::size_t node = root.id + 1; node-- > 0;) {
    const double a = adjoint[node];
    if (a == 0.0) continue;
    for (std::uint32_t e = edge_begin_[node]; e < edge_begin_[node + 1]; ++e) {
      adjoint[parents_[e]] += a * partials_[e];
    }
  }
  return Gradient(this, generation_, std::move(adjoint));
}

void Tape::reset() {
  ++generation_;
  values_.clear();
  parents_.clear();
  partials_.clear();
  edge_begin_.assign(1, 0);
}

namespace {

Tape* tape_of(const Var& a, const Var& b) {
  if (!a.is_constant() && !b.is_constant() && a.tape != b.tape) {
    throw std::invalid_argument("operands live on different tapes");
  }
  return a.is_constant() ? b.tape : a.tape;
}

Var make_unary(const Var& a, double value, double da) {
  if (a.is_constant()) return constant(value);
  return a.tape->unary(value, a, da);
}

Var make_binary(const Var& a, const Var& b, double value, double da,
                double db) {
  Tape* tape = tape_of(a, b);
  if (tape == nullptr) return constant(value);
  return tape->binary(value, a, da, b, db);
}

}  // namespace

Var operator+(const Var& a, const Var& b) {
  return make_binary(a, b, a.value + b.value, 1.0, 1.0);
}
Var operator-(const Var& a, const Var& b) {
  return make_binary(a, b, a.value - b.value, 1.0, -1.0);
}
Var operator*(const Var& a, const Var& b) {
  return make_binary(a, b, a.value * b.value, b.value, a.value);
}
Var operator/(const Var& a, const Var& b) {
  if (b.value == 0.0) throw std::domain_error("division by zero");
  const double q = a.value / b.value;
  return make_binary(a, b, q, 1.0 / b.value, -q / b.value);
}
Var operator-(const Var& a) { return make_unary(a, -a.value, -1.0); }

Var operator+(const Var& a, double b) { return make_unary(a, a.value + b, 1.0); }
Var operator+(double a, const Var& b) { return b + a; }
Var operator-(const Var& a, double b) { return make_unary(a, a.value - b, 1.0); }
Var operator-(double a, const Var& b) { return make_unary(b, a - b.value, -1.0); }
Var operator*(const Var& a, double b) { return make_unary(a, a.value * b, b); }
Var operator*(double a, const Var& b) { return b * a; }
Var operator/(const Var& a, double b) {
  if (b == 0.0) throw std::domain_error("division by zero");
  return make_unary(a, a.value / b, 1.0 / b);
}
Var operator/(double a, const Var& b) { return constant(a) / b; }

Var exp(const Var& a) {
  const double e = std::exp(a.value);
  return make_unary(a, e, e);
}

Var log(const Var& a) {
  if (!(a.value > 0.0)) throw std::domain_error("log of a non-positive value");
  return make_unary(a, std::log(a.value), 1.0 / a.value);
}

// The derivative at 0 is taken as 0 so magnitudes of empty bins stay finite.
Var sqrt(const Var& a) {
  if (a.value < 0.0) throw std::domain_error("sqrt of a negative value");
  const double r = std::sqrt(a.value);
  return make_unary(a, r, r > 0.0 ? 0.5 / r : 0.0);
}

Var pow(const Var& a, double p) {
  if (a.value < 0.0 && p != std::floor(p)) {
    throw std::domain_error("fractional power of a negative value");
  }
  if (a.value == 0.0 && p < 1.0 && p != 0.0) {
    throw std::domain_error("power below one at zero");
  }
  const double v = std::pow(a.value, p);
  return make_unary(a, v, p == 0.0 ? 0.0 : p * std::pow(a.value, p - 1.0));
}

Var pow(const Var& a, const Var& p) {
  if (!(a.value > 0.0)) throw std::domain_error("variable power of a non-positive base");
  const double v = std::pow(a.value, p.value);
  return make_binary(a, p, v, p.value * v / a.value, v * std::log(a.value));
}

Var sin(const Var& a) { return make_unary(a, std::sin(a.value), std::cos(a.value)); }
Var cos(const Var& a) { return make_unary(a, std::cos(a.value), -std::sin(a.value)); }

Var tanh(const Var& a) {
  const double t = std::tanh(a.value);
  return make_unary(a, t, 1.0 - t * t);
}

Var softplus(const Var& a) {
  const double x = a.value;
  const double v = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  const double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                            : std::exp(x) / (1.0 + std::exp(x));
  return make_unary(a, v, s);
}

Var logistic(const Var& a) {
  const double x = a.value;
  const double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                            : std::exp(x) / (1.0 + std::exp(x));
  return make_unary(a, s, s * (1.0 - s));
}

Var min(const Var& a, double c) {
  if (a.value < c) return a;
  return constant(c);
}

Var abs2(const Var& re, const Var& im) {
  return make_binary(re, im, re.value * re.value + im.value * im.value,
                     2.0 * re.value, 2.0 * im.value);
}

namespace {

Tape* find_tape(std::span<const Var> terms) {
  for (const Var& v : terms) {
    if (!v.is_constant()) return v.tape;
  }
  return nullptr;
}

}  // namespace

Var linear(std::span<const Var> terms, std::span<const double> coeffs,
           double constant_term) {
  if (Tape* tape = find_tape(terms)) return tape->linear(terms, coeffs, constant_term);
  if (terms.size() != coeffs.size()) {
    throw std::invalid_argument("terms and coefficients differ in length");
  }
  double value = constant_term;
  for (std::size_t i = 0; i < terms.size(); ++i) value += coeffs[i] * terms[i].value;
  return constant(value);
}

Var sum(std::span<const Var> terms) {
  if (Tape* tape = find_tape(terms)) return tape->sum(terms);
  double value = 0.0;
  for (const Var& v : terms) value += v.value;
  return constant(value);
}

Var dot(std::span<const Var> a, std::span<const Var> b) {
  Tape* tape = find_tape(a);
  if (tape == nullptr) tape = find_tape(b);
  if (tape != nullptr) return tape->dot(a, b);
  if (a.size() != b.size()) throw std::invalid_argument("dot of unequal lengths");
  double value = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) value += a[i].value * b[i].value;
  return constant(value);
}

ValueAndGradient value_and_gradient(const TapeFunction& f,
                                    std::span<const double> params) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (double p : params) leaves.push_back(tape.variable(p));
  const Var out = f(tape, leaves);
  ValueAndGradient result;
  result.value = out.value;
  result.gradient.assign(params.size(), 0.0);
  if (out.is_constant()) return result;
  const Gradient g = tape.backward(out);
  for (std::size_t i = 0; i < leaves.size(); ++i) result.gradient[i] = g[leaves[i]];
  return result;
}

namespace {

double evaluate(const TapeFunction& f, std::span<const double> params) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (double p : params) leaves.push_back(tape.variable(p));
  return f(tape, leaves).value;
}

}  // namespace

double grad_check(const TapeFunction& f, std::span<const double> params,
                  double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grad_check step must be positive");
  const ValueAndGradient analytic = value_and_gradient(f, params);
  std::vector<double> probe(params.begin(), params.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    probe[i] = params[i] + step;
    const double up = evaluate(f, probe);
    probe[i] = params[i] - step;
    const double down = evaluate(f, probe);
    probe[i] = params[i];
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic.gradient[i];
    const double scale = std::max({std::abs(a), std::abs(numeric), 1e-12});
    worst = std::max(worst, std::abs(a - numeric) / scale);
  }
  return worst;
}

}  // namespace gradstft
