// Copyright 2026 The gradstft Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "gradstft/tape.hpp"

using namespace gradstft;

namespace {

double central(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

double rel(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

struct UnaryCase {
  const char* name;
  std::function<Var(const Var&)> op;
  std::function<double(double)> ref;
  double lo;
  double hi;
};

}  // namespace

TEST_CASE("lift") {
  Tape tape;
  CHECK(tape.variable(0.0).value == 0.0);
  CHECK(tape.variable(3.5).value == 3.5);
  CHECK_THROWS_AS(tape.variable(std::nan("")), std::domain_error);
  CHECK_THROWS_AS(tape.variable(std::numeric_limits<double>::infinity()),
                  std::domain_error);
}

TEST_CASE("elementary derivatives") {
  Tape tape;
  const Var x = tape.variable(3.0);
  CHECK(tape.backward(x * x)[x] == doctest::Approx(6.0));

  tape.reset();
  const Var z = tape.variable(0.0);
  CHECK(tape.backward(exp(z))[z] == doctest::Approx(1.0));

  // (sin x)² at 0.7 against a central difference with step 1e-6
  tape.reset();
  const Var s = tape.variable(0.7);
  const Var y = sin(s) * sin(s);
  const double numeric =
      central([](double v) { return std::sin(v) * std::sin(v); }, 0.7, 1e-6);
  CHECK(rel(tape.backward(y)[s], numeric) < 1e-7);
}

TEST_CASE("domain errors") {
  Tape tape;
  const Var zero = tape.variable(0.0);
  const Var neg = tape.variable(-1.0);
  const Var one = tape.variable(1.0);
  CHECK_THROWS_AS(one / zero, std::domain_error);
  CHECK_THROWS_AS(one / 0.0, std::domain_error);
  CHECK_THROWS_AS(log(zero), std::domain_error);
  CHECK_THROWS_AS(log(neg), std::domain_error);
  CHECK_THROWS_AS(sqrt(neg), std::domain_error);
  CHECK_THROWS_AS(pow(neg, 0.5), std::domain_error);
  CHECK_THROWS_AS(pow(neg, one), std::domain_error);
}

TEST_CASE("backward basics") {
  Tape tape;
  const Var x = tape.variable(1.5);
  const Var y = tape.variable(-2.0);
  const Gradient g = tape.backward(x + y);
  CHECK(g[x] == 1.0);
  CHECK(g[y] == 1.0);

  tape.reset();
  const Var only = tape.variable(4.0);
  CHECK(tape.backward(only)[only] == 1.0);
}

TEST_CASE("backward rejects foreign roots") {
  Tape a;
  Tape b;
  const Var x = a.variable(1.0);
  CHECK_THROWS_AS(b.backward(x), std::invalid_argument);
  CHECK_THROWS_AS(a.backward(constant(2.0)), std::invalid_argument);

  a.reset();
  CHECK_THROWS_AS(a.backward(x), std::invalid_argument);
  const Var y = b.variable(2.0);
  CHECK_THROWS_AS(x + y, std::invalid_argument);
}

TEST_CASE("every elementary op matches central differences at random points") {
  const std::vector<UnaryCase> cases = {
      {"neg", [](const Var& v) { return -v; }, [](double v) { return -v; }, -5, 5},
      {"add", [](const Var& v) { return v + (v * 0.3); },
       [](double v) { return v + v * 0.3; }, -5, 5},
      {"sub", [](const Var& v) { return 2.0 - v * v; },
       [](double v) { return 2.0 - v * v; }, -5, 5},
      {"mul", [](const Var& v) { return v * v * v; },
       [](double v) { return v * v * v; }, -3, 3},
      {"div", [](const Var& v) { return 1.0 / v; }, [](double v) { return 1.0 / v; },
       0.2, 5},
      {"div2", [](const Var& v) { return (v + 3.0) / (v * v + 1.0); },
       [](double v) { return (v + 3.0) / (v * v + 1.0); }, -4, 4},
      {"exp", [](const Var& v) { return exp(v); }, [](double v) { return std::exp(v); },
       -4, 4},
      {"log", [](const Var& v) { return log(v); }, [](double v) { return std::log(v); },
       0.1, 10},
      {"pow", [](const Var& v) { return pow(v, 2.5); },
       [](double v) { return std::pow(v, 2.5); }, 0.1, 4},
      {"powvar", [](const Var& v) { return pow(v, v); },
       [](double v) { return std::pow(v, v); }, 0.2, 3},
      {"sqrt", [](const Var& v) { return sqrt(v); }, [](double v) { return std::sqrt(v); },
       0.05, 10},
      {"sin", [](const Var& v) { return sin(v); }, [](double v) { return std::sin(v); },
       -1.4, 1.4},
      {"cos", [](const Var& v) { return cos(v); }, [](double v) { return std::cos(v); },
       0.2, 2.9},
      {"tanh", [](const Var& v) { return tanh(v); }, [](double v) { return std::tanh(v); },
       -3, 3},
      {"softplus", [](const Var& v) { return softplus(v); },
       [](double v) { return std::log1p(std::exp(v)); }, -5, 5},
      {"logistic", [](const Var& v) { return logistic(v); },
       [](double v) { return 1.0 / (1.0 + std::exp(-v)); }, -5, 5},
      {"abs2", [](const Var& v) { return abs2(v, 2.0 * v + 1.0); },
       [](double v) { return v * v + (2 * v + 1) * (2 * v + 1); }, 0.5, 3},
  };
  std::mt19937_64 rng(20260101);
  for (const auto& c : cases) {
    std::uniform_real_distribution<double> dist(c.lo, c.hi);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const double x0 = dist(rng);
      Tape tape;
      const Var x = tape.variable(x0);
      const Var y = c.op(x);
      CHECK(y.value == doctest::Approx(c.ref(x0)).epsilon(1e-14));
      const double analytic = tape.backward(y)[x];
      worst = std::max(worst, rel(analytic, central(c.ref, x0, 1e-6)));
    }
    INFO(c.name);
    CHECK(worst < 1e-7);
  }
}

TEST_CASE("gradient of a sum is the sum of gradients") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(0.2, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double a0 = dist(rng);
    const double b0 = dist(rng);
    auto f = [](const Var& a, const Var& b) { return exp(a) * sin(b) + a / b; };
    auto g = [](const Var& a, const Var& b) { return log(a * b) + a * a * b; };

    Tape t1;
    Var a = t1.variable(a0);
    Var b = t1.variable(b0);
    const Gradient gsum = t1.backward(f(a, b) + g(a, b));
    const double sa = gsum[a];
    const double sb = gsum[b];

    Tape t2;
    a = t2.variable(a0);
    b = t2.variable(b0);
    const Gradient gf = t2.backward(f(a, b));
    const double fa = gf[a];
    const double fb = gf[b];
    Tape t3;
    a = t3.variable(a0);
    b = t3.variable(b0);
    const Gradient gg = t3.backward(g(a, b));
    CHECK(sa == doctest::Approx(fa + gg[a]).epsilon(1e-13));
    CHECK(sb == doctest::Approx(fb + gg[b]).epsilon(1e-13));
  }
}

TEST_CASE("backward is bitwise deterministic") {
  Tape tape;
  std::vector<Var> xs;
  for (int i = 0; i < 20; ++i) xs.push_back(tape.variable(0.1 * (i + 1)));
  Var acc = constant(0.0);
  for (int i = 0; i < 20; ++i) acc = acc + sin(xs[i]) * xs[(i + 7) % 20] / (xs[i] + 1.0);
  const Gradient g1 = tape.backward(acc);
  const Gradient g2 = tape.backward(acc);
  for (const Var& x : xs) CHECK(g1[x] == g2[x]);
}

TEST_CASE("n-ary nodes") {
  Tape tape;
  const std::vector<Var> a = {tape.variable(1.0), tape.variable(2.0), tape.variable(3.0)};
  const std::vector<Var> b = {tape.variable(-1.0), tape.variable(0.5), tape.variable(4.0)};
  const std::vector<double> c = {2.0, -1.0, 0.5};
  const Var lin = linear(a, c, 10.0);
  CHECK(lin.value == doctest::Approx(2.0 - 2.0 + 1.5 + 10.0));
  const Gradient gl = tape.backward(lin);
  for (int i = 0; i < 3; ++i) CHECK(gl[a[i]] == c[i]);

  const Var d = dot(a, b);
  CHECK(d.value == doctest::Approx(-1.0 + 1.0 + 12.0));
  const Gradient gd = tape.backward(d);
  for (int i = 0; i < 3; ++i) {
    CHECK(gd[a[i]] == b[i].value);
    CHECK(gd[b[i]] == a[i].value);
  }
  const std::vector<Var> consts = {constant(1.0), constant(2.0)};
  CHECK(sum(consts).is_constant());
  CHECK(sum(consts).value == 3.0);
}

TEST_CASE("grad_check") {
  const TapeFunction squares = [](Tape&, std::span<const Var> p) {
    Var s = constant(0.0);
    for (const Var& v : p) s = s + v * v;
    return s;
  };
  const std::vector<double> at = {1.0, 2.0, 3.0};
  CHECK(grad_check(squares, at, 1e-5) < 1e-8);

  const TapeFunction flat = [](Tape& tape, std::span<const Var>) {
    return tape.variable(4.0);
  };
  CHECK(grad_check(flat, at, 1e-5) == 0.0);
  CHECK_THROWS_AS(grad_check(squares, at, 0.0), std::invalid_argument);

  const auto vg = value_and_gradient(squares, at);
  CHECK(vg.value == doctest::Approx(14.0));
  CHECK(vg.gradient[2] == doctest::Approx(6.0));
}

TEST_CASE("adjoints stay finite for magnitudes at zero") {
  Tape tape;
  const Var re = tape.variable(0.0);
  const Var im = tape.variable(0.0);
  const Var mag = sqrt(abs2(re, im));
  const Gradient g = tape.backward(mag);
  CHECK(std::isfinite(g[re]));
  CHECK(std::isfinite(g[im]));
}
