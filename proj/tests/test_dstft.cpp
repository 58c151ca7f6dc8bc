// Copyright 2026 The gradstft Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "gradstft/dstft.hpp"
#include "oracles.hpp"

using namespace gradstft;

namespace {

double max_abs_diff(const Spectrum& a, const std::vector<oracle::cd>& b) {
  REQUIRE(a.size() == b.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
  return worst;
}

Signal tone(std::size_t m, double cycles_per_sample, double phase = 0.0) {
  std::vector<double> x(m);
  for (std::size_t t = 0; t < m; ++t) {
    x[t] = std::sin(2.0 * std::numbers::pi * cycles_per_sample * t + phase);
  }
  return make_signal(std::move(x));
}

}  // namespace

TEST_CASE("window shape") {
  CHECK(gaussian_window(5.0, 0) == 1.0);
  CHECK(gaussian_window(5.0, 10) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  for (int n = 1; n < 30; ++n) CHECK(gaussian_window(4.0, n) == gaussian_window(4.0, -n));
  CHECK_THROWS_AS(gaussian_window(0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_window(-2.0, 1), std::invalid_argument);
  Tape tape;
  CHECK_THROWS_AS(gaussian_window(tape.variable(-1.0), 1), std::invalid_argument);
}

TEST_CASE("effective length") {
  CHECK(effective_length(10.0) == 60);
  CHECK(effective_length(6.7) == 40);
  CHECK(effective_length(0.1) == kMinWindowLength);
  CHECK(effective_length(2.0, 1.0) == 4);
  CHECK_THROWS_AS(effective_length(0.0), std::invalid_argument);

  GaussianStftConfig c;
  c.sigma = 10.0;
  CHECK(c.length() == 60);
  CHECK(c.hop() == 30);
  c.hop_ratio = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("signal validation") {
  CHECK_THROWS_AS(make_signal({}), std::invalid_argument);
  CHECK_THROWS_AS(make_signal({1.0, std::nan("")}), std::invalid_argument);
  const Signal s = make_signal({1.0, 2.0});
  CHECK(s.at(-1) == 0.0);
  CHECK(s.at(1) == 2.0);
  CHECK(s.at(2) == 0.0);
}

TEST_CASE("zero and constant frames") {
  const Signal zeros = make_signal(std::vector<double>(64, 0.0));
  for (const auto& c : values(stft_frame(zeros, 32, constant(5.0)))) CHECK(c == 0.0);

  // A frame of ones has DC equal to the window mass.
  const Signal ones = make_signal(std::vector<double>(200, 1.0));
  const Spectrum f = values(stft_frame(ones, 100, constant(5.0)));
  double mass = 0.0;
  for (int n = -15; n <= 15; ++n) mass += gaussian_window(5.0, n);
  CHECK(f[0].real() == doctest::Approx(mass).epsilon(1e-13));
  CHECK(std::abs(f[0].imag()) < 1e-12);
}

TEST_CASE("frames match the direct-summation oracle, edges included") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> sig(0.8, 30.0);
  std::uniform_int_distribution<std::size_t> len(1, 400);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = oracle::random_signal(rng, len(rng));
    const Signal s = make_signal(x);
    const double sigma = sig(rng);
    const int n = effective_length(sigma);
    for (long m : {0L, static_cast<long>(x.size()) / 2, static_cast<long>(x.size()) - 1}) {
      const Spectrum f = values(stft_frame(s, m, constant(sigma)));
      CHECK(max_abs_diff(f, oracle::gaussian_frame(x, m, sigma, n)) < 1e-10);
    }
  }
}

TEST_CASE("frame grid") {
  const Signal s = make_signal(std::vector<double>(100, 1.0));
  GaussianStftConfig c;
  c.sigma = 5.0;  // N = 30, hop 15
  const Spectrogram g = stft(s, c);
  const std::vector<double> expected = {0, 15, 30, 45, 60, 75, 90};
  CHECK(g.centers == expected);
  CHECK(g.frame_count() == 7);
  CHECK(g.total_bins() == 7 * 30);

  // A signal shorter than half a window still gives one frame at 0.
  const Signal tiny = make_signal({1.0, -1.0, 0.5});
  CHECK(stft(tiny, c).frame_count() == 1);
}

TEST_CASE("real input gives conjugate-symmetric frames") {
  std::mt19937_64 rng(3);
  const auto x = oracle::random_signal(rng, 300);
  const Spectrum f = values(stft_frame(make_signal(x), 150, constant(7.3)));
  const int n = static_cast<int>(f.size());
  for (int k = 1; k < n; ++k) CHECK(std::abs(f[k] - std::conj(f[n - k])) < 1e-10);
}

TEST_CASE("a bin-centred tone peaks at its bin") {
  const double sigma = 10.0;  // N = 60
  for (int bin : {3, 7, 12, 20, 29}) {
    const Signal s = tone(1000, bin / 60.0, 0.3);
    const Spectrogram g = stft(s, GaussianStftConfig{sigma, 0.5, 3.0});
    for (std::size_t i = 0; i < g.frame_count(); ++i) {
      if (g.centers[i] < 60 || g.centers[i] > 940) continue;
      int best = 0;
      for (int k = 1; k < 30; ++k) {
        if (std::abs(g.frames[i][k]) > std::abs(g.frames[i][best])) best = k;
      }
      CHECK(best == bin);
    }
  }
}

TEST_CASE("spectrum gradients wrt sigma match central differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> sig(2.0, 20.0);
  const auto x = oracle::random_signal(rng, 256);
  const Signal s = make_signal(x);
  int checked = 0;
  while (checked < 30) {
    const double s0 = sig(rng);
    const double h = 1e-5 * s0;
    // Stay away from a jump in N inside the probe interval.
    if (effective_length(s0 - h) != effective_length(s0 + h)) continue;
    const long m = 128;
    auto power = [&](double sv) {
      const Spectrum f = values(stft_frame(s, m, constant(sv)));
      double p = 0.0;
      for (std::size_t k = 0; k < f.size(); ++k) p += std::norm(f[k]) * (1.0 + 0.1 * k);
      return p;
    };
    Tape tape;
    const Var sv = tape.variable(s0);
    const VarSpectrum f = stft_frame(s, m, sv);
    Var p = constant(0.0);
    for (std::size_t k = 0; k < f.size(); ++k) p = p + abs2(f[k].re, f[k].im) * (1.0 + 0.1 * k);
    const double analytic = tape.backward(p)[sv];
    CHECK(oracle::relative_error(analytic, oracle::central_difference(power, s0, h)) < 1e-6);
    ++checked;
  }
}

TEST_CASE("windowed_dft matches the oracle with arbitrary phases") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<long> ph(-300, 300);
  std::uniform_int_distribution<int> nb(1, 70);
  for (int trial = 0; trial < 20; ++trial) {
    const int bins = nb(rng);
    const std::size_t n = static_cast<std::size_t>(nb(rng));
    const auto seg = oracle::random_signal(rng, n);
    const auto w = oracle::random_signal(rng, n);
    std::vector<long> phase(n);
    for (auto& p : phase) p = ph(rng);
    std::vector<Var> wv;
    for (double v : w) wv.push_back(constant(v));
    const Spectrum f = values(windowed_dft(seg, wv, phase, bins));
    CHECK(max_abs_diff(f, oracle::windowed_dft(seg, w, phase, bins)) < 1e-10);
  }
  std::vector<double> seg(3, 1.0);
  std::vector<Var> w(2, constant(1.0));
  std::vector<long> phase(3, 0);
  CHECK_THROWS_AS(windowed_dft(seg, w, phase, 4), std::invalid_argument);
  w.push_back(constant(1.0));
  CHECK_THROWS_AS(windowed_dft(seg, w, phase, 0), std::invalid_argument);
}

TEST_CASE("fused powers agree with the elementary route") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<long> ph(-100, 100);
  std::uniform_int_distribution<int> nb(2, 50);
  for (int trial = 0; trial < 25; ++trial) {
    const int bins = nb(rng);
    const std::size_t n = static_cast<std::size_t>(nb(rng));
    auto seg = oracle::random_signal(rng, n);
    seg[0] = 0.0;  // zero samples are skipped by both routes
    const auto w = oracle::random_signal(rng, n);
    std::vector<long> phase(n);
    for (auto& p : phase) p = ph(rng);

    Tape a;
    std::vector<Var> wa;
    for (double v : w) wa.push_back(a.variable(v));
    const FramePowers fused = windowed_dft_powers(seg, wa, phase, bins);

    Tape b;
    std::vector<Var> wb;
    for (double v : w) wb.push_back(b.variable(v));
    const VarSpectrum f = windowed_dft(seg, wb, phase, bins);
    Var c2 = constant(0.0);
    Var c4 = constant(0.0);
    for (const auto& c : f) {
      const Var p = abs2(c.re, c.im);
      c2 = c2 + p;
      c4 = c4 + p * p;
    }
    CHECK(fused.c2.value == doctest::Approx(c2.value).epsilon(1e-12));
    CHECK(fused.c4.value == doctest::Approx(c4.value).epsilon(1e-12));

    // Compare the gradient of a mixed objective so both outputs are exercised.
    const Gradient ga = a.backward(fused.c4 / (fused.c2 * fused.c2));
    const Gradient gb = b.backward(c4 / (c2 * c2));
    for (std::size_t j = 0; j < n; ++j) {
      CHECK(ga[wa[j]] == doctest::Approx(gb[wb[j]]).epsilon(1e-10).scale(1e-12));
    }
  }
}

TEST_CASE("fused powers with constant windows fold to constants") {
  const std::vector<double> seg = {1.0, 2.0};
  const std::vector<Var> w = {constant(1.0), constant(0.5)};
  const std::vector<long> phase = {0, 1};
  const FramePowers p = windowed_dft_powers(seg, w, phase, 2);
  CHECK(p.c2.is_constant());
  // F = [2, 0]: c2 = 4, c4 = 16
  CHECK(p.c2.value == doctest::Approx(4.0));
  CHECK(p.c4.value == doctest::Approx(16.0));
}

TEST_CASE("stft is deterministic") {
  std::mt19937_64 rng(1);
  const Signal s = make_signal(oracle::random_signal(rng, 500));
  const Spectrogram a = stft(s, GaussianStftConfig{6.5, 0.25, 3.0});
  const Spectrogram b = stft(s, GaussianStftConfig{6.5, 0.25, 3.0});
  REQUIRE(a.frame_count() == b.frame_count());
  for (std::size_t i = 0; i < a.frame_count(); ++i) CHECK(a.frames[i] == b.frames[i]);
}
