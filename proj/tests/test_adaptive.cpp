// Copyright 2026 The gradstft Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "gradstft/adaptive.hpp"
#include "gradstft/signals_io.hpp"
#include "oracles.hpp"

using namespace gradstft;

namespace {

MonotonicMapNet random_map(std::mt19937_64& rng, double offset, double hop, double index_scale) {
  MonotonicMapNet net = MonotonicMapNet::init(offset, hop, index_scale, rng());
  // Larger output weights than the initialiser uses, so g varies visibly.
  std::normal_distribution<double> d(0.0, 1.0);
  for (std::size_t j = MonotonicMapNet::kParameterCount - 33; j < MonotonicMapNet::kParameterCount; ++j) {
    net.params[j] = d(rng);
  }
  return net;
}

FlatStartNet random_flat(std::mt19937_64& rng, double center, double half) {
  FlatStartNet net = FlatStartNet::init(center, half, rng());
  std::normal_distribution<double> d(0.0, 1.5);
  for (double& p : net.params) p = d(rng);
  return net;
}

AdaptiveModel small_model(std::mt19937_64& rng, std::size_t M, double hop) {
  AdaptiveModel m;
  m.index_range = static_cast<int>(std::ceil((0.5 * M + 64.0) / hop));
  m.map = random_map(rng, 0.5 * M, hop, m.index_range);
  for (std::size_t j = MonotonicMapNet::kParameterCount - 33; j < MonotonicMapNet::kParameterCount; ++j) {
    m.map.params[j] *= 0.3;
  }
  m.flat = random_flat(rng, 0.5 * M, 0.5 * M);
  return m;
}

// Fingerprint of everything a small perturbation must not change for the
// loss to stay smooth: the sampled supports and the region of each sample.
std::vector<long> structure(const WindowLayout& layout) {
  std::vector<long> s;
  for (const auto& w : layout.windows) {
    for (double v : {w.rise_start, w.flat_start, w.fall_start, w.fall_end}) {
      s.push_back(static_cast<long>(std::floor(v)));
      s.push_back(static_cast<long>(std::ceil(v)));
    }
    s.push_back(w.flat_start - w.rise_start < 1.0);
    s.push_back(w.fall_end - w.fall_start < 1.0);
  }
  return s;
}

}  // namespace

TEST_CASE("trapezoid window examples") {
  // rise [10, 20), flat [20, 30), fall [30, 50)
  CHECK(trapezoid_window(25.0, 20.0, 10.0, 50.0, 30.0) == 1.0);
  CHECK(trapezoid_window(15.0, 20.0, 10.0, 50.0, 30.0) == 0.5);
  CHECK(trapezoid_window(40.0, 20.0, 10.0, 50.0, 30.0) == 0.5);
  CHECK(trapezoid_window(9.99, 20.0, 10.0, 50.0, 30.0) == 0.0);
  CHECK(trapezoid_window(50.0, 20.0, 10.0, 50.0, 30.0) == 0.0);
  // zero-width rise is a step
  CHECK(trapezoid_window(10.0, 10.0, 10.0, 50.0, 30.0) == 1.0);
  // sub-sample ramps divide by one
  CHECK(trapezoid_window(10.25, 10.5, 10.0, 50.0, 30.0) == 0.25);
  CHECK_THROWS_AS(trapezoid_window(0.0, 10.0, 20.0, 50.0, 30.0), std::invalid_argument);
}

TEST_CASE("neighbouring windows sum to one on their shared ramp") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const double y1 = 100.0 * u(rng);
    const double x1 = y1 + (trial % 3 == 0 ? u(rng) : 40.0 * u(rng));
    const double x0 = y1 - 1.0 - 20.0 * u(rng);
    const double y0 = x0 - 20.0 * u(rng);
    const double y2 = x1 + 1.0 + 20.0 * u(rng);
    const double x2 = y2 + 20.0 * u(rng);
    const double m = y1 + (x1 - y1) * u(rng);
    const double total = trapezoid_window(m, x0, y0, x1, y1) + trapezoid_window(m, x1, y1, x2, y2);
    CHECK(std::abs(total - 1.0) < 1e-15);
  }
}

TEST_CASE("map is anchored at the centre and linear for a constant integrand") {
  std::mt19937_64 rng(9);
  const MonotonicMapNet net = random_map(rng, 1234.5, 300.0, 10.0);
  CHECK(net.map(0.0) == 1234.5);
  const MonotonicMapNet flat = MonotonicMapNet::uniform(500.0, 64.0);
  for (double u : {-7.0, -2.5, -0.25, 0.0, 1.0, 3.75, 12.0}) {
    CHECK(flat.integrand(u) == doctest::Approx(64.0).epsilon(1e-14));
    CHECK(flat.map(u) == doctest::Approx(500.0 + 64.0 * u).epsilon(1e-12));
  }
  const auto xs = flat.map_indices(4);
  for (int i = -4; i <= 4; ++i) CHECK(xs[i + 4] == doctest::Approx(500.0 + 64.0 * i).epsilon(1e-12));
}

TEST_CASE("map matches a dense trapezoidal integral") {
  std::mt19937_64 rng(17);
  const double M = 16384.0;
  for (int trial = 0; trial < 5; ++trial) {
    const MonotonicMapNet net = random_map(rng, M / 2, 400.0, 6.0);
    const auto g = [&](double t) { return net.integrand(t); };
    for (int i = -5; i <= 5; ++i) {
      const double dense = M / 2 + oracle::dense_integral(g, i, 10000);
      CHECK(std::abs(net.map(i) - dense) < 1e-6 * M);
    }
    const auto xs = net.map_indices(5);
    for (int i = -5; i <= 5; ++i) CHECK(std::abs(xs[i + 5] - net.map(i)) < 1e-9 * M);
  }
}

TEST_CASE("map is strictly increasing and stable under refinement") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  const double M = 20000.0;
  for (int trial = 0; trial < 20; ++trial) {
    MonotonicMapNet net = random_map(rng, M / 2, 500.0, 20.0);
    for (int pair = 0; pair < 50; ++pair) {
      double a = u(rng);
      double b = u(rng);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      CHECK(net.map(a) < net.map(b));
    }
    std::vector<double> coarse;
    for (double v = -20.0; v <= 20.0; v += 1.7) coarse.push_back(net.map(v));
    net.nodes_per_unit = 64;
    std::size_t k = 0;
    for (double v = -20.0; v <= 20.0; v += 1.7) CHECK(std::abs(net.map(v) - coarse[k++]) < 1e-6 * M);
  }
}

TEST_CASE("map jacobian matches central differences") {
  std::mt19937_64 rng(31);
  const MonotonicMapNet net = random_map(rng, 1000.0, 200.0, 3.0);
  std::vector<double> jac;
  const auto xs = net.map_indices(3, &jac);
  const std::size_t P = MonotonicMapNet::kParameterCount;
  std::uniform_int_distribution<std::size_t> pick(0, P - 1);
  for (int probe = 0; probe < 60; ++probe) {
    const std::size_t j = probe < 3 ? P - 1 - static_cast<std::size_t>(probe) : pick(rng);
    const double h = 1e-6;
    MonotonicMapNet a = net;
    MonotonicMapNet b = net;
    a.params[j] += h;
    b.params[j] -= h;
    const auto xa = a.map_indices(3);
    const auto xb = b.map_indices(3);
    for (std::size_t r = 0; r < xs.size(); ++r) {
      const double fd = (xa[r] - xb[r]) / (2 * h);
      CHECK(std::abs(jac[r * P + j] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("layout from a linear map and a half fraction is uniform") {
  const MonotonicMapNet map = MonotonicMapNet::uniform(1000.0, 100.0);
  const FlatStartNet flat = FlatStartNet::constant(0.5, 1000.0, 1000.0);
  const WindowLayout layout = layout_from_nets(map, flat, 8, 2000, 0.0);
  CHECK(layout.window_count() == 15);
  for (const auto& w : layout.windows) {
    CHECK(w.flat_start - w.rise_start == doctest::Approx(50.0));
    CHECK(w.fall_start - w.flat_start == doctest::Approx(50.0));
    CHECK(w.fall_end - w.fall_start == doctest::Approx(50.0));
    CHECK(w.length() == doctest::Approx(150.0));
    CHECK(w.center() == doctest::Approx(1000.0 + 100.0 * w.index + 25.0));
  }
  // s → 1 collapses both ramps onto the x grid: rectangular windows.
  const FlatStartNet nearly_one = FlatStartNet::constant(1.0 - 1e-9, 1000.0, 1000.0);
  for (const auto& w : layout_from_nets(map, nearly_one, 8, 2000, 0.0).windows) {
    CHECK(w.flat_start - w.rise_start < 1e-6);
    CHECK(w.fall_end - w.fall_start < 1e-6);
    CHECK(w.fall_start - w.flat_start == doctest::Approx(100.0));
  }
  // s → 0 puts y_i on x_{i-1}: the ramps fill the whole span, triangles.
  const FlatStartNet nearly_zero = FlatStartNet::constant(1e-9, 1000.0, 1000.0);
  for (const auto& w : layout_from_nets(map, nearly_zero, 8, 2000, 0.0).windows) {
    CHECK(w.fall_start - w.flat_start < 1e-6);
    CHECK(w.flat_start - w.rise_start == doctest::Approx(100.0));
    CHECK(w.fall_end - w.fall_start == doctest::Approx(100.0));
  }
}

TEST_CASE("layouts from random nets interleave and drop outside windows") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t M = 4096;
    const MonotonicMapNet map = random_map(rng, M / 2.0, 300.0, 10.0);
    const FlatStartNet flat = random_flat(rng, M / 2.0, M / 2.0);
    const WindowLayout layout = layout_from_nets(map, flat, 14, M, 256.0);
    CHECK_NOTHROW(layout.validate());
    for (const auto& w : layout.windows) {
      CHECK(w.rise_start <= w.flat_start);
      CHECK(w.flat_start < w.fall_start);
      CHECK(w.fall_start <= w.fall_end);
      CHECK(w.fall_end >= -256.0);
      CHECK(w.rise_start <= M + 256.0);
    }
  }
  const MonotonicMapNet tiny = MonotonicMapNet::uniform(-100000.0, 10.0);
  CHECK_THROWS_AS(layout_from_nets(tiny, FlatStartNet::constant(0.5, 0.0, 1.0), 3, 100, 0.0),
                  std::invalid_argument);
}

TEST_CASE("partition of unity over the covered span") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t M = 3000;
    const WindowLayout layout =
        layout_from_nets(random_map(rng, M / 2.0, 250.0, 10.0), random_flat(rng, M / 2.0, M / 2.0), 12, M, 512.0);
    const double lo = layout.windows.front().flat_start;
    const double hi = layout.windows.back().fall_start;
    for (long m = static_cast<long>(std::ceil(lo)); m < hi; ++m) {
      double total = 0.0;
      for (const auto& w : layout.windows) total += trapezoid_window(static_cast<double>(m), w);
      CHECK(std::abs(total - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("adaptive frames match the naive oracle") {
  std::mt19937_64 rng(47);
  std::uniform_int_distribution<std::size_t> len(256, 2048);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t M = len(rng);
    const auto x = oracle::random_signal(rng, M);
    const WindowLayout layout = layout_from_nets(random_map(rng, M / 2.0, M / 10.0, 8.0),
                                                 random_flat(rng, M / 2.0, M / 2.0), 9, M, 64.0);
    const int fixed = trial % 2 == 0 ? 0 : 512;
    const Spectrogram s = adaptive_stft(make_signal(x), layout, fixed);
    REQUIRE(s.frame_count() == layout.window_count());
    for (std::size_t f = 0; f < s.frame_count(); ++f) {
      const auto& w = layout.windows[f];
      const int support = static_cast<int>(std::ceil(w.fall_end) - std::floor(w.rise_start));
      const int bins = std::max(fixed, support);
      const auto ref = oracle::trapezoid_frame(x, w.rise_start, w.flat_start, w.fall_start, w.fall_end, bins);
      REQUIRE(s.frames[f].size() == ref.size());
      double worst = 0.0;
      for (std::size_t k = 0; k < ref.size(); ++k) worst = std::max(worst, std::abs(ref[k] - s.frames[f][k]));
      CHECK(worst < 1e-10);
      CHECK(s.centers[f] == w.center());
    }
  }
}

TEST_CASE("adaptive frame edge cases") {
  const MonotonicMapNet map = MonotonicMapNet::uniform(512.0, 128.0);
  const FlatStartNet flat = FlatStartNet::constant(1.0 - 1e-6, 512.0, 512.0);
  const WindowLayout layout = layout_from_nets(map, flat, 6, 1024, 0.0);

  const Spectrogram zero = adaptive_stft(make_signal(std::vector<double>(1024, 0.0)), layout);
  for (const auto& f : zero.frames) {
    for (const auto& v : f) CHECK(v == std::complex<double>(0.0, 0.0));
  }

  // Nearly rectangular windows of 128 samples (129 with the sample under the
  // vanishing rise) against the Gaussian frame of length 128: a tone at
  // 1/8 cycle per sample peaks at bin 16 in both.
  std::vector<double> tone(1024);
  for (std::size_t t = 0; t < tone.size(); ++t) tone[t] = std::sin(2.0 * std::numbers::pi * 16.0 * t / 128.0);
  const Signal sig = make_signal(tone);
  const Spectrogram s = adaptive_stft(sig, layout);
  const Spectrogram g = stft(sig, GaussianStftConfig{128.0 / 6.0 + 0.01, 0.5, 3.0});
  auto peak = [](const Spectrum& f) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < f.size() / 2; ++k) {
      if (std::abs(f[k]) > std::abs(f[best])) best = k;
    }
    return best;
  };
  CHECK(g.frames[3].size() == 128);
  CHECK(s.frames[3].size() == 129);
  CHECK(peak(s.frames[3]) == 16);
  CHECK(peak(g.frames[3]) == 16);

  WindowLayout narrow;
  narrow.windows.push_back(TrapezoidWindow{0, 10.0, 10.5, 11.0, 12.0});
  narrow.windows.push_back(TrapezoidWindow{1, 11.0, 12.0, 12.5, 13.0});
  CHECK_THROWS_AS(adaptive_stft(make_signal(std::vector<double>(32, 1.0)), narrow), std::invalid_argument);
}

TEST_CASE("adaptive loss gradient matches central differences") {
  std::mt19937_64 rng(53);
  LabeledSignal cs = gen_chirp_sine(0.02, 0.2, 0.05, 512, 4);
  const Signal signal = make_signal(cs.signal.samples);
  AdaptiveConfig config;
  config.pad = 64.0;
  config.dft_length = 256;
  int checked = 0;
  int attempts = 0;
  double worst = 0.0;
  while (checked < 2 && attempts < 100) {
    ++attempts;
    const AdaptiveModel model = small_model(rng, signal.size(), 120.0);
    const AdaptiveEvaluation e = adaptive_loss(signal, model, config);
    const std::vector<double> theta = model.parameters();
    const WindowLayout base = model.layout(signal.size(), config.pad);
    bool smooth = true;
    std::vector<double> fd(theta.size());
    for (std::size_t j = 0; j < theta.size() && smooth; ++j) {
      const double h = 1e-6;
      double v[2];
      for (int s = 0; s < 2; ++s) {
        AdaptiveModel m = model;
        std::vector<double> t = theta;
        t[j] += s == 0 ? h : -h;
        m.set_parameters(t);
        if (structure(m.layout(signal.size(), config.pad)) != structure(base)) smooth = false;
        v[s] = adaptive_loss(signal, m, config, false).loss;
      }
      fd[j] = (v[0] - v[1]) / (2 * h);
    }
    if (!smooth) continue;
    double scale = 0.0;
    for (double g : e.gradient) scale = std::max(scale, std::abs(g));
    for (std::size_t j = 0; j < theta.size(); ++j) {
      // Entries below 1e-6 of the largest are at the finite-difference noise
      // floor and are compared on that absolute scale.
      const double err = std::abs(e.gradient[j] - fd[j]) /
                         std::max({std::abs(e.gradient[j]), std::abs(fd[j]), 1e-6 * scale});
      worst = std::max(worst, err);
    }
    ++checked;
  }
  CHECK(checked == 2);
  CHECK(worst < 1e-3);
}

TEST_CASE("windows outside the padded signal do not change the loss") {
  std::mt19937_64 rng(59);
  const auto x = oracle::random_signal(rng, 2000);
  const Signal signal = make_signal(x);
  AdaptiveConfig config;
  config.pad = 128.0;
  config.dft_length = 512;
  AdaptiveModel model = small_model(rng, signal.size(), 150.0);
  // Reach past the padded signal by two whole windows on each side.
  const double M = static_cast<double>(signal.size());
  while (model.map.map(1.0 - model.index_range) > -config.pad - 1.0 ||
         model.map.map(model.index_range - 2.0) < M + config.pad + 1.0) {
    ++model.index_range;
  }
  const std::size_t windows = model.layout(signal.size(), config.pad).window_count();
  const double base = adaptive_loss(signal, model, config, false).loss;
  for (int extra = 1; extra <= 3; ++extra) {
    AdaptiveModel wider = model;
    wider.index_range += extra;
    CHECK(wider.layout(signal.size(), config.pad).window_count() == windows);
    CHECK(std::abs(adaptive_loss(signal, wider, config, false).loss - base) < 1e-9);
  }
}

TEST_CASE("safeguarded descent never raises the loss on a stationary tone") {
  std::vector<double> tone(4096);
  for (std::size_t t = 0; t < tone.size(); ++t) tone[t] = std::sin(2.0 * std::numbers::pi * 0.07 * t);
  const Signal signal = make_signal(tone);
  AdaptiveConfig config;
  config.initial_window = 384.0;
  config.pad = 256.0;
  config.dft_length = 1024;
  config.max_iters = 15;
  config.learning_rate = 1e-3;
  config.optimizer = AdaptiveOptimizer::safeguarded;
  AdaptiveModel model = init_adaptive_model(signal.size(), config);
  model.map = MonotonicMapNet::uniform(model.map.offset, config.initial_hop());
  model.map.index_scale = model.index_range;
  const AdaptiveResult r = train_adaptive(signal, model, config);
  CHECK_FALSE(r.history.failed);
  for (std::size_t k = 1; k < r.history.rows.size(); ++k) {
    CHECK(r.history.rows[k].loss <= r.history.rows[k - 1].loss);
  }
}

TEST_CASE("adam training is deterministic and records snapshots") {
  LabeledSignal cs = gen_chirp_sine(0.02, 0.2, 0.05, 1024, 2);
  const Signal signal = make_signal(cs.signal.samples);
  AdaptiveConfig config;
  config.initial_window = 256.0;
  config.pad = 256.0;
  config.dft_length = 512;
  config.max_iters = 10;
  config.snapshot_every = 5;
  const AdaptiveResult a = train_adaptive(signal, config);
  const AdaptiveResult b = train_adaptive(signal, config);
  CHECK(a.history.rows.size() == 11);
  CHECK(a.snapshots.size() == 3);
  CHECK(a.model.parameters() == b.model.parameters());
  CHECK(layout_csv(a.layout) == layout_csv(b.layout));
  CHECK(a.history.rows.back().loss < a.history.rows.front().loss);
}

TEST_CASE("kendall tau and layout export") {
  const std::vector<double> i = {0, 1, 2, 3, 4};
  const std::vector<double> up = {1, 2, 3, 4, 5};
  const std::vector<double> down = {9, 7, 7, 3, 1};
  CHECK(kendall_tau(i, up) == doctest::Approx(1.0));
  CHECK(kendall_tau(i, down) == doctest::Approx(-9.0 / std::sqrt(10.0 * 9.0)));
  CHECK(std::isnan(kendall_tau(i, std::vector<double>(5, 2.0))));

  WindowLayout l;
  l.windows.push_back(TrapezoidWindow{-1, 0.0, 10.0, 20.0, 30.0});
  l.windows.push_back(TrapezoidWindow{0, 20.0, 30.0, 45.5, 60.0});
  CHECK(layout_csv(l) == "i,x_i,y_i,length,center\n-1,10,0,30,15\n0,30,20,40,37.75\n");
  CHECK(window_overlay_csv(l) == "center,length\n15,30\n37.75,40\n");
}
