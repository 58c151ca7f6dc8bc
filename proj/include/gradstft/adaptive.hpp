// Copyright 2026 The gradstft Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gradstft/dstft.hpp"
#include "gradstft/history.hpp"
#include "gradstft/tape.hpp"

namespace gradstft {

// Trapezoid window i: zero before y_i, rising to 1 on [y_i, x_i), flat on
// [x_i, y_{i+1}), falling on [y_{i+1}, x_{i+1}), zero after.
struct TrapezoidWindow {
  int index = 0;
  double rise_start = 0.0;  // y_i
  double flat_start = 0.0;  // x_i
  double fall_start = 0.0;  // y_{i+1}
  double fall_end = 0.0;    // x_{i+1}

  double length() const { return fall_end - rise_start; }
  double center() const { return 0.5 * (flat_start + fall_start); }
};

// Consecutive windows; window i's fall is window i+1's rise.
struct WindowLayout {
  std::vector<TrapezoidWindow> windows;

  std::size_t window_count() const { return windows.size(); }
  // Throws std::invalid_argument unless indices are consecutive, neighbours
  // share their ramp and y_i ≤ x_i < y_{i+1} ≤ x_{i+1} holds throughout.
  void validate() const;
};

// Ramps narrower than one sample divide by one instead of their width, which
// keeps neighbouring windows summing to one. A zero-width ramp is a step.
double trapezoid_window(double m, double x_i, double y_i, double x_next, double y_next);
double trapezoid_window(double m, const TrapezoidWindow& w);

// x(u) = offset + ∫₀ᵘ g(t) dt, oriented, so negative u integrates g over
// [u, 0] and subtracts. g(t) = scale·(softplus(net(t / index_scale)) + 0.1)
// with net a 1 → 32 → 32 → 1 tanh perceptron. Each unit index interval is
// integrated with Clenshaw–Curtis on nodes_per_unit nodes.
//
// Parameter layout: w1[32], b1[32], w2[32×32 row-major], b2[32], w3[32], b3.
struct MonotonicMapNet {
  static constexpr int kHidden = 32;
  static constexpr std::size_t kParameterCount = 4 * kHidden + kHidden * kHidden + 1;

  std::vector<double> params = std::vector<double>(kParameterCount, 0.0);
  double offset = 0.0;
  double scale = 1.0;
  double index_scale = 1.0;
  int nodes_per_unit = 32;

  // g ≈ hop everywhere at initialisation: the output layer is scaled by 0.1
  // and scale = hop / (ln 2 + 0.1). First-layer units switch at uniform
  // random points of u / index_scale in [-1, 1] with slopes up to gain.
  static MonotonicMapNet init(double offset, double hop, double index_scale, std::uint64_t seed,
                               double gain = 1.0);
  // g ≡ hop exactly.
  static MonotonicMapNet uniform(double offset, double hop);

  double integrand(double u) const;
  double map(double u) const;
  // x(i) for i = -I..I. When jacobian is given it receives d x(i)/d params,
  // row-major (2I+1) × kParameterCount.
  std::vector<double> map_indices(int index_range, std::vector<double>* jacobian = nullptr) const;
};

// s_i = logistic(v2·tanh(V1·[a, b] + c1) + c2) with a, b the previous and
// current x normalised as (x − center) / half_span.
//
// Parameter layout: v1[16×2 row-major], c1[16], v2[16], c2.
struct FlatStartNet {
  static constexpr int kHidden = 16;
  static constexpr std::size_t kParameterCount = 4 * kHidden + 1;

  std::vector<double> params = std::vector<double>(kParameterCount, 0.0);
  double center = 0.0;
  double half_span = 1.0;

  static FlatStartNet init(double center, double half_span, std::uint64_t seed);
  // s ≡ fraction, which must lie in (0, 1).
  static FlatStartNet constant(double fraction, double center, double half_span);

  double fraction(double x_prev, double x) const;
  // One tape node with x_prev, x and the parameters as parents.
  Var fraction(const Var& x_prev, const Var& x, std::span<const Var> theta) const;
};

// Windows i = -I+1..I-1 from x = map(-I..I) and y_i = x_{i-1} + s_i·(x_i − x_{i-1}).
// Windows lying entirely outside [-pad, M + pad] are dropped. Throws
// std::invalid_argument if fewer than two survive.
WindowLayout layout_from_nets(const MonotonicMapNet& map, const FlatStartNet& flat,
                              int index_range, std::size_t signal_length, double pad);

// One frame per window: the signal (zero outside [0, M)) times the window at
// the integers floor(y_i) .. ceil(x_{i+1}) − 1, transformed with
// K = max(dft_length, support) bins, or K = support when dft_length is 0.
// Bin phases count from floor(y_i). Frame centres are the window centres.
// Throws std::invalid_argument for a support shorter than 4 samples.
Spectrogram adaptive_stft(const Signal& signal, const WindowLayout& layout, int dft_length = 0);

enum class AdaptiveOptimizer {
  adam,
  // Fixed-rate descent that halves a rejected step up to 10 times.
  safeguarded,
};

struct AdaptiveConfig {
  // Initial uniform windows have this length; the initial hop is 2/3 of it.
  double initial_window = 512.0;
  // 0 derives I = ceil((M/2 + pad) / hop).
  int index_range = 0;
  double pad = 1024.0;
  // 0 gives every frame its own support length as DFT size.
  int dft_length = 4096;
  int max_iters = 2000;
  double learning_rate = 3e-3;
  AdaptiveOptimizer optimizer = AdaptiveOptimizer::adam;
  std::uint64_t seed = 1;
  int nodes_per_unit = 32;
  // Largest first-layer slope of the map net at initialisation, in units of
  // u / I. Small gains leave every unit nearly linear over the index range.
  double map_init_gain = 16.0;
  // Record a layout every this many iterations; 0 records none.
  int snapshot_every = 0;

  void validate() const;
  double initial_hop() const { return initial_window / 1.5; }
};

struct AdaptiveModel {
  MonotonicMapNet map;
  FlatStartNet flat;
  int index_range = 1;

  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> theta);
  WindowLayout layout(std::size_t signal_length, double pad) const;
};

int default_index_range(std::size_t signal_length, const AdaptiveConfig& config);
AdaptiveModel init_adaptive_model(std::size_t signal_length, const AdaptiveConfig& config);

// −Σ_i min(C_i, ‖C‖₂) over the frames of the model's layout, with gradient
// over AdaptiveModel::parameters().
struct AdaptiveEvaluation {
  double loss = 0.0;
  std::vector<double> gradient;
  std::size_t frames = 0;
};
AdaptiveEvaluation adaptive_loss(const Signal& signal, const AdaptiveModel& model,
                                 const AdaptiveConfig& config, bool with_gradient = true);

struct AdaptiveResult {
  AdaptiveModel model;
  WindowLayout layout;
  TrainHistory history;
  std::vector<std::pair<int, WindowLayout>> snapshots;
};

// History rows carry the loss, the frame count in `length` and the step size.
// A non-finite loss stops the run and flags it failed.
AdaptiveResult train_adaptive(const Signal& signal, const AdaptiveConfig& config);
AdaptiveResult train_adaptive(const Signal& signal, AdaptiveModel model,
                              const AdaptiveConfig& config);

// Kendall τ-b between two equally long sequences; NaN below two points or
// when either sequence is constant.
double kendall_tau(std::span<const double> a, std::span<const double> b);

// "i,x_i,y_i,length,center" rows, one per window.
std::string layout_csv(const WindowLayout& layout);
// "center,length" rows, one per window.
std::string window_overlay_csv(const WindowLayout& layout);

}  // namespace gradstft
