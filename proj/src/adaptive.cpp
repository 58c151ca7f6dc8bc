// Copyright 2026 The gradstft Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gradstft/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "gradstft/fft.hpp"
#include "gradstft/signals_io.hpp"
#include "gradstft/sparsity.hpp"

namespace gradstft {

namespace {

constexpr int H = MonotonicMapNet::kHidden;
constexpr std::size_t kW1 = 0;
constexpr std::size_t kB1 = kW1 + H;
constexpr std::size_t kW2 = kB1 + H;
constexpr std::size_t kB2 = kW2 + H * H;
constexpr std::size_t kW3 = kB2 + H;
constexpr std::size_t kB3 = kW3 + H;

constexpr int F = FlatStartNet::kHidden;
constexpr std::size_t kV1 = 0;
constexpr std::size_t kC1 = kV1 + 2 * F;
constexpr std::size_t kV2 = kC1 + F;
constexpr std::size_t kC2 = kV2 + F;

constexpr double kFloor = 0.1;

double softplus_value(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Clenshaw–Curtis rule with n ≥ 2 nodes on [0, 1].
Quadrature clenshaw_curtis(int n) {
  const int N = n - 1;
  Quadrature q;
  q.nodes.resize(static_cast<std::size_t>(n));
  q.weights.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double th = std::numbers::pi * k / N;
    q.nodes[k] = 0.5 * (1.0 - std::cos(th));
    double s = 0.0;
    for (int m = 1; m <= N / 2; ++m) {
      const double b = 2 * m == N ? 1.0 : 2.0;
      s += b / (4.0 * m * m - 1.0) * std::cos(2.0 * m * th);
    }
    const double c = (k == 0 || k == N) ? 1.0 : 2.0;
    q.weights[k] = 0.5 * c / N * (1.0 - s);
  }
  return q;
}

// Forward pass of the integrand net that keeps the activations for a
// reverse sweep.
struct IntegrandPass {
  double v = 0.0;
  double h1[H];
  double h2[H];
  double out = 0.0;
  double g = 0.0;

  IntegrandPass(const MonotonicMapNet& net, double u) {
    const double* p = net.params.data();
    v = u / net.index_scale;
    for (int j = 0; j < H; ++j) h1[j] = std::tanh(p[kW1 + j] * v + p[kB1 + j]);
    out = p[kB3];
    for (int j = 0; j < H; ++j) {
      const double* row = p + kW2 + static_cast<std::size_t>(j) * H;
      double a = p[kB2 + j];
      for (int k = 0; k < H; ++k) a += row[k] * h1[k];
      h2[j] = std::tanh(a);
      out += p[kW3 + j] * h2[j];
    }
    g = net.scale * (softplus_value(out) + kFloor);
  }

  // grad += c · dg/dparams
  void accumulate(const MonotonicMapNet& net, double c, double* grad) const {
    const double* p = net.params.data();
    const double d_out = c * net.scale * logistic_value(out);
    double d_a2[H];
    for (int j = 0; j < H; ++j) {
      grad[kW3 + j] += d_out * h2[j];
      d_a2[j] = d_out * p[kW3 + j] * (1.0 - h2[j] * h2[j]);
    }
    grad[kB3] += d_out;
    double d_h1[H] = {};
    for (int j = 0; j < H; ++j) {
      const double* row = p + kW2 + static_cast<std::size_t>(j) * H;
      double* grow = grad + kW2 + static_cast<std::size_t>(j) * H;
      const double d = d_a2[j];
      grad[kB2 + j] += d;
      for (int k = 0; k < H; ++k) {
        grow[k] += d * h1[k];
        d_h1[k] += row[k] * d;
      }
    }
    for (int k = 0; k < H; ++k) {
      const double d = d_h1[k] * (1.0 - h1[k] * h1[k]);
      grad[kW1 + k] += d * v;
      grad[kB1 + k] += d;
    }
  }
};

// ∫_a^b g over an interval no longer than one index unit, with b ≥ a.
double integrate_piece(const MonotonicMapNet& net, const Quadrature& q, double a, double b,
                       double sign, double* grad) {
  const double w = b - a;
  double total = 0.0;
  for (std::size_t k = 0; k < q.nodes.size(); ++k) {
    const IntegrandPass pass(net, a + w * q.nodes[k]);
    const double c = w * q.weights[k];
    total += c * pass.g;
    if (grad != nullptr) pass.accumulate(net, sign * c, grad);
  }
  return total;
}

void check_ramp_order(double lo, double hi, const char* what) {
  if (!(lo <= hi)) throw std::invalid_argument(std::string("trapezoid ") + what + " is reversed");
}

}  // namespace

void WindowLayout::validate() const {
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    for (double v : {w.rise_start, w.flat_start, w.fall_start, w.fall_end}) {
      if (!std::isfinite(v)) throw std::invalid_argument("layout has a non-finite boundary");
    }
    if (!(w.rise_start <= w.flat_start && w.flat_start < w.fall_start && w.fall_start <= w.fall_end)) {
      throw std::invalid_argument("layout boundaries are not interleaved at window " +
                                  std::to_string(w.index));
    }
    if (i > 0) {
      const auto& p = windows[i - 1];
      if (w.index != p.index + 1) throw std::invalid_argument("layout indices are not consecutive");
      if (w.rise_start != p.fall_start || w.flat_start != p.fall_end) {
        throw std::invalid_argument("neighbouring windows do not share a ramp");
      }
    }
  }
}

double trapezoid_window(double m, double x_i, double y_i, double x_next, double y_next) {
  check_ramp_order(y_i, x_i, "rise");
  check_ramp_order(y_next, x_next, "fall");
  if (m < y_i || m >= x_next) return 0.0;
  if (m < x_i) return (m - y_i) / std::max(x_i - y_i, 1.0);
  if (m < y_next) return 1.0;
  return 1.0 - (m - y_next) / std::max(x_next - y_next, 1.0);
}

double trapezoid_window(double m, const TrapezoidWindow& w) {
  return trapezoid_window(m, w.flat_start, w.rise_start, w.fall_end, w.fall_start);
}

MonotonicMapNet MonotonicMapNet::init(double offset, double hop, double index_scale,
                                      std::uint64_t seed, double gain) {
  if (!(hop > 0.0) || !(index_scale > 0.0) || !(gain > 0.0)) {
    throw std::invalid_argument("map net needs a positive hop, index scale and gain");
  }
  MonotonicMapNet net;
  net.offset = offset;
  net.scale = hop / (std::numbers::ln2 + kFloor);
  net.index_scale = index_scale;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double r2 = 1.0 / std::sqrt(static_cast<double>(H));
  // First-layer unit j switches at u / index_scale = c_j, c_j uniform in
  // [-1, 1], with slope up to gain.
  for (std::size_t j = 0; j < H; ++j) {
    const double w = gain * u(rng);
    net.params[kW1 + j] = w;
    net.params[kB1 + j] = -w * u(rng);
  }
  for (std::size_t j = kW2; j < kW3; ++j) net.params[j] = r2 * u(rng);
  for (std::size_t j = kW3; j < kB3; ++j) net.params[j] = 0.1 * r2 * u(rng);
  net.params[kB3] = 0.0;
  return net;
}

MonotonicMapNet MonotonicMapNet::uniform(double offset, double hop) {
  if (!(hop > 0.0)) throw std::invalid_argument("map net needs a positive hop");
  MonotonicMapNet net;
  net.offset = offset;
  net.scale = hop / (std::numbers::ln2 + kFloor);
  return net;
}

double MonotonicMapNet::integrand(double u) const { return IntegrandPass(*this, u).g; }

double MonotonicMapNet::map(double u) const {
  if (!std::isfinite(u)) throw std::invalid_argument("map index must be finite");
  const Quadrature q = clenshaw_curtis(nodes_per_unit);
  const double a = std::abs(u);
  const double dir = u < 0.0 ? -1.0 : 1.0;
  double total = 0.0;
  double k = 0.0;
  for (; k + 1.0 <= a; k += 1.0) {
    const double lo = std::min(dir * k, dir * (k + 1.0));
    total += integrate_piece(*this, q, lo, lo + 1.0, 1.0, nullptr);
  }
  if (a > k) {
    const double lo = std::min(dir * k, dir * a);
    total += integrate_piece(*this, q, lo, lo + (a - k), 1.0, nullptr);
  }
  return offset + dir * total;
}

std::vector<double> MonotonicMapNet::map_indices(int index_range, std::vector<double>* jacobian) const {
  if (index_range < 1) throw std::invalid_argument("index range must be at least 1");
  const Quadrature q = clenshaw_curtis(nodes_per_unit);
  const auto I = static_cast<std::size_t>(index_range);
  const std::size_t P = kParameterCount;
  std::vector<double> x(2 * I + 1);
  x[I] = offset;
  if (jacobian != nullptr) jacobian->assign((2 * I + 1) * P, 0.0);
  for (int side : {1, -1}) {
    double acc = offset;
    for (std::size_t k = 0; k < I; ++k) {
      const double lo = side > 0 ? static_cast<double>(k) : -static_cast<double>(k) - 1.0;
      const std::size_t prev = side > 0 ? I + k : I - k;
      const std::size_t row = side > 0 ? I + k + 1 : I - k - 1;
      double* grad = nullptr;
      if (jacobian != nullptr) {
        grad = jacobian->data() + row * P;
        std::copy_n(jacobian->data() + prev * P, P, grad);
      }
      acc += side * integrate_piece(*this, q, lo, lo + 1.0, side, grad);
      x[row] = acc;
    }
  }
  return x;
}

FlatStartNet FlatStartNet::init(double center, double half_span, std::uint64_t seed) {
  if (!(half_span > 0.0)) throw std::invalid_argument("flat net needs a positive half span");
  FlatStartNet net;
  net.center = center;
  net.half_span = half_span;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double r1 = 1.0 / std::sqrt(2.0);
  const double r2 = 1.0 / std::sqrt(static_cast<double>(F));
  for (std::size_t j = kV1; j < kV2; ++j) net.params[j] = r1 * u(rng);
  for (std::size_t j = kV2; j < kC2; ++j) net.params[j] = 0.1 * r2 * u(rng);
  net.params[kC2] = 0.0;
  return net;
}

FlatStartNet FlatStartNet::constant(double fraction, double center, double half_span) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("fraction must lie in (0, 1)");
  if (!(half_span > 0.0)) throw std::invalid_argument("flat net needs a positive half span");
  FlatStartNet net;
  net.center = center;
  net.half_span = half_span;
  net.params[kC2] = std::log(fraction / (1.0 - fraction));
  return net;
}

double FlatStartNet::fraction(double x_prev, double x) const {
  const double a = (x_prev - center) / half_span;
  const double b = (x - center) / half_span;
  const double* p = params.data();
  double z = p[kC2];
  for (int j = 0; j < F; ++j) {
    z += p[kV2 + j] * std::tanh(p[kV1 + 2 * j] * a + p[kV1 + 2 * j + 1] * b + p[kC1 + j]);
  }
  return logistic_value(z);
}

Var FlatStartNet::fraction(const Var& x_prev, const Var& x, std::span<const Var> theta) const {
  if (theta.size() != kParameterCount) throw std::invalid_argument("flat net parameter count");
  const double a = (x_prev.value - center) / half_span;
  const double b = (x.value - center) / half_span;
  double h[F];
  double z = theta[kC2].value;
  for (int j = 0; j < F; ++j) {
    h[j] = std::tanh(theta[kV1 + 2 * j].value * a + theta[kV1 + 2 * j + 1].value * b +
                     theta[kC1 + j].value);
    z += theta[kV2 + j].value * h[j];
  }
  const double s = logistic_value(z);
  const double dz = s * (1.0 - s);

  std::vector<Var> parents{x_prev, x};
  parents.insert(parents.end(), theta.begin(), theta.end());
  std::vector<double> partials(parents.size(), 0.0);
  double* dp = partials.data() + 2;
  double da = 0.0;
  double db = 0.0;
  for (int j = 0; j < F; ++j) {
    const double d_pre = dz * theta[kV2 + j].value * (1.0 - h[j] * h[j]);
    dp[kV1 + 2 * j] = d_pre * a;
    dp[kV1 + 2 * j + 1] = d_pre * b;
    dp[kC1 + j] = d_pre;
    dp[kV2 + j] = dz * h[j];
    da += d_pre * theta[kV1 + 2 * j].value;
    db += d_pre * theta[kV1 + 2 * j + 1].value;
  }
  dp[kC2] = dz;
  partials[0] = da / half_span;
  partials[1] = db / half_span;

  Tape* tape = nullptr;
  for (const Var& v : parents) {
    if (!v.is_constant()) {
      tape = v.tape;
      break;
    }
  }
  return tape == nullptr ? gradstft::constant(s) : tape->custom(s, parents, partials);
}

namespace {

bool outside(double rise_start, double fall_end, std::size_t signal_length, double pad) {
  return fall_end < -pad || rise_start > static_cast<double>(signal_length) + pad;
}

// Windows i = -I+1..I-1 from x over -I..I and y over -I+1..I, keeping those
// that touch the padded domain. Returns the first kept index offset and count.
template <class T, class Value>
std::pair<int, int> surviving_range(const std::vector<T>& x, const std::vector<T>& y,
                                    int index_range, std::size_t signal_length, double pad,
                                    Value value) {
  int first = 0;
  int count = 0;
  for (int i = -index_range + 1; i <= index_range - 1; ++i) {
    const auto xi = static_cast<std::size_t>(i + index_range);
    const auto yi = static_cast<std::size_t>(i + index_range - 1);
    if (outside(value(y[yi]), value(x[xi + 1]), signal_length, pad)) continue;
    if (count == 0) first = i;
    ++count;
  }
  if (count < 2) throw std::invalid_argument("fewer than two windows overlap the padded signal");
  return {first, count};
}

}  // namespace

WindowLayout layout_from_nets(const MonotonicMapNet& map, const FlatStartNet& flat,
                              int index_range, std::size_t signal_length, double pad) {
  const std::vector<double> x = map.map_indices(index_range);
  std::vector<double> y(x.size() - 1);
  for (std::size_t j = 0; j + 1 < x.size(); ++j) {
    y[j] = x[j] + flat.fraction(x[j], x[j + 1]) * (x[j + 1] - x[j]);
  }
  const auto [first, count] =
      surviving_range(x, y, index_range, signal_length, pad, [](double v) { return v; });
  WindowLayout layout;
  for (int i = first; i < first + count; ++i) {
    const auto xi = static_cast<std::size_t>(i + index_range);
    layout.windows.push_back(TrapezoidWindow{i, y[xi - 1], x[xi], y[xi], x[xi + 1]});
  }
  return layout;
}

namespace {

struct FrameSamples {
  long first = 0;
  int support = 0;
  std::vector<double> segment;
  std::vector<long> phase;
};

FrameSamples frame_samples(const Signal& signal, double rise_start, double fall_end) {
  FrameSamples f;
  f.first = static_cast<long>(std::floor(rise_start));
  const long last = static_cast<long>(std::ceil(fall_end));
  f.support = static_cast<int>(last - f.first);
  if (f.support < kMinWindowLength) throw std::invalid_argument("window support is shorter than 4 samples");
  f.segment.reserve(static_cast<std::size_t>(f.support));
  f.phase.reserve(static_cast<std::size_t>(f.support));
  for (long m = f.first; m < last; ++m) {
    f.segment.push_back(signal.at(m));
    f.phase.push_back(m - f.first);
  }
  return f;
}

int bins_for(int support, int dft_length) { return dft_length > 0 ? std::max(dft_length, support) : support; }

}  // namespace

Spectrogram adaptive_stft(const Signal& signal, const WindowLayout& layout, int dft_length) {
  validate(signal);
  layout.validate();
  if (dft_length < 0) throw std::invalid_argument("dft length must be non-negative");
  Spectrogram out;
  for (const auto& w : layout.windows) {
    const FrameSamples f = frame_samples(signal, w.rise_start, w.fall_end);
    const int bins = bins_for(f.support, dft_length);
    Spectrum spec(static_cast<std::size_t>(bins), 0.0);
    for (std::size_t j = 0; j < f.segment.size(); ++j) {
      spec[static_cast<std::size_t>(f.phase[j])] =
          f.segment[j] * trapezoid_window(static_cast<double>(f.first + static_cast<long>(j)), w);
    }
    dft_inplace(spec);
    out.frames.push_back(std::move(spec));
    out.centers.push_back(w.center());
  }
  return out;
}

void AdaptiveConfig::validate() const {
  if (!(initial_window >= 2.0 * kMinWindowLength)) throw std::invalid_argument("initial window too short");
  if (index_range < 0) throw std::invalid_argument("index range must be non-negative");
  if (!(pad >= 0.0)) throw std::invalid_argument("pad must be non-negative");
  if (dft_length < 0) throw std::invalid_argument("dft length must be non-negative");
  if (max_iters < 0) throw std::invalid_argument("max iters must be non-negative");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (nodes_per_unit < 2) throw std::invalid_argument("quadrature needs at least two nodes");
  if (!(map_init_gain > 0.0)) throw std::invalid_argument("map init gain must be positive");
  if (snapshot_every < 0) throw std::invalid_argument("snapshot interval must be non-negative");
}

std::size_t AdaptiveModel::parameter_count() const {
  return MonotonicMapNet::kParameterCount + FlatStartNet::kParameterCount;
}

std::vector<double> AdaptiveModel::parameters() const {
  std::vector<double> theta = map.params;
  theta.insert(theta.end(), flat.params.begin(), flat.params.end());
  return theta;
}

void AdaptiveModel::set_parameters(std::span<const double> theta) {
  if (theta.size() != parameter_count()) throw std::invalid_argument("adaptive parameter count");
  std::copy_n(theta.begin(), MonotonicMapNet::kParameterCount, map.params.begin());
  std::copy(theta.begin() + MonotonicMapNet::kParameterCount, theta.end(), flat.params.begin());
}

WindowLayout AdaptiveModel::layout(std::size_t signal_length, double pad) const {
  return layout_from_nets(map, flat, index_range, signal_length, pad);
}

int default_index_range(std::size_t signal_length, const AdaptiveConfig& config) {
  if (config.index_range > 0) return config.index_range;
  const double reach = 0.5 * static_cast<double>(signal_length) + config.pad;
  return std::max(1, static_cast<int>(std::ceil(reach / config.initial_hop())));
}

AdaptiveModel init_adaptive_model(std::size_t signal_length, const AdaptiveConfig& config) {
  config.validate();
  if (signal_length == 0) throw std::invalid_argument("signal is empty");
  AdaptiveModel model;
  model.index_range = default_index_range(signal_length, config);
  const double half = 0.5 * static_cast<double>(signal_length);
  model.map = MonotonicMapNet::init(half, config.initial_hop(), model.index_range, config.seed,
                                    config.map_init_gain);
  model.map.nodes_per_unit = config.nodes_per_unit;
  model.flat = FlatStartNet::init(half, half, config.seed + 1);
  return model;
}

namespace {

// Window value at integer m as a tape node over the two abscissae of the
// ramp it falls on; flat and outside samples are constants.
Var tap(double m, const Var& y0, const Var& x0, const Var& y1, const Var& x1) {
  if (m < y0.value || m >= x1.value) return constant(0.0);
  if (m < x0.value) {
    const double w = x0.value - y0.value;
    if (w < 1.0) return y0.tape->binary(m - y0.value, y0, -1.0, x0, 0.0);
    const double r = (m - y0.value) / w;
    return y0.tape->binary(r, y0, (r - 1.0) / w, x0, -r / w);
  }
  if (m < y1.value) return constant(1.0);
  const double w = x1.value - y1.value;
  if (w < 1.0) return y1.tape->binary(1.0 - (m - y1.value), y1, 1.0, x1, 0.0);
  const double f = 1.0 - (m - y1.value) / w;
  return y1.tape->binary(f, y1, f / w, x1, (1.0 - f) / w);
}

}  // namespace

AdaptiveEvaluation adaptive_loss(const Signal& signal, const AdaptiveModel& model,
                                 const AdaptiveConfig& config, bool with_gradient) {
  validate(signal);
  const int I = model.index_range;
  const std::size_t M = signal.size();
  const std::size_t P = MonotonicMapNet::kParameterCount;

  Tape tape;
  std::vector<Var> map_theta;
  map_theta.reserve(P);
  for (double v : model.map.params) map_theta.push_back(tape.variable(v));
  std::vector<Var> flat_theta;
  for (double v : model.flat.params) flat_theta.push_back(tape.variable(v));

  std::vector<double> jac;
  const std::vector<double> xv = model.map.map_indices(I, with_gradient ? &jac : nullptr);
  std::vector<Var> x;
  x.reserve(xv.size());
  for (std::size_t r = 0; r < xv.size(); ++r) {
    x.push_back(with_gradient ? tape.custom(xv[r], map_theta, std::span(jac).subspan(r * P, P))
                              : constant(xv[r]));
  }
  std::vector<Var> y;
  y.reserve(x.size() - 1);
  for (std::size_t j = 0; j + 1 < x.size(); ++j) {
    const Var s = with_gradient ? model.flat.fraction(x[j], x[j + 1], flat_theta)
                                : constant(model.flat.fraction(xv[j], xv[j + 1]));
    y.push_back(x[j] + s * (x[j + 1] - x[j]));
  }

  const auto [first, count] =
      surviving_range(x, y, I, M, config.pad, [](const Var& v) { return v.value; });
  std::vector<Var> conc;
  conc.reserve(static_cast<std::size_t>(count));
  for (int i = first; i < first + count; ++i) {
    const auto xi = static_cast<std::size_t>(i + I);
    const Var& y0 = y[xi - 1];
    const Var& x0 = x[xi];
    const Var& y1 = y[xi];
    const Var& x1 = x[xi + 1];
    if (!(y0.value <= x0.value && x0.value < y1.value && y1.value <= x1.value)) {
      throw std::domain_error("layout lost its interleaving order");
    }
    const FrameSamples f = frame_samples(signal, y0.value, x1.value);
    std::vector<Var> taps;
    taps.reserve(f.segment.size());
    for (std::size_t j = 0; j < f.segment.size(); ++j) {
      const double m = static_cast<double>(f.first + static_cast<long>(j));
      if (with_gradient) {
        taps.push_back(tap(m, y0, x0, y1, x1));
      } else {
        taps.push_back(constant(trapezoid_window(m, x0.value, y0.value, x1.value, y1.value)));
      }
    }
    const int bins = bins_for(f.support, config.dft_length);
    conc.push_back(concentration(windowed_dft_powers(f.segment, taps, f.phase, bins)));
  }
  const Var loss = sparsity_loss_adaptive(conc);

  AdaptiveEvaluation out;
  out.loss = loss.value;
  out.frames = static_cast<std::size_t>(count);
  if (with_gradient) {
    const Gradient g = tape.backward(loss);
    out.gradient.reserve(model.parameter_count());
    for (const Var& v : map_theta) out.gradient.push_back(g[v]);
    for (const Var& v : flat_theta) out.gradient.push_back(g[v]);
  }
  return out;
}

namespace {

struct Adam {
  explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
  void step(std::vector<double>& theta, const std::vector<double>& g, double lr) {
    ++t;
    const double c1 = 1.0 - std::pow(kBeta1, t);
    const double c2 = 1.0 - std::pow(kBeta2, t);
    for (std::size_t j = 0; j < theta.size(); ++j) {
      m[j] = kBeta1 * m[j] + (1.0 - kBeta1) * g[j];
      v[j] = kBeta2 * v[j] + (1.0 - kBeta2) * g[j] * g[j];
      theta[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + kEps);
    }
  }
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  std::vector<double> m;
  std::vector<double> v;
  int t = 0;
};

constexpr int kMaxHalvings = 10;

}  // namespace

AdaptiveResult train_adaptive(const Signal& signal, const AdaptiveConfig& config) {
  return train_adaptive(signal, init_adaptive_model(signal.size(), config), config);
}

AdaptiveResult train_adaptive(const Signal& signal, AdaptiveModel model, const AdaptiveConfig& config) {
  config.validate();
  validate(signal);
  const std::size_t M = signal.size();
  AdaptiveResult result;
  TrainHistory& h = result.history;
  std::vector<double> theta = model.parameters();
  Adam adam(theta.size());

  auto snapshot = [&](int it) {
    if (config.snapshot_every > 0 && it % config.snapshot_every == 0) {
      result.snapshots.emplace_back(it, model.layout(M, config.pad));
    }
  };

  AdaptiveEvaluation eval = adaptive_loss(signal, model, config);
  double step = config.learning_rate;
  for (int it = 0;; ++it) {
    HistoryRow row;
    row.iteration = it;
    row.loss = eval.loss;
    row.length = static_cast<int>(eval.frames);
    row.step = step;
    h.rows.push_back(row);
    snapshot(it);
    if (!std::isfinite(eval.loss)) {
      h.failed = true;
      h.stop_reason = "non-finite loss";
      break;
    }
    if (it == config.max_iters) {
      h.stop_reason = "max-iters";
      break;
    }

    if (config.optimizer == AdaptiveOptimizer::adam) {
      adam.step(theta, eval.gradient, config.learning_rate);
      model.set_parameters(theta);
      try {
        eval = adaptive_loss(signal, model, config);
      } catch (const std::exception& e) {
        h.failed = true;
        h.stop_reason = e.what();
        break;
      }
      continue;
    }

    bool accepted = false;
    step = config.learning_rate;
    for (int k = 0; k <= kMaxHalvings && !accepted; ++k, step *= 0.5) {
      std::vector<double> trial = theta;
      for (std::size_t j = 0; j < trial.size(); ++j) trial[j] -= step * eval.gradient[j];
      AdaptiveModel candidate = model;
      candidate.set_parameters(trial);
      try {
        AdaptiveEvaluation next = adaptive_loss(signal, candidate, config);
        if (next.loss <= eval.loss) {
          theta = std::move(trial);
          model = std::move(candidate);
          eval = std::move(next);
          accepted = true;
          break;
        }
      } catch (const std::exception&) {
        // A step that breaks the layout counts as rejected.
      }
    }
    if (!accepted) {
      h.stop_reason = "stalled";
      break;
    }
  }
  result.model = std::move(model);
  result.layout = result.model.layout(M, config.pad);
  return result;
}

double kendall_tau(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("kendall tau needs equal lengths");
  long concordant = 0;
  long discordant = 0;
  long ties_a = 0;
  long ties_b = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const double da = a[j] - a[i];
      const double db = b[j] - b[i];
      if (da == 0.0 && db == 0.0) continue;
      if (da == 0.0) {
        ++ties_a;
      } else if (db == 0.0) {
        ++ties_b;
      } else if ((da > 0.0) == (db > 0.0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double n1 = static_cast<double>(concordant + discordant + ties_a);
  const double n2 = static_cast<double>(concordant + discordant + ties_b);
  if (n1 == 0.0 || n2 == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(concordant - discordant) / std::sqrt(n1 * n2);
}

std::string layout_csv(const WindowLayout& layout) {
  std::string out = "i,x_i,y_i,length,center\n";
  for (const auto& w : layout.windows) {
    out += std::to_string(w.index) + ',' + format_double(w.flat_start) + ',' +
           format_double(w.rise_start) + ',' + format_double(w.length()) + ',' +
           format_double(w.center()) + '\n';
  }
  return out;
}

std::string window_overlay_csv(const WindowLayout& layout) {
  std::string out = "center,length\n";
  for (const auto& w : layout.windows) {
    out += format_double(w.center()) + ',' + format_double(w.length()) + '\n';
  }
  return out;
}

}  // namespace gradstft
