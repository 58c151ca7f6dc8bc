// Copyright 2026 The gradstft Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gradstft/sparsity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gradstft {

double frame_norm_p(const Spectrum& frame, int p) {
  if (frame.empty()) throw std::invalid_argument("frame is empty");
  if (p != 2 && p != 4) throw std::invalid_argument("p must be 2 or 4");
  double acc = 0.0;
  for (const auto& c : frame) {
    const double m2 = std::norm(c);
    acc += p == 2 ? m2 : m2 * m2;
  }
  return acc;
}

double concentration(const Spectrum& frame) {
  const double c2 = frame_norm_p(frame, 2);
  if (c2 == 0.0) return 0.0;
  return frame_norm_p(frame, 4) / (c2 * c2);
}

Var concentration(const FramePowers& powers) {
  if (powers.c2.value == 0.0) return constant(0.0);
  return powers.c4 / (powers.c2 * powers.c2);
}

GlobalGrid global_grid(std::size_t signal_size, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  GlobalGrid g;
  g.length = effective_length(sigma);
  g.hop = std::max(1, static_cast<int>(std::lround(3.0 * sigma)));
  g.frames = static_cast<int>(std::floor(static_cast<double>(signal_size) / (3.0 * sigma))) + 1;
  return g;
}

namespace {

std::vector<FramePowers> global_powers(const Signal& signal, const Var& sigma) {
  validate(signal);
  const GlobalGrid grid = global_grid(signal.size(), sigma.value);
  const int half = grid.length / 2;

  std::vector<Var> taps;
  std::vector<long> phase;
  for (int n = -half; n <= half; ++n) {
    taps.push_back(gaussian_window(sigma, n));
    phase.push_back(n);
  }

  std::vector<FramePowers> out;
  out.reserve(static_cast<std::size_t>(grid.frames));
  std::vector<double> segment(taps.size());
  for (int i = 0; i < grid.frames; ++i) {
    const long m = static_cast<long>(i) * grid.hop;
    for (int n = -half; n <= half; ++n) segment[n + half] = signal.at(m + n);
    out.push_back(windowed_dft_powers(segment, taps, phase, grid.length));
  }
  return out;
}

}  // namespace

Var sparsity_loss_global(const Signal& signal, const Var& sigma) {
  const auto powers = global_powers(signal, sigma);
  std::vector<Var> c4;
  std::vector<Var> c2sq;
  bool any = false;
  for (const auto& p : powers) {
    any = any || p.c2.value > 0.0;
    c4.push_back(p.c4);
    c2sq.push_back(p.c2 * p.c2);
  }
  if (!any) throw std::domain_error("every frame of the signal is zero");
  return sum(c4) / sum(c2sq);
}

ConcentrationReport concentration_report(const Signal& signal, double sigma) {
  const auto powers = global_powers(signal, constant(sigma));
  ConcentrationReport r;
  double num = 0.0;
  double den = 0.0;
  for (const auto& p : powers) {
    r.c2.push_back(p.c2.value);
    r.c4.push_back(p.c4.value);
    r.concentration.push_back(concentration(p).value);
    num += p.c4.value;
    den += p.c2.value * p.c2.value;
  }
  if (den == 0.0) throw std::domain_error("every frame of the signal is zero");
  r.global_loss = num / den;
  return r;
}

Var sparsity_loss_adaptive(std::span<const Var> concentrations) {
  if (concentrations.empty()) throw std::invalid_argument("no frames to score");
  double sq = 0.0;
  for (const Var& c : concentrations) sq += c.value * c.value;
  if (sq == 0.0) throw std::domain_error("every frame is zero");
  const double clip = std::sqrt(sq);
  std::vector<Var> clipped;
  clipped.reserve(concentrations.size());
  for (const Var& c : concentrations) clipped.push_back(min(c, clip));
  return -sum(clipped);
}

Var sparsity_loss_adaptive(const VarSpectrogram& spectrogram) {
  std::vector<Var> cs;
  for (const auto& frame : spectrogram.frames) {
    std::vector<Var> p2;
    for (const auto& c : frame) p2.push_back(abs2(c.re, c.im));
    std::vector<Var> p4;
    for (const Var& p : p2) p4.push_back(p * p);
    cs.push_back(concentration(FramePowers{sum(p2), sum(p4)}));
  }
  return sparsity_loss_adaptive(cs);
}

double sigma_floor(double truncation_multiple) {
  return kMinWindowLength / (2.0 * truncation_multiple);
}

SigmaSearchResult optimize_sigma(const Signal& signal, double sigma0,
                                 const SigmaSearchOptions& options) {
  validate(signal);
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) {
    throw std::invalid_argument("sigma0 must be positive");
  }
  if (!(options.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (options.max_iters < 1) throw std::invalid_argument("max iters must be positive");
  if (options.max_halvings < 0 || options.patience < 1) {
    throw std::invalid_argument("bad safeguard settings");
  }

  const double lo = sigma_floor();
  const double hi = static_cast<double>(signal.size()) / 6.0;

  Tape tape;
  auto evaluate = [&](double s, double* grad) {
    tape.reset();
    const Var sv = tape.variable(s);
    const Var loss = sparsity_loss_global(signal, sv);
    if (grad != nullptr) *grad = tape.backward(loss)[sv];
    return loss.value;
  };

  SigmaSearchResult r;
  double sigma = std::clamp(sigma0, lo, std::max(lo, hi));
  double grad = 0.0;
  double loss = evaluate(sigma, &grad);
  r.history.rows.push_back({0, loss, sigma, effective_length(sigma), kNotRecorded, 0.0});
  r.history.stop_reason = "max-iters";

  int quiet = 0;
  for (int it = 1; it <= options.max_iters; ++it) {
    double step = options.learning_rate * grad;
    double next = sigma;
    double next_loss = loss;
    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h, step *= 0.5) {
      next = std::clamp(sigma + step, lo, std::max(lo, hi));
      next_loss = evaluate(next, nullptr);
      if (next_loss >= loss) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      r.history.stop_reason = "stalled";
      break;
    }
    const double delta = next - sigma;
    sigma = next;
    loss = evaluate(sigma, &grad);
    r.history.rows.push_back({it, loss, sigma, effective_length(sigma), kNotRecorded, delta});

    if (sigma <= lo || sigma >= hi) {
      r.history.failed = true;
      r.history.stop_reason = sigma <= lo ? "sigma reached the floor" : "sigma exceeded M/6";
      break;
    }
    quiet = std::abs(delta) < options.tolerance ? quiet + 1 : 0;
    if (quiet >= options.patience) {
      r.history.stop_reason = "converged";
      break;
    }
  }
  r.sigma = sigma;
  r.loss = loss;
  return r;
}

}  // namespace gradstft
