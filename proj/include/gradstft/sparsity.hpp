// Copyright 2026 The gradstft Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <span>
#include <vector>

#include "gradstft/dstft.hpp"
#include "gradstft/history.hpp"
#include "gradstft/tape.hpp"

namespace gradstft {

// Σ_k |F[k]|^p for p ∈ {2, 4}. Throws std::invalid_argument for an empty
// frame or any other p.
double frame_norm_p(const Spectrum& frame, int p);

// c4 / c2², or 0 for an all-zero frame.
double concentration(const Spectrum& frame);
Var concentration(const FramePowers& powers);

struct ConcentrationReport {
  std::vector<double> c2;
  std::vector<double> c4;
  std::vector<double> concentration;
  double global_loss = 0.0;
};

// Frame grid used by the global loss: hop round(3σ), ⌊M/(3σ)⌋ + 1 frames
// starting at sample 0.
struct GlobalGrid {
  int length = 0;
  int hop = 0;
  int frames = 0;
};
GlobalGrid global_grid(std::size_t signal_size, double sigma);

// Σ_i c4_i / Σ_i c2_i² over the global grid. Throws std::domain_error when
// every frame is zero.
Var sparsity_loss_global(const Signal& signal, const Var& sigma);
ConcentrationReport concentration_report(const Signal& signal, double sigma);

// −Σ_m min(C_m, ‖C‖₂). The clip level is held constant for differentiation.
// Throws std::invalid_argument for an empty input.
Var sparsity_loss_adaptive(std::span<const Var> concentrations);
Var sparsity_loss_adaptive(const VarSpectrogram& spectrogram);

struct SigmaSearchOptions {
  double learning_rate = 1.0;
  int max_iters = 200;
  // Stop once |Δσ| stays below tolerance for this many iterations.
  double tolerance = 1e-4;
  int patience = 20;
  // Retries of a step that lowers the loss, halving it each time.
  int max_halvings = 10;
};

struct SigmaSearchResult {
  double sigma = 0.0;
  double loss = 0.0;
  TrainHistory history;
};

// Smallest σ whose truncated window reaches kMinWindowLength samples.
double sigma_floor(double truncation_multiple = 3.0);

// Safeguarded gradient ascent on the global loss. A step that would lower the
// loss is halved up to max_halvings times; if none is accepted the run ends
// with stop_reason "stalled". Leaving [sigma_floor(), M/6] marks the run failed.
SigmaSearchResult optimize_sigma(const Signal& signal, double sigma0,
                                 const SigmaSearchOptions& options = {});

}  // namespace gradstft
