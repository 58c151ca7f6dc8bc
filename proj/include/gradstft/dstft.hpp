// Copyright 2026 The gradstft Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "gradstft/tape.hpp"

namespace gradstft {

// Mono audio in sample units. The sample rate is carried for display only.
struct Signal {
  std::vector<double> samples;
  double sample_rate = 1.0;

  std::size_t size() const { return samples.size(); }
  // Sample at index t, or 0 outside [0, M).
  double at(long t) const {
    return (t >= 0 && static_cast<std::size_t>(t) < samples.size())
               ? samples[static_cast<std::size_t>(t)]
               : 0.0;
  }
};

// Throws std::invalid_argument unless M ≥ 1 and every sample is finite.
Signal make_signal(std::vector<double> samples, double sample_rate = 1.0);
void validate(const Signal& signal);

inline constexpr int kMinWindowLength = 4;

struct GaussianStftConfig {
  double sigma = 8.0;
  double hop_ratio = 0.5;
  double truncation_multiple = 3.0;

  void validate() const;
  int length() const;
  int hop() const;
};

// exp(-(n / 2σ)²)
double gaussian_window(double sigma, int n);
Var gaussian_window(const Var& sigma, int n);

// N = ⌊2·t·σ⌋ with t the truncation multiple, clamped to kMinWindowLength.
int effective_length(double sigma, double truncation_multiple = 3.0);

struct ComplexVar {
  Var re;
  Var im;
};

using Spectrum = std::vector<std::complex<double>>;
using VarSpectrum = std::vector<ComplexVar>;

struct Spectrogram {
  std::vector<Spectrum> frames;
  std::vector<double> centers;

  std::size_t frame_count() const { return frames.size(); }
  std::size_t total_bins() const;
};

struct VarSpectrogram {
  std::vector<VarSpectrum> frames;
  std::vector<double> centers;

  std::size_t frame_count() const { return frames.size(); }
  Spectrogram values() const;
};

Spectrum values(const VarSpectrum& spectrum);

// DFT of a windowed segment with explicit per-sample phase positions:
// F[k] = Σ_j segment[j]·window[j]·exp(-2πi·k·phase[j]/bins).
// Each bin is one linear node over the window Vars.
VarSpectrum windowed_dft(std::span<const double> segment,
                         std::span<const Var> window,
                         std::span<const long> phase, int bins);

// Σ|F|² and Σ|F|⁴ of the windowed DFT above, recorded as two nodes whose
// parents are the window Vars. Costs O(bins·samples) doubles instead of
// O(bins·samples) tape edges.
struct FramePowers {
  Var c2;
  Var c4;
};
FramePowers windowed_dft_powers(std::span<const double> segment,
                                std::span<const Var> window,
                                std::span<const long> phase, int bins);

// One Gaussian frame centred at m: n runs over -⌊N/2⌋..⌊N/2⌋, bins k = 0..N-1.
VarSpectrum stft_frame(const Signal& signal, long m, const Var& sigma,
                       double truncation_multiple = 3.0);

// Frames centred at 0, h, 2h, ... while m < M. The truncation length and the
// hop are derived from sigma.value and held fixed for the pass.
VarSpectrogram stft(const Signal& signal, const Var& sigma,
                    double hop_ratio = 0.5, double truncation_multiple = 3.0);
Spectrogram stft(const Signal& signal, const GaussianStftConfig& config);

}  // namespace gradstft
