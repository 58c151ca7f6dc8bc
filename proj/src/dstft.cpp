// Copyright 2026 The gradstft Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gradstft/dstft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "gradstft/fft.hpp"

namespace gradstft {

Signal make_signal(std::vector<double> samples, double sample_rate) {
  Signal s{std::move(samples), sample_rate};
  validate(s);
  return s;
}

void validate(const Signal& signal) {
  if (signal.samples.empty()) throw std::invalid_argument("signal is empty");
  for (double v : signal.samples) {
    if (!std::isfinite(v)) throw std::invalid_argument("signal has a non-finite sample");
  }
  if (!(signal.sample_rate > 0.0)) throw std::invalid_argument("sample rate must be positive");
}

void GaussianStftConfig::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("sigma must be positive");
  }
  if (!(hop_ratio > 0.0 && hop_ratio <= 1.0)) {
    throw std::invalid_argument("hop ratio must lie in (0, 1]");
  }
  if (!(truncation_multiple > 0.0)) {
    throw std::invalid_argument("truncation multiple must be positive");
  }
}

int GaussianStftConfig::length() const {
  return effective_length(sigma, truncation_multiple);
}

int GaussianStftConfig::hop() const {
  return std::max(1, static_cast<int>(std::lround(hop_ratio * length())));
}

double gaussian_window(double sigma, int n) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  const double r = n / (2.0 * sigma);
  return std::exp(-r * r);
}

Var gaussian_window(const Var& sigma, int n) {
  if (!(sigma.value > 0.0)) throw std::invalid_argument("sigma must be positive");
  const double quarter_n2 = 0.25 * static_cast<double>(n) * n;
  return exp(-quarter_n2 / (sigma * sigma));
}

int effective_length(double sigma, double truncation_multiple) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  const double n = std::floor(2.0 * truncation_multiple * sigma);
  if (n < kMinWindowLength) return kMinWindowLength;
  if (n > 1 << 24) throw std::invalid_argument("window length out of range");
  return static_cast<int>(n);
}

std::size_t Spectrogram::total_bins() const {
  std::size_t total = 0;
  for (const auto& f : frames) total += f.size();
  return total;
}

Spectrum values(const VarSpectrum& spectrum) {
  Spectrum out;
  out.reserve(spectrum.size());
  for (const auto& c : spectrum) out.emplace_back(c.re.value, c.im.value);
  return out;
}

Spectrogram VarSpectrogram::values() const {
  Spectrogram out;
  out.centers = centers;
  out.frames.reserve(frames.size());
  for (const auto& f : frames) out.frames.push_back(gradstft::values(f));
  return out;
}

namespace {

struct TwiddleTable {
  explicit TwiddleTable(int bins) : cos(bins), sin(bins) {
    for (int i = 0; i < bins; ++i) {
      const double a = 2.0 * std::numbers::pi * i / bins;
      cos[i] = std::cos(a);
      sin[i] = std::sin(a);
    }
  }
  std::vector<double> cos;
  std::vector<double> sin;
};

void check_frame(std::span<const double> segment, std::span<const Var> window,
                 std::span<const long> phase, int bins) {
  if (bins < 1) throw std::invalid_argument("frame needs at least one bin");
  if (segment.size() != window.size() || segment.size() != phase.size()) {
    throw std::invalid_argument("segment, window and phase differ in length");
  }
}

std::vector<long> reduced_phases(std::span<const long> phase, int bins) {
  std::vector<long> p(phase.size());
  for (std::size_t j = 0; j < phase.size(); ++j) {
    long r = phase[j] % bins;
    p[j] = r < 0 ? r + bins : r;
  }
  return p;
}

}  // namespace

VarSpectrum windowed_dft(std::span<const double> segment,
                         std::span<const Var> window,
                         std::span<const long> phase, int bins) {
  check_frame(segment, window, phase, bins);
  const TwiddleTable tw(bins);
  const auto p = reduced_phases(phase, bins);

  std::vector<Var> terms;
  std::vector<long> idx;
  for (std::size_t j = 0; j < segment.size(); ++j) {
    if (segment[j] == 0.0) continue;
    terms.push_back(window[j]);
    idx.push_back(static_cast<long>(j));
  }
  std::vector<double> cre(terms.size());
  std::vector<double> cim(terms.size());

  VarSpectrum out(static_cast<std::size_t>(bins));
  for (int k = 0; k < bins; ++k) {
    for (std::size_t t = 0; t < terms.size(); ++t) {
      const auto j = static_cast<std::size_t>(idx[t]);
      const long e = (static_cast<long>(k) * p[j]) % bins;
      cre[t] = segment[j] * tw.cos[e];
      cim[t] = -segment[j] * tw.sin[e];
    }
    out[k] = ComplexVar{linear(terms, cre), linear(terms, cim)};
  }
  return out;
}

FramePowers windowed_dft_powers(std::span<const double> segment,
                                std::span<const Var> window,
                                std::span<const long> phase, int bins) {
  check_frame(segment, window, phase, bins);
  const auto p = reduced_phases(phase, bins);
  const std::size_t n = segment.size();
  const auto nb = static_cast<std::size_t>(bins);

  std::vector<std::complex<double>> f(nb, 0.0);
  for (std::size_t j = 0; j < n; ++j) f[p[j]] += segment[j] * window[j].value;
  dft_inplace(f);

  double c2 = 0.0;
  double c4 = 0.0;
  for (const auto& v : f) {
    const double pk = std::norm(v);
    c2 += pk;
    c4 += pk * pk;
  }

  // d|F_k|²/dw_j = 2·s_j·Re(conj(F_k)·e^{-iθ_kj}); weight by 1 for c2 and by
  // 2|F_k|² for c4. Both sums over k are forward DFTs of conj(F) evaluated at
  // the sample's phase.
  std::vector<std::complex<double>> q2(nb);
  std::vector<std::complex<double>> q4(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    q2[k] = std::conj(f[k]);
    q4[k] = 2.0 * std::norm(f[k]) * q2[k];
  }
  dft_inplace(q2);
  dft_inplace(q4);
  std::vector<double> d2(n);
  std::vector<double> d4(n);
  for (std::size_t j = 0; j < n; ++j) {
    d2[j] = 2.0 * segment[j] * q2[p[j]].real();
    d4[j] = 2.0 * segment[j] * q4[p[j]].real();
  }

  Tape* tape = nullptr;
  for (const Var& w : window) {
    if (!w.is_constant()) {
      tape = w.tape;
      break;
    }
  }
  if (tape == nullptr) return FramePowers{constant(c2), constant(c4)};
  return FramePowers{tape->custom(c2, window, d2), tape->custom(c4, window, d4)};
}

namespace {

std::vector<Var> gaussian_taps(const Var& sigma, int half) {
  std::vector<Var> taps;
  taps.reserve(2 * half + 1);
  for (int n = -half; n <= half; ++n) taps.push_back(gaussian_window(sigma, n));
  return taps;
}

VarSpectrum gaussian_frame(const Signal& signal, long m,
                           std::span<const Var> taps, int length) {
  const int half = length / 2;
  std::vector<double> segment;
  std::vector<long> phase;
  segment.reserve(taps.size());
  phase.reserve(taps.size());
  for (int n = -half; n <= half; ++n) {
    segment.push_back(signal.at(m + n));
    phase.push_back(n);
  }
  return windowed_dft(segment, taps, phase, length);
}

}  // namespace

VarSpectrum stft_frame(const Signal& signal, long m, const Var& sigma,
                       double truncation_multiple) {
  const int length = effective_length(sigma.value, truncation_multiple);
  const auto taps = gaussian_taps(sigma, length / 2);
  return gaussian_frame(signal, m, taps, length);
}

VarSpectrogram stft(const Signal& signal, const Var& sigma, double hop_ratio,
                    double truncation_multiple) {
  validate(signal);
  const GaussianStftConfig config{sigma.value, hop_ratio, truncation_multiple};
  config.validate();
  const int length = config.length();
  const int hop = config.hop();
  const auto taps = gaussian_taps(sigma, length / 2);

  VarSpectrogram out;
  const auto m_end = static_cast<long>(signal.size());
  for (long m = 0; m < m_end; m += hop) {
    out.frames.push_back(gaussian_frame(signal, m, taps, length));
    out.centers.push_back(static_cast<double>(m));
  }
  return out;
}

Spectrogram stft(const Signal& signal, const GaussianStftConfig& config) {
  config.validate();
  return stft(signal, constant(config.sigma), config.hop_ratio,
              config.truncation_multiple)
      .values();
}

}  // namespace gradstft
