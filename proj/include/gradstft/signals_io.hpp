// Copyright 2026 The gradstft Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gradstft/dstft.hpp"

namespace gradstft {

// Frequencies are in cycles per sample and must lie in (0, 0.5).
struct LabeledSignal {
  Signal signal;
  std::vector<int> labels;  // class of every sample
};

// Sine segments of length L alternating between f1 (label 0) and f2
// (label 1), each starting at phase 0.
LabeledSignal gen_alternating_sines(double f1, double f2, int segment_length,
                                    int segments);

// Segments alternate between a linear chirp f_lo → f_hi (label 0) and a sine
// at sine_frequency (label 1). The chirp reaches f_hi at the segment's end.
LabeledSignal gen_chirp_sine(double f_lo, double f_hi, double sine_frequency,
                             int segment_length, int segments);

// φ[t] = 2π·f0·(r^t − 1)/ln r with r = (f1/f0)^(1/M).
Signal gen_exp_chirp(double f0, double f1, int length);

// Adds N(0, stddev²) noise drawn from a seeded mt19937_64. Samples are not
// clipped.
void add_white_noise(Signal& signal, double stddev, std::uint64_t seed);

// RIFF/WAVE PCM 16-bit. Channels are averaged; samples are divided by 32768.
// Throws std::runtime_error describing what is wrong with the file.
Signal parse_wav(std::span<const std::uint8_t> bytes);
Signal load_wav(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_wav(std::span<const double> samples, int sample_rate,
                                     int channels = 1);

// Rows "frame,center,bin,magnitude" after a header line.
std::string spectrogram_csv(const Spectrogram& spectrogram);
// Magnitudes only; the phase is dropped. Errors name the offending line.
Spectrogram parse_spectrogram_csv(std::string_view text);
// P5, maxval 255, one column per frame, low bins at the bottom.
std::string spectrogram_pgm(const Spectrogram& spectrogram);

enum class ImageFormat { csv, pgm };
void export_spectrogram(const Spectrogram& spectrogram,
                        const std::filesystem::path& path, ImageFormat format);

// Writes to a sibling temporary file, then renames it over path.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace gradstft
