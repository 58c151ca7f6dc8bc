// Copyright 2026 The gradstft Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gradstft/signals_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace gradstft {

namespace {

void check_frequency(double f, const char* name) {
  if (!(f > 0.0 && f < 0.5)) {
    throw std::invalid_argument(std::string(name) + " must lie in (0, 0.5) cycles/sample");
  }
}

void check_segments(int segment_length, int segments) {
  if (segment_length < kMinWindowLength) {
    throw std::invalid_argument("segment length must be at least 4 samples");
  }
  if (segments < 1) throw std::invalid_argument("need at least one segment");
}

}  // namespace

LabeledSignal gen_alternating_sines(double f1, double f2, int segment_length,
                                    int segments) {
  check_frequency(f1, "f1");
  check_frequency(f2, "f2");
  if (f1 == f2) throw std::invalid_argument("f1 and f2 must differ");
  check_segments(segment_length, segments);

  LabeledSignal out;
  const std::size_t total = static_cast<std::size_t>(segment_length) * segments;
  out.signal.samples.reserve(total);
  out.labels.reserve(total);
  for (int s = 0; s < segments; ++s) {
    const int label = s % 2;
    const double f = label == 0 ? f1 : f2;
    for (int t = 0; t < segment_length; ++t) {
      out.signal.samples.push_back(std::sin(2.0 * std::numbers::pi * f * t));
      out.labels.push_back(label);
    }
  }
  return out;
}

LabeledSignal gen_chirp_sine(double f_lo, double f_hi, double sine_frequency,
                             int segment_length, int segments) {
  check_frequency(f_lo, "f_lo");
  check_frequency(f_hi, "f_hi");
  check_frequency(sine_frequency, "sine frequency");
  if (!(f_lo < f_hi)) throw std::invalid_argument("f_lo must be below f_hi");
  check_segments(segment_length, segments);

  LabeledSignal out;
  const double rate = (f_hi - f_lo) / segment_length;
  for (int s = 0; s < segments; ++s) {
    const int label = s % 2;
    for (int t = 0; t < segment_length; ++t) {
      const double cycles = label == 0 ? f_lo * t + 0.5 * rate * t * t : sine_frequency * t;
      out.signal.samples.push_back(std::sin(2.0 * std::numbers::pi * cycles));
      out.labels.push_back(label);
    }
  }
  return out;
}

Signal gen_exp_chirp(double f0, double f1, int length) {
  check_frequency(f0, "f0");
  check_frequency(f1, "f1");
  if (!(f0 < f1)) throw std::invalid_argument("f0 must be below f1");
  if (length < 1) throw std::invalid_argument("length must be positive");
  const double log_r = std::log(f1 / f0) / length;
  Signal s;
  s.samples.resize(static_cast<std::size_t>(length));
  for (int t = 0; t < length; ++t) {
    const double phase = 2.0 * std::numbers::pi * f0 * std::expm1(log_r * t) / log_r;
    s.samples[static_cast<std::size_t>(t)] = std::sin(phase);
  }
  return s;
}

void add_white_noise(Signal& signal, double stddev, std::uint64_t seed) {
  if (!(stddev >= 0.0) || !std::isfinite(stddev)) {
    throw std::invalid_argument("noise level must be non-negative");
  }
  if (stddev == 0.0) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, stddev);
  for (double& v : signal.samples) v += d(rng);
}

namespace {

std::uint32_t le32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
         static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

std::uint16_t le16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | b[at + 1] << 8);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

[[noreturn]] void wav_error(const std::string& what) {
  throw std::runtime_error("wav: " + what);
}

}  // namespace

Signal parse_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) wav_error("file shorter than the RIFF header");
  if (!tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE")) wav_error("not a RIFF/WAVE file");

  bool have_fmt = false;
  int channels = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = le32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body) wav_error("chunk runs past the end of the file");

    if (tag_is(bytes, pos, "fmt ")) {
      if (size < 16) wav_error("fmt chunk too short");
      const std::uint16_t format = le16(bytes, body);
      channels = le16(bytes, body + 2);
      rate = le32(bytes, body + 4);
      const std::uint16_t align = le16(bytes, body + 12);
      const std::uint16_t bits = le16(bytes, body + 14);
      if (format != 1) wav_error("unsupported codec " + std::to_string(format) + " (PCM only)");
      if (bits != 16) wav_error("unsupported bit depth " + std::to_string(bits) + " (16 only)");
      if (channels < 1) wav_error("no channels");
      if (align != channels * 2) wav_error("block alignment does not match channel count");
      if (rate == 0) wav_error("sample rate is zero");
      have_fmt = true;
    } else if (tag_is(bytes, pos, "data")) {
      if (!have_fmt) wav_error("data chunk before fmt chunk");
      const std::size_t frames = size / (2u * static_cast<unsigned>(channels));
      if (frames == 0) wav_error("no audio frames");
      Signal s;
      s.sample_rate = rate;
      s.samples.resize(frames);
      for (std::size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        for (int c = 0; c < channels; ++c) {
          const auto raw = static_cast<std::int16_t>(le16(bytes, body + 2 * (f * channels + c)));
          acc += raw / 32768.0;
        }
        s.samples[f] = acc / channels;
      }
      return s;
    }
    pos = body + size + (size & 1u);
  }
  wav_error(have_fmt ? "missing data chunk" : "missing fmt chunk");
}

Signal load_wav(const std::filesystem::path& path) {
  const std::string raw = read_file(path);
  return parse_wav(std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
}

std::vector<std::uint8_t> encode_wav(std::span<const double> samples, int sample_rate,
                                     int channels) {
  if (sample_rate <= 0 || channels < 1) throw std::invalid_argument("bad wav format");
  std::vector<std::uint8_t> out;
  auto put32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  auto put16 = [&](std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
  };
  auto tag = [&](const char* t) { out.insert(out.end(), t, t + 4); };
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2 * channels);
  tag("RIFF");
  put32(36 + data_bytes);
  tag("WAVE");
  tag("fmt ");
  put32(16);
  put16(1);
  put16(static_cast<std::uint16_t>(channels));
  put32(static_cast<std::uint32_t>(sample_rate));
  put32(static_cast<std::uint32_t>(sample_rate * channels * 2));
  put16(static_cast<std::uint16_t>(channels * 2));
  put16(16);
  tag("data");
  put32(data_bytes);
  for (double v : samples) {
    const double q = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
    for (int c = 0; c < channels; ++c) put16(static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string spectrogram_csv(const Spectrogram& spectrogram) {
  if (spectrogram.frames.empty()) throw std::invalid_argument("spectrogram is empty");
  std::string out = "frame,center,bin,magnitude\n";
  for (std::size_t i = 0; i < spectrogram.frames.size(); ++i) {
    const std::string prefix =
        std::to_string(i) + "," + format_double(spectrogram.centers.at(i)) + ",";
    const auto& f = spectrogram.frames[i];
    for (std::size_t k = 0; k < f.size(); ++k) {
      out += prefix;
      out += std::to_string(k);
      out += ',';
      out += format_double(std::abs(f[k]));
      out += '\n';
    }
  }
  return out;
}

namespace {

[[noreturn]] void csv_error(std::size_t line, const std::string& what) {
  throw std::runtime_error("csv line " + std::to_string(line) + ": " + what);
}

template <typename T>
T parse_field(std::string_view s, std::size_t line, const char* name) {
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    csv_error(line, std::string("bad ") + name + " '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

Spectrogram parse_spectrogram_csv(std::string_view text) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header = true;
  Spectrogram out;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line != "frame,center,bin,magnitude") csv_error(line_no, "unexpected header");
      continue;
    }
    std::string_view fields[4];
    std::size_t start = 0;
    for (int f = 0; f < 4; ++f) {
      const std::size_t comma = f < 3 ? line.find(',', start) : line.size();
      if (comma == std::string_view::npos) csv_error(line_no, "expected 4 fields");
      fields[f] = line.substr(start, comma - start);
      start = comma + 1;
    }
    if (fields[3].find(',') != std::string_view::npos) csv_error(line_no, "expected 4 fields");
    const auto frame = parse_field<std::size_t>(fields[0], line_no, "frame index");
    const auto center = parse_field<double>(fields[1], line_no, "center");
    const auto bin = parse_field<std::size_t>(fields[2], line_no, "bin");
    const auto mag = parse_field<double>(fields[3], line_no, "magnitude");
    if (!(mag >= 0.0) || !std::isfinite(mag)) csv_error(line_no, "magnitude must be finite and >= 0");

    if (frame == out.frames.size()) {
      out.frames.emplace_back();
      out.centers.push_back(center);
    } else if (frame + 1 != out.frames.size()) {
      csv_error(line_no, "frame indices must be consecutive from 0");
    }
    if (center != out.centers.back()) csv_error(line_no, "center changes within a frame");
    if (bin != out.frames.back().size()) csv_error(line_no, "bins must be consecutive from 0");
    out.frames.back().emplace_back(mag, 0.0);
  }
  if (out.frames.empty()) csv_error(line_no, "no spectrogram rows");
  return out;
}

std::string spectrogram_pgm(const Spectrogram& spectrogram) {
  if (spectrogram.frames.empty()) throw std::invalid_argument("spectrogram is empty");
  std::size_t rows = 0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& f : spectrogram.frames) {
    rows = std::max(rows, f.size());
    for (const auto& c : f) {
      const double v = std::log10(std::abs(c) + 1e-6);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (rows == 0) throw std::invalid_argument("spectrogram has no bins");
  const std::size_t cols = spectrogram.frames.size();
  std::string out = "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + rows * cols, '\0');
  const double span = hi - lo;
  for (std::size_t c = 0; c < cols; ++c) {
    const auto& f = spectrogram.frames[c];
    for (std::size_t k = 0; k < f.size(); ++k) {
      double v = 0.0;
      if (span > 0.0) v = 255.0 * (std::log10(std::abs(f[k]) + 1e-6) - lo) / span;
      const auto px = static_cast<unsigned char>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      out[header + (rows - 1 - k) * cols + c] = static_cast<char>(px);
    }
  }
  return out;
}

void export_spectrogram(const Spectrogram& spectrogram, const std::filesystem::path& path,
                        ImageFormat format) {
  write_file_atomic(path, format == ImageFormat::csv ? spectrogram_csv(spectrogram)
                                                     : spectrogram_pgm(spectrogram));
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    f.flush();
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw std::runtime_error("cannot rename into " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace gradstft
