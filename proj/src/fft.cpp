// Copyright 2026 The gradstft Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gradstft/fft.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <utility>

namespace gradstft {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

namespace {

using cd = std::complex<double>;

// Below this size the direct sum is cheaper than three padded transforms.
constexpr std::size_t kDirectLimit = 32;

struct Radix2Plan {
  explicit Radix2Plan(std::size_t n) : twiddle(n / 2) {
    for (std::size_t i = 0; i < n / 2; ++i) {
      twiddle[i] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(i) / n);
    }
  }
  std::vector<cd> twiddle;
};

struct BluesteinPlan {
  explicit BluesteinPlan(std::size_t n);
  std::size_t padded = 0;
  std::vector<cd> chirp;          // exp(-iπk²/n), k < n
  std::vector<cd> kernel_fft;     // transform of the conjugate chirp, wrapped
};

// Plans are cached per thread; lookups return stable references because the
// map holds them by pointer.
template <class Plan>
const Plan& plan_for(std::size_t n) {
  thread_local std::map<std::size_t, std::unique_ptr<Plan>> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, std::make_unique<Plan>(n)).first;
  return *it->second;
}

void radix2(std::vector<cd>& x) {
  const std::size_t n = x.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  const auto& tw = plan_for<Radix2Plan>(n).twiddle;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t step = n / len;
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const cd u = x[i + j];
        const cd v = x[i + j + half] * tw[j * step];
        x[i + j] = u + v;
        x[i + j + half] = u - v;
      }
    }
  }
}

BluesteinPlan::BluesteinPlan(std::size_t n) : padded(next_power_of_two(2 * n - 1)), chirp(n) {
  // k² mod 2n keeps the angle small and exact for large k.
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t e = (k * k) % (2 * n);
    chirp[k] = std::polar(1.0, -std::numbers::pi * static_cast<double>(e) / n);
  }
  kernel_fft.assign(padded, 0.0);
  kernel_fft[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) {
    kernel_fft[k] = std::conj(chirp[k]);
    kernel_fft[padded - k] = std::conj(chirp[k]);
  }
  radix2(kernel_fft);
}

void bluestein(std::vector<cd>& x) {
  const std::size_t n = x.size();
  const auto& plan = plan_for<BluesteinPlan>(n);
  std::vector<cd> a(plan.padded, 0.0);
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * plan.chirp[k];
  radix2(a);
  for (std::size_t k = 0; k < plan.padded; ++k) a[k] = std::conj(a[k] * plan.kernel_fft[k]);
  radix2(a);  // inverse through conjugation
  const double inv = 1.0 / static_cast<double>(plan.padded);
  for (std::size_t k = 0; k < n; ++k) x[k] = std::conj(a[k]) * inv * plan.chirp[k];
}

void direct(std::vector<cd>& x) {
  const std::size_t n = x.size();
  std::vector<cd> tw(n);
  for (std::size_t i = 0; i < n; ++i) {
    tw[i] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(i) / n);
  }
  std::vector<cd> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    cd acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += x[j] * tw[(k * j) % n];
    out[k] = acc;
  }
  x = std::move(out);
}

}  // namespace

void dft_inplace(std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  if (n <= 1) return;
  if (is_power_of_two(n)) {
    radix2(x);
  } else if (n <= kDirectLimit) {
    direct(x);
  } else {
    bluestein(x);
  }
}

}  // namespace gradstft
