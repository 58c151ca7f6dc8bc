// Copyright 2026 The gradstft Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <vector>

namespace gradstft {

bool is_power_of_two(std::size_t n);
std::size_t next_power_of_two(std::size_t n);

// In place X[k] = Σ_n x[n]·exp(-2πikn/N). Iterative radix-2 when N is a power
// of two, Bluestein's chirp transform for other N above 32, direct summation
// for the small rest.
void dft_inplace(std::vector<std::complex<double>>& x);

}  // namespace gradstft
