#pragma once

#include <complex>

#include "snsim/grid.hpp"

namespace snsim::fft {

/// Out-of-place complex-to-complex transform (sign -1 forward, +1 backward),
/// unnormalized. Plans are cached per (dimension, n, sign) and shared; safe
/// to call from multiple threads on distinct arrays.
void transform(const GridSpec& grid, const std::complex<double>* in,
               std::complex<double>* out, int sign);

}  // namespace snsim::fft
