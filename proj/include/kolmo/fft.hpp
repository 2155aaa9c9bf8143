#pragma once

#include "kolmo/fields.hpp"

namespace kolmo {

// 2D real FFTs backed by FFTW. Plans are created once per grid size and
// shared; execution uses the new-array interface and is thread-safe.

void forward_fft(const Grid& grid, const double* in, Complex* out);
/// Inverse transform including the 1/n^2 factor. `in` is not modified.
void inverse_fft(const Grid& grid, const Complex* in, double* out);

SpectralField to_spectral(const RealField& f);
RealField to_physical(const SpectralField& f);

}  // namespace kolmo
