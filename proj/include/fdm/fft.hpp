#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "fdm/trace.hpp"

namespace fdm {

// Complex FFT, forward sign convention e^{-i 2 pi k n / N}, unnormalized.
std::vector<std::complex<double>> fft_forward(const std::vector<std::complex<double>>& in);

// Inverse complex FFT; carries the 1/N factor so ifft(fft(x)) == x.
std::vector<std::complex<double>> fft_inverse(const std::vector<std::complex<double>>& in);

// Forward transform of a real trace into a full-length complex spectrum.
Spectrum dft(const Trace& x);

// Inverse of dft(); returns the real part of the inverse transform (the caller
// is expected to hand in a conjugate-symmetric spectrum). t0 is reset to zero.
Trace idft(const Spectrum& s);

}  // namespace fdm
