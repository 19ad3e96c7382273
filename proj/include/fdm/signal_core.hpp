#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "fdm/trace.hpp"

namespace fdm {

// Low-pass filter description. kind is kept as an enum for future shapes;
// only Butterworth magnitude responses are implemented. cutoff_hz <= 0
// disables the filter entirely (identity response).
struct FilterSpec {
    enum class Kind { butterworth };
    Kind kind = Kind::butterworth;
    int order = 4;
    double cutoff_hz = 180e6;
};

// |G(f)| of the filter at frequency f (magnitude response, always >= 0).
double filter_gain(const FilterSpec& spec, double f_hz);

// Linear convolution y(n) = sum_m x(m) h(n-m), truncated to x.size() samples.
// Throws std::invalid_argument when the sample periods disagree.
Trace convolve(const Trace& x, const Trace& h);

// Raw cross-correlation r(m) = sum_n y(n) x(n-m) over the valid overlap,
// for lags m = 0 .. y.size()-1. No taper correction is applied, so
// r(0) of cross_correlate(x, x) equals sum x(n)^2.
std::vector<double> cross_correlate(const Trace& y, const Trace& x);

// Multiply a spectrum in place by the zero-phase magnitude response of the
// filter, evaluated at each bin's signed frequency.
void apply_lowpass(Spectrum& s, const FilterSpec& spec);

}  // namespace fdm
