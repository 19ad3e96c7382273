#include "fdm/signal_core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fdm/fft.hpp"

namespace fdm {

double filter_gain(const FilterSpec& spec, double f_hz) {
    if (spec.cutoff_hz <= 0.0) return 1.0;
    const double r = std::abs(f_hz) / spec.cutoff_hz;
    return 1.0 / std::sqrt(1.0 + std::pow(r, 2.0 * spec.order));
}

namespace {

void check_dt(const Trace& a, const Trace& b) {
    // Mixed sample rates would silently misalign everything downstream.
    if (std::abs(a.dt - b.dt) > 1e-15 * std::max(a.dt, b.dt))
        throw std::invalid_argument("sample period mismatch between traces");
}

}  // namespace

Trace convolve(const Trace& x, const Trace& h) {
    check_dt(x, h);
    const std::size_t nx = x.size(), nh = h.size();
    Trace out;
    out.dt = x.dt;
    out.t0 = x.t0;
    out.samples.assign(nx, 0.0);
    if (nx == 0 || nh == 0) return out;

    // Zero-pad to the full linear length, multiply spectra, truncate to nx.
    const std::size_t n = nx + nh - 1;
    std::vector<std::complex<double>> fx(n), fh(n);
    for (std::size_t i = 0; i < nx; ++i) fx[i] = x.samples[i];
    for (std::size_t i = 0; i < nh; ++i) fh[i] = h.samples[i];
    fx = fft_forward(fx);
    fh = fft_forward(fh);
    for (std::size_t i = 0; i < n; ++i) fx[i] *= fh[i];
    fx = fft_inverse(fx);
    for (std::size_t i = 0; i < nx; ++i) out.samples[i] = fx[i].real();
    return out;
}

std::vector<double> cross_correlate(const Trace& y, const Trace& x) {
    check_dt(y, x);
    const std::size_t ny = y.size(), nx = x.size();
    std::vector<double> r(ny, 0.0);
    if (ny == 0 || nx == 0) return r;

    // r(m) = sum_n y(n) x(n-m) is a linear convolution of y with reversed x;
    // evaluate it by padded FFT and keep lags 0 .. ny-1.
    const std::size_t n = ny + nx - 1;
    std::vector<std::complex<double>> fy(n), fx(n);
    for (std::size_t i = 0; i < ny; ++i) fy[i] = y.samples[i];
    for (std::size_t i = 0; i < nx; ++i) fx[i] = x.samples[i];
    fy = fft_forward(fy);
    fx = fft_forward(fx);
    for (std::size_t i = 0; i < n; ++i) fy[i] *= std::conj(fx[i]);
    fy = fft_inverse(fy);
    // Lag m lives at index m of the correlation (index nx-1+m of the
    // convolution with the reversal folded into the conjugate).
    for (std::size_t m = 0; m < ny; ++m) r[m] = fy[m].real();
    return r;
}

void apply_lowpass(Spectrum& s, const FilterSpec& spec) {
    if (spec.cutoff_hz <= 0.0) return;
    const std::size_t n = s.bins.size();
    for (std::size_t k = 0; k < n; ++k)
        s.bins[k] *= filter_gain(spec, bin_frequency(k, n, s.df));
}

}  // namespace fdm
