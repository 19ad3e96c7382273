#pragma once

// Shared test utilities: brute-force reference implementations used as
// oracles against the FFT-based production code, plus small input builders.

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "fdm/rng.hpp"
#include "fdm/trace.hpp"

namespace testutil {

// O(N^2) direct-sum transform, forward sign convention, unnormalized.
inline std::vector<std::complex<double>> dft_direct(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> s = 0.0;
        for (std::size_t m = 0; m < n; ++m) {
            const double ang = -2.0 * M_PI * static_cast<double>(k) *
                               static_cast<double>(m) / static_cast<double>(n);
            s += x[m] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = s;
    }
    return out;
}

// Direct linear convolution truncated to n_out samples.
inline std::vector<double> convolve_direct(const std::vector<double>& x,
                                           const std::vector<double>& h,
                                           std::size_t n_out) {
    std::vector<double> y(n_out, 0.0);
    for (std::size_t n = 0; n < n_out; ++n)
        for (std::size_t m = 0; m < h.size(); ++m)
            if (n >= m && n - m < x.size()) y[n] += h[m] * x[n - m];
    return y;
}

// Direct circular convolution, both inputs length n.
inline std::vector<double> circular_convolve_direct(const std::vector<double>& x,
                                                    const std::vector<double>& h) {
    const std::size_t n = x.size();
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t m = 0; m < n; ++m) y[i] += h[m] * x[(i + n - m) % n];
    return y;
}

// Direct raw correlation r(m) = sum_n y(n) x(n-m), valid overlap only.
inline std::vector<double> xcorr_direct(const std::vector<double>& y,
                                        const std::vector<double>& x) {
    std::vector<double> r(y.size(), 0.0);
    for (std::size_t m = 0; m < y.size(); ++m)
        for (std::size_t n = m; n < y.size(); ++n)
            if (n - m < x.size()) r[m] += y[n] * x[n - m];
    return r;
}

inline fdm::Trace make_trace(std::vector<double> v, double dt = 2e-9) {
    fdm::Trace t;
    t.samples = std::move(v);
    t.dt = dt;
    return t;
}

inline fdm::Trace random_trace(std::size_t n, std::uint64_t seed, double dt = 2e-9) {
    fdm::Rng rng(seed);
    fdm::Trace t;
    t.dt = dt;
    t.samples.resize(n);
    for (auto& v : t.samples) v = rng.normal();
    return t;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

inline double rms(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += v[i] * v[i];
    return std::sqrt(s / static_cast<double>(hi - lo));
}

}  // namespace testutil
