#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace fdm {

// Uniformly sampled real-valued waveform.
struct Trace {
    std::vector<double> samples;
    double dt = 2e-9;  // sample period, seconds
    double t0 = 0.0;   // time of first sample, seconds

    std::size_t size() const { return samples.size(); }
    double duration() const { return static_cast<double>(samples.size()) * dt; }
};

// Complex frequency-domain sequence produced by dft(); bin k corresponds to
// frequency k*df for k <= N/2 and (k-N)*df above.
struct Spectrum {
    std::vector<std::complex<double>> bins;
    double df = 0.0;  // bin spacing, Hz

    std::size_t size() const { return bins.size(); }
};

// Signed bin frequency for index k of an N-bin spectrum.
inline double bin_frequency(std::size_t k, std::size_t n, double df) {
    return (k <= n / 2) ? static_cast<double>(k) * df
                        : (static_cast<double>(k) - static_cast<double>(n)) * df;
}

}  // namespace fdm
