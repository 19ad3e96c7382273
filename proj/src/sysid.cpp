#include "fdm/sysid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fdm/fft.hpp"
#include "fdm/signal_core.hpp"

namespace fdm {

ImpulseEstimate estimate_impulse_response(
    const std::vector<std::pair<Trace, Trace>>& drive_response_pairs) {
    if (drive_response_pairs.empty())
        throw std::invalid_argument("transfer estimate needs at least one record pair");
    const std::size_t n = drive_response_pairs.front().first.size();
    if (n == 0) throw std::invalid_argument("empty drive record");

    // Average the circular correlations across records in the time domain,
    // then transform once: S_yx / S_xx with a drive-power validity mask.
    std::vector<std::complex<double>> acc_yx(n, 0.0), acc_xx(n, 0.0);
    const double dt = drive_response_pairs.front().first.dt;
    for (const auto& [x, y] : drive_response_pairs) {
        if (x.size() != n || y.size() != n)
            throw std::invalid_argument("record length mismatch in drive/response pairs");
        if (std::abs(x.dt - dt) > 1e-15 * dt || std::abs(y.dt - dt) > 1e-15 * dt)
            throw std::invalid_argument("sample period mismatch in drive/response pairs");
        std::vector<std::complex<double>> fx(x.samples.begin(), x.samples.end());
        std::vector<std::complex<double>> fy(y.samples.begin(), y.samples.end());
        fx = fft_forward(fx);
        fy = fft_forward(fy);
        std::vector<std::complex<double>> pyx(n), pxx(n);
        for (std::size_t k = 0; k < n; ++k) {
            pyx[k] = fy[k] * std::conj(fx[k]);
            pxx[k] = fx[k] * std::conj(fx[k]);
        }
        pyx = fft_inverse(pyx);
        pxx = fft_inverse(pxx);
        for (std::size_t k = 0; k < n; ++k) {
            acc_yx[k] += pyx[k];
            acc_xx[k] += pxx[k];
        }
    }
    const double m = static_cast<double>(drive_response_pairs.size());
    for (std::size_t k = 0; k < n; ++k) {
        acc_yx[k] /= m;
        acc_xx[k] /= m;
    }
    std::vector<std::complex<double>> syx = fft_forward(acc_yx);
    std::vector<std::complex<double>> sxx = fft_forward(acc_xx);

    ImpulseEstimate est;
    est.records_averaged = drive_response_pairs.size();
    est.h.df = 1.0 / (static_cast<double>(n) * dt);
    est.h.bins.assign(n, 0.0);
    est.valid.assign(n, 0);
    double sxx_max = 0.0;
    for (const auto& v : sxx) sxx_max = std::max(sxx_max, std::abs(v));
    est.sxx_max = sxx_max;
    const double eps = 1e-6 * sxx_max;
    for (std::size_t k = 0; k < n; ++k) {
        if (std::abs(sxx[k]) >= eps && eps > 0.0) {
            est.h.bins[k] = syx[k] / sxx[k];
            est.valid[k] = 1;
        }
    }
    return est;
}

WhitenReport whiten_check(const std::vector<Trace>& drive_records) {
    if (drive_records.empty())
        throw std::invalid_argument("whiten check needs at least one record");
    const std::size_t n = drive_records.front().size();
    if (n < 2) throw std::invalid_argument("records too short for whiten check");

    std::vector<double> acc(n, 0.0);
    std::vector<double> pow_acc(n, 0.0);
    for (const auto& x : drive_records) {
        if (x.size() != n)
            throw std::invalid_argument("record length mismatch in whiten check");
        std::vector<double> r = cross_correlate(x, x);
        for (std::size_t i = 0; i < n; ++i) acc[i] += r[i];
        std::vector<std::complex<double>> fx(x.samples.begin(), x.samples.end());
        fx = fft_forward(fx);
        for (std::size_t i = 0; i < n; ++i) pow_acc[i] += std::norm(fx[i]);
    }
    const double m = static_cast<double>(drive_records.size());

    WhitenReport rep;
    rep.peak = acc[0] / m;
    if (rep.peak == 0.0)
        throw std::invalid_argument("zero-power drive in whiten check");
    double sum_sq = 0.0, worst = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        const double q = acc[i] / acc[0];
        sum_sq += q * q;
        worst = std::max(worst, std::abs(q));
    }
    rep.sidelobe_rms = std::sqrt(sum_sq / static_cast<double>(n - 1));
    rep.sidelobe_max = worst;
    rep.bound = 3.0 / std::sqrt(m * static_cast<double>(n));
    rep.pass = rep.sidelobe_rms < rep.bound;

    double mean_p = 0.0;
    for (double p : pow_acc) mean_p += p;
    mean_p /= static_cast<double>(n);
    double var = 0.0;
    for (double p : pow_acc) var += (p - mean_p) * (p - mean_p);
    var /= static_cast<double>(n);
    rep.spectral_flatness = (mean_p > 0.0) ? std::sqrt(var) / mean_p : 0.0;
    return rep;
}

}  // namespace fdm
