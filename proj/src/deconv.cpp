#include "fdm/deconv.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fdm/fft.hpp"

namespace fdm {
namespace {

// Cascaded-biquad Butterworth low-pass (bilinear transform), used when a
// causal time-domain filter is requested instead of the zero-phase mask.
struct Biquad {
    double b0, b1, b2, a1, a2;
};

std::vector<Biquad> butterworth_sections(int order, double fc, double fs) {
    std::vector<Biquad> out;
    if (order < 1) return out;
    const double w0 = 2.0 * M_PI * fc / fs;
    const double cw = std::cos(w0), sw = std::sin(w0);
    // Second-order sections from the Butterworth pole angles.
    for (int k = 0; k < order / 2; ++k) {
        const double q = 1.0 / (2.0 * std::cos(M_PI * (2.0 * k + 1.0) / (2.0 * order)));
        const double alpha = sw / (2.0 * q);
        const double a0 = 1.0 + alpha;
        out.push_back({(1.0 - cw) / 2.0 / a0, (1.0 - cw) / a0, (1.0 - cw) / 2.0 / a0,
                       -2.0 * cw / a0, (1.0 - alpha) / a0});
    }
    if (order % 2) {
        // First-order section for odd orders.
        const double t = std::tan(0.5 * w0);
        const double a0 = 1.0 + t;
        out.push_back({t / a0, t / a0, 0.0, (t - 1.0) / a0, 0.0});
    }
    return out;
}

void apply_biquads(std::vector<double>& x, const std::vector<Biquad>& sections) {
    for (const auto& s : sections) {
        double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
        for (auto& v : x) {
            const double y = s.b0 * v + s.b1 * x1 + s.b2 * x2 - s.a1 * y1 - s.a2 * y2;
            x2 = x1;
            x1 = v;
            y2 = y1;
            y1 = y;
            v = y;
        }
    }
}

}  // namespace

Trace deconvolve(const Trace& y, const Spectrum& h, const DeconvConfig& cfg,
                 const std::vector<std::uint8_t>* valid) {
    if (y.size() != h.size())
        throw std::invalid_argument("record length does not match the response spectrum");
    if (valid && valid->size() != h.size())
        throw std::invalid_argument("validity mask length mismatch");
    if (!(cfg.h_floor > 0.0))
        throw std::invalid_argument("h_floor must be positive");

    double h_max = 0.0;
    for (const auto& v : h.bins) h_max = std::max(h_max, std::abs(v));
    if (h_max == 0.0) throw std::invalid_argument("response spectrum is identically zero");
    const double floor_abs = cfg.h_floor * h_max;

    Spectrum x;
    x.df = h.df;
    x.bins.assign(h.size(), 0.0);
    Spectrum sy = dft(y);
    for (std::size_t k = 0; k < h.size(); ++k) {
        if (valid && !(*valid)[k]) continue;  // no drive power: nothing to divide by
        const std::complex<double> hk = h.bins[k];
        const double mag = std::abs(hk);
        if (mag >= floor_abs) {
            x.bins[k] = sy.bins[k] / hk;
        } else if (cfg.policy == DeconvConfig::FloorPolicy::clamp && mag > 0.0) {
            // Divide by the floored magnitude but keep the measured phase.
            x.bins[k] = sy.bins[k] / (floor_abs * (hk / mag));
        }
        // zero policy (or exactly-zero H): bin stays blanked
    }

    if (!cfg.causal_filter) {
        apply_lowpass(x, cfg.filter);
        return idft(x);
    }
    Trace out = idft(x);
    if (cfg.filter.cutoff_hz > 0.0) {
        auto sections = butterworth_sections(cfg.filter.order, cfg.filter.cutoff_hz,
                                             1.0 / out.dt);
        apply_biquads(out.samples, sections);
    }
    return out;
}

RecoveryReport recovery_report(const Trace& reference, const Trace& recovered,
                               std::size_t split) {
    if (reference.size() != recovered.size())
        throw std::invalid_argument("trace length mismatch in recovery report");
    const std::size_t n = reference.size();
    RecoveryReport rep;
    rep.residual.resize(n);
    double s_all = 0, s_pulse = 0, s_base = 0;
    std::size_t n_pulse = 0, n_base = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = recovered.samples[i] - reference.samples[i];
        rep.residual[i] = d;
        s_all += d * d;
        if (i < split) {
            s_base += d * d;
            ++n_base;
        } else {
            s_pulse += d * d;
            ++n_pulse;
        }
    }
    rep.rms = n ? std::sqrt(s_all / static_cast<double>(n)) : 0.0;
    rep.pulse_rms = n_pulse ? std::sqrt(s_pulse / static_cast<double>(n_pulse)) : 0.0;
    rep.baseline_rms = n_base ? std::sqrt(s_base / static_cast<double>(n_base)) : 0.0;
    return rep;
}

}  // namespace fdm
