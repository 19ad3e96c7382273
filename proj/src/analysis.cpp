#include "fdm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fdm {
namespace {

double baseline_mean(const Trace& t, std::size_t baseline_len) {
    if (baseline_len == 0 || baseline_len > t.size())
        throw std::invalid_argument("baseline window outside the record");
    double s = 0.0;
    for (std::size_t i = 0; i < baseline_len; ++i) s += t.samples[i];
    return s / static_cast<double>(baseline_len);
}

// Baseline-subtracted pulse flipped positive-going.
std::vector<double> flipped(const Trace& t, double base, Polarity pol) {
    std::vector<double> x(t.size());
    const double sgn = (pol == Polarity::negative) ? -1.0 : 1.0;
    for (std::size_t i = 0; i < t.size(); ++i)
        x[i] = sgn * (t.samples[i] - base);
    return x;
}

std::size_t argmax(const std::vector<double>& x, std::size_t lo, std::size_t hi) {
    std::size_t best = lo;
    for (std::size_t i = lo + 1; i < hi; ++i)
        if (x[i] > x[best]) best = i;
    return best;
}

}  // namespace

ChargeResult integrate_charge(const Trace& t, std::size_t gate_start,
                              std::size_t gate_len, double kevee_per_vs,
                              std::size_t baseline_len, Polarity polarity) {
    if (gate_len == 0 || gate_start + gate_len > t.size())
        throw std::invalid_argument("integration gate outside the record");
    ChargeResult out;
    out.baseline_v = baseline_mean(t, baseline_len);
    const double sgn = (polarity == Polarity::negative) ? -1.0 : 1.0;
    double s = 0.0;
    double peak = 0.0;
    std::size_t peak_run = 0, run = 0;
    double prev = 0.0;
    // First pass: find the in-gate extremum of the flipped pulse.
    for (std::size_t i = gate_start; i < gate_start + gate_len; ++i)
        peak = std::max(peak, sgn * (t.samples[i] - out.baseline_v));
    for (std::size_t i = gate_start; i < gate_start + gate_len; ++i) {
        const double x = sgn * (t.samples[i] - out.baseline_v);
        s += x;
        // Railed pulses sit flat at the extremum for several samples.
        if (x == peak && peak > 0.0) {
            run = (i > gate_start && prev == peak) ? run + 1 : 1;
            peak_run = std::max(peak_run, run);
        }
        prev = x;
    }
    out.saturated = peak_run >= 3;
    out.charge_kevee = s * t.dt * kevee_per_vs;
    return out;
}

double amplitude_threshold_v(double threshold_kevee, const PulseShape& shape,
                             double cal_vs_per_kevee, double dt) {
    // Baseline-to-peak height of a noise-free pulse at the threshold energy.
    const double sf = shape.slow_fraction;
    double peak = 0.0;
    const double t_end = 8.0 * shape.rise_sigma + 6.0 * shape.tau_slow;
    for (double t = -8.0 * shape.rise_sigma; t <= t_end; t += dt) {
        const double d = (1.0 - sf) * emg_density(t, shape.tau_fast, shape.rise_sigma) +
                         sf * emg_density(t, shape.tau_slow, shape.rise_sigma);
        peak = std::max(peak, d);
    }
    return threshold_kevee * cal_vs_per_kevee * peak;
}

CfdResult cfd_time(const Trace& t, double fraction, double delay_s,
                   double threshold_v, std::size_t baseline_len,
                   Polarity polarity, bool cubic) {
    CfdResult out;
    const std::size_t n = t.size();
    if (n < 4) return out;
    const double base = baseline_mean(t, baseline_len);
    std::vector<double> x = flipped(t, base, polarity);
    const std::size_t p = argmax(x, 0, n);
    out.peak_v = x[p];
    if (x[p] < threshold_v) return out;

    // Bipolar shaping: fraction * x minus a sub-sample-delayed copy.
    const double d = delay_s / t.dt;
    const auto di = static_cast<std::size_t>(d);
    const double fr = d - static_cast<double>(di);
    std::vector<double> b(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double delayed = 0.0;
        if (i >= di + 1)
            delayed = x[i - di] * (1.0 - fr) + x[i - di - 1] * fr;
        else if (i >= di)
            delayed = x[i - di] * (1.0 - fr);
        b[i] = fraction * x[i] - delayed;
    }

    // The leading edge produces a positive lobe just before the peak; take
    // its first positive-to-negative crossing.
    const std::size_t lo = (p > 25) ? p - 25 : 0;
    const std::size_t hi = std::min(n, p + 25);
    std::size_t m = argmax(b, lo, hi);
    if (b[m] <= 0.0) return out;
    for (std::size_t i = m; i + 1 < hi; ++i) {
        if (b[i] > 0.0 && b[i + 1] <= 0.0) {
            double frac_idx = b[i] / (b[i] - b[i + 1]);
            if (cubic && i >= 1 && i + 2 < n) {
                // Catmull-Rom through the four samples around the crossing,
                // root-solved by bisection inside [0, 1).
                const double y0 = b[i - 1], y1 = b[i], y2 = b[i + 1], y3 = b[i + 2];
                auto eval = [&](double u) {
                    const double a0 = y1;
                    const double a1 = 0.5 * (y2 - y0);
                    const double a2 = y0 - 2.5 * y1 + 2.0 * y2 - 0.5 * y3;
                    const double a3 = 0.5 * (y3 - y0) + 1.5 * (y1 - y2);
                    return a0 + u * (a1 + u * (a2 + u * a3));
                };
                double ulo = 0.0, uhi = 1.0;
                if (eval(0.0) > 0.0 && eval(1.0) <= 0.0) {
                    for (int it = 0; it < 60; ++it) {
                        const double um = 0.5 * (ulo + uhi);
                        (eval(um) > 0.0 ? ulo : uhi) = um;
                    }
                    frac_idx = 0.5 * (ulo + uhi);
                }
            }
            out.t_cross = (static_cast<double>(i) + frac_idx) * t.dt + t.t0;
            out.valid = true;
            return out;
        }
    }
    return out;
}

PsdResult psd_param(const Trace& t, std::size_t short_offset, const AnalysisConfig& cfg) {
    PsdResult out;
    const std::size_t n = t.size();
    const double base = baseline_mean(t, cfg.baseline_len);
    std::vector<double> x = flipped(t, base, cfg.polarity);
    const std::size_t p = argmax(x, 0, n);
    const std::size_t lo = (p > cfg.psd_pre) ? p - cfg.psd_pre : 0;
    const std::size_t long_hi = std::min(n, lo + cfg.psd_long);
    const std::size_t short_hi = std::min(n, std::max(lo + 1, p + short_offset));
    double ql = 0.0, qs = 0.0;
    for (std::size_t i = lo; i < long_hi; ++i) ql += x[i];
    for (std::size_t i = lo; i < short_hi; ++i) qs += x[i];
    const double scale = t.dt * cfg.kevee_per_vs();
    out.q_long = ql * scale;
    out.q_short = qs * scale;
    out.ratio = (out.q_long != 0.0) ? out.q_short / out.q_long : 0.0;
    if (out.q_long < cfg.threshold_kevee)
        out.classified = PsdClass::below_threshold;
    else
        out.classified = (out.ratio <= cfg.psd_ratio_cut) ? PsdClass::neutron
                                                          : PsdClass::gamma;
    return out;
}

FomResult compute_fom(const std::vector<double>& ratios) {
    if (ratios.size() < 100)
        throw FitError("separation figure: too few events (" +
                       std::to_string(ratios.size()) + ")");
    const auto [mn, mx] = std::minmax_element(ratios.begin(), ratios.end());
    if (!(*mx > *mn)) throw FitError("separation figure: degenerate ratio sample");
    Histogram h = Histogram::build(ratios, 200, *mn, *mx);
    Gauss2Fit fit = fit_gauss2(h);

    FomResult out;
    out.n_events = ratios.size();
    out.neutron_peak = fit.lo;  // slower light, lower short/long ratio
    out.gamma_peak = fit.hi;
    const double d = out.gamma_peak.mu - out.neutron_peak.mu;
    const double s = out.gamma_peak.fwhm() + out.neutron_peak.fwhm();
    if (!(s > 0.0)) throw FitError("separation figure: zero total width");
    out.fom = d / s;
    const double var_d = out.gamma_peak.mu_err * out.gamma_peak.mu_err +
                         out.neutron_peak.mu_err * out.neutron_peak.mu_err;
    const double var_s = out.gamma_peak.fwhm_err() * out.gamma_peak.fwhm_err() +
                         out.neutron_peak.fwhm_err() * out.neutron_peak.fwhm_err();
    out.fom_err = std::sqrt(var_d / (s * s) + d * d * var_s / (s * s * s * s));
    return out;
}

GateScan optimize_short_gate(const std::vector<Trace>& traces, const AnalysisConfig& cfg,
                             std::size_t lo, std::size_t hi) {
    if (hi < lo) std::swap(lo, hi);
    GateScan scan;
    scan.best_fom = -1.0;

    // Precompute flipped pulses, peak positions and prefix sums so each
    // offset is a pair of O(1) window sums per trace.
    struct Prep {
        std::vector<double> cum;  // cum[i] = sum of x[0..i)
        std::size_t peak = 0;
        std::size_t n = 0;
    };
    std::vector<Prep> preps;
    preps.reserve(traces.size());
    for (const auto& t : traces) {
        const double base = baseline_mean(t, cfg.baseline_len);
        std::vector<double> x = flipped(t, base, cfg.polarity);
        Prep pr;
        pr.n = x.size();
        pr.peak = argmax(x, 0, x.size());
        pr.cum.assign(x.size() + 1, 0.0);
        for (std::size_t i = 0; i < x.size(); ++i) pr.cum[i + 1] = pr.cum[i] + x[i];
        preps.push_back(std::move(pr));
    }
    const double scale = traces.empty() ? 0.0 : traces.front().dt * cfg.kevee_per_vs();

    for (std::size_t off = lo; off <= hi; ++off) {
        std::vector<double> ratios;
        ratios.reserve(traces.size());
        for (const auto& pr : preps) {
            const std::size_t glo = (pr.peak > cfg.psd_pre) ? pr.peak - cfg.psd_pre : 0;
            const std::size_t lhi = std::min(pr.n, glo + cfg.psd_long);
            const std::size_t shi = std::min(pr.n, std::max(glo + 1, pr.peak + off));
            const double ql = (pr.cum[lhi] - pr.cum[glo]) * scale;
            if (ql < cfg.threshold_kevee) continue;
            const double qs = (pr.cum[shi] - pr.cum[glo]) * scale;
            ratios.push_back(qs / ql);
        }
        scan.offsets.push_back(off);
        double fom = std::numeric_limits<double>::quiet_NaN();
        try {
            FomResult r = compute_fom(ratios);
            fom = r.fom;
            scan.results.push_back(r);
            if (fom > scan.best_fom) {
                scan.best_fom = fom;
                scan.best_offset = off;
            }
        } catch (const FitError&) {
            scan.results.push_back(FomResult{});
        }
        scan.foms.push_back(fom);
    }
    if (!(scan.best_fom > 0.0))
        throw FitError("gate scan: no offset produced a convergent two-peak fit");
    return scan;
}

HistogramFit fit_photopeak(const std::vector<double>& charges_kevee,
                           double window_lo, double window_hi) {
    if (!(window_hi > window_lo))
        throw std::invalid_argument("photopeak window must have positive width");
    const auto bins = static_cast<std::size_t>(
        std::max(10.0, std::round(window_hi - window_lo)));
    HistogramFit out;
    out.window_lo = window_lo;
    out.window_hi = window_hi;
    out.hist = Histogram::build(charges_kevee, bins, window_lo, window_hi);
    double inside = 0.0;
    for (double c : out.hist.counts) inside += c;
    out.n_values = static_cast<std::size_t>(inside);
    out.fit = fit_gauss1(out.hist);
    return out;
}

DifferenceStats difference_stats(const std::vector<double>& a,
                                 const std::vector<double>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("difference stats: length mismatch");
    DifferenceStats out;
    out.diffs.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out.diffs[i] = a[i] - b[i];
    out.raw = moments(out.diffs);
    if (out.raw.n < 2 || out.raw.stddev == 0.0)
        throw FitError("difference stats: degenerate sample");
    const double lo = out.raw.mean - 6.0 * out.raw.stddev;
    const double hi = out.raw.mean + 6.0 * out.raw.stddev;
    out.fitted.window_lo = lo;
    out.fitted.window_hi = hi;
    out.fitted.hist = Histogram::build(out.diffs, 200, lo, hi);
    double inside = 0.0;
    for (double c : out.fitted.hist.counts) inside += c;
    out.fitted.n_values = static_cast<std::size_t>(inside);
    out.fitted.fit = fit_gauss1(out.fitted.hist);
    return out;
}

CoincidenceResult coincidence_delta(const std::vector<CfdResult>& a,
                                    const std::vector<CfdResult>& b,
                                    double pair_window_s) {
    CoincidenceResult out;
    const std::size_t n = std::min(a.size(), b.size());
    out.n_pairs = n;
    std::vector<double> raw;
    raw.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (a[i].valid && b[i].valid) raw.push_back(a[i].t_cross - b[i].t_cross);
    if (raw.empty()) throw FitError("coincidence: no valid pair");

    std::vector<double> med = raw;
    std::nth_element(med.begin(), med.begin() + med.size() / 2, med.end());
    const double center = med[med.size() / 2];
    for (double dt : raw)
        if (std::abs(dt - center) <= pair_window_s) out.dts.push_back(dt);
    out.n_rejected = n - out.dts.size();
    if (out.dts.size() < 2) throw FitError("coincidence: too few accepted pairs");

    Moments m = moments(out.dts);
    if (m.stddev == 0.0) throw FitError("coincidence: degenerate timing sample");
    const double lo = m.mean - 6.0 * m.stddev;
    const double hi = m.mean + 6.0 * m.stddev;
    out.fitted.window_lo = lo;
    out.fitted.window_hi = hi;
    out.fitted.hist = Histogram::build(out.dts, 200, lo, hi);
    double inside = 0.0;
    for (double c : out.fitted.hist.counts) inside += c;
    out.fitted.n_values = static_cast<std::size_t>(inside);
    out.fitted.fit = fit_gauss1(out.fitted.hist);
    return out;
}

}  // namespace fdm
