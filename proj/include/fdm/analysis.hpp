#pragma once

#include <cstddef>
#include <vector>

#include "fdm/detector_sim.hpp"
#include "fdm/fitting.hpp"
#include "fdm/trace.hpp"

namespace fdm {

// Pulse-processing settings shared by the charge / timing / shape stages.
// Charges are reported in keVee via the reciprocal of the synthesis scale
// (keVee per volt-second = 1 / cal_vs_per_kevee).
struct AnalysisConfig {
    std::size_t gate_start = 150;      // integration gate start, samples
    std::size_t gate_len = 300;        // integration gate length, samples
    std::size_t baseline_len = 152;    // leading samples averaged for baseline
    double cal_vs_per_kevee = 5.0e-12; // volt-seconds per keVee
    Polarity polarity = Polarity::negative;

    double cfd_fraction = 1.0;
    double cfd_delay_s = 7.2e-9;
    double threshold_kevee = 80.0;     // amplitude threshold, keVee-equivalent
    bool cfd_cubic = false;            // cubic zero-crossing refinement

    std::size_t psd_long = 120;        // long-gate length, samples
    std::size_t psd_pre = 6;           // gate lead-in before the peak, samples
    std::size_t psd_offset = 12;       // short-gate stop offset past the peak
    double psd_ratio_cut = 0.83;       // gamma/neutron decision boundary

    double kevee_per_vs() const { return 1.0 / cal_vs_per_kevee; }
};

struct ChargeResult {
    double charge_kevee = 0.0;
    double baseline_v = 0.0;
    bool saturated = false;  // any in-gate sample at the synthesis rails
};

// Baseline-corrected gate integral. The baseline is the mean of the first
// baseline_len samples; the gate is [gate_start, gate_start + gate_len).
// Negative-polarity pulses integrate to positive charge. Throws
// std::invalid_argument when the gate falls outside the record.
ChargeResult integrate_charge(const Trace& t, std::size_t gate_start,
                              std::size_t gate_len, double kevee_per_vs,
                              std::size_t baseline_len,
                              Polarity polarity = Polarity::negative);

struct CfdResult {
    double t_cross = 0.0;   // s, interpolated zero crossing
    double peak_v = 0.0;    // baseline-subtracted pulse height (positive)
    bool valid = false;     // above threshold and crossing found
};

// Digital constant-fraction discriminator: b(n) = fraction * v(n) minus a
// delayed copy of v (linear sub-sample delay), with the pulse flipped
// positive first. The reported time is the first positive-to-negative zero
// crossing of b after its maximum near the pulse peak, refined by linear (or
// optionally cubic) interpolation, plus the trace's t0.
CfdResult cfd_time(const Trace& t, double fraction, double delay_s,
                   double threshold_v, std::size_t baseline_len,
                   Polarity polarity = Polarity::negative, bool cubic = false);

enum class PsdClass : std::uint8_t { gamma = 0, neutron = 1, below_threshold = 2 };

struct PsdResult {
    double q_long = 0.0;    // keVee
    double q_short = 0.0;   // keVee
    double ratio = 0.0;     // q_short / q_long
    PsdClass classified = PsdClass::below_threshold;
};

// Charge-comparison pulse-shape parameter. Both gates open psd_pre samples
// before the pulse peak; the long gate runs psd_long samples, the short gate
// closes short_offset samples past the peak. Events with q_long below
// threshold_kevee are below_threshold; otherwise the ratio against ratio_cut
// labels the event (slower scintillation -> lower ratio -> neutron).
PsdResult psd_param(const Trace& t, std::size_t short_offset, const AnalysisConfig& cfg);

struct FomResult {
    double fom = 0.0;
    double fom_err = 0.0;        // propagated from the fit uncertainties
    GaussParams gamma_peak;      // higher-ratio component
    GaussParams neutron_peak;    // lower-ratio component
    std::size_t n_events = 0;
};

// Separation figure of merit of a mixed ratio sample:
// (mu_g - mu_n) / (fwhm_g + fwhm_n), from a two-Gaussian fit to a 200-bin
// histogram over the sample range. Throws FitError on non-convergence.
FomResult compute_fom(const std::vector<double>& ratios);

struct GateScan {
    std::size_t best_offset = 0;
    double best_fom = 0.0;
    std::vector<std::size_t> offsets;
    std::vector<double> foms;        // NaN where the fit failed
    std::vector<FomResult> results;  // entry per successful offset, aligned with foms
};

// Exhaustive short-gate scan: evaluate compute_fom on the PSD ratios of every
// trace for each short-gate offset in [lo, hi] and keep the best. Offsets
// whose fit fails are skipped (recorded as NaN).
GateScan optimize_short_gate(const std::vector<Trace>& traces, const AnalysisConfig& cfg,
                             std::size_t lo = 0, std::size_t hi = 20);

struct HistogramFit {
    Histogram hist;
    GaussFit fit;
    double window_lo = 0.0;
    double window_hi = 0.0;
    std::size_t n_values = 0;   // values inside the histogram range
};

// Gaussian fit of the spectrum inside [window_lo, window_hi) with ~1 keVee
// bins; used for photopeak characterization.
HistogramFit fit_photopeak(const std::vector<double>& charges_kevee,
                           double window_lo, double window_hi);

// Element-wise differences a[i] - b[i], histogrammed over mean +/- 6 sigma
// (200 bins) and Gaussian-fitted; also reports raw sample moments.
struct DifferenceStats {
    std::vector<double> diffs;
    Moments raw;
    HistogramFit fitted;
};
DifferenceStats difference_stats(const std::vector<double>& a,
                                 const std::vector<double>& b);

// Pair up per-record CFD times from two channels, histogram dt = t_a - t_b
// for pairs that are both valid and within pair_window_s of the sample
// median, and fit a Gaussian. Invalid or out-of-window pairs are counted.
struct CoincidenceResult {
    HistogramFit fitted;
    std::vector<double> dts;     // accepted pairs, seconds
    std::size_t n_pairs = 0;     // records offered
    std::size_t n_rejected = 0;  // invalid or outside the pairing window
};
CoincidenceResult coincidence_delta(const std::vector<CfdResult>& a,
                                    const std::vector<CfdResult>& b,
                                    double pair_window_s = 50e-9);

// Amplitude threshold (volts) equivalent to threshold_kevee for a given
// shape: the baseline-to-peak height of a noise-free pulse of that energy.
double amplitude_threshold_v(double threshold_kevee, const PulseShape& shape,
                             double cal_vs_per_kevee, double dt);

}  // namespace fdm
