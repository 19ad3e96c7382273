#pragma once

#include <cstdint>
#include <vector>

#include "fdm/signal_core.hpp"
#include "fdm/trace.hpp"

namespace fdm {

// Spectral-division settings.
struct DeconvConfig {
    FilterSpec filter{};           // post-division low-pass; cutoff <= 0 disables
    double h_floor = 1e-3;         // |H| validity threshold, relative to max|H|
    enum class FloorPolicy : std::uint8_t { zero = 0, clamp = 1 };
    FloorPolicy policy = FloorPolicy::zero;
    bool causal_filter = false;    // true: time-domain biquad cascade instead
                                   // of the zero-phase spectral mask
};

// Recover the input waveform from a response record: X(k) = Y(k) / H(k) on
// bins where |H| >= h_floor * max|H| (and, when provided, where valid[k] is
// nonzero). Below the floor, `zero` blanks the bin and `clamp` divides by
// h_floor * max|H| carrying H's phase (or blanks bins where H is exactly 0).
// The DC bin follows the same floor rule. The result is low-pass filtered and
// returned in the time domain.
Trace deconvolve(const Trace& y, const Spectrum& h, const DeconvConfig& cfg,
                 const std::vector<std::uint8_t>* valid = nullptr);

struct RecoveryReport {
    std::vector<double> residual;  // recovered - reference, per sample
    double rms = 0.0;              // over the whole record
    double pulse_rms = 0.0;        // samples >= split
    double baseline_rms = 0.0;     // samples < split
};

// Residual statistics of a recovered trace against its reference, split at
// sample index `split` (typically the pre-trigger length).
RecoveryReport recovery_report(const Trace& reference, const Trace& recovered,
                               std::size_t split);

}  // namespace fdm
