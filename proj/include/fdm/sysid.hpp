#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fdm/trace.hpp"

namespace fdm {

// Transfer-function estimate from drive/response record pairs.
struct ImpulseEstimate {
    Spectrum h;                       // frequency response, estimated
    std::vector<std::uint8_t> valid;  // per-bin: drive power above threshold
    std::size_t records_averaged = 0;
    double sxx_max = 0.0;             // peak |S_xx|, for reference
};

// Estimate H(k) = S_yx(k) / S_xx(k) from (drive, response) record pairs.
// Per record the circular correlations r_yx and r_xx are formed, averaged in
// the time domain across records, and transformed once at the end. Bins with
// |S_xx| below 1e-6 * max|S_xx| are marked invalid and H is set to zero
// there. Throws std::invalid_argument on empty input or mismatched lengths.
ImpulseEstimate estimate_impulse_response(
    const std::vector<std::pair<Trace, Trace>>& drive_response_pairs);

struct WhitenReport {
    double peak = 0.0;             // averaged autocorrelation at lag 0
    double sidelobe_rms = 0.0;     // rms of normalized off-peak lags
    double sidelobe_max = 0.0;     // worst normalized off-peak lag
    double bound = 0.0;            // 3 / sqrt(records * length)
    double spectral_flatness = 0.0;// std/mean of |S_xx| over nonzero bins
    bool pass = false;
};

// Diagnose whether a drive ensemble is white enough for the spectral ratio:
// averages the raw autocorrelation across records and compares the rms
// normalized sidelobe level against 3/sqrt(M*N). Strongly periodic or
// DC-dominated drives fail by orders of magnitude.
WhitenReport whiten_check(const std::vector<Trace>& drive_records);

}  // namespace fdm
