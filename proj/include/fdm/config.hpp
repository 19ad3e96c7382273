#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fdm/analog_chain.hpp"
#include "fdm/analysis.hpp"
#include "fdm/deconv.hpp"
#include "fdm/detector_sim.hpp"

namespace fdm {

// Invalid or inconsistent configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// White-noise drive used for transfer-function calibration.
struct CalibrationSettings {
    double drive_rms = 0.040;        // V at the resonator input
    double drive_bandwidth_hz = 0.0; // low-pass on the drive; 0 = full band
    std::size_t records = 10000;     // default record count for calibrate runs
};

// Complete run description; serialized as JSON and hashed so that downstream
// stages can verify they were produced under the same settings.
struct RunConfig {
    DigitizerSpec digitizer{};
    std::vector<ResonatorSpec> resonators{};   // one per detector channel
    FanInSpec fanin{};
    PulseShape gamma_shape{};
    PulseShape neutron_shape{};
    std::vector<double> cal_vs_per_kevee{};    // per detector channel
    SourceSpec source{};
    ConvolutionMode chain_mode = ConvolutionMode::truncated;
    CalibrationSettings calibration{};
    DeconvConfig deconv{};
    AnalysisConfig analysis{};                 // cal field is overwritten per channel
    std::vector<double> t0_s{};                // per-channel timing offsets (s),
                                               // subtracted from recovered CFD times
    std::vector<double> timing_bins_kevee{};   // edges for timing-vs-energy bins
    double photopeak_lo = 617.0;
    double photopeak_hi = 707.0;
    std::uint64_t base_seed = 1;

    void validate() const;  // throws ConfigError
    const ResonatorSpec& resonator_by_id(int id) const;
};

RunConfig default_config();

nlohmann::json to_json(const RunConfig& cfg);
RunConfig config_from_json(const nlohmann::json& j);  // strict: unknown keys throw

RunConfig load_config(const std::string& path);
void save_config(const RunConfig& cfg, const std::string& path);

// FNV-1a 64-bit hash of the canonical (sorted-key) JSON dump.
std::uint64_t config_hash(const RunConfig& cfg);
std::string hash_hex(std::uint64_t h);

}  // namespace fdm
