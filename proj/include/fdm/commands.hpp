#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fdm/config.hpp"
#include "fdm/record_file.hpp"

namespace fdm {

// Implementations of the CLI subcommands. Each throws ConfigError,
// FormatError, or FitError on failure; the CLI maps those to exit codes
// 2 / 3 / 4 and returns 0 otherwise.

// Write the default configuration as JSON.
void cmd_init(const std::string& out_path);

// Generate event records from cfg.source. With drive=true, generate
// calibration records instead: white-noise drive and chain response for the
// given channel (truth-free). seed overrides cfg.base_seed when nonzero.
void cmd_simulate(const RunConfig& cfg, std::size_t n_records, std::uint64_t seed,
                  const std::string& out_path, bool drive = false, int channel = 0);

// Estimate the chain frequency response from a drive/response record file.
void cmd_calibrate(const RunConfig& cfg, const std::string& records_path,
                   const std::string& out_path);

// Deconvolve every fan-in channel using the matching calibration file and
// append recovered channels. Refuses on configuration-hash mismatch unless
// force is set.
void cmd_recover(const RunConfig& cfg, const std::string& records_path,
                 const std::vector<std::string>& cal_paths,
                 const std::string& out_path, bool force = false);

// Run one (or "all") of the analysis stages on a recovered record file and
// write CSV tables plus a JSON summary into out_dir. Stages: charge,
// spectrum, timing, psd, coincidence, reconstruction.
void cmd_analyze(const RunConfig& cfg, const std::string& records_path,
                 const std::string& which, const std::string& out_dir);

// Merge the per-stage JSON summaries found in dir into a single report.
void cmd_report(const std::string& dir, const std::string& out_path);

// Shared helpers (also used by tests).
RecordSet simulate_events(const RunConfig& cfg, std::size_t n_records,
                          std::uint64_t seed);
RecordSet simulate_drive(const RunConfig& cfg, std::size_t n_records,
                         std::uint64_t seed, int channel);
CalibrationData calibrate_from_records(const RecordSet& rs, std::uint64_t cfg_hash_expect);
void recover_in_place(RecordSet& rs, const std::vector<CalibrationData>& cals,
                      const RunConfig& cfg);

}  // namespace fdm
