#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fdm/detector_sim.hpp"
#include "fdm/trace.hpp"

namespace fdm {

// Unreadable, wrong-magic, wrong-version, or hash-mismatched artifact files
// (CLI exit code 3).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// On-disk channel encoding: i16 stores round(v / scale) as int16 codes,
// f32 stores raw float volts (scale unused).
struct ChannelDesc {
    std::string label;
    enum class Dtype : std::uint8_t { i16 = 0, f32 = 1 };
    Dtype dtype = Dtype::i16;
    double scale = 1.0;  // volts per code for i16
};

struct Record {
    std::vector<std::vector<double>> chans;  // per channel, record_len samples
    std::vector<EventTruth> truth;
    std::vector<std::uint32_t> clipped;      // per channel
    std::uint8_t flags = 0;                  // bit 0: multi-detector,
                                             // bit 1: truncated pulse tail
};

// A batch of fixed-length multi-channel records plus provenance.
struct RecordSet {
    double dt = 2e-9;
    std::size_t record_len = 0;
    std::uint64_t cfg_hash = 0;
    std::uint64_t seed = 0;
    std::vector<ChannelDesc> channels;
    std::vector<Record> records;

    int channel_index(const std::string& label) const;  // -1 if absent
    Trace trace(std::size_t record, std::size_t channel) const;
};

void write_records(const std::string& path, const RecordSet& rs);
RecordSet read_records(const std::string& path);

// Estimated frequency response of one readout chain.
struct CalibrationData {
    double df = 0.0;
    int resonator_id = 0;
    std::uint64_t records_averaged = 0;
    std::uint64_t cfg_hash = 0;
    Spectrum h;
    std::vector<std::uint8_t> valid;
};

void write_calibration(const std::string& path, const CalibrationData& cal);
CalibrationData read_calibration(const std::string& path);

}  // namespace fdm
