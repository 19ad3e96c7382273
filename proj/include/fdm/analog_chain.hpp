#pragma once

#include <cstddef>
#include <vector>

#include "fdm/detector_sim.hpp"
#include "fdm/rng.hpp"
#include "fdm/trace.hpp"

namespace fdm {

// Acquisition geometry and ADC quantization.
struct DigitizerSpec {
    double sample_rate = 500e6;     // S/s
    int bits = 14;
    double full_scale_vpp = 2.0;    // +/- full_scale_vpp / 2
    std::size_t record_len = 2000;  // samples per record
    std::size_t pre_trigger = 160;  // nominal arrival sample
    std::size_t trigger_jitter = 72;// uniform arrival spread, samples
    bool quantize = true;           // false: pass volts through unrounded

    double dt() const { return 1.0 / sample_rate; }
    double lsb() const { return full_scale_vpp / static_cast<double>(1ULL << bits); }
    void validate() const;  // throws std::invalid_argument
};

// Underdamped single-pole resonator; its impulse response is
// h(n) = gain * exp(-alpha n dt) * sin(2 pi f0 n dt), alpha = pi f0 / q.
struct ResonatorSpec {
    double f0_hz = 7.0e6;
    double q_factor = 10.0;
    double gain = 0.3;
    int id = 0;

    double alpha() const;  // 1/s
    // Enforces the operating regime: ringdown must fit well inside a record
    // (1/e decay < 2.5 us) and the bandwidth f0/q must stay below 2 MHz.
    void validate(const DigitizerSpec& dig) const;
};

// Summing amplifier between resonators and the digitizer.
struct FanInSpec {
    double gain = 2.0;
    int n_inputs = 4;
    double noise_rms = 2.44140625e-4;  // V, additive white Gaussian at the output
};

Trace resonator_impulse_response(const ResonatorSpec& res, const DigitizerSpec& dig);

// How the resonator convolution treats the record boundary. `truncated`
// drops the ring-down past the end (a real finite acquisition); `circular`
// wraps it, which makes bin-wise spectral division exact.
enum class ConvolutionMode : std::uint8_t { truncated = 0, circular = 1 };

// Resonator + fan-in path: convolve the anode waveform with the resonator
// response, apply the fan-in gain, and add output-referred noise (rng may be
// null for a noiseless path).
Trace front_end(const Trace& anode, const ResonatorSpec& res, const FanInSpec& fanin,
                Rng* noise_rng, ConvolutionMode mode = ConvolutionMode::truncated);

struct DigitizeResult {
    Trace trace;
    std::size_t clipped = 0;  // samples that hit a rail
};

// Clip to the full-scale range and round to the nearest code. Idempotent:
// digitizing an already-digitized trace changes nothing. When
// dig.quantize is false only the clipping is applied.
DigitizeResult digitize(const Trace& v, const DigitizerSpec& dig);

struct SimulatedRecord {
    Trace anode;               // digitized detector waveform
    Trace fanin;               // digitized sinusoid waveform
    std::vector<EventTruth> truth;
    std::size_t clipped_anode = 0;
    std::size_t clipped_fanin = 0;
    bool multi_detector = false;  // events span more than one detector id
    bool truncated = false;       // some pulse tail ran past the record end
};

// Full single-channel signal path for one record: synthesize every event that
// targets res.id, pass the summed anode waveform through the front end, and
// digitize both views. Events for other detectors are ignored here (the
// record is flagged multi_detector so callers can route them).
SimulatedRecord simulate_record(const std::vector<EventTruth>& events,
                                const PulseShape& gamma_shape,
                                const PulseShape& neutron_shape,
                                double cal_vs_per_kevee,
                                const ResonatorSpec& res, const FanInSpec& fanin,
                                const DigitizerSpec& dig, Rng& noise_rng,
                                ConvolutionMode mode = ConvolutionMode::truncated);

}  // namespace fdm
