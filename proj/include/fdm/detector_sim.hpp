#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fdm/rng.hpp"
#include "fdm/trace.hpp"

namespace fdm {

struct DigitizerSpec;  // analog_chain.hpp

enum class Species : std::uint8_t { gamma = 0, neutron = 1 };
enum class Polarity : std::int8_t { negative = -1, positive = 1 };

// Scintillator light-pulse model: a Gaussian rise convolved with a fast and a
// slow exponential decay, mixed by slow_fraction.
struct PulseShape {
    double rise_sigma = 3.0e-9;    // s
    double tau_fast = 3.5e-9;      // s
    double tau_slow = 130e-9;      // s
    double slow_fraction = 0.20;   // 0 disables the slow component
    Polarity polarity = Polarity::negative;

    void validate() const;  // throws std::invalid_argument
};

struct EventTruth {
    double energy_kevee = 0.0;
    double t_arrival = 0.0;        // s, relative to record start
    Species species = Species::gamma;
    int detector_id = 0;
    // Realized slow fraction for this event; negative means "use the shape's
    // nominal value". Lets sources model event-to-event scintillation spread.
    double slow_fraction = -1.0;
};

enum class SourceKind : std::uint8_t {
    cs137_gamma = 0,
    na22_coincidence = 1,
    cf252_mixed = 2,
    mono = 3,
};

struct SourceSpec {
    SourceKind kind = SourceKind::cs137_gamma;
    int detector_id = 0;           // target channel for single-detector kinds

    // cs137_gamma: photopeak Gaussian plus a tilted Compton continuum.
    double photopeak_kevee = 662.0;
    double photopeak_sigma = 13.5;
    double peak_fraction = 0.40;
    double continuum_lo = 40.0;
    double continuum_hi = 477.0;

    // na22_coincidence: back-to-back pair, one event per detector 0 and 1.
    double pair_energy_kevee = 511.0;
    double pair_offset_s = 0.0;    // arrival of detector 1 minus detector 0

    // cf252_mixed: uniform-energy mixed field.
    double gamma_fraction = 0.50;
    double energy_lo = 80.0;
    double energy_hi = 620.0;
    // Event-to-event Gaussian spread of the slow fraction (clamped to
    // [0, 0.95]); models intrinsic pulse-shape dispersion.
    double shape_dispersion = 0.02;

    // mono: fixed line, useful for calibration-style checks.
    double mono_energy_kevee = 662.0;
    Species mono_species = Species::gamma;
};

std::string to_string(SourceKind k);
SourceKind source_kind_from_string(const std::string& s);
std::string to_string(Species s);

struct SynthResult {
    Trace trace;            // volts on the digitizer grid, full record length
    bool truncated = false; // pulse tail extends past the record end
};

// Render one event as an anode voltage waveform. The integral of the
// waveform equals -polarity * energy_kevee * cal_vs_per_kevee volt-seconds
// (negative-going pulses carry negative area). Throws on non-finite or
// negative energy.
SynthResult synth_pulse(const EventTruth& e, const PulseShape& shape,
                        const DigitizerSpec& dig, double cal_vs_per_kevee);

// Draw the events of one record. Single-detector kinds yield one event;
// na22_coincidence yields two (detector 0 then detector 1). Arrival times are
// pre_trigger plus a uniform draw over the digitizer's trigger jitter span.
// The shapes supply the per-species nominal slow fraction when the source
// models event-to-event shape dispersion.
std::vector<EventTruth> sample_events(const SourceSpec& src,
                                      const PulseShape& gamma_shape,
                                      const PulseShape& neutron_shape,
                                      const DigitizerSpec& dig, Rng& rng);

// Exponentially modified Gaussian density in 1/s: Gaussian of width sigma
// convolved with a normalized exponential decay of time constant tau.
// Evaluated through the scaled complementary error function so large
// sigma^2/tau^2 does not overflow.
double emg_density(double t, double tau, double sigma);

// exp(x^2) * erfc(x), stable for large positive x.
double erfcx(double x);

}  // namespace fdm
