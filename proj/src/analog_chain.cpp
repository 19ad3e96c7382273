#include "fdm/analog_chain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fdm/fft.hpp"
#include "fdm/signal_core.hpp"

namespace fdm {

void DigitizerSpec::validate() const {
    if (!(sample_rate > 0)) throw std::invalid_argument("sample_rate must be positive");
    if (bits < 2 || bits > 24) throw std::invalid_argument("bits out of range");
    if (!(full_scale_vpp > 0)) throw std::invalid_argument("full_scale_vpp must be positive");
    if (record_len < 8) throw std::invalid_argument("record_len too short");
    if (pre_trigger + trigger_jitter >= record_len)
        throw std::invalid_argument("trigger window exceeds the record");
}

double ResonatorSpec::alpha() const { return M_PI * f0_hz / q_factor; }

void ResonatorSpec::validate(const DigitizerSpec& dig) const {
    if (!(f0_hz > 0) || !(q_factor > 0) || !(gain > 0))
        throw std::invalid_argument("resonator parameters must be positive");
    if (f0_hz >= 0.5 * dig.sample_rate)
        throw std::invalid_argument("resonator frequency above Nyquist");
    // The ring-down must die inside a record and the line must stay narrow
    // enough that neighboring carriers can share the band.
    const double decay_1e = 1.0 / alpha();
    if (decay_1e >= 2.5e-6)
        throw std::invalid_argument("resonator 1/e decay must be below 2.5 us");
    if (f0_hz / q_factor >= 2e6)
        throw std::invalid_argument("resonator bandwidth f0/q must be below 2 MHz");
}

Trace resonator_impulse_response(const ResonatorSpec& res, const DigitizerSpec& dig) {
    res.validate(dig);
    Trace h;
    h.dt = dig.dt();
    h.t0 = 0.0;
    h.samples.resize(dig.record_len);
    const double a = res.alpha();
    const double w = 2.0 * M_PI * res.f0_hz;
    for (std::size_t n = 0; n < h.samples.size(); ++n) {
        const double t = static_cast<double>(n) * h.dt;
        h.samples[n] = res.gain * std::exp(-a * t) * std::sin(w * t);
    }
    return h;
}

Trace front_end(const Trace& anode, const ResonatorSpec& res, const FanInSpec& fanin,
                Rng* noise_rng, ConvolutionMode mode) {
    DigitizerSpec probe;  // carries just the grid of the incoming trace
    probe.sample_rate = 1.0 / anode.dt;
    probe.record_len = anode.size();
    probe.pre_trigger = 0;
    probe.trigger_jitter = 0;
    Trace h = resonator_impulse_response(res, probe);
    Trace y;
    if (mode == ConvolutionMode::truncated) {
        y = convolve(anode, h);
    } else {
        // Periodic steady state: multiply full-length spectra bin by bin.
        Spectrum sx = dft(anode);
        Spectrum sh = dft(h);
        for (std::size_t k = 0; k < sx.bins.size(); ++k) sx.bins[k] *= sh.bins[k];
        y = idft(sx);
        y.t0 = anode.t0;
    }
    for (auto& v : y.samples) v *= fanin.gain;
    if (noise_rng && fanin.noise_rms > 0.0)
        for (auto& v : y.samples) v += noise_rng->normal(0.0, fanin.noise_rms);
    return y;
}

DigitizeResult digitize(const Trace& v, const DigitizerSpec& dig) {
    dig.validate();
    DigitizeResult out;
    out.trace.dt = v.dt;
    out.trace.t0 = v.t0;
    out.trace.samples.resize(v.size());
    const double half = 0.5 * dig.full_scale_vpp;
    const double lsb = dig.lsb();
    const long code_min = -(1L << (dig.bits - 1));
    const long code_max = (1L << (dig.bits - 1)) - 1;
    for (std::size_t i = 0; i < v.size(); ++i) {
        double x = v.samples[i];
        if (x <= -half || x >= half) ++out.clipped;
        if (!dig.quantize) {
            out.trace.samples[i] = std::clamp(x, -half, half);
            continue;
        }
        long code = std::lround(std::clamp(x, -half, half) / lsb);
        code = std::clamp(code, code_min, code_max);
        out.trace.samples[i] = static_cast<double>(code) * lsb;
    }
    return out;
}

SimulatedRecord simulate_record(const std::vector<EventTruth>& events,
                                const PulseShape& gamma_shape,
                                const PulseShape& neutron_shape,
                                double cal_vs_per_kevee,
                                const ResonatorSpec& res, const FanInSpec& fanin,
                                const DigitizerSpec& dig, Rng& noise_rng,
                                ConvolutionMode mode) {
    dig.validate();
    res.validate(dig);

    Trace anode;
    anode.dt = dig.dt();
    anode.samples.assign(dig.record_len, 0.0);

    SimulatedRecord rec;
    rec.truth = events;
    int first_det = events.empty() ? res.id : events.front().detector_id;
    for (const auto& e : events) {
        if (e.detector_id != first_det) rec.multi_detector = true;
        if (e.detector_id != res.id) continue;
        const PulseShape& shape =
            (e.species == Species::gamma) ? gamma_shape : neutron_shape;
        SynthResult s = synth_pulse(e, shape, dig, cal_vs_per_kevee);
        rec.truncated = rec.truncated || s.truncated;
        for (std::size_t i = 0; i < anode.samples.size(); ++i)
            anode.samples[i] += s.trace.samples[i];
    }

    Trace fanin_v = front_end(anode, res, fanin, &noise_rng, mode);

    DigitizeResult da = digitize(anode, dig);
    DigitizeResult df = digitize(fanin_v, dig);
    rec.anode = std::move(da.trace);
    rec.fanin = std::move(df.trace);
    rec.clipped_anode = da.clipped;
    rec.clipped_fanin = df.clipped;
    return rec;
}

}  // namespace fdm
