#include "fdm/detector_sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fdm/analog_chain.hpp"

namespace fdm {

void PulseShape::validate() const {
    if (!(rise_sigma > 0) || !(tau_fast > 0) || !(tau_slow > 0))
        throw std::invalid_argument("pulse shape time constants must be positive");
    if (!(slow_fraction >= 0.0) || !(slow_fraction < 1.0))
        throw std::invalid_argument("slow_fraction must lie in [0, 1)");
    if (tau_slow < tau_fast)
        throw std::invalid_argument("tau_slow must not be shorter than tau_fast");
}

double erfcx(double x) {
    if (x < 0.0) {
        // erfc(x) <= 2 here and x^2 stays small for every caller below
        // (the large-|negative-u| branch never reaches this function).
        return std::exp(x * x) * std::erfc(x);
    }
    if (x <= 12.0) return std::exp(x * x) * std::erfc(x);
    // Asymptotic series 1/(x sqrt(pi)) * sum (-1)^k (2k-1)!! / (2x^2)^k;
    // truncation error < 1e-9 relative for x > 12.
    const double ix2 = 1.0 / (x * x);
    double s = 1.0 + ix2 * (-0.5 + ix2 * (0.75 + ix2 * (-1.875 +
               ix2 * (6.5625 + ix2 * -29.53125))));
    return s / (x * 1.7724538509055160273);
}

double emg_density(double t, double tau, double sigma) {
    const double u = (sigma / tau - t / sigma) * 0.70710678118654752440;
    if (u >= 0.0) {
        // Leading edge: erfcx keeps exp(sigma^2/2tau^2) out of the product.
        const double g = t / sigma;
        return 0.5 / tau * erfcx(u) * std::exp(-0.5 * g * g);
    }
    // Tail: erfc(u) is O(1), the exponent is negative once t > sigma^2/tau.
    const double st = sigma / tau;
    return 0.5 / tau * std::exp(0.5 * st * st - t / tau) * std::erfc(u);
}

namespace {

// Fill dens[i] += weight * emg(t_i - t_arr; tau, sigma) for the whole record.
// Far into the tail the density is a pure exponential, so after the erfc
// saturates (u < -6) each sample is the previous one times exp(-dt/tau).
void accumulate_emg(std::vector<double>& dens, double weight, double t_arr,
                    double tau, double sigma, double dt) {
    if (weight == 0.0) return;
    const std::size_t n = dens.size();
    const double t_start = t_arr - 8.0 * sigma;
    std::size_t i0 = 0;
    if (t_start > 0) i0 = std::min<std::size_t>(n, static_cast<std::size_t>(t_start / dt));
    const double decay = std::exp(-dt / tau);
    double prev = 0.0;
    bool tail = false;
    for (std::size_t i = i0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt - t_arr;
        double v;
        if (tail) {
            v = prev * decay;
        } else {
            const double u = (sigma / tau - t / sigma) * 0.70710678118654752440;
            v = emg_density(t, tau, sigma);
            if (u < -6.0) tail = true;
        }
        prev = v;
        dens[i] += weight * v;
    }
}

}  // namespace

SynthResult synth_pulse(const EventTruth& e, const PulseShape& shape,
                        const DigitizerSpec& dig, double cal_vs_per_kevee) {
    shape.validate();
    if (!std::isfinite(e.energy_kevee) || e.energy_kevee < 0.0)
        throw std::invalid_argument("event energy must be finite and non-negative");
    if (!(cal_vs_per_kevee > 0.0))
        throw std::invalid_argument("calibration scale must be positive");

    double sf = shape.slow_fraction;
    if (e.slow_fraction >= 0.0) sf = std::min(e.slow_fraction, 0.95);

    SynthResult out;
    out.trace.dt = dig.dt();
    out.trace.t0 = 0.0;
    out.trace.samples.assign(dig.record_len, 0.0);
    out.truncated =
        e.t_arrival + 3.0 * shape.tau_slow > static_cast<double>(dig.record_len) * dig.dt();

    if (e.energy_kevee == 0.0) return out;

    const double area = e.energy_kevee * cal_vs_per_kevee;  // volt-seconds
    accumulate_emg(out.trace.samples, (1.0 - sf), e.t_arrival, shape.tau_fast,
                   shape.rise_sigma, out.trace.dt);
    if (sf > 0.0)
        accumulate_emg(out.trace.samples, sf, e.t_arrival, shape.tau_slow,
                       shape.rise_sigma, out.trace.dt);
    const double scale = (shape.polarity == Polarity::negative ? -area : area);
    for (auto& v : out.trace.samples) v *= scale;
    return out;
}

namespace {

double draw_arrival(const DigitizerSpec& dig, Rng& rng) {
    const double base = static_cast<double>(dig.pre_trigger) * dig.dt();
    return base + rng.uniform() * static_cast<double>(dig.trigger_jitter) * dig.dt();
}

// Compton-continuum energy: linear density rising 1:2 across [lo, hi].
double draw_continuum(double lo, double hi, Rng& rng) {
    const double x = std::sqrt(1.0 + 3.0 * rng.uniform()) - 1.0;
    return lo + (hi - lo) * x;
}

}  // namespace

std::vector<EventTruth> sample_events(const SourceSpec& src,
                                      const PulseShape& gamma_shape,
                                      const PulseShape& neutron_shape,
                                      const DigitizerSpec& dig, Rng& rng) {
    std::vector<EventTruth> out;
    switch (src.kind) {
        case SourceKind::cs137_gamma: {
            EventTruth e;
            e.detector_id = src.detector_id;
            e.species = Species::gamma;
            e.t_arrival = draw_arrival(dig, rng);
            if (rng.uniform() < src.peak_fraction) {
                double en;
                do {
                    en = rng.normal(src.photopeak_kevee, src.photopeak_sigma);
                } while (en <= 0.0);
                e.energy_kevee = en;
            } else {
                e.energy_kevee = draw_continuum(src.continuum_lo, src.continuum_hi, rng);
            }
            out.push_back(e);
            break;
        }
        case SourceKind::na22_coincidence: {
            const double t = draw_arrival(dig, rng);
            EventTruth a;
            a.detector_id = 0;
            a.species = Species::gamma;
            a.energy_kevee = src.pair_energy_kevee;
            a.t_arrival = t;
            EventTruth b = a;
            b.detector_id = 1;
            b.t_arrival = t + src.pair_offset_s;
            out.push_back(a);
            out.push_back(b);
            break;
        }
        case SourceKind::cf252_mixed: {
            EventTruth e;
            e.detector_id = src.detector_id;
            e.t_arrival = draw_arrival(dig, rng);
            e.species = (rng.uniform() < src.gamma_fraction) ? Species::gamma
                                                             : Species::neutron;
            e.energy_kevee = rng.uniform(src.energy_lo, src.energy_hi);
            const double nominal = (e.species == Species::gamma)
                                       ? gamma_shape.slow_fraction
                                       : neutron_shape.slow_fraction;
            if (src.shape_dispersion > 0.0) {
                e.slow_fraction = std::clamp(
                    rng.normal(nominal, src.shape_dispersion), 0.0, 0.95);
            }
            out.push_back(e);
            break;
        }
        case SourceKind::mono: {
            EventTruth e;
            e.detector_id = src.detector_id;
            e.species = src.mono_species;
            e.energy_kevee = src.mono_energy_kevee;
            e.t_arrival = draw_arrival(dig, rng);
            out.push_back(e);
            break;
        }
    }
    return out;
}

std::string to_string(SourceKind k) {
    switch (k) {
        case SourceKind::cs137_gamma: return "cs137_gamma";
        case SourceKind::na22_coincidence: return "na22_coincidence";
        case SourceKind::cf252_mixed: return "cf252_mixed";
        case SourceKind::mono: return "mono";
    }
    return "cs137_gamma";
}

SourceKind source_kind_from_string(const std::string& s) {
    if (s == "cs137_gamma") return SourceKind::cs137_gamma;
    if (s == "na22_coincidence") return SourceKind::na22_coincidence;
    if (s == "cf252_mixed") return SourceKind::cf252_mixed;
    if (s == "mono") return SourceKind::mono;
    throw std::invalid_argument("unknown source kind: " + s);
}

std::string to_string(Species s) {
    return s == Species::gamma ? "gamma" : "neutron";
}

}  // namespace fdm
