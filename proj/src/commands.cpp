#include "fdm/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "fdm/analysis.hpp"
#include "fdm/deconv.hpp"
#include "fdm/fft.hpp"
#include "fdm/signal_core.hpp"
#include "fdm/sysid.hpp"

namespace fdm {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::uint8_t kFlagMultiDetector = 1;
constexpr std::uint8_t kFlagTruncated = 2;

std::string chan_name(const char* prefix, int id) {
    return std::string(prefix) + "_" + std::to_string(id);
}

ChannelDesc digitized_channel(const std::string& label, const DigitizerSpec& dig) {
    ChannelDesc ch;
    ch.label = label;
    // Unquantized traces do not fit an integer grid; store them as f32.
    ch.dtype = dig.quantize ? ChannelDesc::Dtype::i16 : ChannelDesc::Dtype::f32;
    ch.scale = dig.lsb();
    return ch;
}

// Detector ids that have an anode channel in the set, sorted.
std::vector<int> detector_ids(const RecordSet& rs) {
    std::vector<int> ids;
    for (const auto& ch : rs.channels) {
        if (ch.label.rfind("anode_", 0) == 0)
            ids.push_back(std::stoi(ch.label.substr(6)));
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

void require_hash(const RunConfig& cfg, std::uint64_t file_hash, const std::string& what) {
    if (config_hash(cfg) != file_hash)
        throw FormatError(what + " was produced under a different configuration "
                          "(hash " + hash_hex(file_hash) + " vs " +
                          hash_hex(config_hash(cfg)) + ")");
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw FormatError("cannot write: " + p.string());
    out << std::setprecision(12);
    return out;
}

double truth_energy(const Record& rec, int det) {
    for (const auto& e : rec.truth)
        if (e.detector_id == det) return e.energy_kevee;
    return 0.0;
}

const EventTruth* truth_event(const Record& rec, int det) {
    for (const auto& e : rec.truth)
        if (e.detector_id == det) return &e;
    return nullptr;
}

}  // namespace

RecordSet simulate_events(const RunConfig& cfg, std::size_t n_records,
                          std::uint64_t seed) {
    cfg.validate();
    const bool pair_mode = cfg.source.kind == SourceKind::na22_coincidence;

    std::vector<int> dets;
    if (pair_mode) {
        dets = {0, 1};
        if (cfg.resonators.size() < 2)
            throw ConfigError("coincidence source needs two configured resonators");
    } else {
        dets = {cfg.source.detector_id};
    }

    RecordSet rs;
    rs.dt = cfg.digitizer.dt();
    rs.record_len = cfg.digitizer.record_len;
    rs.cfg_hash = config_hash(cfg);
    rs.seed = seed;
    for (int d : dets) {
        rs.channels.push_back(digitized_channel(chan_name("anode", d), cfg.digitizer));
        rs.channels.push_back(digitized_channel(chan_name("fanin", d), cfg.digitizer));
    }

    rs.records.resize(n_records);
    for (std::size_t r = 0; r < n_records; ++r) {
        Rng rng(stream_seed(seed, r));
        std::vector<EventTruth> events = sample_events(
            cfg.source, cfg.gamma_shape, cfg.neutron_shape, cfg.digitizer, rng);
        Record& rec = rs.records[r];
        rec.truth = events;
        for (int d : dets) {
            const ResonatorSpec& res = cfg.resonator_by_id(d);
            const double cal = cfg.cal_vs_per_kevee[static_cast<std::size_t>(
                &res - cfg.resonators.data())];
            SimulatedRecord sim = simulate_record(events, cfg.gamma_shape,
                                                  cfg.neutron_shape, cal, res,
                                                  cfg.fanin, cfg.digitizer, rng,
                                                  cfg.chain_mode);
            rec.chans.push_back(std::move(sim.anode.samples));
            rec.chans.push_back(std::move(sim.fanin.samples));
            rec.clipped.push_back(static_cast<std::uint32_t>(sim.clipped_anode));
            rec.clipped.push_back(static_cast<std::uint32_t>(sim.clipped_fanin));
            if (sim.multi_detector) rec.flags |= kFlagMultiDetector;
            if (sim.truncated) rec.flags |= kFlagTruncated;
        }
    }
    return rs;
}

RecordSet simulate_drive(const RunConfig& cfg, std::size_t n_records,
                         std::uint64_t seed, int channel) {
    cfg.validate();
    const ResonatorSpec& res = cfg.resonator_by_id(channel);

    RecordSet rs;
    rs.dt = cfg.digitizer.dt();
    rs.record_len = cfg.digitizer.record_len;
    rs.cfg_hash = config_hash(cfg);
    rs.seed = seed;
    rs.channels.push_back(digitized_channel(chan_name("drive", channel), cfg.digitizer));
    rs.channels.push_back(digitized_channel(chan_name("fanin", channel), cfg.digitizer));

    const bool shaped = cfg.calibration.drive_bandwidth_hz > 0.0;
    FilterSpec drive_filter;
    drive_filter.cutoff_hz = cfg.calibration.drive_bandwidth_hz;

    rs.records.resize(n_records);
    for (std::size_t r = 0; r < n_records; ++r) {
        Rng rng(stream_seed(seed, r));
        Trace x;
        x.dt = rs.dt;
        x.samples.resize(rs.record_len);
        for (auto& v : x.samples) v = rng.normal(0.0, cfg.calibration.drive_rms);
        if (shaped) {
            Spectrum sx = dft(x);
            apply_lowpass(sx, drive_filter);
            x = idft(sx);
        }
        // Calibration runs in periodic steady state (the drive loops), so the
        // response is the circular convolution regardless of chain_mode.
        Trace y = front_end(x, res, cfg.fanin, &rng, ConvolutionMode::circular);
        DigitizeResult dx = digitize(x, cfg.digitizer);
        DigitizeResult dy = digitize(y, cfg.digitizer);
        Record& rec = rs.records[r];
        rec.chans.push_back(std::move(dx.trace.samples));
        rec.chans.push_back(std::move(dy.trace.samples));
        rec.clipped.push_back(static_cast<std::uint32_t>(dx.clipped));
        rec.clipped.push_back(static_cast<std::uint32_t>(dy.clipped));
    }
    return rs;
}

CalibrationData calibrate_from_records(const RecordSet& rs, std::uint64_t cfg_hash_expect) {
    if (rs.cfg_hash != cfg_hash_expect)
        throw FormatError("calibration records were produced under a different "
                          "configuration");
    int drive_idx = -1, resp_idx = -1, det = -1;
    for (std::size_t i = 0; i < rs.channels.size(); ++i) {
        if (rs.channels[i].label.rfind("drive_", 0) == 0) {
            drive_idx = static_cast<int>(i);
            det = std::stoi(rs.channels[i].label.substr(6));
        }
    }
    if (drive_idx < 0) throw FormatError("no drive channel in calibration records");
    resp_idx = rs.channel_index(chan_name("fanin", det));
    if (resp_idx < 0) throw FormatError("no matching response channel in calibration records");
    if (rs.records.empty()) throw FormatError("calibration record file is empty");

    std::vector<std::pair<Trace, Trace>> pairs;
    pairs.reserve(rs.records.size());
    for (std::size_t r = 0; r < rs.records.size(); ++r)
        pairs.emplace_back(rs.trace(r, static_cast<std::size_t>(drive_idx)),
                           rs.trace(r, static_cast<std::size_t>(resp_idx)));
    ImpulseEstimate est = estimate_impulse_response(pairs);

    CalibrationData cal;
    cal.df = est.h.df;
    cal.resonator_id = det;
    cal.records_averaged = est.records_averaged;
    cal.cfg_hash = rs.cfg_hash;
    cal.h = std::move(est.h);
    cal.valid = std::move(est.valid);
    return cal;
}

void recover_in_place(RecordSet& rs, const std::vector<CalibrationData>& cals,
                      const RunConfig& cfg) {
    std::vector<std::pair<int, int>> targets;  // (fanin channel index, cal index)
    for (std::size_t i = 0; i < rs.channels.size(); ++i) {
        const std::string& label = rs.channels[i].label;
        if (label.rfind("fanin_", 0) != 0) continue;
        const int det = std::stoi(label.substr(6));
        int cal_idx = -1;
        for (std::size_t c = 0; c < cals.size(); ++c)
            if (cals[c].resonator_id == det) cal_idx = static_cast<int>(c);
        if (cal_idx < 0)
            throw FormatError("no calibration provided for channel " + label);
        if (cals[static_cast<std::size_t>(cal_idx)].h.bins.size() != rs.record_len)
            throw FormatError("calibration length does not match the records");
        targets.emplace_back(static_cast<int>(i), cal_idx);
    }
    if (targets.empty()) throw FormatError("record file has no fan-in channels");

    for (const auto& [fidx, cidx] : targets) {
        const CalibrationData& cal = cals[static_cast<std::size_t>(cidx)];
        ChannelDesc ch;
        ch.label = chan_name("recovered", cal.resonator_id);
        ch.dtype = ChannelDesc::Dtype::f32;
        ch.scale = 1.0;
        rs.channels.push_back(ch);
        for (std::size_t r = 0; r < rs.records.size(); ++r) {
            Trace x = deconvolve(rs.trace(r, static_cast<std::size_t>(fidx)), cal.h,
                                 cfg.deconv, &cal.valid);
            // Round-trip through f32 now so in-memory analysis matches what a
            // reader of the written file would see.
            for (auto& v : x.samples) v = static_cast<double>(static_cast<float>(v));
            rs.records[r].chans.push_back(std::move(x.samples));
            rs.records[r].clipped.push_back(0);
        }
    }
}

void cmd_init(const std::string& out_path) {
    save_config(default_config(), out_path);
}

void cmd_simulate(const RunConfig& cfg, std::size_t n_records, std::uint64_t seed,
                  const std::string& out_path, bool drive, int channel) {
    if (n_records == 0) throw ConfigError("--records must be positive");
    RecordSet rs = drive ? simulate_drive(cfg, n_records, seed, channel)
                         : simulate_events(cfg, n_records, seed);
    write_records(out_path, rs);
}

void cmd_calibrate(const RunConfig& cfg, const std::string& records_path,
                   const std::string& out_path) {
    RecordSet rs = read_records(records_path);
    CalibrationData cal = calibrate_from_records(rs, config_hash(cfg));
    write_calibration(out_path, cal);
}

void cmd_recover(const RunConfig& cfg, const std::string& records_path,
                 const std::vector<std::string>& cal_paths,
                 const std::string& out_path, bool force) {
    RecordSet rs = read_records(records_path);
    if (!force) require_hash(cfg, rs.cfg_hash, "record file");
    std::vector<CalibrationData> cals;
    for (const auto& p : cal_paths) {
        cals.push_back(read_calibration(p));
        if (!force) require_hash(cfg, cals.back().cfg_hash, "calibration file");
    }
    if (cals.empty()) throw ConfigError("recover needs at least one calibration file");
    recover_in_place(rs, cals, cfg);
    write_records(out_path, rs);
}

// ---------------------------------------------------------------------------
// Analysis stages
// ---------------------------------------------------------------------------

namespace {

struct ChannelView {
    int det = 0;
    int anode = -1;
    int recovered = -1;
    double cal = 0.0;  // volt-seconds per keVee for this detector
};

std::vector<ChannelView> channel_views(const RecordSet& rs, const RunConfig& cfg,
                                       bool need_recovered) {
    std::vector<ChannelView> out;
    for (int d : detector_ids(rs)) {
        ChannelView v;
        v.det = d;
        v.anode = rs.channel_index(chan_name("anode", d));
        v.recovered = rs.channel_index(chan_name("recovered", d));
        for (std::size_t i = 0; i < cfg.resonators.size(); ++i)
            if (cfg.resonators[i].id == d) v.cal = cfg.cal_vs_per_kevee[i];
        if (v.cal == 0.0)
            throw ConfigError("records reference detector " + std::to_string(d) +
                              " which is not in the configuration");
        if (need_recovered && v.recovered < 0)
            throw FormatError("records lack a recovered channel for detector " +
                              std::to_string(d) + " (run the recover step first)");
        out.push_back(v);
    }
    if (out.empty()) throw FormatError("record file has no anode channels");
    return out;
}

AnalysisConfig channel_analysis(const RunConfig& cfg, const ChannelView& v) {
    AnalysisConfig a = cfg.analysis;
    a.cal_vs_per_kevee = v.cal;
    a.polarity = cfg.gamma_shape.polarity;
    return a;
}

json fit_to_json(const GaussFit& f, double bin_width) {
    return json{{"amp", f.g.amp},           {"amp_err", f.g.amp_err},
                {"mu", f.g.mu},             {"mu_err", f.g.mu_err},
                {"sigma", f.g.sigma},       {"sigma_err", f.g.sigma_err},
                {"fwhm", f.g.fwhm()},       {"fwhm_err", f.g.fwhm_err()},
                {"area", f.area(bin_width)},{"area_err", f.area_err(bin_width)},
                {"chi2", f.chi2},           {"dof", f.dof}};
}

json peak_to_json(const GaussParams& g) {
    return json{{"amp", g.amp},     {"amp_err", g.amp_err},
                {"mu", g.mu},       {"mu_err", g.mu_err},
                {"sigma", g.sigma}, {"sigma_err", g.sigma_err},
                {"fwhm", g.fwhm()}, {"fwhm_err", g.fwhm_err()}};
}

json provenance(const RecordSet& rs) {
    return json{{"config_hash", hash_hex(rs.cfg_hash)},
                {"seed", rs.seed},
                {"n_records", rs.records.size()}};
}

void write_json(const fs::path& p, const json& j) {
    auto out = open_out(p);
    out << j.dump(2) << "\n";
}

// Per-record charges for one channel view.
struct ChargePair {
    std::vector<double> anode, recovered;
    std::vector<std::size_t> record_idx;
};

ChargePair charges_for(const RecordSet& rs, const ChannelView& v,
                       const AnalysisConfig& a) {
    ChargePair out;
    for (std::size_t r = 0; r < rs.records.size(); ++r) {
        ChargeResult qa = integrate_charge(rs.trace(r, static_cast<std::size_t>(v.anode)),
                                           a.gate_start, a.gate_len, a.kevee_per_vs(),
                                           a.baseline_len, a.polarity);
        ChargeResult qr = integrate_charge(
            rs.trace(r, static_cast<std::size_t>(v.recovered)), a.gate_start, a.gate_len,
            a.kevee_per_vs(), a.baseline_len, a.polarity);
        out.anode.push_back(qa.charge_kevee);
        out.recovered.push_back(qr.charge_kevee);
        out.record_idx.push_back(r);
    }
    return out;
}

json analyze_charge(const RecordSet& rs, const RunConfig& cfg, const fs::path& dir) {
    json out;
    for (const ChannelView& v : channel_views(rs, cfg, true)) {
        AnalysisConfig a = channel_analysis(cfg, v);
        ChargePair q = charges_for(rs, v, a);
        DifferenceStats ds = difference_stats(q.recovered, q.anode);

        auto scatter = open_out(dir / ("charge_scatter_" + std::to_string(v.det) + ".csv"));
        scatter << "anode_kevee,recovered_kevee,truth_kevee\n";
        for (std::size_t i = 0; i < q.anode.size(); ++i)
            scatter << q.anode[i] << "," << q.recovered[i] << ","
                    << truth_energy(rs.records[q.record_idx[i]], v.det) << "\n";

        auto hist = open_out(dir / ("charge_diff_" + std::to_string(v.det) + ".csv"));
        hist << "diff_kevee,count\n";
        for (std::size_t b = 0; b < ds.fitted.hist.bins(); ++b)
            hist << ds.fitted.hist.center(b) << "," << ds.fitted.hist.counts[b] << "\n";

        out[std::to_string(v.det)] = {
            {"n", ds.raw.n},
            {"diff_mean_kevee", ds.raw.mean},
            {"diff_std_kevee", ds.raw.stddev},
            {"diff_fit", fit_to_json(ds.fitted.fit, ds.fitted.hist.width())}};
    }
    return out;
}

json analyze_spectrum(const RecordSet& rs, const RunConfig& cfg, const fs::path& dir) {
    json out;
    for (const ChannelView& v : channel_views(rs, cfg, true)) {
        AnalysisConfig a = channel_analysis(cfg, v);
        ChargePair q = charges_for(rs, v, a);
        const double lo = 0.0, hi = 750.0;
        Histogram ha = Histogram::build(q.anode, 750, lo, hi);
        Histogram hr = Histogram::build(q.recovered, 750, lo, hi);

        auto csv = open_out(dir / ("spectrum_" + std::to_string(v.det) + ".csv"));
        csv << "kevee,anode_count,recovered_count\n";
        for (std::size_t b = 0; b < ha.bins(); ++b)
            csv << ha.center(b) << "," << ha.counts[b] << "," << hr.counts[b] << "\n";

        HistogramFit fa = fit_photopeak(q.anode, cfg.photopeak_lo, cfg.photopeak_hi);
        HistogramFit fr = fit_photopeak(q.recovered, cfg.photopeak_lo, cfg.photopeak_hi);
        out[std::to_string(v.det)] = {
            {"window", {cfg.photopeak_lo, cfg.photopeak_hi}},
            {"anode", fit_to_json(fa.fit, fa.hist.width())},
            {"anode_events", fa.n_values},
            {"recovered", fit_to_json(fr.fit, fr.hist.width())},
            {"recovered_events", fr.n_values}};
    }
    return out;
}

struct TimingPair {
    std::vector<double> anode_t, rec_t, anode_kevee;
};

TimingPair timings_for(const RecordSet& rs, const ChannelView& v, const RunConfig& cfg,
                       bool apply_t0) {
    AnalysisConfig a = channel_analysis(cfg, v);
    const double thr_v = amplitude_threshold_v(a.threshold_kevee, cfg.gamma_shape,
                                               v.cal, rs.dt);
    double t0_corr = 0.0;
    if (apply_t0)
        for (std::size_t i = 0; i < cfg.resonators.size(); ++i)
            if (cfg.resonators[i].id == v.det) t0_corr = cfg.t0_s[i];

    TimingPair out;
    for (std::size_t r = 0; r < rs.records.size(); ++r) {
        CfdResult ca = cfd_time(rs.trace(r, static_cast<std::size_t>(v.anode)),
                                a.cfd_fraction, a.cfd_delay_s, thr_v, a.baseline_len,
                                a.polarity, a.cfd_cubic);
        CfdResult cr = cfd_time(rs.trace(r, static_cast<std::size_t>(v.recovered)),
                                a.cfd_fraction, a.cfd_delay_s, thr_v, a.baseline_len,
                                a.polarity, a.cfd_cubic);
        if (!ca.valid || !cr.valid) continue;
        ChargeResult qa = integrate_charge(rs.trace(r, static_cast<std::size_t>(v.anode)),
                                           a.gate_start, a.gate_len, a.kevee_per_vs(),
                                           a.baseline_len, a.polarity);
        out.anode_t.push_back(ca.t_cross);
        out.rec_t.push_back(cr.t_cross - t0_corr);
        out.anode_kevee.push_back(qa.charge_kevee);
    }
    return out;
}

json analyze_timing(const RecordSet& rs, const RunConfig& cfg, const fs::path& dir) {
    json out;
    for (const ChannelView& v : channel_views(rs, cfg, true)) {
        TimingPair tp = timings_for(rs, v, cfg, false);
        if (tp.anode_t.empty())
            throw FitError("timing: no event passed the discriminator threshold");

        std::vector<double> all_diff(tp.anode_t.size());
        for (std::size_t i = 0; i < all_diff.size(); ++i)
            all_diff[i] = tp.rec_t[i] - tp.anode_t[i];
        Moments overall = moments(all_diff);

        auto csv = open_out(dir / ("timing_" + std::to_string(v.det) + ".csv"));
        csv << "bin_lo_kevee,bin_hi_kevee,n,mean_ps,std_ps\n";
        json bins = json::array();
        const auto& edges = cfg.timing_bins_kevee;
        for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
            std::vector<double> d;
            for (std::size_t i = 0; i < all_diff.size(); ++i)
                if (tp.anode_kevee[i] >= edges[b] && tp.anode_kevee[i] < edges[b + 1])
                    d.push_back(all_diff[i]);
            Moments m = moments(d);
            csv << edges[b] << "," << edges[b + 1] << "," << m.n << ","
                << m.mean * 1e12 << "," << m.stddev * 1e12 << "\n";
            bins.push_back({{"lo_kevee", edges[b]},
                            {"hi_kevee", edges[b + 1]},
                            {"n", m.n},
                            {"mean_ps", m.mean * 1e12},
                            {"std_ps", m.stddev * 1e12}});
        }
        out[std::to_string(v.det)] = {
            {"n", overall.n},
            // Overall mean offset doubles as the t0 correction for this chain.
            {"mean_offset_ps", overall.mean * 1e12},
            {"std_ps", overall.stddev * 1e12},
            {"bins", bins}};
    }
    return out;
}

json analyze_psd(const RecordSet& rs, const RunConfig& cfg, const fs::path& dir) {
    json out;
    for (const ChannelView& v : channel_views(rs, cfg, true)) {
        AnalysisConfig a = channel_analysis(cfg, v);
        std::vector<Trace> anode, rec;
        anode.reserve(rs.records.size());
        rec.reserve(rs.records.size());
        for (std::size_t r = 0; r < rs.records.size(); ++r) {
            anode.push_back(rs.trace(r, static_cast<std::size_t>(v.anode)));
            rec.push_back(rs.trace(r, static_cast<std::size_t>(v.recovered)));
        }
        GateScan sa = optimize_short_gate(anode, a);
        GateScan sr = optimize_short_gate(rec, a);

        auto curve = open_out(dir / ("fom_curve_" + std::to_string(v.det) + ".csv"));
        curve << "offset,fom_anode,fom_recovered\n";
        for (std::size_t i = 0; i < sa.offsets.size(); ++i)
            curve << sa.offsets[i] << "," << sa.foms[i] << "," << sr.foms[i] << "\n";

        auto bands = open_out(dir / ("psd_bands_" + std::to_string(v.det) + ".csv"));
        bands << "species,anode_qlong_kevee,anode_ratio,recovered_qlong_kevee,"
                 "recovered_ratio\n";
        for (std::size_t r = 0; r < rs.records.size(); ++r) {
            PsdResult pa = psd_param(anode[r], sa.best_offset, a);
            PsdResult pr = psd_param(rec[r], sr.best_offset, a);
            if (pa.classified == PsdClass::below_threshold ||
                pr.classified == PsdClass::below_threshold)
                continue;
            const EventTruth* e = truth_event(rs.records[r], v.det);
            bands << (e ? to_string(e->species) : "unknown") << "," << pa.q_long << ","
                  << pa.ratio << "," << pr.q_long << "," << pr.ratio << "\n";
        }

        auto best_result = [](const GateScan& s) -> const FomResult& {
            for (std::size_t i = 0; i < s.offsets.size(); ++i)
                if (s.offsets[i] == s.best_offset && s.results[i].n_events)
                    return s.results[i];
            throw FitError("gate scan lost its best offset");
        };
        const FomResult& fa = best_result(sa);
        const FomResult& fr = best_result(sr);

        out[std::to_string(v.det)] = {
            {"anode",
             {{"best_offset", sa.best_offset},
              {"fom", fa.fom},
              {"fom_err", fa.fom_err},
              {"n_events", fa.n_events},
              {"gamma_peak", peak_to_json(fa.gamma_peak)},
              {"neutron_peak", peak_to_json(fa.neutron_peak)}}},
            {"recovered",
             {{"best_offset", sr.best_offset},
              {"fom", fr.fom},
              {"fom_err", fr.fom_err},
              {"n_events", fr.n_events},
              {"gamma_peak", peak_to_json(fr.gamma_peak)},
              {"neutron_peak", peak_to_json(fr.neutron_peak)}}},
            {"degradation_percent", 100.0 * (fa.fom - fr.fom) / fa.fom}};
    }
    return out;
}

json analyze_coincidence(const RecordSet& rs, const RunConfig& cfg, const fs::path& dir) {
    std::vector<ChannelView> views = channel_views(rs, cfg, true);
    if (views.size() < 2)
        throw FormatError("coincidence analysis needs two detector channels");
    const ChannelView& v0 = views[0];
    const ChannelView& v1 = views[1];

    auto collect = [&](const ChannelView& v) {
        AnalysisConfig a = channel_analysis(cfg, v);
        const double thr_v = amplitude_threshold_v(a.threshold_kevee, cfg.gamma_shape,
                                                   v.cal, rs.dt);
        double t0_corr = 0.0;
        for (std::size_t i = 0; i < cfg.resonators.size(); ++i)
            if (cfg.resonators[i].id == v.det) t0_corr = cfg.t0_s[i];
        std::vector<CfdResult> ca, cr;
        for (std::size_t r = 0; r < rs.records.size(); ++r) {
            ca.push_back(cfd_time(rs.trace(r, static_cast<std::size_t>(v.anode)),
                                  a.cfd_fraction, a.cfd_delay_s, thr_v, a.baseline_len,
                                  a.polarity, a.cfd_cubic));
            CfdResult c = cfd_time(rs.trace(r, static_cast<std::size_t>(v.recovered)),
                                   a.cfd_fraction, a.cfd_delay_s, thr_v, a.baseline_len,
                                   a.polarity, a.cfd_cubic);
            c.t_cross -= t0_corr;
            cr.push_back(c);
        }
        return std::make_pair(ca, cr);
    };
    auto [a0, r0] = collect(v0);
    auto [a1, r1] = collect(v1);

    CoincidenceResult anode = coincidence_delta(a1, a0);
    CoincidenceResult rec = coincidence_delta(r1, r0);

    auto ca = open_out(dir / "coincidence_anode.csv");
    ca << "dt_ps\n";
    for (double d : anode.dts) ca << d * 1e12 << "\n";
    auto cc = open_out(dir / "coincidence_recovered.csv");
    cc << "dt_ps\n";
    for (double d : rec.dts) cc << d * 1e12 << "\n";

    auto to_j = [](const CoincidenceResult& c) {
        return json{{"n_pairs", c.n_pairs},
                    {"n_rejected", c.n_rejected},
                    {"mean_ps", c.fitted.fit.g.mu * 1e12},
                    {"mean_err_ps", c.fitted.fit.g.mu_err * 1e12},
                    {"sigma_ps", c.fitted.fit.g.sigma * 1e12},
                    {"sigma_err_ps", c.fitted.fit.g.sigma_err * 1e12}};
    };
    return json{{"detectors", {v0.det, v1.det}},
                {"anode", to_j(anode)},
                {"recovered", to_j(rec)}};
}

json analyze_reconstruction(const RecordSet& rs, const RunConfig& cfg,
                            const fs::path& dir) {
    json out;
    for (const ChannelView& v : channel_views(rs, cfg, true)) {
        double s_rms = 0, s_pulse = 0, s_base = 0;
        for (std::size_t r = 0; r < rs.records.size(); ++r) {
            RecoveryReport rep = recovery_report(
                rs.trace(r, static_cast<std::size_t>(v.anode)),
                rs.trace(r, static_cast<std::size_t>(v.recovered)),
                cfg.digitizer.pre_trigger);
            s_rms += rep.rms;
            s_pulse += rep.pulse_rms;
            s_base += rep.baseline_rms;
        }
        const double n = static_cast<double>(rs.records.size());

        // Example record for plotting: reference, recovered, residual.
        auto csv = open_out(dir / ("residual_example_" + std::to_string(v.det) + ".csv"));
        csv << "sample,anode_v,recovered_v,residual_v\n";
        if (!rs.records.empty()) {
            Trace ta = rs.trace(0, static_cast<std::size_t>(v.anode));
            Trace tr = rs.trace(0, static_cast<std::size_t>(v.recovered));
            for (std::size_t i = 0; i < ta.size(); ++i)
                csv << i << "," << ta.samples[i] << "," << tr.samples[i] << ","
                    << tr.samples[i] - ta.samples[i] << "\n";
        }
        out[std::to_string(v.det)] = {{"mean_rms_v", s_rms / n},
                                      {"mean_pulse_rms_v", s_pulse / n},
                                      {"mean_baseline_rms_v", s_base / n}};
    }
    return out;
}

}  // namespace

void cmd_analyze(const RunConfig& cfg, const std::string& records_path,
                 const std::string& which, const std::string& out_dir) {
    RecordSet rs = read_records(records_path);
    require_hash(cfg, rs.cfg_hash, "record file");
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    static const std::vector<std::string> known = {
        "charge", "spectrum", "timing", "psd", "coincidence", "reconstruction"};
    std::vector<std::string> stages;
    if (which == "all") {
        stages = {"charge", "spectrum", "timing", "reconstruction"};
        // Shape separation needs a mixed field; the two-peak fit has nothing
        // to bite on for single-species sources.
        if (cfg.source.kind == SourceKind::cf252_mixed) stages.push_back("psd");
        if (detector_ids(rs).size() >= 2) stages.push_back("coincidence");
    } else if (std::find(known.begin(), known.end(), which) != known.end()) {
        stages = {which};
    } else {
        throw ConfigError("unknown analysis stage: " + which);
    }

    for (const std::string& stage : stages) {
        json j;
        if (stage == "charge") j = analyze_charge(rs, cfg, dir);
        else if (stage == "spectrum") j = analyze_spectrum(rs, cfg, dir);
        else if (stage == "timing") j = analyze_timing(rs, cfg, dir);
        else if (stage == "psd") j = analyze_psd(rs, cfg, dir);
        else if (stage == "coincidence") j = analyze_coincidence(rs, cfg, dir);
        else j = analyze_reconstruction(rs, cfg, dir);
        j["provenance"] = provenance(rs);
        write_json(dir / (stage + ".json"), j);
    }
}

void cmd_report(const std::string& dir, const std::string& out_path) {
    json report = json::object();
    std::vector<fs::path> files;
    if (!fs::is_directory(dir))
        throw FormatError("report: not a directory: " + dir);
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".json" &&
            entry.path().filename() != fs::path(out_path).filename())
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw FormatError("report: no stage summaries in " + dir);
    for (const auto& f : files) {
        std::ifstream in(f);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw FormatError("report: bad JSON in " + f.string() + ": " + e.what());
        }
        report[f.stem().string()] = j;
    }
    write_json(out_path, report);
}

}  // namespace fdm
