#include "fdm/config.hpp"

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace fdm {

using nlohmann::json;

namespace {

// Strict field reader: every key in `j` must be consumed, every read key must
// exist. Catches typos that would otherwise silently fall back to defaults.
class Fields {
  public:
    Fields(const json& j, std::string scope) : j_(j), scope_(std::move(scope)) {
        if (!j.is_object())
            throw ConfigError(scope_ + ": expected a JSON object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        auto it = j_.find(key);
        if (it == j_.end())
            throw ConfigError(scope_ + ": missing key '" + key + "'");
        seen_.insert(key);
        try {
            out = it->get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(scope_ + "." + key + ": " + e.what());
        }
    }

    const json& sub(const char* key) {
        auto it = j_.find(key);
        if (it == j_.end())
            throw ConfigError(scope_ + ": missing key '" + key + "'");
        seen_.insert(key);
        return *it;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                throw ConfigError(scope_ + ": unknown key '" + it.key() + "'");
    }

  private:
    const json& j_;
    std::string scope_;
    std::set<std::string> seen_;
};

json shape_to_json(const PulseShape& s) {
    return json{{"rise_sigma_s", s.rise_sigma},
                {"tau_fast_s", s.tau_fast},
                {"tau_slow_s", s.tau_slow},
                {"slow_fraction", s.slow_fraction},
                {"polarity", s.polarity == Polarity::negative ? "negative" : "positive"}};
}

PulseShape shape_from_json(const json& j, const std::string& scope) {
    Fields f(j, scope);
    PulseShape s;
    std::string pol;
    f.get("rise_sigma_s", s.rise_sigma);
    f.get("tau_fast_s", s.tau_fast);
    f.get("tau_slow_s", s.tau_slow);
    f.get("slow_fraction", s.slow_fraction);
    f.get("polarity", pol);
    f.finish();
    if (pol == "negative")
        s.polarity = Polarity::negative;
    else if (pol == "positive")
        s.polarity = Polarity::positive;
    else
        throw ConfigError(scope + ".polarity: expected 'negative' or 'positive'");
    return s;
}

}  // namespace

void RunConfig::validate() const {
    try {
        digitizer.validate();
        gamma_shape.validate();
        neutron_shape.validate();
        if (resonators.empty()) throw std::invalid_argument("no resonators configured");
        for (const auto& r : resonators) r.validate(digitizer);
        for (std::size_t i = 0; i < resonators.size(); ++i)
            for (std::size_t j2 = i + 1; j2 < resonators.size(); ++j2)
                if (resonators[i].id == resonators[j2].id)
                    throw std::invalid_argument("duplicate resonator id");
        if (cal_vs_per_kevee.size() != resonators.size())
            throw std::invalid_argument(
                "cal_vs_per_kevee must have one entry per resonator");
        for (double c : cal_vs_per_kevee)
            if (!(c > 0)) throw std::invalid_argument("calibration scale must be positive");
        if (!(calibration.drive_rms > 0))
            throw std::invalid_argument("calibration drive_rms must be positive");
        if (!(deconv.h_floor > 0))
            throw std::invalid_argument("h_floor must be positive");
        if (analysis.gate_start + analysis.gate_len > digitizer.record_len)
            throw std::invalid_argument("integration gate outside the record");
        if (analysis.baseline_len == 0 ||
            analysis.baseline_len > digitizer.record_len)
            throw std::invalid_argument("baseline window outside the record");
        if (t0_s.size() != resonators.size())
            throw std::invalid_argument("t0_s must have one entry per resonator");
        if (!(photopeak_hi > photopeak_lo))
            throw std::invalid_argument("photopeak window must have positive width");
        if (timing_bins_kevee.size() < 2)
            throw std::invalid_argument("timing_bins_kevee needs at least two edges");
        for (std::size_t i = 1; i < timing_bins_kevee.size(); ++i)
            if (!(timing_bins_kevee[i] > timing_bins_kevee[i - 1]))
                throw std::invalid_argument("timing_bins_kevee must be increasing");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

const ResonatorSpec& RunConfig::resonator_by_id(int id) const {
    for (const auto& r : resonators)
        if (r.id == id) return r;
    throw ConfigError("no resonator with id " + std::to_string(id));
}

RunConfig default_config() {
    RunConfig cfg;
    cfg.digitizer = DigitizerSpec{};
    cfg.resonators = {ResonatorSpec{7.00e6, 10.0, 0.3, 0},
                      ResonatorSpec{15.25e6, 10.0, 0.3, 1}};
    cfg.fanin = FanInSpec{};
    cfg.gamma_shape = PulseShape{};
    cfg.neutron_shape = PulseShape{};
    cfg.neutron_shape.slow_fraction = 0.38;
    cfg.cal_vs_per_kevee = {5.0e-12, 5.0e-12};
    cfg.source = SourceSpec{};
    cfg.chain_mode = ConvolutionMode::truncated;
    cfg.calibration = CalibrationSettings{};
    cfg.deconv = DeconvConfig{};
    cfg.analysis = AnalysisConfig{};
    cfg.t0_s = {0.0, 0.0};
    cfg.timing_bins_kevee = {80, 150, 200, 300, 400, 500, 600};
    cfg.base_seed = 1;
    return cfg;
}

json to_json(const RunConfig& cfg) {
    json j;
    j["digitizer"] = {{"sample_rate_hz", cfg.digitizer.sample_rate},
                      {"bits", cfg.digitizer.bits},
                      {"full_scale_vpp", cfg.digitizer.full_scale_vpp},
                      {"record_len", cfg.digitizer.record_len},
                      {"pre_trigger", cfg.digitizer.pre_trigger},
                      {"trigger_jitter", cfg.digitizer.trigger_jitter},
                      {"quantize", cfg.digitizer.quantize}};
    j["resonators"] = json::array();
    for (const auto& r : cfg.resonators)
        j["resonators"].push_back({{"f0_hz", r.f0_hz},
                                   {"q_factor", r.q_factor},
                                   {"gain", r.gain},
                                   {"id", r.id}});
    j["fanin"] = {{"gain", cfg.fanin.gain},
                  {"n_inputs", cfg.fanin.n_inputs},
                  {"noise_rms_v", cfg.fanin.noise_rms}};
    j["gamma_shape"] = shape_to_json(cfg.gamma_shape);
    j["neutron_shape"] = shape_to_json(cfg.neutron_shape);
    j["cal_vs_per_kevee"] = cfg.cal_vs_per_kevee;
    j["source"] = {{"kind", to_string(cfg.source.kind)},
                   {"detector_id", cfg.source.detector_id},
                   {"photopeak_kevee", cfg.source.photopeak_kevee},
                   {"photopeak_sigma", cfg.source.photopeak_sigma},
                   {"peak_fraction", cfg.source.peak_fraction},
                   {"continuum_lo", cfg.source.continuum_lo},
                   {"continuum_hi", cfg.source.continuum_hi},
                   {"pair_energy_kevee", cfg.source.pair_energy_kevee},
                   {"pair_offset_s", cfg.source.pair_offset_s},
                   {"gamma_fraction", cfg.source.gamma_fraction},
                   {"energy_lo", cfg.source.energy_lo},
                   {"energy_hi", cfg.source.energy_hi},
                   {"shape_dispersion", cfg.source.shape_dispersion},
                   {"mono_energy_kevee", cfg.source.mono_energy_kevee},
                   {"mono_species", to_string(cfg.source.mono_species)}};
    j["chain_mode"] =
        cfg.chain_mode == ConvolutionMode::truncated ? "truncated" : "circular";
    j["calibration"] = {{"drive_rms_v", cfg.calibration.drive_rms},
                        {"drive_bandwidth_hz", cfg.calibration.drive_bandwidth_hz},
                        {"records", cfg.calibration.records}};
    j["deconv"] = {{"filter_order", cfg.deconv.filter.order},
                   {"filter_cutoff_hz", cfg.deconv.filter.cutoff_hz},
                   {"h_floor", cfg.deconv.h_floor},
                   {"floor_policy",
                    cfg.deconv.policy == DeconvConfig::FloorPolicy::zero ? "zero"
                                                                         : "clamp"},
                   {"causal_filter", cfg.deconv.causal_filter}};
    j["analysis"] = {{"gate_start", cfg.analysis.gate_start},
                     {"gate_len", cfg.analysis.gate_len},
                     {"baseline_len", cfg.analysis.baseline_len},
                     {"cfd_fraction", cfg.analysis.cfd_fraction},
                     {"cfd_delay_s", cfg.analysis.cfd_delay_s},
                     {"threshold_kevee", cfg.analysis.threshold_kevee},
                     {"cfd_cubic", cfg.analysis.cfd_cubic},
                     {"psd_long", cfg.analysis.psd_long},
                     {"psd_pre", cfg.analysis.psd_pre},
                     {"psd_offset", cfg.analysis.psd_offset},
                     {"psd_ratio_cut", cfg.analysis.psd_ratio_cut}};
    j["t0_s"] = cfg.t0_s;
    j["timing_bins_kevee"] = cfg.timing_bins_kevee;
    j["photopeak_lo"] = cfg.photopeak_lo;
    j["photopeak_hi"] = cfg.photopeak_hi;
    j["base_seed"] = cfg.base_seed;
    return j;
}

RunConfig config_from_json(const json& j) {
    RunConfig cfg;
    Fields top(j, "config");
    {
        Fields f(top.sub("digitizer"), "digitizer");
        f.get("sample_rate_hz", cfg.digitizer.sample_rate);
        f.get("bits", cfg.digitizer.bits);
        f.get("full_scale_vpp", cfg.digitizer.full_scale_vpp);
        f.get("record_len", cfg.digitizer.record_len);
        f.get("pre_trigger", cfg.digitizer.pre_trigger);
        f.get("trigger_jitter", cfg.digitizer.trigger_jitter);
        f.get("quantize", cfg.digitizer.quantize);
        f.finish();
    }
    {
        const json& arr = top.sub("resonators");
        if (!arr.is_array()) throw ConfigError("resonators: expected an array");
        cfg.resonators.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            Fields f(arr[i], "resonators[" + std::to_string(i) + "]");
            ResonatorSpec r;
            f.get("f0_hz", r.f0_hz);
            f.get("q_factor", r.q_factor);
            f.get("gain", r.gain);
            f.get("id", r.id);
            f.finish();
            cfg.resonators.push_back(r);
        }
    }
    {
        Fields f(top.sub("fanin"), "fanin");
        f.get("gain", cfg.fanin.gain);
        f.get("n_inputs", cfg.fanin.n_inputs);
        f.get("noise_rms_v", cfg.fanin.noise_rms);
        f.finish();
    }
    cfg.gamma_shape = shape_from_json(top.sub("gamma_shape"), "gamma_shape");
    cfg.neutron_shape = shape_from_json(top.sub("neutron_shape"), "neutron_shape");
    top.get("cal_vs_per_kevee", cfg.cal_vs_per_kevee);
    {
        Fields f(top.sub("source"), "source");
        std::string kind, species;
        f.get("kind", kind);
        f.get("detector_id", cfg.source.detector_id);
        f.get("photopeak_kevee", cfg.source.photopeak_kevee);
        f.get("photopeak_sigma", cfg.source.photopeak_sigma);
        f.get("peak_fraction", cfg.source.peak_fraction);
        f.get("continuum_lo", cfg.source.continuum_lo);
        f.get("continuum_hi", cfg.source.continuum_hi);
        f.get("pair_energy_kevee", cfg.source.pair_energy_kevee);
        f.get("pair_offset_s", cfg.source.pair_offset_s);
        f.get("gamma_fraction", cfg.source.gamma_fraction);
        f.get("energy_lo", cfg.source.energy_lo);
        f.get("energy_hi", cfg.source.energy_hi);
        f.get("shape_dispersion", cfg.source.shape_dispersion);
        f.get("mono_energy_kevee", cfg.source.mono_energy_kevee);
        f.get("mono_species", species);
        f.finish();
        try {
            cfg.source.kind = source_kind_from_string(kind);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        if (species == "gamma")
            cfg.source.mono_species = Species::gamma;
        else if (species == "neutron")
            cfg.source.mono_species = Species::neutron;
        else
            throw ConfigError("source.mono_species: expected 'gamma' or 'neutron'");
    }
    {
        std::string mode;
        top.get("chain_mode", mode);
        if (mode == "truncated")
            cfg.chain_mode = ConvolutionMode::truncated;
        else if (mode == "circular")
            cfg.chain_mode = ConvolutionMode::circular;
        else
            throw ConfigError("chain_mode: expected 'truncated' or 'circular'");
    }
    {
        Fields f(top.sub("calibration"), "calibration");
        f.get("drive_rms_v", cfg.calibration.drive_rms);
        f.get("drive_bandwidth_hz", cfg.calibration.drive_bandwidth_hz);
        f.get("records", cfg.calibration.records);
        f.finish();
    }
    {
        Fields f(top.sub("deconv"), "deconv");
        std::string policy;
        f.get("filter_order", cfg.deconv.filter.order);
        f.get("filter_cutoff_hz", cfg.deconv.filter.cutoff_hz);
        f.get("h_floor", cfg.deconv.h_floor);
        f.get("floor_policy", policy);
        f.get("causal_filter", cfg.deconv.causal_filter);
        f.finish();
        if (policy == "zero")
            cfg.deconv.policy = DeconvConfig::FloorPolicy::zero;
        else if (policy == "clamp")
            cfg.deconv.policy = DeconvConfig::FloorPolicy::clamp;
        else
            throw ConfigError("deconv.floor_policy: expected 'zero' or 'clamp'");
    }
    {
        Fields f(top.sub("analysis"), "analysis");
        f.get("gate_start", cfg.analysis.gate_start);
        f.get("gate_len", cfg.analysis.gate_len);
        f.get("baseline_len", cfg.analysis.baseline_len);
        f.get("cfd_fraction", cfg.analysis.cfd_fraction);
        f.get("cfd_delay_s", cfg.analysis.cfd_delay_s);
        f.get("threshold_kevee", cfg.analysis.threshold_kevee);
        f.get("cfd_cubic", cfg.analysis.cfd_cubic);
        f.get("psd_long", cfg.analysis.psd_long);
        f.get("psd_pre", cfg.analysis.psd_pre);
        f.get("psd_offset", cfg.analysis.psd_offset);
        f.get("psd_ratio_cut", cfg.analysis.psd_ratio_cut);
        f.finish();
    }
    top.get("t0_s", cfg.t0_s);
    top.get("timing_bins_kevee", cfg.timing_bins_kevee);
    top.get("photopeak_lo", cfg.photopeak_lo);
    top.get("photopeak_hi", cfg.photopeak_hi);
    top.get("base_seed", cfg.base_seed);
    top.finish();
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return config_from_json(j);
}

void save_config(const RunConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file: " + path);
    out << to_json(cfg).dump(2) << "\n";
}

std::uint64_t config_hash(const RunConfig& cfg) {
    // nlohmann::json objects are std::map-backed, so dump() is key-sorted and
    // canonical; FNV-1a over those bytes.
    const std::string s = to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

}  // namespace fdm
