// fdmsim: simulate, calibrate, recover, and analyze frequency-multiplexed
// detector readout records.
//
// Exit codes: 0 success, 2 invalid configuration or arguments,
// 3 file-format or provenance mismatch, 4 fit failure.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fdm/commands.hpp"
#include "fdm/config.hpp"
#include "fdm/fitting.hpp"
#include "fdm/record_file.hpp"

namespace {

fdm::RunConfig load_or_default(const std::string& path) {
    if (path.empty()) return fdm::default_config();
    return fdm::load_config(path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frequency-multiplexed detector readout simulator"};
    app.require_subcommand(1);

    std::string config_path, out_path, records_path, which = "all", report_dir;
    std::vector<std::string> cal_paths;
    std::uint64_t seed = 0;
    std::size_t n_records = 0;
    int channel = 0;
    bool drive = false, force = false;

    auto* init = app.add_subcommand("init", "Write the default configuration");
    init->add_option("--out", out_path, "Output config path")->required();

    auto* sim = app.add_subcommand("simulate", "Generate event or drive records");
    sim->add_option("--config", config_path, "Configuration JSON");
    sim->add_option("--seed", seed, "Base seed (defaults to the config base_seed)");
    sim->add_option("--records", n_records, "Number of records");
    sim->add_option("--out", out_path, "Output record file")->required();
    sim->add_flag("--drive", drive, "Generate calibration drive records");
    sim->add_option("--channel", channel, "Channel for --drive records");

    auto* cal = app.add_subcommand("calibrate", "Estimate the chain response");
    cal->add_option("--config", config_path, "Configuration JSON");
    cal->add_option("--records", records_path, "Drive record file")->required();
    cal->add_option("--out", out_path, "Output calibration file")->required();

    auto* rec = app.add_subcommand("recover", "Deconvolve fan-in channels");
    rec->add_option("--config", config_path, "Configuration JSON");
    rec->add_option("--records", records_path, "Input record file")->required();
    rec->add_option("--cal", cal_paths, "Calibration file(s)")->required();
    rec->add_option("--out", out_path, "Output record file")->required();
    rec->add_flag("--force", force, "Ignore provenance hash mismatches");

    auto* ana = app.add_subcommand("analyze", "Run analysis stages");
    ana->add_option("--config", config_path, "Configuration JSON");
    ana->add_option("--records", records_path, "Recovered record file")->required();
    ana->add_option("--which", which,
                    "Stage: charge|spectrum|timing|psd|coincidence|reconstruction|all");
    ana->add_option("--out", out_path, "Output directory")->required();

    auto* rep = app.add_subcommand("report", "Merge stage summaries");
    rep->add_option("--dir", report_dir, "Directory of stage JSON files")->required();
    rep->add_option("--out", out_path, "Output report path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (init->parsed()) {
            fdm::cmd_init(out_path);
        } else if (sim->parsed()) {
            fdm::RunConfig cfg = load_or_default(config_path);
            if (seed == 0) seed = cfg.base_seed;
            if (n_records == 0)
                n_records = drive ? cfg.calibration.records : 1000;
            fdm::cmd_simulate(cfg, n_records, seed, out_path, drive, channel);
        } else if (cal->parsed()) {
            fdm::RunConfig cfg = load_or_default(config_path);
            fdm::cmd_calibrate(cfg, records_path, out_path);
        } else if (rec->parsed()) {
            fdm::RunConfig cfg = load_or_default(config_path);
            fdm::cmd_recover(cfg, records_path, cal_paths, out_path, force);
        } else if (ana->parsed()) {
            fdm::RunConfig cfg = load_or_default(config_path);
            fdm::cmd_analyze(cfg, records_path, which, out_path);
        } else if (rep->parsed()) {
            fdm::cmd_report(report_dir, out_path);
        }
    } catch (const fdm::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const fdm::FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const fdm::FitError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
