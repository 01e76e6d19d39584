// hamscope.cpp — Command-line driver: simulation, identification, error analysis, reporting.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hamscope/bootstrap.hpp"
#include "hamscope/chip_scan.hpp"
#include "hamscope/errors.hpp"
#include "hamscope/identify.hpp"
#include "hamscope/ramp_model.hpp"
#include "hamscope/result_io.hpp"
#include "hamscope/rng.hpp"
#include "hamscope/run_config.hpp"
#include "hamscope/simulator.hpp"
#include "hamscope/systematic.hpp"
#include "hamscope/version.hpp"

namespace {

using namespace hamscope;
using nlohmann::json;

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::int64_t seed = 0;
    bool has_seed = false;
    bool no_regularization = false;
    std::int64_t bootstrap_n = 0;
    bool has_bootstrap = false;
    bool systematic = false;
    std::string data_path;
    std::vector<std::string> result_paths;
};

std::string output_dir(const RunConfig& cfg, const CommonArgs& args) {
    return args.out_dir.empty() ? cfg.output_dir : args.out_dir;
}

void ensure_dir(const std::string& dir) {
    std::filesystem::create_directories(dir);
}

Provenance make_provenance(const RunConfig& cfg, std::uint64_t seed) {
    return Provenance{cfg.config_hash, seed, kVersion};
}

json dump_complex(const ComplexMatrix& m) {
    json rows = json::array();
    for (long i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (long j = 0; j < m.cols(); ++j) {
            row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

json dump_real(const RealMatrix& m) {
    json rows = json::array();
    for (long i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (long j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

json provenance_json(const Provenance& prov) {
    return json{{"config_hash", prov.config_hash},
                {"seed", prov.seed},
                {"version", prov.version}};
}

// State-preparation and readout maps for the configured error model.
std::pair<SpamMap, SpamMap> build_spam_maps(const RunConfig& cfg,
                                            const HamiltonianParams& target) {
    const int n = target.dim();
    switch (cfg.spam.mode) {
        case SpamSpec::Mode::None:
            return {SpamMap::identity(n), SpamMap::identity(n)};
        case SpamSpec::Mode::Random: {
            Rng rng_s(Rng::derive(cfg.spam.seed, 1));
            ComplexMatrix s = ComplexMatrix::Identity(n, n);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    s(i, j) += cfg.spam.s_scale * rng_s.normal();
                }
            }
            Rng rng_m(Rng::derive(cfg.spam.seed, 2));
            ComplexMatrix m = ComplexMatrix::Zero(n, n);
            for (int i = 0; i < n; ++i) {
                m(i, i) = std::exp(kImag * rng_m.uniform(-std::numbers::pi, std::numbers::pi));
            }
            return {SpamMap{std::move(s)}, SpamMap{std::move(m)}};
        }
        case SpamSpec::Mode::RampModel: {
            const RampModelConfig ramp = cfg.ramp_config();
            return {simulate_ramp_map(target.matrix(), ramp, RampDirection::In),
                    simulate_ramp_map(target.matrix(), ramp, RampDirection::Out)};
        }
    }
    throw std::logic_error("unreachable spam mode");
}

int cmd_simulate(RunConfig cfg, const CommonArgs& args) {
    if (args.has_seed) {
        cfg.noise.seed = static_cast<std::uint64_t>(args.seed);
        cfg.spam.seed = Rng::derive(static_cast<std::uint64_t>(args.seed), 1);
    }
    const HamiltonianParams target = cfg.target_params();
    const auto [s, m] = build_spam_maps(cfg, target);
    TimeSeriesData data = simulate_exact(target, s, m, cfg.grid);
    if (cfg.noise.shots > 0) {
        NoiseConfig noise;
        noise.shots = cfg.noise.shots;
        noise.damping_rate_per_ns = cfg.noise.damping_per_ns;
        noise.seed = cfg.noise.seed;
        // A perturbed preparation map or damping can push quadratures past
        // the +-1/2 readout range; clip instead of rejecting the series.
        noise.clip_out_of_range =
            cfg.spam.mode != SpamSpec::Mode::None || cfg.noise.damping_per_ns > 0.0;
        data = sample_shots(data, noise);
    }
    const std::string dir = output_dir(cfg, args);
    ensure_dir(dir);
    data.save(dir + "/data.json");
    data.save_csv(dir + "/data.csv");
    json prov;
    prov["format_version"] = kFormatVersion;
    prov["kind"] = "provenance";
    prov["provenance"] = provenance_json(make_provenance(cfg, cfg.noise.seed));
    save_text(prov.dump(2) + "\n", dir + "/provenance.json");
    std::cout << dir << "/data.json\n";
    return 0;
}

int run_identification(RunConfig cfg, const CommonArgs& args, bool force_bootstrap) {
    if (args.has_seed) {
        cfg.identify.solve.rng_seed = static_cast<std::uint64_t>(args.seed);
        cfg.bootstrap.rng_seed = static_cast<std::uint64_t>(args.seed);
    }
    if (args.no_regularization) {
        cfg.identify.regularize = false;
    }
    const TimeSeriesData series = TimeSeriesData::load(args.data_path);
    const HamiltonianParams target = cfg.target_params();
    const std::string dir = output_dir(cfg, args);
    ensure_dir(dir);
    const std::string result_path = dir + "/result.json";
    const Provenance prov = make_provenance(cfg, cfg.identify.solve.rng_seed);

    IdentificationRecord record;
    try {
        record.result = identify(series, target, cfg.identify);
    } catch (const std::runtime_error& e) {
        json failure;
        failure["format_version"] = kFormatVersion;
        failure["kind"] = "identification_failure";
        failure["provenance"] = provenance_json(prov);
        failure["error"] = e.what();
        save_text(failure.dump(2) + "\n", result_path);
        std::cerr << "identification failed: " << e.what() << "\n";
        return 2;
    }
    record.target = target.matrix();
    record.dt_ns = series.grid.dt_ns;
    if (cfg.target.kind == TargetSpec::Kind::Harper) {
        record.harper_b = cfg.target.b;
    }
    record.provenance = prov;

    bool bootstrap_failed = false;
    std::string bootstrap_error;
    if (force_bootstrap || args.has_bootstrap) {
        BootstrapConfig bcfg = cfg.bootstrap;
        if (args.has_bootstrap && args.bootstrap_n > 0) {
            bcfg.resamples = args.bootstrap_n;
        }
        bcfg.shots = series.shots.value_or(0);
        try {
            record.statistical = bootstrap_errors(record.result.h, series.grid, bcfg);
        } catch (const std::runtime_error& e) {
            bootstrap_failed = true;
            bootstrap_error = e.what();
        }
    }
    if (args.systematic) {
        record.systematic = ramp_systematic(record.result.h_raw, target.matrix(),
                                            cfg.ramp_config());
    }
    save_text(to_json_text(record), result_path);
    std::cout << result_path << "\n";
    if (bootstrap_failed) {
        std::cerr << "statistical error analysis failed: " << bootstrap_error << "\n";
        return 2;
    }
    return 0;
}

int cmd_ramp_model(RunConfig cfg, const CommonArgs& args) {
    if (args.has_seed) {
        cfg.spam.seed = static_cast<std::uint64_t>(args.seed);
    }
    const HamiltonianParams target = cfg.target_params();
    const RampModelConfig ramp = cfg.ramp_config();
    const SpamMap map_in = simulate_ramp_map(target.matrix(), ramp, RampDirection::In);
    const SpamMap map_out = simulate_ramp_map(target.matrix(), ramp, RampDirection::Out);
    const RealMatrix orthogonal = nearest_orthogonal(map_out.matrix);

    const std::string dir = output_dir(cfg, args);
    ensure_dir(dir);
    json doc;
    doc["format_version"] = kFormatVersion;
    doc["kind"] = "ramp-model";
    doc["provenance"] = provenance_json(make_provenance(cfg, cfg.spam.seed));
    doc["idle_mhz"] = std::vector<double>(ramp.idle_mhz.data(),
                                          ramp.idle_mhz.data() + ramp.idle_mhz.size());
    doc["speed_mhz_per_ns"] = ramp.speed_mhz_per_ns;
    doc["wait_ns"] = ramp.wait_ns;
    doc["step_ns"] = ramp.step_ns;
    doc["in_map"] = dump_complex(map_in.matrix);
    doc["out_map"] = dump_complex(map_out.matrix);
    doc["orthogonal_map"] = dump_real(orthogonal);
    save_text(doc.dump(2) + "\n", dir + "/ramp_model.json");
    std::cout << dir << "/ramp_model.json\n";

    // Calibration preview from one synthetic run at the target's diagonal.
    const RealVector diag = target.matrix().diagonal();
    const RealMatrix h_diag = RealMatrix(diag.asDiagonal());
    PhaseCalibrationRun run;
    run.target_mhz = diag;
    run.idle_mhz = ramp.idle_mhz;
    run.series = simulate_exact(h_diag, simulate_ramp_map(h_diag, ramp, RampDirection::In),
                                SpamMap::identity(target.dim()), cfg.grid);
    try {
        CalibrationRecord record;
        record.calibration = diag_phase_calibration({run});
        record.provenance = make_provenance(cfg, cfg.spam.seed);
        save_text(to_json_text(record), dir + "/calibration.json");
        std::cout << dir << "/calibration.json\n";
    } catch (const std::invalid_argument& e) {
        std::cerr << "calibration skipped: " << e.what() << "\n";
    }
    return 0;
}

int cmd_scan(RunConfig cfg, const CommonArgs& args) {
    if (args.has_seed) {
        cfg.scan.rng_seed = static_cast<std::uint64_t>(args.seed);
    }
    if (args.no_regularization) {
        cfg.scan.identify.regularize = false;
    }
    const LatticeGeometry& geometry = cfg.require_geometry();
    const std::string dir = output_dir(cfg, args);
    ensure_dir(dir);
    const Provenance prov = make_provenance(cfg, cfg.scan.rng_seed);
    ChipScanReport report;
    try {
        report = chip_scan(geometry, cfg.scan);
    } catch (const std::runtime_error& e) {
        json failure;
        failure["format_version"] = kFormatVersion;
        failure["kind"] = "scan_failure";
        failure["provenance"] = provenance_json(prov);
        failure["error"] = e.what();
        save_text(failure.dump(2) + "\n", dir + "/scan.json");
        std::cerr << "scan failed: " << e.what() << "\n";
        return 2;
    }
    ScanRecord record{report, prov};
    save_text(to_json_text(record), dir + "/scan.json");
    save_text(scan_to_csv(report), dir + "/scan_elements.csv");
    std::cout << dir << "/scan.json\n";
    return 0;
}

int cmd_report(const CommonArgs& args) {
    std::vector<IdentificationRecord> runs;
    std::vector<ScanRecord> scans;
    std::vector<CalibrationRecord> calibrations;
    for (const std::string& path : args.result_paths) {
        const std::string text = load_text(path);
        switch (result_kind(text)) {
            case ResultKind::Identification:
                runs.push_back(identification_from_json_text(text));
                break;
            case ResultKind::Scan:
                scans.push_back(scan_from_json_text(text));
                break;
            case ResultKind::Calibration:
                calibrations.push_back(calibration_from_json_text(text));
                break;
        }
    }
    const std::string dir = args.out_dir.empty() ? "report" : args.out_dir;
    ensure_dir(dir);
    for (const auto& [name, content] : build_report(runs, scans, calibrations)) {
        save_text(content, dir + "/" + name);
        std::cout << dir << "/" << name << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bosonic-lattice Hamiltonian identification toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    CommonArgs args;

    std::vector<CLI::Option*> seed_opts;
    CLI::Option* bootstrap_opt = nullptr;
    const auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* config = sub->add_option("--config", args.config_path, "run configuration file");
        if (needs_config) {
            config->required();
        }
        sub->add_option("--out", args.out_dir, "output directory (overrides the config)");
        seed_opts.push_back(
            sub->add_option("--seed", args.seed, "seed override for this command"));
    };

    CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic time series");
    add_common(simulate, true);

    CLI::App* identify = app.add_subcommand("identify", "identify the generator of a series");
    identify->add_option("data", args.data_path, "time-series JSON file")->required();
    add_common(identify, true);
    identify->add_flag("--no-regularization", args.no_regularization,
                       "disable the support-leakage penalty");
    bootstrap_opt = identify->add_option("--bootstrap", args.bootstrap_n,
                                         "add statistical errors from N resamples");
    identify->add_flag("--systematic", args.systematic,
                       "add ramp-model systematic error estimates");

    CLI::App* bootstrap = app.add_subcommand("bootstrap", "identify plus statistical errors");
    bootstrap->add_option("data", args.data_path, "time-series JSON file")->required();
    add_common(bootstrap, true);
    bootstrap->add_flag("--no-regularization", args.no_regularization,
                        "disable the support-leakage penalty");
    CLI::Option* bootstrap_opt2 = bootstrap->add_option(
        "--bootstrap", args.bootstrap_n, "number of resamples (overrides the config)");
    bootstrap->add_flag("--systematic", args.systematic,
                        "add ramp-model systematic error estimates");

    CLI::App* ramp_model = app.add_subcommand("ramp-model",
                                              "model pulse-ramp maps and phase calibration");
    add_common(ramp_model, true);

    CLI::App* scan = app.add_subcommand("scan", "benchmark every lattice element");
    add_common(scan, true);
    scan->add_flag("--no-regularization", args.no_regularization,
                   "disable the support-leakage penalty");

    CLI::App* report = app.add_subcommand("report", "format result files into tables and SVG");
    report->add_option("results", args.result_paths, "result JSON files")->required();
    report->add_option("--out", args.out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    for (const CLI::Option* opt : seed_opts) {
        args.has_seed = args.has_seed || opt->count() > 0;
    }
    args.has_bootstrap = (bootstrap_opt != nullptr && bootstrap_opt->count() > 0) ||
                         (bootstrap_opt2 != nullptr && bootstrap_opt2->count() > 0);

    try {
        if (report->parsed()) {
            return cmd_report(args);
        }
        RunConfig cfg = RunConfig::load(args.config_path);
        if (simulate->parsed()) {
            return cmd_simulate(std::move(cfg), args);
        }
        if (identify->parsed()) {
            return run_identification(std::move(cfg), args, false);
        }
        if (bootstrap->parsed()) {
            return run_identification(std::move(cfg), args, true);
        }
        if (ramp_model->parsed()) {
            return cmd_ramp_model(std::move(cfg), args);
        }
        if (scan->parsed()) {
            return cmd_scan(std::move(cfg), args);
        }
    } catch (const RankDeficiencyError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DegeneracyError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IdentificationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
