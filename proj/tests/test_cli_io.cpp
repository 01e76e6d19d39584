// test_cli_io.cpp — Run-configuration schema, result persistence, and CLI behavior.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hamscope/geometry.hpp"
#include "hamscope/hamiltonian.hpp"
#include "hamscope/identify.hpp"
#include "hamscope/result_io.hpp"
#include "hamscope/run_config.hpp"
#include "hamscope/timeseries.hpp"
#include "hamscope/types.hpp"

namespace {

using hamscope::CalibrationRecord;
using hamscope::ChipScanReport;
using hamscope::FrequencySet;
using hamscope::IdentificationRecord;
using hamscope::LatticeGeometry;
using hamscope::MuStage;
using hamscope::Provenance;
using hamscope::RampSide;
using hamscope::RealMatrix;
using hamscope::RealVector;
using hamscope::RunConfig;
using hamscope::ScanFailure;
using hamscope::ScanRecord;
using hamscope::SpamMap;
using hamscope::SpamSpec;
using hamscope::TargetSpec;
using nlohmann::json;

bool contains(const std::string& text, const std::string& needle) {
    return text.find(needle) != std::string::npos;
}

// Runs a parser call expected to reject its input and returns the message.
template <typename Fn>
std::string rejection_message(Fn&& fn) {
    try {
        fn();
    } catch (const std::invalid_argument& e) {
        return e.what();
    }
    return "";
}

json minimal_config() {
    json cfg;
    cfg["format_version"] = 1;
    cfg["geometry"] = json::parse(LatticeGeometry::chain(3).to_json_text());
    cfg["target"] = json{{"type", "harper"}, {"b", 0.3}, {"j_mhz", 20.0}};
    return cfg;
}

RunConfig parse(const json& doc) {
    return RunConfig::from_json_text(doc.dump(), "");
}

std::string parse_error(const json& doc) {
    return rejection_message([&] { parse(doc); });
}

std::filesystem::path make_temp_dir(const std::string& tag) {
    static int counter = 0;
    const auto dir = std::filesystem::temp_directory_path() /
                     ("hamscope_" + tag + "_" + std::to_string(::getpid()) + "_" +
                      std::to_string(counter++));
    std::filesystem::create_directories(dir);
    return dir;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    REQUIRE(out.good());
    out << text;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

json read_json(const std::filesystem::path& path) {
    return json::parse(read_file(path));
}

// Invokes the installed command-line binary and returns its exit code.
int run_cli(const std::string& args, const std::filesystem::path& log_dir,
            const std::string& tag) {
    const std::string cmd = std::string(HAMSCOPE_CLI_PATH) + " " + args + " > " +
                            (log_dir / (tag + ".out")).string() + " 2> " +
                            (log_dir / (tag + ".err")).string();
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

double max_abs_diff(const RealMatrix& a, const RealMatrix& b) {
    REQUIRE(a.rows() == b.rows());
    REQUIRE(a.cols() == b.cols());
    return (a - b).cwiseAbs().maxCoeff();
}

RealMatrix symmetric3() {
    RealMatrix m(3, 3);
    m << 1.5, -2.0, 0.0, -2.0, 0.25, 3.0, 0.0, 3.0, -4.5;
    return m;
}

// A fully populated identification record for round-trip checks.
IdentificationRecord sample_identification(bool with_optionals) {
    IdentificationRecord rec;
    rec.dt_ns = 0.5;
    rec.target = symmetric3();
    rec.harper_b = with_optionals ? std::optional<double>(0.35) : std::nullopt;
    rec.provenance = Provenance{"0123456789abcdef", 42, "test"};

    auto& r = rec.result;
    RealVector freqs(3);
    freqs << -7.5, 1.25, 12.0;
    r.frequencies = FrequencySet::from_values(freqs);
    r.frequency_deviation = RealVector::LinSpaced(3, 0.01, 0.03);
    r.basis = RealMatrix::Identity(3, 3);
    r.basis(0, 1) = 0.125;
    r.h_raw = symmetric3();
    r.initial_map_raw = SpamMap{hamscope::ComplexMatrix::Identity(3, 3) * hamscope::Complex(0.5, -0.25)};
    RealVector signs(3);
    signs << 1.0, -1.0, 1.0;
    r.signs = signs;
    r.h = symmetric3() * 1.01;
    r.initial_map = SpamMap{hamscope::ComplexMatrix::Identity(3, 3) * hamscope::Complex(-0.5, 0.25)};
    r.analog_error = 0.007;
    r.data_fit = 1.5e-4;
    r.leakage = 2.5e-7;
    r.mu_used = 1.6;
    r.converged = true;
    r.stages = {MuStage{1.0, 1.4e-4, 3e-7, true}, MuStage{1.6, 1.5e-4, 2.5e-7, false}};
    r.diagnostics.per_series_rms = RealMatrix::Constant(3, 3, 0.002);
    r.diagnostics.instantaneous_rms = RealVector::Constant(4, 0.003);
    r.diagnostics.total_rms = 0.0025;

    if (with_optionals) {
        hamscope::StatisticalErrors stat;
        stat.per_entry = RealMatrix::Constant(3, 3, 0.16);
        stat.per_entry_max = 0.16;
        stat.accuracy = 0.12;
        stat.frequency = 0.32;
        stat.resamples_used = 500;
        stat.failures = 2;
        rec.statistical = stat;

        hamscope::SystematicErrors sys;
        sys.diagonal = 0.05;
        sys.off_diagonal = 0.02;
        sys.accuracy = 0.03;
        sys.rotated = symmetric3() * 0.99;
        sys.orthogonal_map = RealMatrix::Identity(3, 3);
        rec.systematic = sys;
    }
    return rec;
}

ChipScanReport sample_scan_report() {
    ChipScanReport report;
    report.num_sites = 2;
    report.couplers = {{0, 1}};
    report.site_median_mhz = RealVector(2);
    report.site_median_mhz << 1.25, std::numeric_limits<double>::quiet_NaN();
    report.coupler_median_mhz = RealVector::Constant(1, 0.5);
    report.site_s_median = RealVector(2);
    report.site_s_median << 0.01, std::numeric_limits<double>::quiet_NaN();
    report.site_signflip_mean = RealVector(2);
    report.site_signflip_mean << 0.0, std::numeric_limits<double>::quiet_NaN();
    report.site_coverage = {3, 0};
    report.coupler_coverage = {2};
    report.runs_total = 4;
    report.runs_failed = 1;
    report.failures = {ScanFailure{{0, 1}, 0.37, "frequency estimate exceeds half the target level spacing"}};
    return report;
}

}  // namespace

TEST_CASE("content hash is a deterministic 16-digit hex digest") {
    const std::string a = hamscope::content_hash("alpha");
    CHECK(a.size() == 16);
    CHECK(a.find_first_not_of("0123456789abcdef") == std::string::npos);
    CHECK(a == hamscope::content_hash("alpha"));
    CHECK(a != hamscope::content_hash("beta"));
    CHECK(hamscope::content_hash("").size() == 16);
}

TEST_CASE("minimal config takes documented defaults") {
    const RunConfig cfg = parse(minimal_config());
    CHECK(cfg.geometry.has_value());
    CHECK(cfg.geometry->num_sites() == 3);
    CHECK(cfg.target.kind == TargetSpec::Kind::Harper);
    CHECK(cfg.target.b == doctest::Approx(0.3));
    CHECK(cfg.target.j_mhz == doctest::Approx(20.0));
    CHECK(cfg.grid.dt_ns == doctest::Approx(1.0));
    CHECK(cfg.grid.num_samples == 201);
    CHECK(cfg.noise.shots == 1000);
    CHECK(cfg.noise.damping_per_ns == 0.0);
    CHECK(cfg.spam.mode == SpamSpec::Mode::None);
    CHECK(cfg.output_dir == "out");
    CHECK(cfg.config_hash == hamscope::content_hash(minimal_config().dump()));

    const hamscope::HamiltonianParams target = cfg.target_params();
    CHECK(max_abs_diff(target.matrix(), hamscope::build_harper(0.3, 20.0, *cfg.geometry).matrix()) ==
          doctest::Approx(0.0));
}

TEST_CASE("unknown keys are rejected at every nesting level") {
    struct Injection {
        std::string where;
        std::function<void(json&)> mutate;
    };
    const std::vector<Injection> cases = {
        {"root", [](json& c) { c["bogus"] = 1; }},
        {"target", [](json& c) { c["target"]["bogus"] = 1; }},
        {"grid", [](json& c) { c["grid"] = json{{"dt_ns", 1.0}, {"bogus", 1}}; }},
        {"noise", [](json& c) { c["noise"] = json{{"shots", 100}, {"bogus", 1}}; }},
        {"spam", [](json& c) { c["spam"] = json{{"mode", "none"}, {"bogus", 1}}; }},
        {"spam", [](json& c) { c["spam"] = json{{"mode", "random"}, {"bogus", 1}}; }},
        {"spam", [](json& c) { c["spam"] = json{{"mode", "ramp-model"}, {"bogus", 1}}; }},
        {"pipeline", [](json& c) { c["pipeline"] = json{{"bogus", json::object()}}; }},
        {"pipeline.preprocess",
         [](json& c) { c["pipeline"] = json{{"preprocess", json{{"bogus", 1}}}}; }},
        {"pipeline.esprit", [](json& c) { c["pipeline"] = json{{"esprit", json{{"bogus", 1}}}}; }},
        {"pipeline.eigensolve",
         [](json& c) { c["pipeline"] = json{{"eigensolve", json{{"bogus", 1}}}}; }},
        {"pipeline.bootstrap",
         [](json& c) { c["pipeline"] = json{{"bootstrap", json{{"bogus", 1}}}}; }},
        {"scan", [](json& c) { c["scan"] = json{{"bogus", 1}}; }},
    };
    for (const Injection& injection : cases) {
        json doc = minimal_config();
        injection.mutate(doc);
        const std::string message = parse_error(doc);
        CAPTURE(injection.where);
        CAPTURE(message);
        CHECK(contains(message, "config " + injection.where + ": unknown key 'bogus'"));
    }
}

TEST_CASE("malformed documents and wrong versions are rejected") {
    CHECK(contains(rejection_message([] {
              RunConfig::from_json_text("not json at all", "");
          }),
          "config:"));

    json doc = minimal_config();
    doc.erase("format_version");
    CHECK(contains(parse_error(doc), "'format_version' must be 1"));
    doc = minimal_config();
    doc["format_version"] = 2;
    CHECK(contains(parse_error(doc), "'format_version' must be 1"));
    doc = minimal_config();
    doc["format_version"] = "1";
    CHECK(contains(parse_error(doc), "'format_version' must be 1"));

    doc = minimal_config();
    doc.erase("target");
    CHECK(contains(parse_error(doc), "config root: missing 'target'"));

    doc = minimal_config();
    doc["output"] = 3;
    CHECK(contains(parse_error(doc), "'output' must be a string"));

    doc = minimal_config();
    doc["target"] = json{{"type", "xyz"}};
    CHECK(contains(parse_error(doc), "unknown type 'xyz'"));

    doc = minimal_config();
    doc["target"] = json{{"type", "matrix"}};
    CHECK(contains(parse_error(doc), "needs a 'matrix' array"));

    doc = minimal_config();
    doc["target"] = json{{"type", "matrix"}, {"matrix", json::array({json::array({1.0, 2.0}),
                                                                     json::array({3.0})})}};
    CHECK(contains(parse_error(doc), "matrix must be square"));

    doc = minimal_config();
    doc["target"] = json{{"type", "matrix"}, {"matrix", json::array()}};
    CHECK(contains(parse_error(doc), "non-empty"));

    doc = minimal_config();
    doc["grid"] = json{{"dt_ns", 0.0}, {"num_samples", 16}};
    CHECK_THROWS_AS(parse(doc), std::invalid_argument);

    doc = minimal_config();
    doc["spam"] = json{{"mode", "wiggle"}};
    CHECK(contains(parse_error(doc), "unknown mode 'wiggle'"));
}

TEST_CASE("shot counts accept the exact keyword everywhere") {
    json doc = minimal_config();
    doc["noise"] = json{{"shots", "exact"}};
    CHECK(parse(doc).noise.shots == 0);

    doc = minimal_config();
    doc["noise"] = json{{"shots", 250}};
    CHECK(parse(doc).noise.shots == 250);

    doc = minimal_config();
    doc["noise"] = json{{"shots", -3}};
    CHECK(contains(parse_error(doc), "'shots' must be a non-negative count or \"exact\""));

    doc = minimal_config();
    doc["noise"] = json{{"shots", "approximate"}};
    CHECK(contains(parse_error(doc), "'shots' must be a count or \"exact\""));

    doc = minimal_config();
    doc["pipeline"] = json{{"bootstrap", json{{"shots", "exact"}}}};
    CHECK(parse(doc).bootstrap.shots == 0);

    doc = minimal_config();
    doc["scan"] = json{{"shots", "exact"}};
    CHECK(parse(doc).scan.shots == 0);
}

TEST_CASE("pipeline settings propagate to the derived sections") {
    json doc = minimal_config();
    doc["grid"] = json{{"dt_ns", 0.5}, {"num_samples", 128}};
    doc["pipeline"] = json{
        {"preprocess", json{{"stride", 3}, {"window", 2}, {"pinv_cutoff", 1e-8},
                            {"side", "final"}, {"cond_limit", 1e5}}},
        {"esprit", json{{"hankel_rows", 40}}},
        {"eigensolve", json{{"max_iterations", 321}, {"gradient_tolerance", 1e-9},
                            {"restarts", 7}, {"mu_initial", 2.0}, {"mu_factor", 1.5},
                            {"mu_stages", 9}, {"fit_margin", 0.1}, {"seed", 11}}},
        {"bootstrap", json{{"resamples", 17}, {"quantile", 0.9}, {"shots", 250}, {"seed", 5},
                           {"max_threads", 2}}}};
    doc["scan"] = json{{"subset_size", 3}, {"min_coverage", 1}, {"b_values", json::array({0.37})}};
    const RunConfig cfg = parse(doc);

    CHECK(cfg.identify.preprocess.stride == 3);
    CHECK(cfg.identify.preprocess.window == 2);
    CHECK(cfg.identify.preprocess.pinv_cutoff == doctest::Approx(1e-8));
    CHECK(cfg.identify.preprocess.side == RampSide::Final);
    CHECK(cfg.identify.preprocess.cond_limit == doctest::Approx(1e5));
    CHECK(cfg.identify.esprit_rows == 40);
    CHECK(cfg.identify.solve.max_iterations == 321);
    CHECK(cfg.identify.solve.gradient_tolerance == doctest::Approx(1e-9));
    CHECK(cfg.identify.solve.restarts == 7);
    CHECK(cfg.identify.solve.mu_initial == doctest::Approx(2.0));
    CHECK(cfg.identify.solve.mu_factor == doctest::Approx(1.5));
    CHECK(cfg.identify.solve.mu_stages == 9);
    CHECK(cfg.identify.solve.fit_margin == doctest::Approx(0.1));
    CHECK(cfg.identify.solve.rng_seed == 11);

    CHECK(cfg.bootstrap.resamples == 17);
    CHECK(cfg.bootstrap.quantile == doctest::Approx(0.9));
    CHECK(cfg.bootstrap.shots == 250);
    CHECK(cfg.bootstrap.rng_seed == 5);
    CHECK(cfg.bootstrap.max_threads == 2);
    // Resampling reuses the preprocessing and line-search settings but keeps
    // its warm-start restart default.
    CHECK(cfg.bootstrap.preprocess.stride == 3);
    CHECK(cfg.bootstrap.preprocess.side == RampSide::Final);
    CHECK(cfg.bootstrap.solve.max_iterations == 321);
    CHECK(cfg.bootstrap.solve.gradient_tolerance == doctest::Approx(1e-9));
    CHECK(cfg.bootstrap.solve.restarts == 0);

    CHECK(cfg.scan.subset_size == 3);
    CHECK(cfg.scan.min_coverage == 1);
    REQUIRE(cfg.scan.b_values.size() == 1);
    CHECK(cfg.scan.b_values[0] == doctest::Approx(0.37));
    CHECK(cfg.scan.identify.solve.max_iterations == 321);
    CHECK(cfg.scan.identify.solve.restarts == 0);
    CHECK(cfg.scan.identify.preprocess.stride == 3);
    CHECK(cfg.scan.grid.dt_ns == doctest::Approx(0.5));
    CHECK(cfg.scan.grid.num_samples == 128);
}

TEST_CASE("scan site maps are one-based and validated") {
    json doc = minimal_config();
    doc["scan"] = json{{"detuning_bias_mhz", json{{"2", 1.5}}},
                       {"final_phase_rad", json{{"3", 3.04}}}};
    const RunConfig cfg = parse(doc);
    REQUIRE(cfg.scan.detuning_bias_mhz.size() == 1);
    CHECK(cfg.scan.detuning_bias_mhz.at(1) == doctest::Approx(1.5));
    REQUIRE(cfg.scan.final_phase_rad.size() == 1);
    CHECK(cfg.scan.final_phase_rad.at(2) == doctest::Approx(3.04));

    doc["scan"] = json{{"detuning_bias_mhz", json{{"0", 1.0}}}};
    CHECK(contains(parse_error(doc), "site key '0' out of range"));
    doc["scan"] = json{{"detuning_bias_mhz", json{{"4", 1.0}}}};
    CHECK(contains(parse_error(doc), "site key '4' out of range"));
    doc["scan"] = json{{"detuning_bias_mhz", json{{"x", 1.0}}}};
    CHECK(contains(parse_error(doc), "site key 'x' is not an integer"));
    doc["scan"] = json{{"final_phase_rad", json{{"2", "y"}}}};
    CHECK(contains(parse_error(doc), "value for site '2' must be a number"));

    doc["scan"] = json{{"b_values", json::array()}};
    CHECK(contains(parse_error(doc), "'b_values' must be a non-empty array"));
    doc["scan"] = json{{"b_values", json::array({"x"})}};
    CHECK(contains(parse_error(doc), "'b_values' entries must be numbers"));
}

TEST_CASE("geometry can be inline or a path relative to the config") {
    const auto dir = make_temp_dir("geom");
    write_file(dir / "geom4.json", LatticeGeometry::chain(4).to_json_text());
    json doc = minimal_config();
    doc["geometry"] = "geom4.json";
    write_file(dir / "cfg.json", doc.dump());

    const RunConfig cfg = RunConfig::load((dir / "cfg.json").string());
    REQUIRE(cfg.geometry.has_value());
    CHECK(cfg.geometry->num_sites() == 4);
    CHECK(cfg.geometry->has_edge(2, 3));

    // Absolute paths need no base directory.
    json doc_abs = minimal_config();
    doc_abs["geometry"] = (dir / "geom4.json").string();
    CHECK(RunConfig::from_json_text(doc_abs.dump(), "").geometry->num_sites() == 4);

    json doc_missing = minimal_config();
    doc_missing["geometry"] = (dir / "nope.json").string();
    CHECK_THROWS(parse(doc_missing));

    json doc_none = minimal_config();
    doc_none.erase("geometry");
    const RunConfig no_geom = parse(doc_none);
    CHECK_FALSE(no_geom.geometry.has_value());
    CHECK_THROWS_AS(no_geom.require_geometry(), std::invalid_argument);
    CHECK_THROWS_AS(no_geom.target_params(), std::invalid_argument);

    // A matrix target must match the geometry dimension.
    json doc_mismatch = minimal_config();
    doc_mismatch["target"] = json{{"type", "matrix"},
                                  {"matrix", json::array({json::array({1.0, 0.0}),
                                                          json::array({0.0, 2.0})})}};
    const RunConfig mismatched = parse(doc_mismatch);
    CHECK(contains(rejection_message([&] { mismatched.target_params(); }),
                   "target matrix size does not match the geometry"));

    CHECK_THROWS_AS(RunConfig::load((dir / "missing_config.json").string()),
                    std::runtime_error);
}

TEST_CASE("ramp configuration uses explicit idles or draws them from the band") {
    json doc = minimal_config();
    doc["spam"] = json{{"mode", "ramp-model"}, {"speed_mhz_per_ns", 120.0}, {"wait_ns", 0.2},
                       {"step_ns", 0.02}, {"idle_mhz", json::array({200.0, 300.0, 400.0})}};
    const RunConfig explicit_cfg = parse(doc);
    const hamscope::RampModelConfig explicit_ramp = explicit_cfg.ramp_config();
    CHECK(explicit_ramp.speed_mhz_per_ns == doctest::Approx(120.0));
    CHECK(explicit_ramp.wait_ns == doctest::Approx(0.2));
    CHECK(explicit_ramp.step_ns == doctest::Approx(0.02));
    REQUIRE(explicit_ramp.idle_mhz.size() == 3);
    CHECK(explicit_ramp.idle_mhz(1) == doctest::Approx(300.0));

    json doc_band = minimal_config();
    doc_band["spam"] = json{{"mode", "ramp-model"}, {"seed", 9}, {"idle_low_mhz", 150.0},
                            {"idle_high_mhz", 250.0}};
    const RunConfig band_cfg = parse(doc_band);
    const hamscope::RampModelConfig drawn = band_cfg.ramp_config();
    REQUIRE(drawn.idle_mhz.size() == 3);
    // Idle detunings land in the band in magnitude; the sign is random.
    for (long i = 0; i < drawn.idle_mhz.size(); ++i) {
        CHECK(std::abs(drawn.idle_mhz(i)) >= 150.0);
        CHECK(std::abs(drawn.idle_mhz(i)) <= 250.0);
    }
    // Redrawing from the same parsed config is deterministic.
    CHECK((band_cfg.ramp_config().idle_mhz - drawn.idle_mhz).cwiseAbs().maxCoeff() == 0.0);

    json doc_other_seed = doc_band;
    doc_other_seed["spam"]["seed"] = 10;
    CHECK((parse(doc_other_seed).ramp_config().idle_mhz - drawn.idle_mhz)
              .cwiseAbs()
              .maxCoeff() > 0.0);
}

TEST_CASE("identification records survive a serialization round trip") {
    const IdentificationRecord rec = sample_identification(true);
    const std::string text = to_json_text(rec);
    CHECK(hamscope::result_kind(text) == hamscope::ResultKind::Identification);

    const IdentificationRecord back = hamscope::identification_from_json_text(text);
    CHECK(back.dt_ns == doctest::Approx(rec.dt_ns));
    REQUIRE(back.harper_b.has_value());
    CHECK(*back.harper_b == doctest::Approx(0.35));
    CHECK(back.provenance.config_hash == "0123456789abcdef");
    CHECK(back.provenance.seed == 42);
    CHECK(back.provenance.version == "test");
    CHECK(max_abs_diff(back.target, rec.target) < 1e-12);
    CHECK((back.result.frequencies.mhz - rec.result.frequencies.mhz).cwiseAbs().maxCoeff() <
          1e-12);
    CHECK((back.result.frequency_deviation - rec.result.frequency_deviation)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK(max_abs_diff(back.result.basis, rec.result.basis) < 1e-12);
    CHECK(max_abs_diff(back.result.h_raw, rec.result.h_raw) < 1e-12);
    CHECK(max_abs_diff(back.result.h, rec.result.h) < 1e-12);
    CHECK((back.result.initial_map_raw.matrix - rec.result.initial_map_raw.matrix)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK((back.result.initial_map.matrix - rec.result.initial_map.matrix)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK((back.result.signs - rec.result.signs).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(back.result.analog_error == doctest::Approx(rec.result.analog_error));
    CHECK(back.result.data_fit == doctest::Approx(rec.result.data_fit));
    CHECK(back.result.leakage == doctest::Approx(rec.result.leakage));
    CHECK(back.result.mu_used == doctest::Approx(rec.result.mu_used));
    CHECK(back.result.converged == rec.result.converged);
    REQUIRE(back.result.stages.size() == 2);
    CHECK(back.result.stages[0].mu == doctest::Approx(1.0));
    CHECK(back.result.stages[0].accepted);
    CHECK_FALSE(back.result.stages[1].accepted);
    CHECK(max_abs_diff(back.result.diagnostics.per_series_rms,
                       rec.result.diagnostics.per_series_rms) < 1e-12);
    CHECK((back.result.diagnostics.instantaneous_rms -
           rec.result.diagnostics.instantaneous_rms)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK(back.result.diagnostics.total_rms == doctest::Approx(0.0025));

    REQUIRE(back.statistical.has_value());
    CHECK(back.statistical->per_entry_max == doctest::Approx(0.16));
    CHECK(back.statistical->accuracy == doctest::Approx(0.12));
    CHECK(back.statistical->frequency == doctest::Approx(0.32));
    CHECK(back.statistical->resamples_used == 500);
    CHECK(back.statistical->failures == 2);
    CHECK(max_abs_diff(back.statistical->per_entry, rec.statistical->per_entry) < 1e-12);
    REQUIRE(back.systematic.has_value());
    CHECK(back.systematic->diagonal == doctest::Approx(0.05));
    CHECK(back.systematic->off_diagonal == doctest::Approx(0.02));
    CHECK(back.systematic->accuracy == doctest::Approx(0.03));
    CHECK(max_abs_diff(back.systematic->rotated, rec.systematic->rotated) < 1e-12);
    CHECK(max_abs_diff(back.systematic->orthogonal_map, rec.systematic->orthogonal_map) <
          1e-12);

    // Optional blocks stay absent when never set.
    const IdentificationRecord bare =
        hamscope::identification_from_json_text(to_json_text(sample_identification(false)));
    CHECK_FALSE(bare.harper_b.has_value());
    CHECK_FALSE(bare.statistical.has_value());
    CHECK_FALSE(bare.systematic.has_value());
}

TEST_CASE("scan records round trip including missing-element medians") {
    const ScanRecord rec{sample_scan_report(), Provenance{"feedbeeffeedbeef", 7, "test"}};
    const std::string text = to_json_text(rec);
    CHECK(hamscope::result_kind(text) == hamscope::ResultKind::Scan);

    const ScanRecord back = hamscope::scan_from_json_text(text);
    CHECK(back.report.num_sites == 2);
    REQUIRE(back.report.couplers.size() == 1);
    CHECK(back.report.couplers[0].first == 0);
    CHECK(back.report.couplers[0].second == 1);
    CHECK(back.report.site_median_mhz(0) == doctest::Approx(1.25));
    CHECK(std::isnan(back.report.site_median_mhz(1)));
    CHECK(std::isnan(back.report.site_s_median(1)));
    CHECK(std::isnan(back.report.site_signflip_mean(1)));
    CHECK(back.report.coupler_median_mhz(0) == doctest::Approx(0.5));
    CHECK(back.report.site_coverage == std::vector<long>{3, 0});
    CHECK(back.report.coupler_coverage == std::vector<long>{2});
    CHECK(back.report.runs_total == 4);
    CHECK(back.report.runs_failed == 1);
    REQUIRE(back.report.failures.size() == 1);
    CHECK(back.report.failures[0].sites == std::vector<int>{0, 1});
    CHECK(back.report.failures[0].b == doctest::Approx(0.37));
    CHECK(contains(back.report.failures[0].reason, "level spacing"));
    CHECK(back.provenance.seed == 7);

    // The serialized site list is one-based.
    const json doc = json::parse(text);
    CHECK(doc.at("failures").at(0).at("sites") == json::array({1, 2}));
    CHECK(doc.at("couplers").at(0) == json::array({1, 2}));

    json tampered = doc;
    tampered["format_version"] = 2;
    CHECK_THROWS_AS(hamscope::scan_from_json_text(tampered.dump()), std::invalid_argument);
}

TEST_CASE("calibration records round trip and zero out non-finite fit values") {
    CalibrationRecord rec;
    rec.calibration.distances_mhz = {60.0, 90.0, 120.0};
    rec.calibration.phases_rad = {0.1, 0.2, 0.3};
    rec.calibration.envelope_slope_rad_per_mhz = 0.004;
    rec.calibration.envelope_offset_rad = 0.05;
    rec.calibration.total_time_ns = 0.6366;
    rec.calibration.offset_deg = 2.86;
    rec.calibration.quad_speed_mhz_per_ns = std::numeric_limits<double>::infinity();
    rec.calibration.quad_wait_ns = 0.1;
    rec.calibration.points_used_quadratic = 3;
    rec.provenance = Provenance{"cafe0123cafe0123", 5, "test"};

    const std::string text = to_json_text(rec);
    CHECK(hamscope::result_kind(text) == hamscope::ResultKind::Calibration);
    const CalibrationRecord back = hamscope::calibration_from_json_text(text);
    CHECK(back.calibration.distances_mhz == rec.calibration.distances_mhz);
    CHECK(back.calibration.phases_rad == rec.calibration.phases_rad);
    CHECK(back.calibration.envelope_slope_rad_per_mhz == doctest::Approx(0.004));
    CHECK(back.calibration.envelope_offset_rad == doctest::Approx(0.05));
    CHECK(back.calibration.total_time_ns == doctest::Approx(0.6366));
    CHECK(back.calibration.offset_deg == doctest::Approx(2.86));
    // A fit without measurable curvature stores zero, not infinity.
    CHECK(back.calibration.quad_speed_mhz_per_ns == 0.0);
    CHECK(back.calibration.quad_wait_ns == doctest::Approx(0.1));
    CHECK(back.calibration.points_used_quadratic == 3);
}

TEST_CASE("result kind dispatch rejects unknown or malformed documents") {
    CHECK_THROWS_AS(hamscope::result_kind("not json"), std::invalid_argument);
    CHECK_THROWS_AS(hamscope::result_kind("{}"), std::invalid_argument);
    CHECK_THROWS_AS(hamscope::result_kind(R"({"kind": "bogus"})"), std::invalid_argument);
    CHECK_THROWS_AS(hamscope::result_kind(R"({"kind": 3})"), std::invalid_argument);
    // Cross-kind loads are rejected.
    const std::string text = to_json_text(sample_identification(false));
    CHECK_THROWS_AS(hamscope::scan_from_json_text(text), std::invalid_argument);
}

TEST_CASE("scan CSV lists sites then couplers with one-based ids") {
    const std::string csv = hamscope::scan_to_csv(sample_scan_report());
    std::vector<std::string> lines;
    std::stringstream stream(csv);
    std::string line;
    while (std::getline(stream, line)) {
        lines.push_back(line);
    }
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "element_id,kind,median_dev_MHz,S_median,signflip_mean,coverage");
    CHECK(lines[1] == "site_1,site,1.25,0.01,0,3");
    CHECK(lines[2] == "site_2,site,nan,nan,nan,0");
    CHECK(lines[3] == "coupler_1_2,coupler,0.5,,,2");
}

TEST_CASE("report builder emits the expected file set") {
    CHECK_THROWS_AS(hamscope::build_report({}, {}, {}), std::invalid_argument);

    IdentificationRecord small = sample_identification(false);
    small.target = RealMatrix::Identity(2, 2);
    small.result.h = RealMatrix::Identity(2, 2);
    CHECK_THROWS_AS(hamscope::build_report({sample_identification(true), small}, {}, {}),
                    std::invalid_argument);

    const auto files = hamscope::build_report({sample_identification(true)}, {}, {});
    std::set<std::string> names;
    for (const auto& [name, content] : files) {
        CHECK_FALSE(content.empty());
        names.insert(name);
    }
    CHECK(names.count("deviation_matrices.csv") == 1);
    CHECK(names.count("deviation_0.svg") == 1);
    CHECK(names.count("rms_vs_time.csv") == 1);
    CHECK(names.count("rms_vs_time.svg") == 1);
    CHECK(names.count("frequency_vs_flux.csv") == 1);
    CHECK(names.count("frequency_vs_flux.svg") == 1);
    for (const auto& [name, content] : files) {
        if (name == "deviation_matrices.csv") {
            // Header plus one row per matrix entry.
            CHECK(std::count(content.begin(), content.end(), '\n') == 1 + 3 * 3);
            CHECK(contains(content, "record,row,col,abs_deviation_mhz"));
        }
        if (name == "rms_vs_time.csv") {
            CHECK(contains(content, "record,time_ns,rms"));
        }
        if (name == "frequency_vs_flux.csv") {
            CHECK(contains(content, "record,b,mode,frequency_mhz"));
            CHECK(std::count(content.begin(), content.end(), '\n') == 1 + 3);
        }
    }

    // Without a flux tag there is no butterfly table.
    const auto plain = hamscope::build_report({sample_identification(false)}, {}, {});
    for (const auto& [name, content] : plain) {
        CHECK_FALSE(contains(name, "frequency_vs_flux"));
    }

    const ScanRecord scan{sample_scan_report(), Provenance{}};
    CalibrationRecord cal;
    cal.calibration.distances_mhz = {60.0, 90.0, 120.0};
    cal.calibration.phases_rad = {0.1, 0.2, 0.3};
    const auto aux = hamscope::build_report({}, {scan}, {cal});
    std::set<std::string> aux_names;
    for (const auto& [name, content] : aux) {
        aux_names.insert(name);
    }
    CHECK(aux_names.count("scan_0_elements.csv") == 1);
    CHECK(aux_names.count("scan_0_sites.svg") == 1);
    CHECK(aux_names.count("phase_vs_distance.csv") == 1);
    CHECK(aux_names.count("phase_vs_distance_0.svg") == 1);
}

TEST_CASE("cli simulate writes data, csv, and provenance") {
    const auto dir = make_temp_dir("cli_sim");
    write_file(dir / "geom.json", LatticeGeometry::chain(3).to_json_text());
    json cfg = minimal_config();
    cfg["geometry"] = "geom.json";
    cfg["grid"] = json{{"dt_ns", 1.0}, {"num_samples", 64}};
    cfg["noise"] = json{{"shots", "exact"}};
    write_file(dir / "cfg.json", cfg.dump(2));

    const std::string out = (dir / "sim").string();
    CHECK(run_cli("simulate --config " + (dir / "cfg.json").string() + " --out " + out, dir,
                  "simulate") == 0);
    CHECK(std::filesystem::exists(out + "/data.json"));
    CHECK(std::filesystem::exists(out + "/data.csv"));
    CHECK(std::filesystem::exists(out + "/provenance.json"));

    const hamscope::TimeSeriesData data = hamscope::TimeSeriesData::load(out + "/data.json");
    CHECK(data.dim() == 3);
    CHECK(data.grid.num_samples == 64);
    CHECK(data.exact());
    CHECK(data.max_abs() <= 0.5 + 1e-9);

    const json prov = read_json(out + "/provenance.json");
    CHECK(prov.at("kind") == "provenance");
    CHECK(prov.at("format_version") == 1);
    CHECK(prov.at("provenance").at("config_hash") ==
          RunConfig::load((dir / "cfg.json").string()).config_hash);

    const std::string csv = read_file(out + "/data.csv");
    CHECK(contains(csv, "m,n,t,x,p"));
}

TEST_CASE("cli seed override makes simulated shots reproducible") {
    const auto dir = make_temp_dir("cli_seed");
    write_file(dir / "geom.json", LatticeGeometry::chain(3).to_json_text());
    json cfg = minimal_config();
    cfg["geometry"] = "geom.json";
    cfg["grid"] = json{{"dt_ns", 1.0}, {"num_samples", 48}};
    cfg["noise"] = json{{"shots", 400}, {"seed", 1}};
    write_file(dir / "cfg.json", cfg.dump(2));
    const std::string base = "simulate --config " + (dir / "cfg.json").string();

    CHECK(run_cli(base + " --seed 7 --out " + (dir / "a").string(), dir, "a") == 0);
    CHECK(run_cli(base + " --seed 7 --out " + (dir / "b").string(), dir, "b") == 0);
    CHECK(run_cli(base + " --seed 8 --out " + (dir / "c").string(), dir, "c") == 0);

    const std::string a = read_file(dir / "a" / "data.json");
    CHECK(a == read_file(dir / "b" / "data.json"));
    CHECK(a != read_file(dir / "c" / "data.json"));

    const hamscope::TimeSeriesData data = hamscope::TimeSeriesData::load((dir / "a" / "data.json").string());
    REQUIRE(data.shots.has_value());
    CHECK(*data.shots == 400);
}

TEST_CASE("cli identify recovers an exact target and honors flags") {
    const auto dir = make_temp_dir("cli_id");
    write_file(dir / "geom.json", LatticeGeometry::chain(3).to_json_text());
    json cfg = minimal_config();
    cfg["geometry"] = "geom.json";
    cfg["grid"] = json{{"dt_ns", 1.0}, {"num_samples", 64}};
    cfg["noise"] = json{{"shots", "exact"}};
    write_file(dir / "cfg.json", cfg.dump(2));
    const std::string cfg_path = (dir / "cfg.json").string();

    CHECK(run_cli("simulate --config " + cfg_path + " --out " + (dir / "sim").string(), dir,
                  "sim") == 0);
    const std::string data_path = (dir / "sim" / "data.json").string();

    CHECK(run_cli("identify " + data_path + " --config " + cfg_path + " --systematic --out " +
                      (dir / "id").string(),
                  dir, "identify") == 0);
    const json result = read_json(dir / "id" / "result.json");
    CHECK(result.at("kind") == "identification");
    CHECK(result.at("format_version") == 1);
    CHECK(result.at("analog_error_mhz").get<double>() < 1e-4);
    CHECK(result.at("harper_b").get<double>() == doctest::Approx(0.3));
    CHECK(result.at("converged").get<bool>());
    CHECK(result.contains("errors"));
    CHECK(result.at("errors").contains("systematic"));
    CHECK(result.at("errors").at("systematic").at("orthogonal_map").size() == 3);
    const IdentificationRecord loaded =
        hamscope::identification_from_json_text(read_file(dir / "id" / "result.json"));
    CHECK(loaded.result.analog_error < 1e-4);

    // Disabling regularization skips the penalty ramp entirely.
    CHECK(run_cli("identify " + data_path + " --config " + cfg_path +
                      " --no-regularization --out " + (dir / "noreg").string(),
                  dir, "noreg") == 0);
    const json noreg = read_json(dir / "noreg" / "result.json");
    CHECK(noreg.at("mu_used").get<double>() == 0.0);
    CHECK(noreg.at("stages").empty());
}

TEST_CASE("cli bootstrap inherits the shot count from the data file") {
    const auto dir = make_temp_dir("cli_boot");
    write_file(dir / "geom.json", LatticeGeometry::chain(3).to_json_text());
    json cfg = minimal_config();
    cfg["geometry"] = "geom.json";
    cfg["grid"] = json{{"dt_ns", 1.0}, {"num_samples", 48}};
    cfg["noise"] = json{{"shots", "exact"}};
    cfg["pipeline"] = json{{"bootstrap", json{{"resamples", 6}, {"quantile", 0.9},
                                              {"max_threads", 2}}}};
    write_file(dir / "cfg.json", cfg.dump(2));
    const std::string cfg_path = (dir / "cfg.json").string();

    CHECK(run_cli("simulate --config " + cfg_path + " --out " + (dir / "sim").string(), dir,
                  "sim") == 0);
    CHECK(run_cli("bootstrap " + (dir / "sim" / "data.json").string() + " --config " +
                      cfg_path + " --out " + (dir / "exact").string(),
                  dir, "boot_exact") == 0);
    const json exact = read_json(dir / "exact" / "result.json");
    REQUIRE(exact.at("errors").contains("statistical"));
    CHECK(exact.at("errors").at("statistical").at("resamples_used").get<long>() == 6);
    // Exact data resamples exactly; the spread collapses.
    CHECK(exact.at("errors").at("statistical").at("per_entry_max_mhz").get<double>() < 1e-6);

    json cfg_shots = cfg;
    cfg_shots["noise"] = json{{"shots", 500}, {"seed", 3}};
    write_file(dir / "cfg_shots.json", cfg_shots.dump(2));
    const std::string shots_cfg = (dir / "cfg_shots.json").string();
    CHECK(run_cli("simulate --config " + shots_cfg + " --out " + (dir / "sim_shots").string(),
                  dir, "sim_shots") == 0);
    CHECK(run_cli("bootstrap " + (dir / "sim_shots" / "data.json").string() + " --config " +
                      shots_cfg + " --out " + (dir / "noisy").string(),
                  dir, "boot_noisy") == 0);
    const json noisy = read_json(dir / "noisy" / "result.json");
    CHECK(noisy.at("errors").at("statistical").at("per_entry_max_mhz").get<double>() > 1e-4);
}

TEST_CASE("cli surfaces identification failure with exit code 2") {
    const auto dir = make_temp_dir("cli_fail");
    write_file(dir / "geom.json", LatticeGeometry::chain(2).to_json_text());
    json cfg = minimal_config();
    cfg["geometry"] = "geom.json";
    cfg["target"] = json{{"type", "matrix"},
                         {"matrix", json::array({json::array({15.0, 0.0}),
                                                 json::array({0.0, 15.0})})}};
    cfg["grid"] = json{{"dt_ns", 1.0}, {"num_samples", 32}};
    cfg["noise"] = json{{"shots", "exact"}};
    write_file(dir / "cfg.json", cfg.dump(2));
    const std::string cfg_path = (dir / "cfg.json").string();

    CHECK(run_cli("simulate --config " + cfg_path + " --out " + (dir / "sim").string(), dir,
                  "sim") == 0);
    CHECK(run_cli("identify " + (dir / "sim" / "data.json").string() + " --config " + cfg_path +
                      " --out " + (dir / "id").string(),
                  dir, "identify") == 2);
    // The failure record is retained for post-mortems.
    const json failure = read_json(dir / "id" / "result.json");
    CHECK(failure.at("kind") == "identification_failure");
    CHECK_FALSE(failure.at("error").get<std::string>().empty());
}

TEST_CASE("cli usage and io problems exit with code 1") {
    const auto dir = make_temp_dir("cli_usage");
    write_file(dir / "geom.json", LatticeGeometry::chain(3).to_json_text());
    json cfg = minimal_config();
    cfg["geometry"] = "geom.json";
    write_file(dir / "cfg.json", cfg.dump(2));
    json bad = cfg;
    bad["bogus"] = 1;
    write_file(dir / "bad.json", bad.dump(2));

    CHECK(run_cli("--version", dir, "version") == 0);
    CHECK(run_cli("frobnicate", dir, "unknown_cmd") == 1);
    CHECK(run_cli("identify", dir, "missing_args") == 1);
    CHECK(run_cli("simulate --config " + (dir / "absent.json").string(), dir,
                  "missing_config") == 1);
    CHECK(run_cli("simulate --config " + (dir / "bad.json").string(), dir, "bad_config") == 1);
    CHECK(run_cli("identify " + (dir / "no_data.json").string() + " --config " +
                      (dir / "cfg.json").string(),
                  dir, "missing_data") == 1);
    CHECK(run_cli("report", dir, "report_no_args") == 1);
    write_file(dir / "mangled.json", "{}");
    CHECK(run_cli("report " + (dir / "mangled.json").string() + " --out " +
                      (dir / "rep").string(),
                  dir, "report_mangled") == 1);
}

TEST_CASE("cli scan writes reports and flags coverage failures") {
    const auto dir = make_temp_dir("cli_scan");
    json cfg = minimal_config();
    cfg["geometry"] = json::parse(LatticeGeometry::chain(2).to_json_text());
    cfg["grid"] = json{{"dt_ns", 1.0}, {"num_samples", 48}};
    cfg["scan"] = json{{"subset_size", 2}, {"min_coverage", 1},
                       {"b_values", json::array({0.37})}, {"shots", "exact"}, {"seed", 3},
                       {"max_threads", 2}};
    write_file(dir / "cfg.json", cfg.dump(2));

    CHECK(run_cli("scan --config " + (dir / "cfg.json").string() + " --out " +
                      (dir / "scan").string(),
                  dir, "scan") == 0);
    const json report = read_json(dir / "scan" / "scan.json");
    CHECK(report.at("kind") == "scan");
    CHECK(report.at("runs_failed").get<long>() == 0);
    CHECK(report.at("num_sites").get<int>() == 2);
    const std::string csv = read_file(dir / "scan" / "scan_elements.csv");
    CHECK(contains(csv, "element_id,kind,median_dev_MHz,S_median,signflip_mean,coverage"));
    CHECK(contains(csv, "site_1,site,"));
    CHECK(contains(csv, "coupler_1_2,coupler,"));

    json starved = cfg;
    starved["scan"]["min_coverage"] = 3;
    starved["scan"]["max_subsets"] = 2;
    write_file(dir / "starved.json", starved.dump(2));
    CHECK(run_cli("scan --config " + (dir / "starved.json").string() + " --out " +
                      (dir / "starved_out").string(),
                  dir, "scan_starved") == 2);
    const json failure = read_json(dir / "starved_out" / "scan.json");
    CHECK(failure.at("kind") == "scan_failure");
    CHECK_FALSE(failure.at("error").get<std::string>().empty());
}

TEST_CASE("cli ramp-model writes maps and a calibration preview") {
    const auto dir = make_temp_dir("cli_ramp");
    json cfg = minimal_config();
    cfg["grid"] = json{{"dt_ns", 1.0}, {"num_samples", 64}};
    cfg["spam"] = json{{"mode", "ramp-model"}, {"speed_mhz_per_ns", 150.0}, {"wait_ns", 0.1},
                       {"step_ns", 0.01}, {"idle_mhz", json::array({60.0, 90.0, 120.0})}};
    write_file(dir / "cfg.json", cfg.dump(2));

    CHECK(run_cli("ramp-model --config " + (dir / "cfg.json").string() + " --out " +
                      (dir / "ramp").string(),
                  dir, "ramp") == 0);
    const json model = read_json(dir / "ramp" / "ramp_model.json");
    CHECK(model.at("kind") == "ramp-model");
    CHECK(model.at("in_map").size() == 3);
    CHECK(model.at("out_map").size() == 3);
    CHECK(model.at("orthogonal_map").size() == 3);
    CHECK(model.at("speed_mhz_per_ns").get<double>() == doctest::Approx(150.0));

    // Three distinct idle distances make the calibration preview available.
    REQUIRE(std::filesystem::exists(dir / "ramp" / "calibration.json"));
    const CalibrationRecord cal = hamscope::calibration_from_json_text(
        read_file(dir / "ramp" / "calibration.json"));
    CHECK(cal.calibration.distances_mhz.size() == 3);
    CHECK(cal.calibration.points_used_quadratic >= 1);
}

TEST_CASE("cli report renders identification and scan results together") {
    const auto dir = make_temp_dir("cli_report");
    write_file(dir / "geom.json", LatticeGeometry::chain(3).to_json_text());
    json cfg = minimal_config();
    cfg["geometry"] = "geom.json";
    cfg["grid"] = json{{"dt_ns", 1.0}, {"num_samples", 64}};
    cfg["noise"] = json{{"shots", "exact"}};
    write_file(dir / "cfg.json", cfg.dump(2));
    const std::string cfg_path = (dir / "cfg.json").string();

    CHECK(run_cli("simulate --config " + cfg_path + " --out " + (dir / "sim").string(), dir,
                  "sim") == 0);
    CHECK(run_cli("identify " + (dir / "sim" / "data.json").string() + " --config " + cfg_path +
                      " --out " + (dir / "id").string(),
                  dir, "identify") == 0);
    // A scan result with empty-coverage medians exercises the NaN path.
    const ScanRecord scan{sample_scan_report(), Provenance{"0", 0, "test"}};
    write_file(dir / "scan.json", to_json_text(scan));

    CHECK(run_cli("report " + (dir / "id" / "result.json").string() + " " +
                      (dir / "scan.json").string() + " --out " + (dir / "rep").string(),
                  dir, "report") == 0);
    CHECK(std::filesystem::exists(dir / "rep" / "deviation_matrices.csv"));
    CHECK(std::filesystem::exists(dir / "rep" / "deviation_0.svg"));
    CHECK(std::filesystem::exists(dir / "rep" / "rms_vs_time.csv"));
    CHECK(std::filesystem::exists(dir / "rep" / "rms_vs_time.svg"));
    CHECK(std::filesystem::exists(dir / "rep" / "frequency_vs_flux.csv"));
    CHECK(std::filesystem::exists(dir / "rep" / "scan_0_elements.csv"));
    CHECK(std::filesystem::exists(dir / "rep" / "scan_0_sites.svg"));
    const std::string svg = read_file(dir / "rep" / "deviation_0.svg");
    CHECK(contains(svg, "<svg"));
}
