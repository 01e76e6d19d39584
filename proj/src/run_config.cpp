// run_config.cpp — Strict JSON parsing of run configurations.
#include "hamscope/run_config.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>

#include "hamscope/rng.hpp"
#include "hamscope/version.hpp"

namespace hamscope {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw std::invalid_argument("config " + where + ": " + what);
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
        fail(where, "must be an object");
    }
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* name : allowed) {
            if (key == name) {
                known = true;
                break;
            }
        }
        if (!known) {
            fail(where, "unknown key '" + key + "'");
        }
    }
}

double get_number(const json& obj, const std::string& where, const char* key,
                  double fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    if (!obj.at(key).is_number()) {
        fail(where, std::string("'") + key + "' must be a number");
    }
    return obj.at(key).get<double>();
}

long get_integer(const json& obj, const std::string& where, const char* key, long fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    if (!obj.at(key).is_number_integer()) {
        fail(where, std::string("'") + key + "' must be an integer");
    }
    return obj.at(key).get<long>();
}

std::uint64_t get_seed(const json& obj, const std::string& where, const char* key,
                       std::uint64_t fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    if (!obj.at(key).is_number_integer()) {
        fail(where, std::string("'") + key + "' must be an integer");
    }
    return obj.at(key).get<std::uint64_t>();
}

long get_shots(const json& obj, const std::string& where, long fallback) {
    if (!obj.contains("shots")) {
        return fallback;
    }
    const auto& value = obj.at("shots");
    if (value.is_string()) {
        if (value.get<std::string>() != "exact") {
            fail(where, "'shots' must be a count or \"exact\"");
        }
        return 0;
    }
    if (!value.is_number_integer() || value.get<long>() < 0) {
        fail(where, "'shots' must be a non-negative count or \"exact\"");
    }
    return value.get<long>();
}

RealMatrix parse_matrix(const json& value, const std::string& where) {
    if (!value.is_array() || value.empty()) {
        fail(where, "matrix must be a non-empty array of rows");
    }
    const auto n = static_cast<long>(value.size());
    RealMatrix matrix(n, n);
    for (long i = 0; i < n; ++i) {
        const auto& row = value.at(static_cast<std::size_t>(i));
        if (!row.is_array() || static_cast<long>(row.size()) != n) {
            fail(where, "matrix must be square");
        }
        for (long j = 0; j < n; ++j) {
            const auto& entry = row.at(static_cast<std::size_t>(j));
            if (!entry.is_number()) {
                fail(where, "matrix entries must be numbers");
            }
            matrix(i, j) = entry.get<double>();
        }
    }
    return matrix;
}

TargetSpec parse_target(const json& obj) {
    TargetSpec target;
    if (!obj.contains("type") || !obj.at("type").is_string()) {
        fail("target", "'type' must be \"harper\" or \"matrix\"");
    }
    const std::string type = obj.at("type").get<std::string>();
    if (type == "harper") {
        check_keys(obj, "target", {"type", "b", "j_mhz"});
        target.kind = TargetSpec::Kind::Harper;
        target.b = get_number(obj, "target", "b", 0.0);
        target.j_mhz = get_number(obj, "target", "j_mhz", 20.0);
    } else if (type == "matrix") {
        check_keys(obj, "target", {"type", "matrix"});
        target.kind = TargetSpec::Kind::Matrix;
        if (!obj.contains("matrix")) {
            fail("target", "matrix target needs a 'matrix' array");
        }
        target.matrix = parse_matrix(obj.at("matrix"), "target");
    } else {
        fail("target", "unknown type '" + type + "'");
    }
    return target;
}

SpamSpec parse_spam(const json& obj) {
    SpamSpec spam;
    if (!obj.contains("mode") || !obj.at("mode").is_string()) {
        fail("spam", "'mode' must be \"none\", \"random\", or \"ramp-model\"");
    }
    const std::string mode = obj.at("mode").get<std::string>();
    if (mode == "none") {
        check_keys(obj, "spam", {"mode"});
        spam.mode = SpamSpec::Mode::None;
    } else if (mode == "random") {
        check_keys(obj, "spam", {"mode", "s_scale", "seed"});
        spam.mode = SpamSpec::Mode::Random;
        spam.s_scale = get_number(obj, "spam", "s_scale", spam.s_scale);
        spam.seed = get_seed(obj, "spam", "seed", spam.seed);
    } else if (mode == "ramp-model") {
        check_keys(obj, "spam",
                   {"mode", "speed_mhz_per_ns", "wait_ns", "step_ns", "idle_mhz", "seed",
                    "idle_low_mhz", "idle_high_mhz"});
        spam.mode = SpamSpec::Mode::RampModel;
        spam.speed_mhz_per_ns = get_number(obj, "spam", "speed_mhz_per_ns", spam.speed_mhz_per_ns);
        spam.wait_ns = get_number(obj, "spam", "wait_ns", spam.wait_ns);
        spam.step_ns = get_number(obj, "spam", "step_ns", spam.step_ns);
        spam.seed = get_seed(obj, "spam", "seed", spam.seed);
        spam.idle_low_mhz = get_number(obj, "spam", "idle_low_mhz", spam.idle_low_mhz);
        spam.idle_high_mhz = get_number(obj, "spam", "idle_high_mhz", spam.idle_high_mhz);
        if (obj.contains("idle_mhz")) {
            if (!obj.at("idle_mhz").is_array()) {
                fail("spam", "'idle_mhz' must be an array");
            }
            for (const auto& entry : obj.at("idle_mhz")) {
                if (!entry.is_number()) {
                    fail("spam", "'idle_mhz' entries must be numbers");
                }
                spam.idle_mhz.push_back(entry.get<double>());
            }
        }
    } else {
        fail("spam", "unknown mode '" + mode + "'");
    }
    return spam;
}

void parse_preprocess(const json& obj, PreprocessConfig& cfg) {
    check_keys(obj, "pipeline.preprocess",
               {"stride", "window", "pinv_cutoff", "side", "cond_limit"});
    cfg.stride = get_integer(obj, "pipeline.preprocess", "stride", cfg.stride);
    cfg.window = get_integer(obj, "pipeline.preprocess", "window", cfg.window);
    cfg.pinv_cutoff = get_number(obj, "pipeline.preprocess", "pinv_cutoff", cfg.pinv_cutoff);
    cfg.cond_limit = get_number(obj, "pipeline.preprocess", "cond_limit", cfg.cond_limit);
    if (obj.contains("side")) {
        const std::string side = obj.at("side").is_string() ? obj.at("side").get<std::string>()
                                                            : std::string();
        if (side == "initial") {
            cfg.side = RampSide::Initial;
        } else if (side == "final") {
            cfg.side = RampSide::Final;
        } else {
            fail("pipeline.preprocess", "'side' must be \"initial\" or \"final\"");
        }
    }
}

void parse_eigensolve(const json& obj, EigenSolveConfig& cfg) {
    check_keys(obj, "pipeline.eigensolve",
               {"max_iterations", "gradient_tolerance", "restarts", "mu_initial", "mu_factor",
                "mu_stages", "fit_margin", "seed"});
    cfg.max_iterations = static_cast<int>(
        get_integer(obj, "pipeline.eigensolve", "max_iterations", cfg.max_iterations));
    cfg.gradient_tolerance =
        get_number(obj, "pipeline.eigensolve", "gradient_tolerance", cfg.gradient_tolerance);
    cfg.restarts =
        static_cast<int>(get_integer(obj, "pipeline.eigensolve", "restarts", cfg.restarts));
    cfg.mu_initial = get_number(obj, "pipeline.eigensolve", "mu_initial", cfg.mu_initial);
    cfg.mu_factor = get_number(obj, "pipeline.eigensolve", "mu_factor", cfg.mu_factor);
    cfg.mu_stages =
        static_cast<int>(get_integer(obj, "pipeline.eigensolve", "mu_stages", cfg.mu_stages));
    cfg.fit_margin = get_number(obj, "pipeline.eigensolve", "fit_margin", cfg.fit_margin);
    cfg.rng_seed = get_seed(obj, "pipeline.eigensolve", "seed", cfg.rng_seed);
}

void parse_site_map(const json& obj, const std::string& where, int num_sites,
                    std::map<int, double>& out) {
    if (!obj.is_object()) {
        fail(where, "must map 1-based site indices to values");
    }
    for (const auto& [key, value] : obj.items()) {
        int site = 0;
        try {
            site = std::stoi(key);
        } catch (const std::exception&) {
            fail(where, "site key '" + key + "' is not an integer");
        }
        if (site < 1 || site > num_sites) {
            fail(where, "site key '" + key + "' out of range");
        }
        if (!value.is_number()) {
            fail(where, "value for site '" + key + "' must be a number");
        }
        out[site - 1] = value.get<double>();
    }
}

}  // namespace

std::string content_hash(const std::string& text) {
    std::uint64_t hash = 1469598103934665603ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    std::ostringstream hex;
    hex << std::hex;
    for (int shift = 60; shift >= 0; shift -= 4) {
        hex << ((hash >> shift) & 0xF);
    }
    return hex.str();
}

RunConfig RunConfig::from_json_text(const std::string& text, const std::string& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    check_keys(doc, "root",
               {"format_version", "geometry", "target", "grid", "noise", "spam", "pipeline",
                "scan", "output"});
    if (!doc.contains("format_version") || !doc.at("format_version").is_number_integer() ||
        doc.at("format_version").get<int>() != kFormatVersion) {
        fail("root", "'format_version' must be 1");
    }

    RunConfig cfg;
    cfg.config_hash = content_hash(text);

    if (doc.contains("geometry")) {
        const auto& value = doc.at("geometry");
        if (value.is_string()) {
            std::filesystem::path path = value.get<std::string>();
            if (path.is_relative() && !base_dir.empty()) {
                path = std::filesystem::path(base_dir) / path;
            }
            cfg.geometry = LatticeGeometry::load(path.string());
        } else {
            cfg.geometry = LatticeGeometry::from_json_text(value.dump());
        }
    }

    if (!doc.contains("target")) {
        fail("root", "missing 'target'");
    }
    cfg.target = parse_target(doc.at("target"));

    if (doc.contains("grid")) {
        const auto& grid = doc.at("grid");
        check_keys(grid, "grid", {"dt_ns", "num_samples"});
        cfg.grid = TimeGrid(get_number(grid, "grid", "dt_ns", 1.0),
                            static_cast<int>(get_integer(grid, "grid", "num_samples", 201)));
    }

    if (doc.contains("noise")) {
        const auto& noise = doc.at("noise");
        check_keys(noise, "noise", {"shots", "damping_per_ns", "seed"});
        cfg.noise.shots = get_shots(noise, "noise", cfg.noise.shots);
        cfg.noise.damping_per_ns =
            get_number(noise, "noise", "damping_per_ns", cfg.noise.damping_per_ns);
        cfg.noise.seed = get_seed(noise, "noise", "seed", cfg.noise.seed);
    }

    if (doc.contains("spam")) {
        cfg.spam = parse_spam(doc.at("spam"));
    }

    if (doc.contains("pipeline")) {
        const auto& pipeline = doc.at("pipeline");
        check_keys(pipeline, "pipeline", {"preprocess", "esprit", "eigensolve", "bootstrap"});
        if (pipeline.contains("preprocess")) {
            parse_preprocess(pipeline.at("preprocess"), cfg.identify.preprocess);
        }
        if (pipeline.contains("esprit")) {
            const auto& esprit = pipeline.at("esprit");
            check_keys(esprit, "pipeline.esprit", {"hankel_rows"});
            cfg.identify.esprit_rows = static_cast<int>(
                get_integer(esprit, "pipeline.esprit", "hankel_rows", cfg.identify.esprit_rows));
        }
        if (pipeline.contains("eigensolve")) {
            parse_eigensolve(pipeline.at("eigensolve"), cfg.identify.solve);
        }
        if (pipeline.contains("bootstrap")) {
            const auto& bootstrap = pipeline.at("bootstrap");
            check_keys(bootstrap, "pipeline.bootstrap",
                       {"resamples", "quantile", "shots", "seed", "max_threads"});
            cfg.bootstrap.resamples =
                get_integer(bootstrap, "pipeline.bootstrap", "resamples", cfg.bootstrap.resamples);
            cfg.bootstrap.quantile =
                get_number(bootstrap, "pipeline.bootstrap", "quantile", cfg.bootstrap.quantile);
            cfg.bootstrap.shots = get_shots(bootstrap, "pipeline.bootstrap", cfg.bootstrap.shots);
            cfg.bootstrap.rng_seed =
                get_seed(bootstrap, "pipeline.bootstrap", "seed", cfg.bootstrap.rng_seed);
            cfg.bootstrap.max_threads = static_cast<unsigned>(get_integer(
                bootstrap, "pipeline.bootstrap", "max_threads", cfg.bootstrap.max_threads));
        }
    }
    // The resampling and scan pipelines reuse the main preprocessing and
    // line-search settings; restart counts stay at their warm-start defaults.
    cfg.bootstrap.preprocess = cfg.identify.preprocess;
    cfg.bootstrap.solve.max_iterations = cfg.identify.solve.max_iterations;
    cfg.bootstrap.solve.gradient_tolerance = cfg.identify.solve.gradient_tolerance;

    if (doc.contains("scan")) {
        const auto& scan = doc.at("scan");
        check_keys(scan, "scan",
                   {"subset_size", "min_coverage", "b_values", "j_mhz", "shots", "seed",
                    "s_perturbation", "detuning_bias_mhz", "final_phase_rad", "max_subsets",
                    "max_threads"});
        cfg.scan.identify = cfg.identify;
        cfg.scan.identify.solve.restarts = 0;
        cfg.scan.grid = cfg.grid;
        cfg.scan.subset_size =
            static_cast<int>(get_integer(scan, "scan", "subset_size", cfg.scan.subset_size));
        cfg.scan.min_coverage =
            static_cast<int>(get_integer(scan, "scan", "min_coverage", cfg.scan.min_coverage));
        cfg.scan.j_mhz = get_number(scan, "scan", "j_mhz", cfg.scan.j_mhz);
        cfg.scan.shots = get_shots(scan, "scan", cfg.scan.shots);
        cfg.scan.rng_seed = get_seed(scan, "scan", "seed", cfg.scan.rng_seed);
        cfg.scan.s_perturbation =
            get_number(scan, "scan", "s_perturbation", cfg.scan.s_perturbation);
        cfg.scan.max_subsets = get_integer(scan, "scan", "max_subsets", cfg.scan.max_subsets);
        cfg.scan.max_threads = static_cast<unsigned>(
            get_integer(scan, "scan", "max_threads", cfg.scan.max_threads));
        if (scan.contains("b_values")) {
            if (!scan.at("b_values").is_array() || scan.at("b_values").empty()) {
                fail("scan", "'b_values' must be a non-empty array");
            }
            cfg.scan.b_values.clear();
            for (const auto& entry : scan.at("b_values")) {
                if (!entry.is_number()) {
                    fail("scan", "'b_values' entries must be numbers");
                }
                cfg.scan.b_values.push_back(entry.get<double>());
            }
        }
        const int num_sites = cfg.geometry ? cfg.geometry->num_sites() : 0;
        if (scan.contains("detuning_bias_mhz")) {
            parse_site_map(scan.at("detuning_bias_mhz"), "scan.detuning_bias_mhz", num_sites,
                           cfg.scan.detuning_bias_mhz);
        }
        if (scan.contains("final_phase_rad")) {
            parse_site_map(scan.at("final_phase_rad"), "scan.final_phase_rad", num_sites,
                           cfg.scan.final_phase_rad);
        }
    }

    if (doc.contains("output")) {
        if (!doc.at("output").is_string()) {
            fail("root", "'output' must be a string");
        }
        cfg.output_dir = doc.at("output").get<std::string>();
    }
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("config: cannot open " + path);
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_json_text(buffer.str(),
                          std::filesystem::path(path).parent_path().string());
}

const LatticeGeometry& RunConfig::require_geometry() const {
    if (!geometry.has_value()) {
        throw std::invalid_argument("config: this command needs a 'geometry' section");
    }
    return *geometry;
}

HamiltonianParams RunConfig::target_params() const {
    const LatticeGeometry& geom = require_geometry();
    if (target.kind == TargetSpec::Kind::Harper) {
        return build_harper(target.b, target.j_mhz, geom);
    }
    if (target.matrix.rows() != geom.num_sites()) {
        throw std::invalid_argument("config: target matrix size does not match the geometry");
    }
    return HamiltonianParams(target.matrix, geom);
}

RampModelConfig RunConfig::ramp_config() const {
    RampModelConfig ramp;
    ramp.speed_mhz_per_ns = spam.speed_mhz_per_ns;
    ramp.wait_ns = spam.wait_ns;
    ramp.step_ns = spam.step_ns;
    if (!spam.idle_mhz.empty()) {
        ramp.idle_mhz = Eigen::Map<const RealVector>(spam.idle_mhz.data(),
                                                     static_cast<long>(spam.idle_mhz.size()));
    } else {
        const int n = require_geometry().num_sites();
        ramp.idle_mhz = random_idle_detunings(n, Rng::derive(spam.seed, 0x1d1eULL),
                                              spam.idle_low_mhz, spam.idle_high_mhz);
    }
    return ramp;
}

}  // namespace hamscope
