// run_config.hpp — Command-line run configuration with a strict JSON schema.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hamscope/bootstrap.hpp"
#include "hamscope/chip_scan.hpp"
#include "hamscope/geometry.hpp"
#include "hamscope/hamiltonian.hpp"
#include "hamscope/identify.hpp"
#include "hamscope/ramp_model.hpp"
#include "hamscope/timeseries.hpp"
#include "hamscope/types.hpp"

namespace hamscope {

struct TargetSpec {
    enum class Kind { Harper, Matrix };
    Kind kind = Kind::Harper;
    double b = 0.0;
    double j_mhz = 20.0;
    RealMatrix matrix;  // Kind::Matrix only
};

struct NoiseSpec {
    long shots = 1000;  // 0 keeps exact expectation values
    double damping_per_ns = 0.0;
    std::uint64_t seed = 0;
};

struct SpamSpec {
    enum class Mode { None, Random, RampModel };
    Mode mode = Mode::None;
    // Random mode: preparation map I + s_scale * Gaussian, measurement map a
    // diagonal unitary with phases uniform in (-pi, pi).
    double s_scale = 0.3;
    std::uint64_t seed = 0;
    // Ramp-model mode: both maps simulated from the pulse schedule.
    double speed_mhz_per_ns = 150.0;
    double wait_ns = 0.1;
    double step_ns = 0.01;
    std::vector<double> idle_mhz;  // empty draws random idle detunings
    double idle_low_mhz = 100.0;
    double idle_high_mhz = 500.0;
};

struct RunConfig {
    std::optional<LatticeGeometry> geometry;
    TargetSpec target;
    TimeGrid grid{1.0, 201};
    NoiseSpec noise;
    SpamSpec spam;
    IdentifyConfig identify;
    BootstrapConfig bootstrap;
    ChipScanConfig scan;
    std::string output_dir = "out";
    std::string config_hash;  // filled by the loader

    // Parses the strict schema: unknown keys anywhere are rejected, and a
    // geometry given as a file path is resolved relative to base_dir.
    static RunConfig from_json_text(const std::string& text, const std::string& base_dir);
    static RunConfig load(const std::string& path);

    const LatticeGeometry& require_geometry() const;
    HamiltonianParams target_params() const;
    // Ramp parameters of the spam section as a ramp-model configuration;
    // idle detunings are drawn from the configured band when not explicit.
    RampModelConfig ramp_config() const;
};

// FNV-1a hash of a text blob, hex encoded; used for config provenance.
std::string content_hash(const std::string& text);

}  // namespace hamscope
