// result_io.hpp — Result-file persistence and CSV/SVG report tables.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hamscope/bootstrap.hpp"
#include "hamscope/chip_scan.hpp"
#include "hamscope/identify.hpp"
#include "hamscope/systematic.hpp"
#include "hamscope/types.hpp"

namespace hamscope {

// Stamped into every result file so outputs can be traced to their inputs.
struct Provenance {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string version;
};

// One identification run plus the optional error analyses, as written by the
// command-line tool and consumed by the report generator.
struct IdentificationRecord {
    IdentificationResult result;
    RealMatrix target;                // comparison Hamiltonian
    double dt_ns = 0.0;               // sample spacing of the analyzed series
    std::optional<double> harper_b;   // flux parameter when the target family is known
    std::optional<StatisticalErrors> statistical;
    std::optional<SystematicErrors> systematic;
    Provenance provenance;
};

struct ScanRecord {
    ChipScanReport report;
    Provenance provenance;
};

struct CalibrationRecord {
    PhaseCalibration calibration;
    Provenance provenance;
};

enum class ResultKind { Identification, Scan, Calibration };

std::string to_json_text(const IdentificationRecord& record);
std::string to_json_text(const ScanRecord& record);
std::string to_json_text(const CalibrationRecord& record);

IdentificationRecord identification_from_json_text(const std::string& text);
ScanRecord scan_from_json_text(const std::string& text);
CalibrationRecord calibration_from_json_text(const std::string& text);

// Reads the "kind" tag of a serialized result. Throws std::invalid_argument
// on unknown kinds or malformed JSON.
ResultKind result_kind(const std::string& text);

std::string load_text(const std::string& path);
void save_text(const std::string& text, const std::string& path);

// Flat per-element summary of a chip scan:
// element_id,kind,median_dev_MHz,S_median,signflip_mean,coverage
std::string scan_to_csv(const ChipScanReport& report);

// Formats loaded results into CSV tables and simple SVG renderings, keyed by
// relative file name. Pure formatting: deviation matrices, residual-vs-time
// traces, frequency-vs-flux tables, and phase-vs-distance calibrations are
// taken from the records as stored. Throws std::invalid_argument when the
// record list is empty or identification records mix matrix sizes.
std::vector<std::pair<std::string, std::string>> build_report(
    const std::vector<IdentificationRecord>& runs, const std::vector<ScanRecord>& scans,
    const std::vector<CalibrationRecord>& calibrations);

}  // namespace hamscope
