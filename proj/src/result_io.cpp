// result_io.cpp — Result-file persistence and CSV/SVG report tables.
#include "hamscope/result_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "hamscope/metrics.hpp"
#include "hamscope/version.hpp"

namespace hamscope {

namespace {

using nlohmann::json;

json dump_real_matrix(const RealMatrix& m) {
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

json dump_complex_matrix(const ComplexMatrix& m) {
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

json dump_real_vector(const RealVector& v) {
    json out = json::array();
    for (long i = 0; i < v.size(); ++i) {
        out.push_back(v(i));
    }
    return out;
}

[[noreturn]] void fail(const std::string& what) {
    throw std::invalid_argument("result file: " + what);
}

double parse_number(const json& value, const char* where) {
    // Non-finite values (e.g. medians of an element no run covered) are
    // serialized as JSON null; map them back to NaN on load.
    if (value.is_null()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (!value.is_number()) {
        fail(std::string(where) + " must be a number");
    }
    return value.get<double>();
}

RealMatrix parse_real_matrix(const json& value, const char* where) {
    if (!value.is_array()) {
        fail(std::string(where) + " must be an array of rows");
    }
    const long rows = static_cast<long>(value.size());
    long cols = 0;
    RealMatrix m;
    for (long i = 0; i < rows; ++i) {
        const auto& row = value.at(static_cast<std::size_t>(i));
        if (!row.is_array()) {
            fail(std::string(where) + " rows must be arrays");
        }
        if (i == 0) {
            cols = static_cast<long>(row.size());
            m.resize(rows, cols);
        }
        if (static_cast<long>(row.size()) != cols) {
            fail(std::string(where) + " rows must have equal length");
        }
        for (long j = 0; j < cols; ++j) {
            m(i, j) = parse_number(row.at(static_cast<std::size_t>(j)), where);
        }
    }
    return m;
}

ComplexMatrix parse_complex_matrix(const json& value, const char* where) {
    if (!value.is_array()) {
        fail(std::string(where) + " must be an array of rows");
    }
    const long rows = static_cast<long>(value.size());
    long cols = 0;
    ComplexMatrix m;
    for (long i = 0; i < rows; ++i) {
        const auto& row = value.at(static_cast<std::size_t>(i));
        if (!row.is_array()) {
            fail(std::string(where) + " rows must be arrays");
        }
        if (i == 0) {
            cols = static_cast<long>(row.size());
            m.resize(rows, cols);
        }
        if (static_cast<long>(row.size()) != cols) {
            fail(std::string(where) + " rows must have equal length");
        }
        for (long j = 0; j < cols; ++j) {
            const auto& entry = row.at(static_cast<std::size_t>(j));
            if (!entry.is_array() || entry.size() != 2) {
                fail(std::string(where) + " entries must be [re, im] pairs");
            }
            m(i, j) = Complex(parse_number(entry.at(0), where), parse_number(entry.at(1), where));
        }
    }
    return m;
}

RealVector parse_real_vector(const json& value, const char* where) {
    if (!value.is_array()) {
        fail(std::string(where) + " must be an array");
    }
    RealVector v(static_cast<long>(value.size()));
    for (long i = 0; i < v.size(); ++i) {
        v(i) = parse_number(value.at(static_cast<std::size_t>(i)), where);
    }
    return v;
}

json dump_provenance(const Provenance& prov) {
    return json{{"config_hash", prov.config_hash},
                {"seed", prov.seed},
                {"version", prov.version.empty() ? std::string(kVersion) : prov.version}};
}

Provenance parse_provenance(const json& doc) {
    Provenance prov;
    if (!doc.contains("provenance")) {
        return prov;
    }
    const auto& obj = doc.at("provenance");
    if (obj.contains("config_hash") && obj.at("config_hash").is_string()) {
        prov.config_hash = obj.at("config_hash").get<std::string>();
    }
    if (obj.contains("seed") && obj.at("seed").is_number_integer()) {
        prov.seed = obj.at("seed").get<std::uint64_t>();
    }
    if (obj.contains("version") && obj.at("version").is_string()) {
        prov.version = obj.at("version").get<std::string>();
    }
    return prov;
}

json open_result(const std::string& text, const char* kind) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        fail(e.what());
    }
    if (!doc.is_object() || !doc.contains("format_version") ||
        doc.at("format_version") != kFormatVersion) {
        fail("'format_version' must be 1");
    }
    if (!doc.contains("kind") || doc.at("kind") != kind) {
        fail(std::string("expected kind '") + kind + "'");
    }
    return doc;
}

double finite_or_zero(double v) {
    return std::isfinite(v) ? v : 0.0;
}

std::string fmt_csv(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    std::ostringstream out;
    out << std::setprecision(12) << v;
    return out.str();
}

std::string fmt_px(double v) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2) << v;
    return out.str();
}

std::string fmt_label(double v) {
    std::ostringstream out;
    out << std::setprecision(4) << v;
    return out.str();
}

std::string svg_heatmap(const RealMatrix& m, const std::string& title) {
    const long n_rows = m.rows();
    const long n_cols = m.cols();
    const double cell = std::min(32.0, 520.0 / static_cast<double>(std::max(n_rows, n_cols)));
    const double left = 50.0;
    const double top = 40.0;
    const double width = left + cell * static_cast<double>(n_cols) + 20.0;
    const double height = top + cell * static_cast<double>(n_rows) + 40.0;
    const double max_val = m.size() > 0 ? m.cwiseAbs().maxCoeff() : 0.0;

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt_px(width)
        << "\" height=\"" << fmt_px(height) << "\" font-family=\"sans-serif\">\n";
    out << "<text x=\"" << fmt_px(left) << "\" y=\"22\" font-size=\"14\">" << title
        << "</text>\n";
    for (long i = 0; i < n_rows; ++i) {
        for (long j = 0; j < n_cols; ++j) {
            const double t = max_val > 0.0 ? std::abs(m(i, j)) / max_val : 0.0;
            const int r = static_cast<int>(std::lround(255.0 - t * (255.0 - 178.0)));
            const int g = static_cast<int>(std::lround(255.0 - t * (255.0 - 24.0)));
            const int b = static_cast<int>(std::lround(255.0 - t * (255.0 - 43.0)));
            out << "<rect x=\"" << fmt_px(left + cell * static_cast<double>(j)) << "\" y=\""
                << fmt_px(top + cell * static_cast<double>(i)) << "\" width=\"" << fmt_px(cell)
                << "\" height=\"" << fmt_px(cell) << "\" fill=\"rgb(" << r << "," << g << ","
                << b << ")\" stroke=\"#cccccc\" stroke-width=\"0.5\"/>\n";
        }
    }
    out << "<text x=\"" << fmt_px(left) << "\" y=\""
        << fmt_px(top + cell * static_cast<double>(n_rows) + 24.0)
        << "\" font-size=\"12\">max = " << fmt_label(max_val) << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

struct PlotSeries {
    std::string label;
    std::vector<double> xs;
    std::vector<double> ys;
};

std::string svg_line_plot(const std::vector<PlotSeries>& series, const std::string& title,
                          const std::string& x_label, const std::string& y_label) {
    static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                     "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    const double width = 560.0;
    const double height = 360.0;
    const double left = 64.0;
    const double right = width - 20.0;
    const double top = 36.0;
    const double bottom = height - 46.0;

    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    bool first = true;
    for (const auto& s : series) {
        for (std::size_t k = 0; k < s.xs.size(); ++k) {
            if (first) {
                x_min = x_max = s.xs[k];
                y_min = y_max = s.ys[k];
                first = false;
            } else {
                x_min = std::min(x_min, s.xs[k]);
                x_max = std::max(x_max, s.xs[k]);
                y_min = std::min(y_min, s.ys[k]);
                y_max = std::max(y_max, s.ys[k]);
            }
        }
    }
    if (x_max <= x_min) {
        x_max = x_min + 1.0;
    }
    if (y_max <= y_min) {
        y_max = y_min + 1.0;
    }
    const auto map_x = [&](double x) {
        return left + (x - x_min) / (x_max - x_min) * (right - left);
    };
    const auto map_y = [&](double y) {
        return bottom - (y - y_min) / (y_max - y_min) * (bottom - top);
    };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt_px(width)
        << "\" height=\"" << fmt_px(height) << "\" font-family=\"sans-serif\">\n";
    out << "<text x=\"" << fmt_px(left) << "\" y=\"22\" font-size=\"14\">" << title
        << "</text>\n";
    out << "<rect x=\"" << fmt_px(left) << "\" y=\"" << fmt_px(top) << "\" width=\""
        << fmt_px(right - left) << "\" height=\"" << fmt_px(bottom - top)
        << "\" fill=\"none\" stroke=\"#333333\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double fx = x_min + (x_max - x_min) * tick / 4.0;
        const double fy = y_min + (y_max - y_min) * tick / 4.0;
        out << "<text x=\"" << fmt_px(map_x(fx) - 10.0) << "\" y=\"" << fmt_px(bottom + 16.0)
            << "\" font-size=\"10\">" << fmt_label(fx) << "</text>\n";
        out << "<text x=\"6\" y=\"" << fmt_px(map_y(fy) + 4.0) << "\" font-size=\"10\">"
            << fmt_label(fy) << "</text>\n";
    }
    out << "<text x=\"" << fmt_px((left + right) / 2.0 - 20.0) << "\" y=\""
        << fmt_px(height - 10.0) << "\" font-size=\"12\">" << x_label << "</text>\n";
    out << "<text x=\"8\" y=\"" << fmt_px(top - 8.0) << "\" font-size=\"12\">" << y_label
        << "</text>\n";
    std::size_t color_index = 0;
    for (const auto& s : series) {
        if (s.xs.empty()) {
            continue;
        }
        const char* color = kPalette[color_index % (sizeof(kPalette) / sizeof(kPalette[0]))];
        ++color_index;
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < s.xs.size(); ++k) {
            out << fmt_px(map_x(s.xs[k])) << "," << fmt_px(map_y(s.ys[k])) << " ";
        }
        out << "\"/>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace

std::string to_json_text(const IdentificationRecord& record) {
    const IdentificationResult& r = record.result;
    json doc;
    doc["format_version"] = kFormatVersion;
    doc["kind"] = "identification";
    doc["provenance"] = dump_provenance(record.provenance);
    doc["dt_ns"] = record.dt_ns;
    if (record.harper_b.has_value()) {
        doc["harper_b"] = *record.harper_b;
    }
    doc["target_mhz"] = dump_real_matrix(record.target);
    doc["frequencies_mhz"] = dump_real_vector(r.frequencies.mhz);
    doc["frequency_deviation_mhz"] = dump_real_vector(r.frequency_deviation);
    doc["basis"] = dump_real_matrix(r.basis);
    doc["h_raw_mhz"] = dump_real_matrix(r.h_raw);
    doc["initial_map_raw"] = dump_complex_matrix(r.initial_map_raw.matrix);
    doc["signs"] = dump_real_vector(r.signs);
    doc["h_mhz"] = dump_real_matrix(r.h);
    doc["initial_map"] = dump_complex_matrix(r.initial_map.matrix);
    doc["deviation_mhz"] = dump_real_matrix(entrywise_deviation(r.h, record.target));
    doc["analog_error_mhz"] = r.analog_error;
    doc["data_fit"] = r.data_fit;
    doc["leakage_mhz"] = r.leakage;
    doc["mu_used"] = r.mu_used;
    doc["converged"] = r.converged;
    json stages = json::array();
    for (const MuStage& stage : r.stages) {
        stages.push_back(json{{"mu", stage.mu},
                              {"data_fit", stage.data_fit},
                              {"leakage", stage.leakage},
                              {"accepted", stage.accepted}});
    }
    doc["stages"] = std::move(stages);
    doc["diagnostics"] = json{{"per_series_rms", dump_real_matrix(r.diagnostics.per_series_rms)},
                              {"instantaneous_rms", dump_real_vector(r.diagnostics.instantaneous_rms)},
                              {"total_rms", r.diagnostics.total_rms}};
    if (record.statistical.has_value() || record.systematic.has_value()) {
        json errors;
        if (record.statistical.has_value()) {
            const StatisticalErrors& s = *record.statistical;
            errors["statistical"] = json{{"per_entry_mhz", dump_real_matrix(s.per_entry)},
                                         {"per_entry_max_mhz", s.per_entry_max},
                                         {"accuracy_mhz", s.accuracy},
                                         {"frequency_mhz", s.frequency},
                                         {"resamples_used", s.resamples_used},
                                         {"failures", s.failures}};
        }
        if (record.systematic.has_value()) {
            const SystematicErrors& s = *record.systematic;
            errors["systematic"] = json{{"diagonal_mhz", s.diagonal},
                                        {"off_diagonal_mhz", s.off_diagonal},
                                        {"accuracy_mhz", s.accuracy},
                                        {"rotated_mhz", dump_real_matrix(s.rotated)},
                                        {"orthogonal_map", dump_real_matrix(s.orthogonal_map)}};
        }
        doc["errors"] = std::move(errors);
    }
    return doc.dump(2) + "\n";
}

std::string to_json_text(const ScanRecord& record) {
    const ChipScanReport& r = record.report;
    json doc;
    doc["format_version"] = kFormatVersion;
    doc["kind"] = "scan";
    doc["provenance"] = dump_provenance(record.provenance);
    doc["num_sites"] = r.num_sites;
    json couplers = json::array();
    for (const auto& [i, j] : r.couplers) {
        couplers.push_back(json::array({i + 1, j + 1}));
    }
    doc["couplers"] = std::move(couplers);
    doc["site_median_mhz"] = dump_real_vector(r.site_median_mhz);
    doc["coupler_median_mhz"] = dump_real_vector(r.coupler_median_mhz);
    doc["site_s_median"] = dump_real_vector(r.site_s_median);
    doc["site_signflip_mean"] = dump_real_vector(r.site_signflip_mean);
    doc["site_coverage"] = r.site_coverage;
    doc["coupler_coverage"] = r.coupler_coverage;
    doc["runs_total"] = r.runs_total;
    doc["runs_failed"] = r.runs_failed;
    json failures = json::array();
    for (const ScanFailure& f : r.failures) {
        json sites = json::array();
        for (int site : f.sites) {
            sites.push_back(site + 1);
        }
        failures.push_back(json{{"sites", std::move(sites)}, {"b", f.b}, {"reason", f.reason}});
    }
    doc["failures"] = std::move(failures);
    return doc.dump(2) + "\n";
}

std::string to_json_text(const CalibrationRecord& record) {
    const PhaseCalibration& c = record.calibration;
    json doc;
    doc["format_version"] = kFormatVersion;
    doc["kind"] = "calibration";
    doc["provenance"] = dump_provenance(record.provenance);
    doc["distances_mhz"] = c.distances_mhz;
    doc["phases_rad"] = c.phases_rad;
    doc["envelope"] = json{{"slope_rad_per_mhz", c.envelope_slope_rad_per_mhz},
                           {"offset_rad", c.envelope_offset_rad},
                           {"total_time_ns", c.total_time_ns},
                           {"offset_deg", c.offset_deg}};
    // Non-finite fit coefficients (no measurable curvature) are stored as 0.
    doc["quadratic"] = json{{"speed_mhz_per_ns", finite_or_zero(c.quad_speed_mhz_per_ns)},
                            {"wait_ns", finite_or_zero(c.quad_wait_ns)},
                            {"points_used", c.points_used_quadratic}};
    return doc.dump(2) + "\n";
}

IdentificationRecord identification_from_json_text(const std::string& text) {
    const json doc = open_result(text, "identification");
    IdentificationRecord record;
    record.provenance = parse_provenance(doc);
    record.dt_ns = parse_number(doc.at("dt_ns"), "dt_ns");
    if (doc.contains("harper_b")) {
        record.harper_b = parse_number(doc.at("harper_b"), "harper_b");
    }
    record.target = parse_real_matrix(doc.at("target_mhz"), "target_mhz");
    IdentificationResult& r = record.result;
    r.frequencies = FrequencySet::from_values(
        parse_real_vector(doc.at("frequencies_mhz"), "frequencies_mhz"));
    r.frequency_deviation =
        parse_real_vector(doc.at("frequency_deviation_mhz"), "frequency_deviation_mhz");
    r.basis = parse_real_matrix(doc.at("basis"), "basis");
    r.h_raw = parse_real_matrix(doc.at("h_raw_mhz"), "h_raw_mhz");
    r.initial_map_raw = SpamMap{parse_complex_matrix(doc.at("initial_map_raw"), "initial_map_raw")};
    r.signs = parse_real_vector(doc.at("signs"), "signs");
    r.h = parse_real_matrix(doc.at("h_mhz"), "h_mhz");
    r.initial_map = SpamMap{parse_complex_matrix(doc.at("initial_map"), "initial_map")};
    r.analog_error = parse_number(doc.at("analog_error_mhz"), "analog_error_mhz");
    r.data_fit = parse_number(doc.at("data_fit"), "data_fit");
    r.leakage = parse_number(doc.at("leakage_mhz"), "leakage_mhz");
    r.mu_used = parse_number(doc.at("mu_used"), "mu_used");
    r.converged = doc.at("converged").get<bool>();
    for (const auto& stage : doc.at("stages")) {
        MuStage s;
        s.mu = parse_number(stage.at("mu"), "stages.mu");
        s.data_fit = parse_number(stage.at("data_fit"), "stages.data_fit");
        s.leakage = parse_number(stage.at("leakage"), "stages.leakage");
        s.accepted = stage.at("accepted").get<bool>();
        r.stages.push_back(s);
    }
    const auto& diag = doc.at("diagnostics");
    r.diagnostics.per_series_rms = parse_real_matrix(diag.at("per_series_rms"), "per_series_rms");
    r.diagnostics.instantaneous_rms =
        parse_real_vector(diag.at("instantaneous_rms"), "instantaneous_rms");
    r.diagnostics.total_rms = parse_number(diag.at("total_rms"), "total_rms");
    if (doc.contains("errors")) {
        const auto& errors = doc.at("errors");
        if (errors.contains("statistical")) {
            const auto& s = errors.at("statistical");
            StatisticalErrors stat;
            stat.per_entry = parse_real_matrix(s.at("per_entry_mhz"), "per_entry_mhz");
            stat.per_entry_max = parse_number(s.at("per_entry_max_mhz"), "per_entry_max_mhz");
            stat.accuracy = parse_number(s.at("accuracy_mhz"), "accuracy_mhz");
            stat.frequency = parse_number(s.at("frequency_mhz"), "frequency_mhz");
            stat.resamples_used = s.at("resamples_used").get<long>();
            stat.failures = s.at("failures").get<long>();
            record.statistical = std::move(stat);
        }
        if (errors.contains("systematic")) {
            const auto& s = errors.at("systematic");
            SystematicErrors sys;
            sys.diagonal = parse_number(s.at("diagonal_mhz"), "diagonal_mhz");
            sys.off_diagonal = parse_number(s.at("off_diagonal_mhz"), "off_diagonal_mhz");
            sys.accuracy = parse_number(s.at("accuracy_mhz"), "accuracy_mhz");
            sys.rotated = parse_real_matrix(s.at("rotated_mhz"), "rotated_mhz");
            sys.orthogonal_map = parse_real_matrix(s.at("orthogonal_map"), "orthogonal_map");
            record.systematic = std::move(sys);
        }
    }
    return record;
}

ScanRecord scan_from_json_text(const std::string& text) {
    const json doc = open_result(text, "scan");
    ScanRecord record;
    record.provenance = parse_provenance(doc);
    ChipScanReport& r = record.report;
    r.num_sites = doc.at("num_sites").get<int>();
    for (const auto& edge : doc.at("couplers")) {
        if (!edge.is_array() || edge.size() != 2) {
            fail("couplers must be [i, j] pairs");
        }
        r.couplers.emplace_back(edge.at(0).get<int>() - 1, edge.at(1).get<int>() - 1);
    }
    r.site_median_mhz = parse_real_vector(doc.at("site_median_mhz"), "site_median_mhz");
    r.coupler_median_mhz = parse_real_vector(doc.at("coupler_median_mhz"), "coupler_median_mhz");
    r.site_s_median = parse_real_vector(doc.at("site_s_median"), "site_s_median");
    r.site_signflip_mean = parse_real_vector(doc.at("site_signflip_mean"), "site_signflip_mean");
    r.site_coverage = doc.at("site_coverage").get<std::vector<long>>();
    r.coupler_coverage = doc.at("coupler_coverage").get<std::vector<long>>();
    r.runs_total = doc.at("runs_total").get<long>();
    r.runs_failed = doc.at("runs_failed").get<long>();
    for (const auto& entry : doc.at("failures")) {
        ScanFailure f;
        for (const auto& site : entry.at("sites")) {
            f.sites.push_back(site.get<int>() - 1);
        }
        f.b = parse_number(entry.at("b"), "failures.b");
        f.reason = entry.at("reason").get<std::string>();
        r.failures.push_back(std::move(f));
    }
    return record;
}

CalibrationRecord calibration_from_json_text(const std::string& text) {
    const json doc = open_result(text, "calibration");
    CalibrationRecord record;
    record.provenance = parse_provenance(doc);
    PhaseCalibration& c = record.calibration;
    c.distances_mhz = doc.at("distances_mhz").get<std::vector<double>>();
    c.phases_rad = doc.at("phases_rad").get<std::vector<double>>();
    const auto& envelope = doc.at("envelope");
    c.envelope_slope_rad_per_mhz =
        parse_number(envelope.at("slope_rad_per_mhz"), "slope_rad_per_mhz");
    c.envelope_offset_rad = parse_number(envelope.at("offset_rad"), "offset_rad");
    c.total_time_ns = parse_number(envelope.at("total_time_ns"), "total_time_ns");
    c.offset_deg = parse_number(envelope.at("offset_deg"), "offset_deg");
    const auto& quadratic = doc.at("quadratic");
    c.quad_speed_mhz_per_ns = parse_number(quadratic.at("speed_mhz_per_ns"), "speed_mhz_per_ns");
    c.quad_wait_ns = parse_number(quadratic.at("wait_ns"), "wait_ns");
    c.points_used_quadratic = quadratic.at("points_used").get<long>();
    return record;
}

ResultKind result_kind(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        fail(e.what());
    }
    if (!doc.is_object() || !doc.contains("kind") || !doc.at("kind").is_string()) {
        fail("missing 'kind' tag");
    }
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "identification") {
        return ResultKind::Identification;
    }
    if (kind == "scan") {
        return ResultKind::Scan;
    }
    if (kind == "calibration") {
        return ResultKind::Calibration;
    }
    fail("unknown kind '" + kind + "'");
}

std::string load_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void save_text(const std::string& text, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << text;
    if (!out) {
        throw std::runtime_error("write failed for " + path);
    }
}

std::string scan_to_csv(const ChipScanReport& report) {
    std::ostringstream out;
    out << "element_id,kind,median_dev_MHz,S_median,signflip_mean,coverage\n";
    for (int i = 0; i < report.num_sites; ++i) {
        out << "site_" << (i + 1) << ",site," << fmt_csv(report.site_median_mhz(i)) << ","
            << fmt_csv(report.site_s_median(i)) << "," << fmt_csv(report.site_signflip_mean(i))
            << "," << report.site_coverage[static_cast<std::size_t>(i)] << "\n";
    }
    for (std::size_t e = 0; e < report.couplers.size(); ++e) {
        const auto& [i, j] = report.couplers[e];
        out << "coupler_" << (i + 1) << "_" << (j + 1) << ",coupler,"
            << fmt_csv(report.coupler_median_mhz(static_cast<long>(e))) << ",,,"
            << report.coupler_coverage[e] << "\n";
    }
    return out.str();
}

std::vector<std::pair<std::string, std::string>> build_report(
    const std::vector<IdentificationRecord>& runs, const std::vector<ScanRecord>& scans,
    const std::vector<CalibrationRecord>& calibrations) {
    if (runs.empty() && scans.empty() && calibrations.empty()) {
        throw std::invalid_argument("report: no result files given");
    }
    for (const auto& record : runs) {
        if (record.result.h.rows() != runs.front().result.h.rows()) {
            throw std::invalid_argument("report: identification results mix matrix sizes");
        }
    }

    std::vector<std::pair<std::string, std::string>> files;

    if (!runs.empty()) {
        std::ostringstream dev_csv;
        dev_csv << "record,row,col,abs_deviation_mhz\n";
        std::ostringstream rms_csv;
        rms_csv << "record,time_ns,rms\n";
        std::vector<PlotSeries> rms_series;
        for (std::size_t k = 0; k < runs.size(); ++k) {
            const IdentificationRecord& record = runs[k];
            const RealMatrix dev = entrywise_deviation(record.result.h, record.target);
            for (long i = 0; i < dev.rows(); ++i) {
                for (long j = 0; j < dev.cols(); ++j) {
                    dev_csv << k << "," << (i + 1) << "," << (j + 1) << ","
                            << fmt_csv(dev(i, j)) << "\n";
                }
            }
            files.emplace_back("deviation_" + std::to_string(k) + ".svg",
                               svg_heatmap(dev, "entry deviation (MHz), record " +
                                                    std::to_string(k)));
            PlotSeries series;
            series.label = "record " + std::to_string(k);
            const RealVector& rms = record.result.diagnostics.instantaneous_rms;
            for (long l = 0; l < rms.size(); ++l) {
                const double t = record.dt_ns * static_cast<double>(l);
                rms_csv << k << "," << fmt_csv(t) << "," << fmt_csv(rms(l)) << "\n";
                series.xs.push_back(t);
                series.ys.push_back(rms(l));
            }
            rms_series.push_back(std::move(series));
        }
        files.emplace_back("deviation_matrices.csv", dev_csv.str());
        files.emplace_back("rms_vs_time.csv", rms_csv.str());
        files.emplace_back("rms_vs_time.svg",
                           svg_line_plot(rms_series, "model residual vs time", "time (ns)",
                                         "rms"));

        std::vector<std::size_t> flux_records;
        for (std::size_t k = 0; k < runs.size(); ++k) {
            if (runs[k].harper_b.has_value()) {
                flux_records.push_back(k);
            }
        }
        if (!flux_records.empty()) {
            std::sort(flux_records.begin(), flux_records.end(),
                      [&](std::size_t a, std::size_t b) {
                          return *runs[a].harper_b < *runs[b].harper_b;
                      });
            std::ostringstream flux_csv;
            flux_csv << "record,b,mode,frequency_mhz\n";
            const int n_modes = runs[flux_records.front()].result.frequencies.size();
            std::vector<PlotSeries> mode_series(static_cast<std::size_t>(n_modes));
            for (int mode = 0; mode < n_modes; ++mode) {
                mode_series[static_cast<std::size_t>(mode)].label =
                    "mode " + std::to_string(mode + 1);
            }
            for (std::size_t k : flux_records) {
                const IdentificationRecord& record = runs[k];
                for (int mode = 0; mode < record.result.frequencies.size(); ++mode) {
                    const double f = record.result.frequencies.mhz(mode);
                    flux_csv << k << "," << fmt_csv(*record.harper_b) << "," << (mode + 1)
                             << "," << fmt_csv(f) << "\n";
                    mode_series[static_cast<std::size_t>(mode)].xs.push_back(*record.harper_b);
                    mode_series[static_cast<std::size_t>(mode)].ys.push_back(f);
                }
            }
            files.emplace_back("frequency_vs_flux.csv", flux_csv.str());
            files.emplace_back("frequency_vs_flux.svg",
                               svg_line_plot(mode_series, "mode frequencies vs flux", "b",
                                             "frequency (MHz)"));
        }
    }

    for (std::size_t k = 0; k < scans.size(); ++k) {
        files.emplace_back("scan_" + std::to_string(k) + "_elements.csv",
                           scan_to_csv(scans[k].report));
        PlotSeries sites;
        sites.label = "site median";
        const RealVector& medians = scans[k].report.site_median_mhz;
        for (long i = 0; i < medians.size(); ++i) {
            if (!std::isnan(medians(i))) {
                sites.xs.push_back(static_cast<double>(i + 1));
                sites.ys.push_back(medians(i));
            }
        }
        files.emplace_back("scan_" + std::to_string(k) + "_sites.svg",
                           svg_line_plot({sites}, "site median deviation, scan " +
                                                      std::to_string(k),
                                         "site", "median deviation (MHz)"));
    }

    if (!calibrations.empty()) {
        std::ostringstream cal_csv;
        cal_csv << "record,distance_mhz,phase_rad,envelope_rad\n";
        for (std::size_t k = 0; k < calibrations.size(); ++k) {
            const PhaseCalibration& c = calibrations[k].calibration;
            PlotSeries points;
            points.label = "phases";
            PlotSeries envelope;
            envelope.label = "envelope";
            for (std::size_t p = 0; p < c.distances_mhz.size(); ++p) {
                const double env =
                    c.envelope_slope_rad_per_mhz * c.distances_mhz[p] + c.envelope_offset_rad;
                cal_csv << k << "," << fmt_csv(c.distances_mhz[p]) << ","
                        << fmt_csv(c.phases_rad[p]) << "," << fmt_csv(env) << "\n";
                points.xs.push_back(c.distances_mhz[p]);
                points.ys.push_back(c.phases_rad[p]);
            }
            if (!c.distances_mhz.empty()) {
                const auto [lo, hi] = std::minmax_element(c.distances_mhz.begin(),
                                                          c.distances_mhz.end());
                envelope.xs = {*lo, *hi};
                envelope.ys = {c.envelope_slope_rad_per_mhz * *lo + c.envelope_offset_rad,
                               c.envelope_slope_rad_per_mhz * *hi + c.envelope_offset_rad};
            }
            files.emplace_back("phase_vs_distance_" + std::to_string(k) + ".svg",
                               svg_line_plot({points, envelope},
                                             "preparation phase vs ramp distance, record " +
                                                 std::to_string(k),
                                             "distance (MHz)", "phase (rad)"));
        }
        files.emplace_back("phase_vs_distance.csv", cal_csv.str());
    }

    return files;
}

}  // namespace hamscope
