#include "hamscope/timeseries.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hamscope {

TimeGrid::TimeGrid(double dt, int samples) : dt_ns(dt), num_samples(samples) {
    if (!(dt > 0.0)) throw std::invalid_argument("TimeGrid: dt must be positive");
    if (samples < 2) throw std::invalid_argument("TimeGrid: need at least two samples");
}

double TimeSeriesData::max_abs() const {
    double worst = 0.0;
    for (const auto& y : snapshots) {
        worst = std::max(worst, y.cwiseAbs().maxCoeff());
    }
    return worst;
}

void TimeSeriesData::validate_range() const {
    // Exact values are half a unitary matrix element, bounded by 1/2 in
    // magnitude up to rounding. Sampled quadratures are means of +-1/2
    // readouts, so each component separately stays within [-1/2, 1/2] while
    // the complex magnitude may reach sqrt(2)/2.
    const double slack = 1e-9;
    if (exact()) {
        if (max_abs() > 0.5 + slack) {
            throw std::runtime_error("TimeSeriesData: entry magnitude exceeds 1/2");
        }
        return;
    }
    for (const auto& y : snapshots) {
        const double worst = std::max(y.real().cwiseAbs().maxCoeff(),
                                      y.imag().cwiseAbs().maxCoeff());
        if (worst > 0.5 + slack) {
            throw std::runtime_error("TimeSeriesData: quadrature exceeds 1/2");
        }
    }
}

std::string TimeSeriesData::to_json_text() const {
    nlohmann::json doc;
    doc["format_version"] = 1;
    doc["dt"] = grid.dt_ns;
    doc["L"] = grid.num_samples;
    doc["n"] = dim();
    if (shots.has_value()) {
        doc["shots"] = *shots;
    } else {
        doc["shots"] = "exact";
    }
    const int n = dim();
    auto data = nlohmann::json::array();
    for (int m = 0; m < n; ++m) {
        auto row = nlohmann::json::array();
        for (int c = 0; c < n; ++c) {
            auto series = nlohmann::json::array();
            for (int l = 0; l < grid.num_samples; ++l) {
                const Complex v = snapshots[static_cast<std::size_t>(l)](m, c);
                series.push_back({v.real(), v.imag()});
            }
            row.push_back(std::move(series));
        }
        data.push_back(std::move(row));
    }
    doc["data"] = std::move(data);
    return doc.dump();
}

TimeSeriesData TimeSeriesData::from_json_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("time series JSON: ") + e.what());
    }
    for (const char* key : {"dt", "L", "n", "shots", "data"}) {
        if (!doc.contains(key)) {
            throw std::invalid_argument(std::string("time series JSON: missing '") + key + "'");
        }
    }
    TimeSeriesData out;
    out.grid = TimeGrid(doc.at("dt").get<double>(), doc.at("L").get<int>());
    const int n = doc.at("n").get<int>();
    if (n <= 0) throw std::invalid_argument("time series JSON: n must be positive");
    if (doc.at("shots").is_string()) {
        if (doc.at("shots").get<std::string>() != "exact") {
            throw std::invalid_argument("time series JSON: shots must be a count or 'exact'");
        }
    } else {
        out.shots = doc.at("shots").get<long>();
    }
    const auto& data = doc.at("data");
    if (!data.is_array() || static_cast<int>(data.size()) != n) {
        throw std::invalid_argument("time series JSON: data must hold n series groups");
    }
    out.snapshots.assign(static_cast<std::size_t>(out.grid.num_samples),
                         ComplexMatrix::Zero(n, n));
    for (int m = 0; m < n; ++m) {
        const auto& row = data.at(static_cast<std::size_t>(m));
        if (static_cast<int>(row.size()) != n) {
            throw std::invalid_argument("time series JSON: ragged data row");
        }
        for (int c = 0; c < n; ++c) {
            const auto& series = row.at(static_cast<std::size_t>(c));
            if (static_cast<int>(series.size()) != out.grid.num_samples) {
                throw std::invalid_argument("time series JSON: series length mismatch");
            }
            for (int l = 0; l < out.grid.num_samples; ++l) {
                const auto& v = series.at(static_cast<std::size_t>(l));
                if (!v.is_array() || v.size() != 2) {
                    throw std::invalid_argument("time series JSON: sample must be [re, im]");
                }
                out.snapshots[static_cast<std::size_t>(l)](m, c) =
                    Complex(v.at(0).get<double>(), v.at(1).get<double>());
            }
        }
    }
    out.validate_range();
    return out;
}

void TimeSeriesData::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("TimeSeriesData::save: cannot open " + path);
    out << to_json_text() << '\n';
}

TimeSeriesData TimeSeriesData::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("TimeSeriesData::load: cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_json_text(buffer.str());
}

std::string TimeSeriesData::to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "m,n,t,x,p\n";
    const int n = dim();
    for (int m = 0; m < n; ++m) {
        for (int c = 0; c < n; ++c) {
            for (int l = 0; l < grid.num_samples; ++l) {
                const Complex v = snapshots[static_cast<std::size_t>(l)](m, c);
                out << (m + 1) << ',' << (c + 1) << ',' << grid.time(l) << ','
                    << v.real() << ',' << v.imag() << '\n';
            }
        }
    }
    return out.str();
}

void TimeSeriesData::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("TimeSeriesData::save_csv: cannot open " + path);
    out << to_csv();
}

}  // namespace hamscope
