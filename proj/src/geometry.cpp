#include "hamscope/geometry.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hamscope {

LatticeGeometry::LatticeGeometry(int num_sites, std::vector<std::pair<int, int>> edges)
    : num_sites_(num_sites) {
    if (num_sites <= 0) {
        throw std::invalid_argument("LatticeGeometry: number of sites must be positive");
    }
    std::set<std::pair<int, int>> seen;
    edges_.reserve(edges.size());
    for (auto [i, j] : edges) {
        if (i < 0 || j < 0 || i >= num_sites || j >= num_sites) {
            throw std::invalid_argument("LatticeGeometry: edge endpoint out of range");
        }
        if (i == j) {
            throw std::invalid_argument("LatticeGeometry: self loops are not allowed");
        }
        if (i > j) std::swap(i, j);
        if (!seen.insert({i, j}).second) {
            throw std::invalid_argument("LatticeGeometry: duplicate edge");
        }
        edges_.push_back({i, j});
    }
    std::sort(edges_.begin(), edges_.end());
}

LatticeGeometry LatticeGeometry::chain(int num_sites) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i + 1 < num_sites; ++i) edges.push_back({i, i + 1});
    return LatticeGeometry(num_sites, std::move(edges));
}

LatticeGeometry LatticeGeometry::grid(int rows, int cols) {
    if (rows <= 0 || cols <= 0) {
        throw std::invalid_argument("LatticeGeometry::grid: dimensions must be positive");
    }
    std::vector<std::pair<int, int>> edges;
    auto id = [cols](int r, int c) { return r * cols + c; };
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            if (c + 1 < cols) edges.push_back({id(r, c), id(r, c + 1)});
            if (r + 1 < rows) edges.push_back({id(r, c), id(r + 1, c)});
        }
    }
    return LatticeGeometry(rows * cols, std::move(edges));
}

LatticeGeometry LatticeGeometry::from_json_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("geometry JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("n") || !doc.contains("edges")) {
        throw std::invalid_argument("geometry JSON: expected object with 'n' and 'edges'");
    }
    const int n = doc.at("n").get<int>();
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : doc.at("edges")) {
        if (!e.is_array() || e.size() != 2) {
            throw std::invalid_argument("geometry JSON: each edge must be a pair");
        }
        // File format is 1-based.
        edges.push_back({e.at(0).get<int>() - 1, e.at(1).get<int>() - 1});
    }
    return LatticeGeometry(n, std::move(edges));
}

LatticeGeometry LatticeGeometry::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("LatticeGeometry::load: cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_json_text(buffer.str());
}

std::string LatticeGeometry::to_json_text() const {
    nlohmann::json doc;
    doc["format_version"] = 1;
    doc["n"] = num_sites_;
    auto edges = nlohmann::json::array();
    for (const auto& [i, j] : edges_) {
        edges.push_back({i + 1, j + 1});
    }
    doc["edges"] = edges;
    return doc.dump(2);
}

void LatticeGeometry::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("LatticeGeometry::save: cannot open " + path);
    out << to_json_text() << '\n';
}

bool LatticeGeometry::has_edge(int i, int j) const {
    if (i > j) std::swap(i, j);
    return std::binary_search(edges_.begin(), edges_.end(), std::make_pair(i, j));
}

std::vector<int> LatticeGeometry::neighbours(int site) const {
    std::vector<int> out;
    for (const auto& [i, j] : edges_) {
        if (i == site) out.push_back(j);
        if (j == site) out.push_back(i);
    }
    std::sort(out.begin(), out.end());
    return out;
}

BoolArray LatticeGeometry::support_mask() const {
    BoolArray mask = BoolArray::Constant(num_sites_, num_sites_, false);
    for (int i = 0; i < num_sites_; ++i) mask(i, i) = true;
    for (const auto& [i, j] : edges_) {
        mask(i, j) = true;
        mask(j, i) = true;
    }
    return mask;
}

LatticeGeometry LatticeGeometry::induced(const std::vector<int>& sites) const {
    std::vector<int> local(num_sites_, -1);
    for (std::size_t k = 0; k < sites.size(); ++k) {
        const int s = sites[k];
        if (s < 0 || s >= num_sites_) {
            throw std::invalid_argument("LatticeGeometry::induced: site out of range");
        }
        if (local[s] != -1) {
            throw std::invalid_argument("LatticeGeometry::induced: duplicate site");
        }
        local[s] = static_cast<int>(k);
    }
    std::vector<std::pair<int, int>> edges;
    for (const auto& [i, j] : edges_) {
        if (local[i] != -1 && local[j] != -1) {
            edges.push_back({local[i], local[j]});
        }
    }
    return LatticeGeometry(static_cast<int>(sites.size()), std::move(edges));
}

}  // namespace hamscope
