// geometry.hpp — Lattice connectivity: sites, declared couplings, support set.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hamscope/types.hpp"

namespace hamscope {

// An undirected graph over sites 0 .. num_sites-1. Edges are stored
// normalized (i < j), without duplicates or self loops; violations are
// rejected at construction. On disk the sites and edges are 1-based.
class LatticeGeometry {
  public:
    LatticeGeometry(int num_sites, std::vector<std::pair<int, int>> edges);

    static LatticeGeometry chain(int num_sites);
    static LatticeGeometry grid(int rows, int cols);

    static LatticeGeometry from_json_text(const std::string& text);
    static LatticeGeometry load(const std::string& path);
    std::string to_json_text() const;
    void save(const std::string& path) const;

    int num_sites() const { return num_sites_; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    bool has_edge(int i, int j) const;
    std::vector<int> neighbours(int site) const;

    // True for the diagonal and both orientations of every declared edge.
    BoolArray support_mask() const;

    // Geometry induced on a subset of sites, keeping every edge internal to
    // the subset. Local site k corresponds to global site sites[k].
    LatticeGeometry induced(const std::vector<int>& sites) const;

  private:
    int num_sites_ = 0;
    std::vector<std::pair<int, int>> edges_;
};

}  // namespace hamscope
