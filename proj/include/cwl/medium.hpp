#pragma once

#include <map>
#include <vector>

#include "cwl/geometry.hpp"

namespace cwl {

// Piecewise-constant contrast on a polygonal sub-region.
struct QPatch {
  Polygon region;
  cplx value{1.0};
};

// Domain, contrast q = 1 + V and conductive parameter eta. q is `q` except on
// patches (the last patch containing a point wins). eta is constant per
// boundary edge: polygon edge i runs from vertex i to vertex i+1; a disk has
// the single edge tag 0.
struct ConductiveMedium {
  Domain domain = Polygon::unit_square();
  cplx q{1.0};
  std::vector<QPatch> q_patches;
  cplx eta{0.0};
  std::map<int, cplx> eta_edges;

  int edge_count() const {
    if (auto* p = std::get_if<Polygon>(&domain)) return static_cast<int>(p->size());
    return 1;
  }

  cplx q_at(const Vec2& x) const {
    cplx v = q;
    for (auto& p : q_patches)
      if (p.region.contains(x)) v = p.value;
    return v;
  }

  cplx eta_at(int tag) const {
    require(tag >= 0 && tag < edge_count(), "ConductiveMedium: boundary tag " + std::to_string(tag) + " has no edge");
    auto it = eta_edges.find(tag);
    return it == eta_edges.end() ? eta : it->second;
  }

  void validate() const {
    auto finite = [](cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); };
    require(finite(q) && std::abs(q) > 0.0, "ConductiveMedium: q must be finite and non-zero");
    for (auto& p : q_patches) require(finite(p.value) && std::abs(p.value) > 0.0, "ConductiveMedium: q must be non-zero");
    require(finite(eta), "ConductiveMedium: eta must be finite");
    for (auto& [tag, v] : eta_edges) {
      require(tag >= 0 && tag < edge_count(), "ConductiveMedium: eta given for a non-existent edge");
      require(finite(v), "ConductiveMedium: eta must be finite");
    }
  }
};

}  // namespace cwl
