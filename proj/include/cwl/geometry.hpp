#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <variant>
#include <vector>

#include "cwl/core.hpp"

namespace cwl {

// Infinite wedge W = {r e^{i theta} : theta_m < theta < theta_M}, truncated at radius h.
// The wedge must avoid the negative real axis, where the CGO branch cut sits.
struct Sector {
  double theta_m = 0.0;
  double theta_M = 0.0;
  double h = 1.0;

  static Sector make(double theta_m, double theta_M, double h) {
    require(-pi < theta_m && theta_m < theta_M && theta_M < pi,
            "Sector: need -pi < theta_m < theta_M < pi");
    require(h > 0.0 && std::isfinite(h), "Sector: h must be positive");
    return {theta_m, theta_M, h};
  }

  double opening() const { return theta_M - theta_m; }
  bool contains(const Vec2& x) const {
    double r = x.norm();
    if (r == 0.0 || r >= h) return false;
    double t = std::atan2(x.y(), x.x());
    return theta_m < t && t < theta_M;
  }
};

// delta_W = min over the wedge of cos(theta/2).
inline double delta_W(const Sector& s) {
  return std::min(std::cos(0.5 * s.theta_m), std::cos(0.5 * s.theta_M));
}

// Simple polygon, counter-clockwise, at least three vertices.
struct Polygon {
  std::vector<Vec2> vertices;

  std::size_t size() const { return vertices.size(); }
  const Vec2& operator[](std::size_t i) const { return vertices[i % vertices.size()]; }

  double signed_area() const {
    double a = 0.0;
    for (std::size_t i = 0; i < size(); ++i) a += cross2((*this)[i], (*this)[i + 1]);
    return 0.5 * a;
  }

  // Interior angle at vertex i, in (0, 2 pi).
  double interior_angle(std::size_t i) const {
    const std::size_t n = size();
    Vec2 p = vertices[(i + n - 1) % n], c = vertices[i], q = vertices[(i + 1) % n];
    Vec2 a = p - c, b = q - c;
    double ang = std::atan2(cross2(b, a), a.dot(b));
    if (ang < 0) ang += 2 * pi;
    return ang;
  }

  bool contains(const Vec2& x) const {
    bool in = false;
    const std::size_t n = size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Vec2 &a = vertices[i], &b = vertices[j];
      if ((a.y() > x.y()) != (b.y() > x.y()) &&
          x.x() < (b.x() - a.x()) * (x.y() - a.y()) / (b.y() - a.y()) + a.x())
        in = !in;
    }
    return in;
  }

  double diameter() const {
    double d = 0.0;
    for (auto& a : vertices)
      for (auto& b : vertices) d = std::max(d, (a - b).norm());
    return d;
  }

  static Polygon make(std::vector<Vec2> v) {
    require(v.size() >= 3, "Polygon: need at least three vertices");
    Polygon p{std::move(v)};
    const std::size_t n = p.size();
    const double scale = p.diameter();
    require(scale > 0.0, "Polygon: degenerate");
    for (std::size_t i = 0; i < n; ++i) {
      require((p[i + 1] - p[i]).norm() > 1e-12 * scale, "Polygon: repeated vertex");
      double o = orient(p[i + n - 1], p[i], p[i + 1]);
      require(std::abs(o) > 1e-12 * scale * scale, "Polygon: collinear consecutive vertices");
    }
    require(p.signed_area() > 0.0, "Polygon: vertices must be counter-clockwise");
    auto seg_cross = [](const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
      double d1 = orient(a, b, c), d2 = orient(a, b, d), d3 = orient(c, d, a), d4 = orient(c, d, b);
      return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
    };
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 2; j < n; ++j) {
        if (i == 0 && j == n - 1) continue;
        require(!seg_cross(p[i], p[i + 1], p[j], p[j + 1]), "Polygon: self-intersecting");
      }
    return p;
  }

  static Polygon unit_square() {
    return make({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  }
};

struct Disk {
  Vec2 center{0.0, 0.0};
  double radius = 1.0;

  static Disk make(Vec2 c, double r) {
    require(r > 0.0 && std::isfinite(r), "Disk: radius must be positive");
    return {c, r};
  }
  bool contains(const Vec2& x) const { return (x - center).norm() < radius; }
};

using Domain = std::variant<Polygon, Disk>;

inline bool domain_contains(const Domain& d, const Vec2& x) {
  return std::visit([&](auto& g) { return g.contains(x); }, d);
}

// Triangulation with tagged boundary edges. All indices are 0-based.
// Triangles are counter-clockwise. region[t] labels sub-domains (0 by default).
struct TriMesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::array<int, 3>> boundary;    // (i, j, tag)
  std::vector<std::array<int, 3>> interfaces;  // tagged interior edges, (i, j, tag)
  std::vector<int> region;

  double area(std::size_t t) const {
    auto& T = triangles[t];
    return 0.5 * orient(nodes[T[0]], nodes[T[1]], nodes[T[2]]);
  }
  Vec2 centroid(std::size_t t) const {
    auto& T = triangles[t];
    return (nodes[T[0]] + nodes[T[1]] + nodes[T[2]]) / 3.0;
  }
  double max_edge() const {
    double h = 0.0;
    for (auto& T : triangles)
      for (int k = 0; k < 3; ++k) h = std::max(h, (nodes[T[k]] - nodes[T[(k + 1) % 3]]).norm());
    return h;
  }
  double min_angle_deg() const;
  void validate() const;
};

inline double TriMesh::min_angle_deg() const {
  double m = 180.0;
  for (auto& T : triangles)
    for (int k = 0; k < 3; ++k) {
      Vec2 a = nodes[T[(k + 1) % 3]] - nodes[T[k]], b = nodes[T[(k + 2) % 3]] - nodes[T[k]];
      m = std::min(m, std::atan2(std::abs(cross2(a, b)), a.dot(b)) * 180.0 / pi);
    }
  return m;
}

inline void TriMesh::validate() const {
  const int n = static_cast<int>(nodes.size());
  require(!triangles.empty(), "TriMesh: no triangles");
  require(region.empty() || region.size() == triangles.size(), "TriMesh: region size mismatch");
  std::vector<std::pair<long long, int>> edges;
  auto key = [n](int a, int b) { return static_cast<long long>(std::min(a, b)) * n + std::max(a, b); };
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    for (int v : triangles[t]) require(v >= 0 && v < n, "TriMesh: triangle index out of range");
    require(area(t) > 0.0, "TriMesh: triangle " + std::to_string(t) + " is not counter-clockwise");
    for (int k = 0; k < 3; ++k) edges.push_back({key(triangles[t][k], triangles[t][(k + 1) % 3]), 0});
  }
  std::sort(edges.begin(), edges.end());
  std::vector<std::pair<long long, int>> cnt;
  for (auto& e : edges) {
    if (!cnt.empty() && cnt.back().first == e.first)
      ++cnt.back().second;
    else
      cnt.push_back({e.first, 1});
  }
  std::size_t nb = 0;
  for (auto& c : cnt) {
    require(c.second <= 2, "TriMesh: non-conforming edge");
    if (c.second == 1) ++nb;
  }
  require(nb == boundary.size(), "TriMesh: boundary edge list does not match the triangulation");
  for (auto& b : boundary) {
    auto it = std::lower_bound(cnt.begin(), cnt.end(), std::make_pair(key(b[0], b[1]), 0));
    require(it != cnt.end() && it->first == key(b[0], b[1]) && it->second == 1,
            "TriMesh: boundary edge not on exactly one triangle");
  }
  for (auto& b : interfaces) {
    auto it = std::lower_bound(cnt.begin(), cnt.end(), std::make_pair(key(b[0], b[1]), 0));
    require(it != cnt.end() && it->first == key(b[0], b[1]) && it->second == 2,
            "TriMesh: interface edge not shared by two triangles");
  }
}

// Probe radii around a vertex. Dyadic by default.
struct CornerProbe {
  Vec2 vertex{0.0, 0.0};
  std::vector<double> radii;

  static CornerProbe dyadic(Vec2 v, double rho_max, int levels) {
    require(rho_max > 0.0 && levels >= 1, "CornerProbe: need rho_max > 0 and levels >= 1");
    CornerProbe p{v, {}};
    for (int j = 0; j < levels; ++j) p.radii.push_back(rho_max * std::ldexp(1.0, -j));
    return p;
  }
};

}  // namespace cwl
