#pragma once

#include <cmath>
#include <vector>

#include "cwl/detail/delaunay.hpp"
#include "cwl/geometry.hpp"

namespace cwl {

// Local refinement toward a point: size grows linearly from h_min at `point`.
struct Grading {
  Vec2 point{0.0, 0.0};
  double h_min = 0.01;
  double rate = 0.5;
};

struct MeshOptions {
  double h = 0.1;
  double min_angle_deg = 25.0;
  std::vector<Grading> gradings;
  std::size_t max_nodes = 400000;

  double size_at(const Vec2& x) const {
    double s = h;
    for (auto& g : gradings) s = std::min(s, g.h_min + g.rate * (x - g.point).norm());
    return s;
  }
};

inline constexpr int kRingTag = 1000;

namespace detail {

// Appends the points of segment a->b split dyadically to the size field, excluding b.
inline void split_edge(const Vec2& a, const Vec2& b, const MeshOptions& o, std::vector<Vec2>& out) {
  Vec2 m = 0.5 * (a + b);
  if ((b - a).norm() > o.size_at(m)) {
    split_edge(a, m, o, out);
    split_edge(m, b, o, out);
  } else {
    out.push_back(a);
  }
}

inline void add_loop(Pslg& g, const std::vector<Vec2>& corners, const std::vector<int>& tags,
                     const MeshOptions& o, bool presplit, bool fixed = false) {
  const int base = static_cast<int>(g.points.size());
  std::vector<int> seg_tags;
  const std::size_t n = corners.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Vec2> pts;
    if (presplit)
      split_edge(corners[i], corners[(i + 1) % n], o, pts);
    else
      pts.push_back(corners[i]);
    for (auto& p : pts) {
      g.points.push_back(p);
      seg_tags.push_back(tags[i]);
    }
  }
  const int m = static_cast<int>(g.points.size()) - base;
  for (int i = 0; i < m; ++i) g.segments.push_back({base + i, base + (i + 1) % m, seg_tags[i], fixed});
}

inline std::vector<Vec2> circle_points(const Vec2& c, double r, int n) {
  std::vector<Vec2> v;
  for (int j = 0; j < n; ++j) {
    double t = 2.0 * pi * j / n;
    v.push_back(c + r * Vec2(std::cos(t), std::sin(t)));
  }
  return v;
}

inline TriMesh run_mesher(const Pslg& g, const MeshOptions& o) {
  require(o.h > 0.0 && o.min_angle_deg > 0.0 && o.min_angle_deg <= 33.0,
          "mesh: need h > 0 and 0 < min angle <= 33 degrees");
  ConformingDelaunay cd(g, [o](const Vec2& x) { return o.size_at(x); }, o.min_angle_deg, o.max_nodes);
  TriMesh m = cd.build();
  m.validate();
  return m;
}

}  // namespace detail

// Boundary edges carry the index of the polygon edge they lie on.
inline TriMesh mesh_polygon(const Polygon& poly, const MeshOptions& o) {
  detail::Pslg g;
  std::vector<int> tags(poly.size());
  for (std::size_t i = 0; i < tags.size(); ++i) tags[i] = static_cast<int>(i);
  detail::add_loop(g, poly.vertices, tags, o, true);
  return detail::run_mesher(g, o);
}

inline int disk_boundary_count(const Disk& d, const MeshOptions& o) {
  return std::max(8, static_cast<int>(std::ceil(2.0 * pi * d.radius / o.h)));
}

// Inscribed polygonal disk with n_boundary equally spaced boundary nodes (tag 0).
inline TriMesh mesh_disk(const Disk& d, const MeshOptions& o, int n_boundary = 0) {
  if (n_boundary <= 0) n_boundary = disk_boundary_count(d, o);
  detail::Pslg g;
  detail::add_loop(g, detail::circle_points(d.center, d.radius, n_boundary),
                   std::vector<int>(static_cast<std::size_t>(n_boundary), 0), o, false);
  return detail::run_mesher(g, o);
}

// Truncated sector with apex at the origin. Tags: 0 ray theta_m, 1 arc, 2 ray theta_M.
inline TriMesh mesh_sector(const Sector& s, const MeshOptions& o) {
  detail::Pslg g;
  std::vector<Vec2> pts;
  std::vector<int> tags;
  Vec2 e_M(std::cos(s.theta_M), std::sin(s.theta_M));
  pts.push_back({0.0, 0.0});
  tags.push_back(0);
  int narc = std::max(2, static_cast<int>(std::ceil(s.opening() * s.h / o.h)));
  for (int j = 0; j < narc; ++j) {
    double t = s.theta_m + s.opening() * j / narc;
    pts.push_back(s.h * Vec2(std::cos(t), std::sin(t)));
    tags.push_back(1);
  }
  pts.push_back(s.h * e_M);
  tags.push_back(2);
  // Split only the rays; arc points are already placed.
  std::vector<Vec2> all;
  std::vector<int> all_tags;
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Vec2> piece;
    if (tags[i] == 1)
      piece.push_back(pts[i]);
    else
      detail::split_edge(pts[i], pts[(i + 1) % n], o, piece);
    for (auto& p : piece) {
      all.push_back(p);
      all_tags.push_back(tags[i]);
    }
  }
  detail::add_loop(g, all, all_tags, o, false);
  return detail::run_mesher(g, o);
}

// Disk B_R (boundary tag kRingTag, n_ring equally spaced nodes) containing the
// scatterer, whose boundary is resolved by interface edges. Region 1 is the scatterer.
inline TriMesh mesh_scatter(const Domain& omega, double R, int n_ring, const MeshOptions& o) {
  detail::Pslg g;
  detail::add_loop(g, detail::circle_points({0.0, 0.0}, R, n_ring),
                   std::vector<int>(static_cast<std::size_t>(n_ring), kRingTag), o, false, true);
  Polygon shape;
  std::vector<int> tags;
  if (auto* p = std::get_if<Polygon>(&omega)) {
    for (auto& v : p->vertices) require(v.norm() < R, "mesh_scatter: scatterer must lie inside the ring");
    shape = *p;
    for (std::size_t i = 0; i < p->size(); ++i) tags.push_back(static_cast<int>(i));
  } else {
    auto& d = std::get<Disk>(omega);
    require(d.center.norm() + d.radius < R, "mesh_scatter: scatterer must lie inside the ring");
    shape.vertices = detail::circle_points(d.center, d.radius, disk_boundary_count(d, o));
    tags.assign(shape.size(), 0);
  }
  detail::add_loop(g, shape.vertices, tags, o, std::holds_alternative<Polygon>(omega));
  TriMesh m = detail::run_mesher(g, o);
  for (std::size_t t = 0; t < m.triangles.size(); ++t) m.region[t] = shape.contains(m.centroid(t)) ? 1 : 0;
  return m;
}

}  // namespace cwl
