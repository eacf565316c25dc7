#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Sparse>

#include "cwl/field.hpp"
#include "cwl/geometry.hpp"

namespace cwl {

using SpMat = Eigen::SparseMatrix<cplx>;
using CVec = Eigen::VectorXcd;
using Triplet = Eigen::Triplet<cplx>;

// Gradients of the three barycentric coordinates (rows) and the area.
struct P1Geom {
  double area;
  Eigen::Matrix<double, 3, 2> grad;
};

inline P1Geom p1_geom(const TriMesh& m, std::size_t t) {
  const auto& T = m.triangles[t];
  const Vec2 &a = m.nodes[T[0]], &b = m.nodes[T[1]], &c = m.nodes[T[2]];
  const double d = orient(a, b, c);
  P1Geom g;
  g.area = 0.5 * d;
  g.grad.row(0) = Vec2(b.y() - c.y(), c.x() - b.x()) / d;
  g.grad.row(1) = Vec2(c.y() - a.y(), a.x() - c.x()) / d;
  g.grad.row(2) = Vec2(a.y() - b.y(), b.x() - a.x()) / d;
  return g;
}

using TriCoef = std::function<cplx(std::size_t)>;

inline SpMat assemble_stiffness(const TriMesh& m, const TriCoef& coef = {}) {
  std::vector<Triplet> trip;
  trip.reserve(9 * m.triangles.size());
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    P1Geom g = p1_geom(m, t);
    cplx c = coef ? coef(t) : cplx(1.0);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trip.emplace_back(m.triangles[t][i], m.triangles[t][j], c * g.area * g.grad.row(i).dot(g.grad.row(j)));
  }
  const auto n = static_cast<Eigen::Index>(m.nodes.size());
  SpMat K(n, n);
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

inline SpMat assemble_mass(const TriMesh& m, const TriCoef& coef = {}) {
  std::vector<Triplet> trip;
  trip.reserve(9 * m.triangles.size());
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    double a = m.area(t);
    cplx c = coef ? coef(t) : cplx(1.0);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trip.emplace_back(m.triangles[t][i], m.triangles[t][j], c * a * (i == j ? 2.0 : 1.0) / 12.0);
  }
  const auto n = static_cast<Eigen::Index>(m.nodes.size());
  SpMat M(n, n);
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

// Edge mass of eta(tag) phi_i phi_j over tagged edges, by 3-point Gauss on each edge.
inline SpMat assemble_edge_mass(const TriMesh& m, const std::vector<std::array<int, 3>>& edges,
                                const std::function<cplx(int)>& eta) {
  static const double gx[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
  static const double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  std::vector<Triplet> trip;
  for (auto& e : edges) {
    const double len = (m.nodes[e[1]] - m.nodes[e[0]]).norm();
    const cplx c = eta(e[2]);
    double loc[2][2] = {{0, 0}, {0, 0}};
    for (int q = 0; q < 3; ++q) {
      double phi[2] = {1.0 - gx[q], gx[q]};
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) loc[i][j] += gw[q] * phi[i] * phi[j];
    }
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) trip.emplace_back(e[i], e[j], c * len * loc[i][j]);
  }
  const auto n = static_cast<Eigen::Index>(m.nodes.size());
  SpMat B(n, n);
  B.setFromTriplets(trip.begin(), trip.end());
  return B;
}

inline CVec interpolate(const TriMesh& m, const std::function<cplx(const Vec2&)>& f) {
  CVec v(static_cast<Eigen::Index>(m.nodes.size()));
  for (std::size_t i = 0; i < m.nodes.size(); ++i) v[static_cast<Eigen::Index>(i)] = f(m.nodes[i]);
  return v;
}

inline double l2_norm(const TriMesh& m, const CVec& u) {
  return std::sqrt(std::max(0.0, u.dot(assemble_mass(m) * u).real()));
}

// Bucket grid over triangle bounding boxes for point location.
class PointLocator {
 public:
  explicit PointLocator(const TriMesh& m) : m_(&m) {
    lo_ = hi_ = m.nodes.at(0);
    for (auto& p : m.nodes) {
      lo_ = lo_.cwiseMin(p);
      hi_ = hi_.cwiseMax(p);
    }
    Vec2 ext = hi_ - lo_;
    const double pad = 1e-9 * ext.norm();
    lo_ -= Vec2(pad, pad);
    hi_ += Vec2(pad, pad);
    ext = hi_ - lo_;
    const double cells = std::max(1.0, std::sqrt(static_cast<double>(m.triangles.size())));
    nx_ = std::max(1, static_cast<int>(cells * ext.x() / std::max(ext.x(), ext.y())));
    ny_ = std::max(1, static_cast<int>(cells * ext.y() / std::max(ext.x(), ext.y())));
    buckets_.resize(static_cast<std::size_t>(nx_ * ny_));
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
      Vec2 a = m.nodes[m.triangles[t][0]], b = a;
      for (int v : m.triangles[t]) {
        a = a.cwiseMin(m.nodes[v]);
        b = b.cwiseMax(m.nodes[v]);
      }
      auto [i0, j0] = cell(a);
      auto [i1, j1] = cell(b);
      for (int i = i0; i <= i1; ++i)
        for (int j = j0; j <= j1; ++j) buckets_[static_cast<std::size_t>(j * nx_ + i)].push_back(static_cast<int>(t));
    }
  }

  struct Hit {
    int tri;
    std::array<double, 3> bary;
  };

  std::optional<Hit> locate(const Vec2& x, double tol = 1e-10) const {
    if (x.x() < lo_.x() || x.y() < lo_.y() || x.x() > hi_.x() || x.y() > hi_.y()) return std::nullopt;
    auto [i, j] = cell(x);
    std::optional<Hit> best;
    double best_min = -1e300;
    for (int t : buckets_[static_cast<std::size_t>(j * nx_ + i)]) {
      auto b = bary(t, x);
      double mn = std::min({b[0], b[1], b[2]});
      if (mn > best_min) {
        best_min = mn;
        best = Hit{t, b};
      }
    }
    if (!best || best_min < -tol) return std::nullopt;
    return best;
  }

  cplx eval(const CVec& u, const Vec2& x) const {
    auto h = locate(x);
    if (!h) throw InvalidInput("PointLocator: point outside the mesh");
    const auto& T = m_->triangles[static_cast<std::size_t>(h->tri)];
    return h->bary[0] * u[T[0]] + h->bary[1] * u[T[1]] + h->bary[2] * u[T[2]];
  }

  CVec2 grad(const CVec& u, const Vec2& x) const {
    auto h = locate(x);
    if (!h) throw InvalidInput("PointLocator: point outside the mesh");
    return grad_in(u, static_cast<std::size_t>(h->tri));
  }

  CVec2 grad_in(const CVec& u, std::size_t t) const {
    P1Geom g = p1_geom(*m_, t);
    const auto& T = m_->triangles[t];
    CVec2 r(0.0, 0.0);
    for (int i = 0; i < 3; ++i) r += u[T[i]] * CVec2(g.grad(i, 0), g.grad(i, 1));
    return r;
  }

  const TriMesh& mesh() const { return *m_; }

 private:
  const TriMesh* m_;
  Vec2 lo_, hi_;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> buckets_;

  std::pair<int, int> cell(const Vec2& x) const {
    int i = static_cast<int>((x.x() - lo_.x()) / (hi_.x() - lo_.x()) * nx_);
    int j = static_cast<int>((x.y() - lo_.y()) / (hi_.y() - lo_.y()) * ny_);
    return {std::clamp(i, 0, nx_ - 1), std::clamp(j, 0, ny_ - 1)};
  }

  std::array<double, 3> bary(int t, const Vec2& x) const {
    const auto& T = m_->triangles[static_cast<std::size_t>(t)];
    const Vec2 &a = m_->nodes[T[0]], &b = m_->nodes[T[1]], &c = m_->nodes[T[2]];
    const double d = orient(a, b, c);
    double l0 = orient(x, b, c) / d, l1 = orient(a, x, c) / d;
    return {l0, l1, 1.0 - l0 - l1};
  }
};

// Integral over mesh triangles intersected with the disc B(c, rho), by
// recursive 4-way subdivision and centroid quadrature. `f(t, bary, x)` is the
// integrand inside triangle t. Returns (integral, measure) with the same rule
// for both, so the mean of a constant is exact.
template <class F>
std::pair<cplx, double> integrate_over_ball(const TriMesh& m, const Vec2& c, double rho, F&& f, int depth = 4) {
  cplx total = 0.0;
  double meas = 0.0;
  const double r2 = rho * rho;
  std::function<void(std::size_t, const std::array<Vec2, 3>&, const std::array<std::array<double, 3>, 3>&, int)> rec;
  rec = [&](std::size_t t, const std::array<Vec2, 3>& p, const std::array<std::array<double, 3>, 3>& b, int lev) {
    const double area = 0.5 * std::abs(orient(p[0], p[1], p[2]));
    if (lev == 0) {
      Vec2 g = (p[0] + p[1] + p[2]) / 3.0;
      if ((g - c).squaredNorm() <= r2) {
        std::array<double, 3> bg{(b[0][0] + b[1][0] + b[2][0]) / 3.0, (b[0][1] + b[1][1] + b[2][1]) / 3.0,
                                 (b[0][2] + b[1][2] + b[2][2]) / 3.0};
        total += area * f(t, bg, g);
        meas += area;
      }
      return;
    }
    std::array<Vec2, 3> mp{0.5 * (p[0] + p[1]), 0.5 * (p[1] + p[2]), 0.5 * (p[2] + p[0])};
    std::array<std::array<double, 3>, 3> mb;
    for (int k = 0; k < 3; ++k) {
      mb[0][k] = 0.5 * (b[0][k] + b[1][k]);
      mb[1][k] = 0.5 * (b[1][k] + b[2][k]);
      mb[2][k] = 0.5 * (b[2][k] + b[0][k]);
    }
    rec(t, {p[0], mp[0], mp[2]}, {b[0], mb[0], mb[2]}, lev - 1);
    rec(t, {mp[0], p[1], mp[1]}, {mb[0], b[1], mb[1]}, lev - 1);
    rec(t, {mp[2], mp[1], p[2]}, {mb[2], mb[1], b[2]}, lev - 1);
    rec(t, {mp[0], mp[1], mp[2]}, {mb[0], mb[1], mb[2]}, lev - 1);
  };
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& T = m.triangles[t];
    std::array<Vec2, 3> p{m.nodes[T[0]], m.nodes[T[1]], m.nodes[T[2]]};
    // distance from c to the triangle
    double dmin = 1e300;
    bool inside = orient(p[0], p[1], c) >= 0 && orient(p[1], p[2], c) >= 0 && orient(p[2], p[0], c) >= 0;
    if (inside) dmin = 0.0;
    int n_in = 0;
    for (int k = 0; k < 3; ++k) {
      const Vec2 &a = p[k], &b = p[(k + 1) % 3];
      double s = std::clamp((c - a).dot(b - a) / (b - a).squaredNorm(), 0.0, 1.0);
      dmin = std::min(dmin, (a + s * (b - a) - c).norm());
      if ((a - c).squaredNorm() <= r2) ++n_in;
    }
    if (dmin > rho) continue;
    rec(t, p, {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}, n_in == 3 ? std::min(depth, 2) : depth);
  }
  return {total, meas};
}

struct BallAverage {
  double rho = 0.0;
  cplx value{0.0};
  double measure = 0.0;
  bool resolved = true;  // at least ~3 elements across rho
};

namespace detail {

inline double local_mesh_size(const TriMesh& m, const Vec2& c, double rho) {
  double hmax = 0.0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& T = m.triangles[t];
    bool near = false;
    for (int v : T)
      if ((m.nodes[v] - c).norm() <= rho) near = true;
    if (!near) continue;
    for (int k = 0; k < 3; ++k) hmax = std::max(hmax, (m.nodes[T[k]] - m.nodes[T[(k + 1) % 3]]).norm());
  }
  return hmax;
}

}  // namespace detail

// Averages over B(vertex, rho) of |u| (absolute = true) or of u.
inline std::vector<BallAverage> ball_averages(const TriMesh& m, const CVec& u, const CornerProbe& probe,
                                              bool absolute = true,
                                              const std::function<cplx(const Vec2&)>& weight = {}) {
  require(u.size() == static_cast<Eigen::Index>(m.nodes.size()), "ball_averages: field does not match mesh");
  require(!probe.radii.empty(), "ball_averages: no radii");
  double extent = 0.0;
  for (auto& p : m.nodes) extent = std::max(extent, (p - probe.vertex).norm());
  for (std::size_t i = 0; i < probe.radii.size(); ++i) {
    require(probe.radii[i] > 0.0, "ball_averages: radii must be positive");
    if (i > 0) require(probe.radii[i] < probe.radii[i - 1], "ball_averages: radii must be strictly decreasing");
  }
  require(probe.radii.front() <= extent, "ball_averages: radius larger than the mesh extent");
  std::vector<BallAverage> out;
  for (double rho : probe.radii) {
    auto f = [&](std::size_t t, const std::array<double, 3>& b, const Vec2& x) -> cplx {
      const auto& T = m.triangles[t];
      cplx v = b[0] * u[T[0]] + b[1] * u[T[1]] + b[2] * u[T[2]];
      if (weight) v *= weight(x);
      return absolute ? cplx(std::abs(v)) : v;
    };
    auto [tot, meas] = integrate_over_ball(m, probe.vertex, rho, f);
    BallAverage a;
    a.rho = rho;
    a.measure = meas;
    a.value = meas > 0.0 ? tot / meas : cplx(0.0);
    a.resolved = meas > 0.0 && rho >= 3.0 * detail::local_mesh_size(m, probe.vertex, rho) / 2.0;
    out.push_back(a);
  }
  return out;
}

inline std::vector<BallAverage> shrinking_ball_average(const TriMesh& m, const CVec& u, const CornerProbe& probe) {
  return ball_averages(m, u, probe, true);
}

}  // namespace cwl
