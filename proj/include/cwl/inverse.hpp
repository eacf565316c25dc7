#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "cwl/eigensolve.hpp"
#include "cwl/scatter.hpp"

namespace cwl {

struct ScattererConfig {
  ConductiveMedium medium;
  IncidentWave inc;
};

struct InverseOptions {
  double h = 0.1;
  double ring_R = 0.0;  // 0: scatterer extent + 0.5
  int n_ring = 0;       // 0: smallest power of two with 4N samples and spacing <= h
  double nonvanishing_threshold = 0.1;
  std::vector<double> probe_radii{0.1, 0.05, 0.025};
};

inline double scatterer_extent(const Domain& d) {
  if (auto* p = std::get_if<Polygon>(&d)) {
    double r = 0.0;
    for (auto& v : p->vertices) r = std::max(r, v.norm());
    return r;
  }
  auto& c = std::get<Disk>(d);
  return c.center.norm() + c.radius;
}

struct ForwardSetup {
  TriMesh mesh;
  DtnRing ring;
};

inline ForwardSetup forward_setup(const Domain& d, double k, const InverseOptions& o, double h) {
  const double R = o.ring_R > 0.0 ? o.ring_R : scatterer_extent(d) + 0.5;
  DtnRing ring = DtnRing::make(k, R);
  int n = o.n_ring;
  if (n <= 0) {
    n = 8;
    while (n < 4 * ring.N || 2.0 * pi * R / n > h) n *= 2;
  }
  require(is_pow2(static_cast<std::size_t>(n)), "forward_setup: ring node count must be a power of two");
  MeshOptions mo;
  mo.h = h;
  return {mesh_scatter(d, R, n, mo), ring};
}

inline FarField simulate_far_field(const ScattererConfig& c, const InverseOptions& o, double h, CVec* u = nullptr,
                                   TriMesh* mesh_out = nullptr) {
  ForwardSetup s = forward_setup(c.medium.domain, c.inc.k, o, h);
  ForwardResult r = solve_forward(c.medium, c.inc, s.mesh, s.ring);
  if (u) *u = r.u;
  FarField f = r.far_field(s.mesh);
  if (mesh_out) *mesh_out = std::move(s.mesh);
  return f;
}

inline double farfield_distance(const FarField& a, const FarField& b) { return far_field_distance(a, b); }

// Relative complex Gaussian noise: ||noise|| = level * ||F|| on the sample grid.
inline FarField add_noise(const FarField& f, double level, std::uint64_t seed) {
  require(level >= 0.0, "add_noise: level must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<cplx> e(f.values.size());
  double en = 0.0, fn = 0.0;
  for (std::size_t j = 0; j < e.size(); ++j) {
    e[j] = {nd(rng), nd(rng)};
    en += std::norm(e[j]);
    fn += std::norm(f.values[j]);
  }
  FarField out = f;
  const double scale = en > 0.0 ? level * std::sqrt(fn / en) : 0.0;
  for (std::size_t j = 0; j < e.size(); ++j) out.values[j] += scale * e[j];
  return out;
}

// Replace vertex i by the two points at distance c along its edges.
inline Polygon chamfer_corner(const Polygon& p, std::size_t i, double c) {
  const std::size_t n = p.size();
  require(i < n, "chamfer_corner: vertex index out of range");
  const Vec2 v = p[i], a = p[(i + n - 1) % n], b = p[(i + 1) % n];
  require(c > 0.0 && c < (a - v).norm() && c < (b - v).norm(), "chamfer_corner: cut longer than the adjacent edges");
  std::vector<Vec2> out;
  for (std::size_t j = 0; j < n; ++j) {
    if (j != i) {
      out.push_back(p[j]);
      continue;
    }
    out.push_back(v + c * (a - v).normalized());
    out.push_back(v + c * (b - v).normalized());
  }
  return Polygon::make(out);
}

struct AdmissibilityFlags {
  bool nonvanishing = false;
  double min_average = 0.0;
  bool corners_nondegenerate = false;
  bool q_constant_near_corners = false;
  bool ok() const { return nonvanishing && corners_nondegenerate && q_constant_near_corners; }
};

inline AdmissibilityFlags admissibility(const ScattererConfig& c, const TriMesh& mesh, const CVec& u,
                                        const InverseOptions& o) {
  AdmissibilityFlags f;
  std::vector<Vec2> probes;
  f.corners_nondegenerate = true;
  f.q_constant_near_corners = true;
  if (auto* p = std::get_if<Polygon>(&c.medium.domain)) {
    for (std::size_t i = 0; i < p->size(); ++i) {
      const Vec2 v = (*p)[i];
      probes.push_back(v);
      if (std::abs(p->interior_angle(i) - pi) < 1e-9) f.corners_nondegenerate = false;
      const double r = 0.5 * o.probe_radii.back();
      const cplx q0 = c.medium.q_at(v);
      for (int j = 0; j < 16; ++j) {
        Vec2 x = v + r * Vec2(std::cos(2.0 * pi * j / 16), std::sin(2.0 * pi * j / 16));
        if (p->contains(x) && std::abs(c.medium.q_at(x) - q0) > 0.0) f.q_constant_near_corners = false;
      }
    }
  } else {
    auto& d = std::get<Disk>(c.medium.domain);
    probes.push_back(d.center);
    probes.push_back(d.center + Vec2(d.radius, 0.0));
  }
  auto rep = nonvanishing_check(mesh, u, probes, o.probe_radii, o.nonvanishing_threshold);
  f.nonvanishing = rep.admissible;
  f.min_average = rep.min_average;
  return f;
}

struct DistinguishReport {
  double distance = 0.0;
  double floor = 0.0;
  bool verdict = false;  // distance > floor; false also when either config is not admissible
  AdmissibilityFlags admissible1, admissible2;
  std::vector<Vec2> corners;  // vertices of one boundary missing from the other
};

inline std::vector<Vec2> differing_corners(const Domain& a, const Domain& b) {
  std::vector<Vec2> out;
  auto verts = [](const Domain& d) {
    if (auto* p = std::get_if<Polygon>(&d)) return p->vertices;
    return std::vector<Vec2>{};
  };
  auto va = verts(a), vb = verts(b);
  auto missing = [&](const std::vector<Vec2>& x, const std::vector<Vec2>& y) {
    for (auto& p : x)
      if (std::none_of(y.begin(), y.end(), [&](const Vec2& q) { return (p - q).norm() < 1e-12; })) out.push_back(p);
  };
  missing(va, vb);
  missing(vb, va);
  return out;
}

// Two forward solves at the shared incident wave; the floor is ten times the
// change in config1's far field between mesh sizes h and h/2.
inline DistinguishReport distinguish(const ScattererConfig& c1, const ScattererConfig& c2, const InverseOptions& o) {
  require(std::abs(c1.inc.k - c2.inc.k) == 0.0 && (c1.inc.d - c2.inc.d).norm() == 0.0,
          "distinguish: both configurations must share the incident wave");
  InverseOptions oo = o;
  if (oo.ring_R <= 0.0) oo.ring_R = std::max(scatterer_extent(c1.medium.domain), scatterer_extent(c2.medium.domain)) + 0.5;
  if (oo.n_ring <= 0) {
    DtnRing r = DtnRing::make(c1.inc.k, oo.ring_R);
    int n = 8;
    while (n < 4 * r.N || 2.0 * pi * oo.ring_R / n > 0.5 * o.h) n *= 2;
    oo.n_ring = n;
  }
  DistinguishReport rep;
  CVec u1, u2;
  TriMesh m1, m2;
  FarField f1 = simulate_far_field(c1, oo, o.h, &u1, &m1);
  FarField f2 = simulate_far_field(c2, oo, o.h, &u2, &m2);
  FarField f1f = simulate_far_field(c1, oo, 0.5 * o.h);
  rep.distance = farfield_distance(f1, f2);
  rep.floor = 10.0 * farfield_distance(f1, f1f);
  rep.admissible1 = admissibility(c1, m1, u1, o);
  rep.admissible2 = admissibility(c2, m2, u2, o);
  rep.corners = differing_corners(c1.medium.domain, c2.medium.domain);
  rep.verdict = rep.admissible1.ok() && rep.admissible2.ok() && rep.distance > rep.floor;
  return rep;
}

struct DirichletMargin {
  double nearest_k = 0.0;
  double margin = 0.0;  // |k_D - k| / k
};

// Nearest eigenvalue of -Lap u = k^2 q u with u = 0 on the boundary.
inline DirichletMargin dirichlet_margin(const ConductiveMedium& m, double k, double h) {
  MeshOptions mo;
  mo.h = h;
  TriMesh mesh = std::holds_alternative<Polygon>(m.domain) ? mesh_polygon(std::get<Polygon>(m.domain), mo)
                                                            : mesh_disk(std::get<Disk>(m.domain), mo);
  std::vector<bool> bnd(mesh.nodes.size(), false);
  for (auto& e : mesh.boundary) bnd[e[0]] = bnd[e[1]] = true;
  std::vector<int> idx(mesh.nodes.size(), -1);
  int n = 0;
  for (std::size_t i = 0; i < bnd.size(); ++i)
    if (!bnd[i]) idx[i] = n++;
  std::vector<cplx> qt(mesh.triangles.size());
  for (std::size_t t = 0; t < qt.size(); ++t) qt[t] = m.q_at(mesh.centroid(t));
  SpMat K = assemble_stiffness(mesh), Mq = assemble_mass(mesh, [&](std::size_t t) { return qt[t]; });
  auto restrict_ = [&](const SpMat& X) {
    std::vector<Triplet> tr;
    for (int c = 0; c < X.outerSize(); ++c)
      for (SpMat::InnerIterator it(X, c); it; ++it)
        if (idx[it.row()] >= 0 && idx[it.col()] >= 0) tr.emplace_back(idx[it.row()], idx[it.col()], it.value());
    SpMat Y(n, n);
    Y.setFromTriplets(tr.begin(), tr.end());
    return Y;
  };
  GeneralizedEig ge = shift_invert(restrict_(K), restrict_(Mq), cplx(k * k * 1.0001), 1);
  DirichletMargin d;
  cplx kd = std::sqrt(ge.lambda.at(0));
  d.nearest_k = std::abs(kd);
  d.margin = std::abs(d.nearest_k - k) / k;
  return d;
}

struct EtaSearch {
  cplx lo{0.0}, hi{2.0};  // real interval when both imaginary parts vanish, else a rectangle
  int samples = 21;
  double tol = 1e-7;
  bool is_real() const { return lo.imag() == 0.0 && hi.imag() == 0.0; }
};

struct EtaRecovery {
  cplx eta_hat{0.0};
  double misfit = 0.0;
  std::vector<std::pair<cplx, double>> curve;
  DirichletMargin dirichlet;
};

inline constexpr double kDirichletMarginMin = 0.02;

// Least-squares fit of a constant eta to one far-field measurement.
inline EtaRecovery recover_eta(const ConductiveMedium& known, const IncidentWave& inc, const FarField& observed,
                               const EtaSearch& search, const InverseOptions& o) {
  require(search.hi.real() > search.lo.real(), "recover_eta: empty search interval");
  require(search.is_real() || search.hi.imag() > search.lo.imag(), "recover_eta: empty search rectangle");
  require(search.samples >= 3, "recover_eta: need at least three samples");
  EtaRecovery out;
  out.dirichlet = dirichlet_margin(known, inc.k, o.h);
  if (out.dirichlet.margin < kDirichletMarginMin)
    throw InvalidInput("recover_eta: k is within " + std::to_string(out.dirichlet.margin * 100.0) +
                       "% of the Dirichlet eigenvalue k = " + std::to_string(out.dirichlet.nearest_k));
  InverseOptions oo = o;
  oo.n_ring = static_cast<int>(observed.values.size());
  ForwardSetup s = forward_setup(known.domain, inc.k, oo, o.h);
  ForwardSystem fs = forward_system(known, inc, s.mesh, s.ring);
  const SpMat E1 = fs.conductive(s.mesh, [](int) { return cplx(1.0); });
  auto misfit = [&](cplx eta) {
    SpMat E = eta * E1;
    return farfield_distance(fs.solve(E).far_field(s.mesh), observed);
  };
  if (search.is_real()) {
    const double a = search.lo.real(), b = search.hi.real();
    int best = 0;
    for (int i = 0; i < search.samples; ++i) {
      double e = a + (b - a) * i / (search.samples - 1);
      out.curve.emplace_back(e, misfit(e));
      if (out.curve.back().second < out.curve[static_cast<std::size_t>(best)].second) best = i;
    }
    const double step = (b - a) / (search.samples - 1);
    double lo = std::max(a, a + (best - 1) * step), hi = std::min(b, a + (best + 1) * step);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = misfit(x1), f2 = misfit(x2);
    while (hi - lo > search.tol) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - g * (hi - lo);
        f1 = misfit(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + g * (hi - lo);
        f2 = misfit(x2);
      }
    }
    out.eta_hat = 0.5 * (lo + hi);
    out.misfit = misfit(out.eta_hat);
    return out;
  }
  // grid, then shrinking 5x5 stencils around the incumbent
  const int n = search.samples;
  double dx = (search.hi.real() - search.lo.real()) / (n - 1), dy = (search.hi.imag() - search.lo.imag()) / (n - 1);
  cplx best = search.lo;
  double fbest = 1e300;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      cplx e(search.lo.real() + i * dx, search.lo.imag() + j * dy);
      double f = misfit(e);
      out.curve.emplace_back(e, f);
      if (f < fbest) {
        fbest = f;
        best = e;
      }
    }
  while (std::max(dx, dy) > search.tol) {
    dx *= 0.4;
    dy *= 0.4;
    cplx c = best;
    for (int i = -2; i <= 2; ++i)
      for (int j = -2; j <= 2; ++j) {
        if (i == 0 && j == 0) continue;
        cplx e(std::clamp(c.real() + i * dx, search.lo.real(), search.hi.real()),
               std::clamp(c.imag() + j * dy, search.lo.imag(), search.hi.imag()));
        double f = misfit(e);
        if (f < fbest) {
          fbest = f;
          best = e;
        }
      }
  }
  out.eta_hat = best;
  out.misfit = fbest;
  return out;
}

}  // namespace cwl
