#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cwl/cgo.hpp"
#include "cwl/eigensolve.hpp"
#include "cwl/fem.hpp"
#include "cwl/field.hpp"
#include "cwl/medium.hpp"
#include "cwl/quadrature.hpp"

namespace cwl {

// Generalized eigenproblem A x = k^2 B x with x = [w_interior; v_interior; t_boundary].
struct TransmissionSystem {
  SpMat A, B;
  std::vector<int> interior, boundary;  // node indices in DOF order
  std::vector<int> slot;                // node -> position in `interior` or `boundary`
  std::vector<bool> on_boundary;
  Eigen::Index n_int = 0, n_bnd = 0;

  Eigen::Index dim() const { return 2 * n_int + n_bnd; }
  Eigen::Index wdof(int node) const { return on_boundary[node] ? 2 * n_int + slot[node] : slot[node]; }
  Eigen::Index vdof(int node) const { return on_boundary[node] ? 2 * n_int + slot[node] : n_int + slot[node]; }
};

inline TransmissionSystem assemble(const ConductiveMedium& medium, const TriMesh& mesh) {
  medium.validate();
  const int nn = static_cast<int>(mesh.nodes.size());
  TransmissionSystem S;
  S.on_boundary.assign(static_cast<std::size_t>(nn), false);
  S.slot.assign(static_cast<std::size_t>(nn), -1);
  for (auto& e : mesh.boundary) {
    require(e[2] >= 0 && e[2] < medium.edge_count(), "assemble: dangling boundary tag " + std::to_string(e[2]));
    S.on_boundary[e[0]] = S.on_boundary[e[1]] = true;
  }
  for (int i = 0; i < nn; ++i) {
    auto& list = S.on_boundary[i] ? S.boundary : S.interior;
    S.slot[i] = static_cast<int>(list.size());
    list.push_back(i);
  }
  S.n_int = static_cast<Eigen::Index>(S.interior.size());
  S.n_bnd = static_cast<Eigen::Index>(S.boundary.size());
  std::vector<cplx> qt(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) qt[t] = medium.q_at(mesh.centroid(t));
  SpMat K = assemble_stiffness(mesh);
  SpMat Mq = assemble_mass(mesh, [&](std::size_t t) { return qt[t]; });
  SpMat M = assemble_mass(mesh);
  SpMat E = assemble_edge_mass(mesh, mesh.boundary, [&](int tag) { return medium.eta_at(tag); });

  std::vector<Triplet> ta, tb;
  auto scan = [&](const SpMat& X, auto&& fn) {
    for (int c = 0; c < X.outerSize(); ++c)
      for (SpMat::InnerIterator it(X, c); it; ++it) fn(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  };
  scan(K, [&](int i, int j, cplx k) {
    if (!S.on_boundary[i]) {
      ta.emplace_back(S.wdof(i), S.wdof(j), k);
      ta.emplace_back(S.vdof(i), S.vdof(j), k);
    } else {
      Eigen::Index r = S.wdof(i);
      ta.emplace_back(r, S.wdof(j), k);
      ta.emplace_back(r, S.vdof(j), -k);
    }
  });
  scan(Mq, [&](int i, int j, cplx m) {
    tb.emplace_back(S.wdof(i), S.wdof(j), m);  // row (i) or (iii)
  });
  scan(M, [&](int i, int j, cplx m) {
    if (!S.on_boundary[i])
      tb.emplace_back(S.vdof(i), S.vdof(j), m);
    else
      tb.emplace_back(S.wdof(i), S.vdof(j), -m);
  });
  scan(E, [&](int i, int j, cplx e) { ta.emplace_back(S.wdof(i), S.wdof(j), -e); });
  S.A.resize(S.dim(), S.dim());
  S.B.resize(S.dim(), S.dim());
  S.A.setFromTriplets(ta.begin(), ta.end());
  S.B.setFromTriplets(tb.begin(), tb.end());
  S.A.makeCompressed();
  S.B.makeCompressed();
  return S;
}

struct EigenResiduals {
  double pde_v = 0.0, pde_w = 0.0, bc_dirichlet = 0.0, bc_conductive = 0.0;
  double combined() const { return std::max({pde_v, pde_w, bc_dirichlet, bc_conductive}); }
};

struct EigenPair {
  cplx k;
  CVec v, w;
  EigenResiduals residuals;
  CVec x;  // DOF vector
};

inline EigenResiduals eigen_residuals(const TransmissionSystem& S, cplx lambda, const CVec& x) {
  CVec ax = S.A * x, bx = S.B * x;
  CVec r = ax - lambda * bx;
  const double scale = ax.norm() + std::abs(lambda) * bx.norm();
  EigenResiduals res;
  if (scale == 0.0) return res;
  res.pde_w = r.segment(0, S.n_int).norm() / scale;
  res.pde_v = r.segment(S.n_int, S.n_int).norm() / scale;
  res.bc_conductive = r.segment(2 * S.n_int, S.n_bnd).norm() / scale;
  res.bc_dirichlet = 0.0;  // shared trace DOFs
  return res;
}

inline EigenPair make_pair(const TransmissionSystem& S, cplx lambda, CVec x) {
  const Eigen::Index nn = static_cast<Eigen::Index>(S.on_boundary.size());
  EigenPair p;
  p.k = std::sqrt(lambda);
  if (p.k.real() < 0.0) p.k = -p.k;
  p.v.resize(nn);
  p.w.resize(nn);
  for (int i = 0; i < nn; ++i) {
    p.w[i] = x[S.wdof(i)];
    p.v[i] = x[S.vdof(i)];
  }
  const double nrm = p.v.norm() + p.w.norm();
  Eigen::Index imax = 0;
  p.v.cwiseAbs().maxCoeff(&imax);
  cplx phase = std::abs(p.v[imax]) > 0.0 ? std::conj(p.v[imax]) / std::abs(p.v[imax]) : cplx(1.0);
  const cplx s = phase / nrm;
  p.v *= s;
  p.w *= s;
  x *= s;
  p.residuals = eigen_residuals(S, lambda, x);
  p.x = std::move(x);
  return p;
}

// Rectangle in the k plane; its image under k -> k^2 is the search region.
struct SearchWindow {
  double k_re_min = 0.0;
  double k_re_max = 1.0;
  double k_im_max = 1e-6;
  bool contains(cplx k) const {
    return k.real() > k_re_min && k.real() <= k_re_max && std::abs(k.imag()) <= k_im_max;
  }
};

inline SearchWindow default_window(const TriMesh& mesh) { return {0.0, 0.5 / mesh.max_edge(), 1e-6}; }

inline constexpr Eigen::Index kDenseBudget = 4000;
inline constexpr double kSpuriousTol = 1e-6;

inline std::vector<EigenPair> solve_dense_qz(const TransmissionSystem& S, const SearchWindow& win) {
  if (S.dim() > kDenseBudget)
    throw InvalidInput("solve_dense_qz: dimension " + std::to_string(S.dim()) + " exceeds the dense budget; coarsen the mesh");
  GeneralizedEig ge = dense_qz(Eigen::MatrixXcd(S.A), Eigen::MatrixXcd(S.B));
  std::vector<EigenPair> out;
  for (std::size_t i = 0; i < ge.lambda.size(); ++i) {
    cplx k = std::sqrt(ge.lambda[i]);
    if (k.real() < 0.0) k = -k;
    if (!win.contains(k)) continue;
    cplx lam = ge.lambda[i];
    CVec x = ge.vectors[i];
    inverse_iteration(S.A, S.B, lam, x, 1);
    EigenPair p = make_pair(S, lam, x);
    if (p.residuals.combined() < kSpuriousTol && win.contains(p.k)) out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(), [](const EigenPair& a, const EigenPair& b) { return a.k.real() < b.k.real(); });
  return out;
}

// Eigenpairs nearest k_target by shift-invert Arnoldi, polished and filtered as in solve_dense_qz.
inline std::vector<EigenPair> solve_near(const TransmissionSystem& S, cplx k_target, int nev = 4) {
  GeneralizedEig ge = shift_invert(S.A, S.B, k_target * k_target, nev);
  std::vector<EigenPair> out;
  for (std::size_t i = 0; i < ge.lambda.size(); ++i) {
    cplx lam = ge.lambda[i];
    CVec x = ge.vectors[i];
    inverse_iteration(S.A, S.B, lam, x, 2);
    EigenPair p = make_pair(S, lam, x);
    if (p.residuals.combined() < kSpuriousTol) out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(),
            [&](const EigenPair& a, const EigenPair& b) { return std::abs(a.k - k_target) < std::abs(b.k - k_target); });
  return out;
}

// Separation of variables on the disk of radius R, angular mode n.
struct DiskModeProblem {
  double R = 1.0;
  cplx q{4.0};
  cplx eta{0.0};
  int n = 0;
};

inline cplx disk_determinant(const DiskModeProblem& p, cplx k) {
  require(std::abs(k) > 0.0, "disk_determinant: k must be non-zero");
  const cplx k1 = k * std::sqrt(p.q);
  const cplx a = k1 * p.R, b = k * p.R;
  return bessel_j(p.n, a) * (k * bessel_j_prime(p.n, b) + p.eta * bessel_j(p.n, b)) -
         k1 * bessel_j_prime(p.n, a) * bessel_j(p.n, b);
}

// Sign-change bracketed real roots of Re d_n on [k_lo, k_hi], refined by bisection.
inline std::vector<double> disk_eigenvalues(const DiskModeProblem& p, double k_lo, double k_hi) {
  require(k_lo > 0.0 && k_hi > k_lo, "disk_eigenvalues: need 0 < k_lo < k_hi");
  auto f = [&](double k) { return disk_determinant(p, cplx(k)).real(); };
  const int nscan = std::max(200, static_cast<int>((k_hi - k_lo) / 0.005));
  std::vector<double> roots;
  double a = k_lo, fa = f(a);
  for (int i = 1; i <= nscan; ++i) {
    double b = k_lo + (k_hi - k_lo) * i / nscan, fb = f(b);
    if (fa == 0.0) {
      roots.push_back(a);
    } else if ((fa < 0) != (fb < 0)) {
      double lo = a, hi = b, flo = fa;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        double mid = 0.5 * (lo + hi), fm = f(mid);
        if ((fm < 0) == (flo < 0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      double r = 0.5 * (lo + hi);
      if (std::abs(disk_determinant(p, cplx(r))) < 1e-10) roots.push_back(r);
    }
    a = b;
    fa = fb;
  }
  return roots;
}

inline std::vector<BallAverage> corner_vanishing_profile(const TriMesh& mesh, const EigenPair& pair,
                                                         const CornerProbe& probe) {
  return ball_averages(mesh, pair.v, probe, true);
}

// Complex averages of V w over B(vertex, rho) in the domain.
inline std::vector<BallAverage> interior_indicator(const TriMesh& mesh, const EigenPair& pair, const CornerProbe& probe,
                                                   const std::function<cplx(const Vec2&)>& V) {
  return ball_averages(mesh, pair.w, probe, false, V);
}

struct GreenIdentity {
  cplx lhs, rhs;
  double residual;
};

namespace detail {

inline GreenIdentity green_finish(cplx lhs, cplx rhs, double scale) {
  return {lhs, rhs, std::abs(lhs - rhs) / (std::abs(lhs) + std::abs(rhs) + scale)};
}

// Integral along segment a->b of f(x) n, with outward normal n for a counter-clockwise boundary.
template <class F>
cplx segment_flux(F&& f, const Vec2& a, const Vec2& b, const QuadOptions& o) {
  Vec2 t = b - a;
  double len = t.norm();
  Vec2 n(t.y() / len, -t.x() / len);
  auto g = [&](double u) -> cplx { return f(a + u * t, n) * len; };
  return integrate(g, 0.0, 1.0, o).value;
}

}  // namespace detail

// Second Green identity: lhs = int (g Lf - f Lg), rhs = boundary integral of
// (g df/dn - f dg/dn). The residual is |lhs - rhs| / (|lhs| + |rhs| + eps), with eps the
// L1 size of the integrands so that identically vanishing sides stay well scaled.
inline GreenIdentity green_identity(const AnalyticField& f, const AnalyticField& g, const Polygon& poly) {
  QuadOptions o{1e-14, 1e-12, 100000, 0};
  double scale = 0.0;
  cplx lhs = 0.0;
  for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
    auto fi = [&](const Vec2& x) { return g.value(x) * f.laplacian(x) - f.value(x) * g.laplacian(x); };
    auto ai = [&](const Vec2& x) -> cplx {
      return std::abs(g.value(x) * f.laplacian(x)) + std::abs(f.value(x) * g.laplacian(x));
    };
    double sgn = orient(poly[0], poly[i], poly[i + 1]) > 0 ? 1.0 : -1.0;
    lhs += sgn * integrate_triangle(fi, poly[0], poly[i], poly[i + 1], o).value;
    scale += integrate_triangle(ai, poly[0], poly[i], poly[i + 1], o).value.real();
  }
  cplx rhs = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    auto fl = [&](const Vec2& x, const Vec2& n) -> cplx {
      return g.value(x) * dn(f.grad(x), n) - f.value(x) * dn(g.grad(x), n);
    };
    auto al = [&](const Vec2& x, const Vec2& n) -> cplx {
      return std::abs(g.value(x) * dn(f.grad(x), n)) + std::abs(f.value(x) * dn(g.grad(x), n));
    };
    rhs += detail::segment_flux(fl, poly[i], poly[i + 1], o);
    scale += detail::segment_flux(al, poly[i], poly[i + 1], o).real();
  }
  return detail::green_finish(lhs, rhs, scale);
}

namespace detail {

// Boundary pieces of S_h: rays (outward normals) and the arc.
template <class F>
cplx sector_boundary(F&& flux, const Sector& sec, double tol) {
  QuadOptions ray{tol * 1e-2, 1e-13, 100000, 60};
  QuadOptions arc{tol * 1e-2, 1e-13, 100000, 0};
  Vec2 em(std::cos(sec.theta_m), std::sin(sec.theta_m)), eM(std::cos(sec.theta_M), std::sin(sec.theta_M));
  Vec2 nm(std::sin(sec.theta_m), -std::cos(sec.theta_m)), nM(-std::sin(sec.theta_M), std::cos(sec.theta_M));
  cplx s = integrate([&](double r) -> cplx { return flux(Vec2(r * em), nm); }, 0.0, sec.h, ray).value;
  s += integrate([&](double r) -> cplx { return flux(Vec2(r * eM), nM); }, 0.0, sec.h, ray).value;
  s += integrate(
           [&](double t) -> cplx {
             Vec2 e(std::cos(t), std::sin(t));
             return flux(Vec2(sec.h * e), e) * sec.h;
           },
           sec.theta_m, sec.theta_M, arc)
           .value;
  return s;
}

}  // namespace detail

inline GreenIdentity green_identity(const AnalyticField& f, const AnalyticField& g, const Sector& sec) {
  const double tol = 1e-12;
  cplx lhs = quad_sector([&](const Vec2& x) { return g.value(x) * f.laplacian(x) - f.value(x) * g.laplacian(x); },
                         sec, tol)
                 .value;
  double scale = quad_sector(
                     [&](const Vec2& x) -> cplx {
                       return std::abs(g.value(x) * f.laplacian(x)) + std::abs(f.value(x) * g.laplacian(x));
                     },
                     sec, tol)
                     .value.real();
  cplx rhs = detail::sector_boundary(
      [&](const Vec2& x, const Vec2& n) -> cplx {
        return g.value(x) * dn(f.grad(x), n) - f.value(x) * dn(g.grad(x), n);
      },
      sec, tol);
  scale += detail::sector_boundary(
               [&](const Vec2& x, const Vec2& n) -> cplx {
                 return std::abs(g.value(x) * dn(f.grad(x), n)) +
                        std::abs(f.value(x) * dn(g.grad(x), n));
               },
               sec, tol)
               .real();
  return detail::green_finish(lhs, rhs, scale);
}

struct MasterIdentityTerms {
  double s = 0.0;
  cplx volume{0.0};  // int_{S_h} u0 (f1 - f2), with f1 = Lap v, f2 = Lap w
  cplx arc{0.0};     // int_{Lambda_h} (u0 d_nu(v - w) - (v - w) d_nu u0)
  cplx rays{0.0};    // int_{Gamma_h^+-} eta u0 v
  double residual = 0.0;
};

inline void finish_master(MasterIdentityTerms& t) {
  t.residual = std::abs(t.volume - t.arc + t.rays) / (std::abs(t.volume) + std::abs(t.arc) + std::abs(t.rays));
}

// Integral identity for a pair (v, w) on S_h with v = w and d_nu(v - w) = -eta v on
// the rays. With eta = 0 the ray term is absent.
inline std::vector<MasterIdentityTerms> master_identity_residual(const AnalyticField& v, const AnalyticField& w,
                                                                 cplx eta, const Sector& sec,
                                                                 const std::vector<double>& s_grid) {
  std::vector<MasterIdentityTerms> out;
  const double tol = 1e-13;
  for (double s : s_grid) {
    MasterIdentityTerms t;
    t.s = s;
    t.volume = quad_sector([&](const Vec2& x) { return eval_u0(s, x) * (v.laplacian(x) - w.laplacian(x)); }, sec, tol)
                   .value;
    QuadOptions arc{tol, 1e-14, 100000, 0}, ray{tol, 1e-14, 100000, 60};
    t.arc = integrate(
                [&](double th) -> cplx {
                  Vec2 e(std::cos(th), std::sin(th)), x = sec.h * e;
                  CVec2 gd = v.grad(x) - w.grad(x);
                  cplx dvn = dn(gd, e);
                  cplx du = dn(grad_u0(s, x), e);
                  return (eval_u0(s, x) * dvn - (v.value(x) - w.value(x)) * du) * sec.h;
                },
                sec.theta_m, sec.theta_M, arc)
                .value;
    if (eta != 0.0) {
      for (double th : {sec.theta_m, sec.theta_M}) {
        Vec2 e(std::cos(th), std::sin(th));
        t.rays += integrate([&](double r) -> cplx { return eta * eval_u0(s, r, th) * v.value(Vec2(r * e)); }, 0.0,
                            sec.h, ray)
                      .value;
      }
    }
    finish_master(t);
    out.push_back(t);
  }
  return out;
}

// Corner of a polygon as a local sector: rotation angle of the bisector and half opening.
struct CornerFrame {
  Vec2 vertex;
  double phi_next;  // direction of the outgoing edge
  double opening;   // interior angle
  int edge_next, edge_prev;

  Vec2 to_local(const Vec2& x) const {
    double rot = -(phi_next + 0.5 * opening);
    Vec2 d = x - vertex;
    return {std::cos(rot) * d.x() - std::sin(rot) * d.y(), std::sin(rot) * d.x() + std::cos(rot) * d.y()};
  }
  Sector sector(double h) const { return Sector::make(-0.5 * opening, 0.5 * opening, h); }
};

inline CornerFrame corner_frame(const Polygon& poly, int i) {
  const int n = static_cast<int>(poly.size());
  require(i >= 0 && i < n, "corner_frame: vertex index out of range");
  Vec2 c = poly[static_cast<std::size_t>(i)], nx = poly[static_cast<std::size_t>(i + 1)];
  CornerFrame f;
  f.vertex = c;
  f.phi_next = std::atan2(nx.y() - c.y(), nx.x() - c.x());
  f.opening = poly.interior_angle(static_cast<std::size_t>(i));
  f.edge_next = i;
  f.edge_prev = (i + n - 1) % n;
  return f;
}

// The same identity evaluated on a discrete eigenpair at polygon corner `corner`,
// using f1 - f2 = k^2 (q w - v). Quadrature error is far below the discretisation error.
inline std::vector<MasterIdentityTerms> master_identity_residual(const TriMesh& mesh, const ConductiveMedium& medium,
                                                                 const EigenPair& pair, int corner, double h,
                                                                 const std::vector<double>& s_grid) {
  const auto* poly = std::get_if<Polygon>(&medium.domain);
  require(poly != nullptr, "master_identity_residual: domain must be a polygon");
  CornerFrame fr = corner_frame(*poly, corner);
  Sector sec = fr.sector(h);
  PointLocator loc(mesh);
  const cplx k2 = pair.k * pair.k;
  const cplx q = medium.q_at(fr.vertex + 1e-9 * Vec2(std::cos(fr.phi_next + 0.5 * fr.opening),
                                                     std::sin(fr.phi_next + 0.5 * fr.opening)));
  const double rot = fr.phi_next + 0.5 * fr.opening;
  auto to_global = [&](const Vec2& y) {
    return Vec2(fr.vertex.x() + std::cos(rot) * y.x() - std::sin(rot) * y.y(),
                fr.vertex.y() + std::sin(rot) * y.x() + std::cos(rot) * y.y());
  };
  std::vector<MasterIdentityTerms> out;
  static const double gx[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
  static const double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  for (double s : s_grid) {
    MasterIdentityTerms t;
    t.s = s;
    auto vol = [&](std::size_t tri, const std::array<double, 3>& b, const Vec2& x) -> cplx {
      const auto& T = mesh.triangles[tri];
      cplx vv = b[0] * pair.v[T[0]] + b[1] * pair.v[T[1]] + b[2] * pair.v[T[2]];
      cplx ww = b[0] * pair.w[T[0]] + b[1] * pair.w[T[1]] + b[2] * pair.w[T[2]];
      return eval_u0(s, fr.to_local(x)) * k2 * (q * ww - vv);
    };
    t.volume = integrate_over_ball(mesh, fr.vertex, h, vol, 6).first;
    const int panels = 2000;
    const double dth = sec.opening() / panels;
    for (int p = 0; p < panels; ++p)
      for (int g = 0; g < 3; ++g) {
        double th = sec.theta_m + (p + gx[g]) * dth;
        Vec2 el(std::cos(th), std::sin(th));
        Vec2 x = to_global(h * el);
        Vec2 eg = (x - fr.vertex) / h;
        auto hit = loc.locate(x);
        if (!hit) continue;
        const auto& T = mesh.triangles[static_cast<std::size_t>(hit->tri)];
        cplx dv = 0.0;
        for (int j = 0; j < 3; ++j) dv += hit->bary[j] * (pair.v[T[j]] - pair.w[T[j]]);
        CVec2 gd = loc.grad_in(pair.v - pair.w, static_cast<std::size_t>(hit->tri));
        cplx dvn = dn(gd, eg);
        cplx du = dn(grad_u0(s, h * el), el);
        t.arc += gw[g] * dth * h * (eval_u0(s, h * el) * dvn - dv * du);
      }
    for (int side = 0; side < 2; ++side) {
      double th = side == 0 ? sec.theta_m : sec.theta_M;
      cplx eta = medium.eta_at(side == 0 ? fr.edge_next : fr.edge_prev);
      if (eta == 0.0) continue;
      Vec2 el(std::cos(th), std::sin(th));
      auto f = [&](double r) -> cplx {
        Vec2 x = to_global(r * el);
        return eta * eval_u0(s, r, th) * loc.eval(pair.v, x);
      };
      t.rays += integrate(f, 0.0, h, {1e-12, 1e-10, 100000, 30}).value;
    }
    finish_master(t);
    out.push_back(t);
  }
  return out;
}

}  // namespace cwl
