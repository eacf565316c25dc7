#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "cwl/bessel.hpp"
#include "cwl/cgo.hpp"
#include "cwl/quadrature.hpp"

namespace cwl {

// psi(x3) = exp(-1 / (1 - t^2)), t = (x3 - center) / L, zero for |t| >= 1.
struct BumpFunction {
  double center = 0.0;
  double L = 0.1;

  static BumpFunction make(double center, double L) {
    require(L > 0.0 && std::isfinite(L), "BumpFunction: half width must be positive");
    return {center, L};
  }
  double lo() const { return center - L; }
  double hi() const { return center + L; }
  double sup_norm() const { return std::exp(-1.0); }

  double operator()(double x3) const {
    double t = (x3 - center) / L;
    if (std::abs(t) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - t * t));
  }
  double d1(double x3) const {
    double t = (x3 - center) / L;
    if (std::abs(t) >= 1.0) return 0.0;
    double u = 1.0 - t * t;
    return std::exp(-1.0 / u) * (-2.0 * t / (u * u)) / L;
  }
  double d2(double x3) const {
    double t = (x3 - center) / L;
    if (std::abs(t) >= 1.0) return 0.0;
    double u = 1.0 - t * t;
    double a = 2.0 * t / (u * u);
    double da = 2.0 / (u * u) + 8.0 * t * t / (u * u * u);
    return std::exp(-1.0 / u) * (a * a - da) / (L * L);
  }
};

// Field on S_h x (-M, M). lap_xp, when set, is the Laplacian in x' only.
struct CylinderField {
  double k = 1.0;
  double M = 1.0;
  std::function<cplx(const Vec2&, double)> value;
  std::function<cplx(const Vec2&, double)> lap_xp;
  bool helmholtz = false;
};

// e^{i k' d'.x'} e^{i beta x3}, k'^2 + beta^2 = k^2.
inline CylinderField plane_wave_cylinder(double k, double beta, double phi, double M = 1.0) {
  require(std::abs(beta) <= k, "plane_wave_cylinder: need |beta| <= k");
  const double kp = std::sqrt(k * k - beta * beta);
  const Vec2 d(std::cos(phi), std::sin(phi));
  CylinderField f;
  f.k = k;
  f.M = M;
  f.helmholtz = true;
  f.value = [=](const Vec2& x, double z) { return std::exp(I * (kp * x.dot(d) + beta * z)); };
  f.lap_xp = [=](const Vec2& x, double z) { return -kp * kp * std::exp(I * (kp * x.dot(d) + beta * z)); };
  return f;
}

// J0(k'|x'|) cos(beta x3), k'^2 + beta^2 = k^2.
inline CylinderField bessel_cylinder(double k, double beta, double M = 1.0) {
  require(std::abs(beta) <= k, "bessel_cylinder: need |beta| <= k");
  const double kp = std::sqrt(k * k - beta * beta);
  CylinderField f;
  f.k = k;
  f.M = M;
  f.helmholtz = true;
  f.value = [=](const Vec2& x, double z) { return cplx(bessel_j(0, kp * x.norm()) * std::cos(beta * z)); };
  f.lap_xp = [=](const Vec2& x, double z) { return cplx(-kp * kp * bessel_j(0, kp * x.norm()) * std::cos(beta * z)); };
  return f;
}

namespace detail {

inline const QuadOptions& reduce_quad() {
  static const QuadOptions o{1e-13, 1e-11, 100000, 0};
  return o;
}

template <class F>
cplx integrate_bump(const BumpFunction& psi, F&& f) {
  QuadResult r = integrate(f, psi.lo(), psi.hi(), reduce_quad());
  if (r.error > 1e-10 * std::max(1.0, std::abs(r.value)))
    throw NumericalError("dimred3d: reduction quadrature did not converge", r.value, r.error);
  return r.value;
}

inline void check_support(const CylinderField& g, const BumpFunction& psi) {
  require(psi.lo() > -g.M && psi.hi() < g.M, "reduce: support of psi must lie inside (-M, M)");
}

}  // namespace detail

inline cplx reduce(const CylinderField& g, const BumpFunction& psi, const Vec2& xp) {
  detail::check_support(g, psi);
  return detail::integrate_bump(psi, [&](double z) { return psi(z) * g.value(xp, z); });
}

inline double c_psi(const BumpFunction& psi) {
  return detail::integrate_bump(psi, [&](double z) { return cplx(psi(z)); }).real();
}

// Max over samples of |Lap' R(v) + int psi'' v + k^2 R(v)|, with Lap' R(v) = R(Lap' v).
inline double reduction_pde_residual(const CylinderField& v, const BumpFunction& psi, const std::vector<Vec2>& samples) {
  detail::check_support(v, psi);
  require(static_cast<bool>(v.lap_xp), "reduction_pde_residual: field has no analytic x' Laplacian");
  double worst = 0.0;
  for (auto& x : samples) {
    cplx lhs = detail::integrate_bump(psi, [&](double z) { return psi(z) * v.lap_xp(x, z); });
    cplx g2 = detail::integrate_bump(psi, [&](double z) { return psi.d2(z) * v.value(x, z); });
    cplx rv = detail::integrate_bump(psi, [&](double z) { return psi(z) * v.value(x, z); });
    worst = std::max(worst, std::abs(lhs - (-g2 - v.k * v.k * rv)));
  }
  return worst;
}

// C_1(psi) at |x'| = r: int psi(x3) sqrt(r^2 + (x3 - c)^2) dx3 / r^2.
inline double c1_psi(const BumpFunction& psi, double r) {
  require(r > 0.0, "c1_psi: |x'| must be positive");
  auto f = [&](double z) { return cplx(psi(z) * std::hypot(r, z - psi.center) / (r * r)); };
  return detail::integrate_bump(psi, f).real();
}

struct C1BoundRow {
  double r = 0.0;
  double c1 = 0.0;
  double bound = 0.0;          // 2^{5/2} ||psi|| arctan(L / r)
  double literal_bound = 0.0;  // 2^{5/2} ||psi|| arctan(L)
  bool holds = false;
  bool literal_holds = false;
  bool skipped = false;  // r <= L
};

inline std::vector<C1BoundRow> c1_psi_bound_check(const BumpFunction& psi, const std::vector<double>& r_grid) {
  std::vector<C1BoundRow> out;
  const double s = std::pow(2.0, 2.5) * psi.sup_norm();
  for (double r : r_grid) {
    C1BoundRow row;
    row.r = r;
    if (r <= psi.L) {
      row.skipped = true;
      out.push_back(row);
      continue;
    }
    row.c1 = c1_psi(psi, r);
    row.bound = s * std::atan(psi.L / r);
    row.literal_bound = s * std::atan(psi.L);
    row.holds = row.c1 > 0.0 && row.c1 < row.bound;
    row.literal_holds = row.c1 > 0.0 && row.c1 < row.literal_bound;
    out.push_back(row);
  }
  return out;
}

struct C311Report {
  std::vector<double> s;
  std::vector<cplx> ratio;
  double c_psi = 0.0;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  bool in_bracket = false;  // Re ratio inside the bracket at every s
};

// Ray integral of u0(s x') R(j0(k|x|))(x') over Gamma_h at angle theta, divided by
// the closed-form ray integral of u0; tends to R(j0)(0) as s grows.
inline C311Report c311_ratio(double theta, const BumpFunction& psi, double k, double h, const std::vector<double>& s_grid) {
  const double kL = k * psi.L;
  require(kL < 1.0 && k * k * (h * h + psi.L * psi.L) < 1.0, "c311_ratio: need kL < 1 and k^2 (h^2 + L^2) < 1");
  require(-pi < theta && theta < pi, "c311_ratio: theta must lie in (-pi, pi)");
  C311Report rep;
  rep.c_psi = c_psi(psi);
  rep.bracket_lo = rep.c_psi * (1.0 - 2.0 * kL * kL) / (1.0 - kL * kL);
  rep.bracket_hi = rep.c_psi / (1.0 - kL * kL);
  rep.in_bracket = true;
  auto rj0 = [&](double r) {
    return detail::integrate_bump(psi, [&](double z) {
      return cplx(psi(z) * spherical_bessel_j(0, k * std::hypot(r, z - psi.center)));
    });
  };
  for (double s : s_grid) {
    auto f = [&](double r) { return eval_u0(s, r, theta) * rj0(r); };
    cplx num = integrate(f, 0.0, h, {1e-300, 1e-11, 100000, 60}).value;
    cplx q = num / boundary_integral_u0(theta, s, h);
    rep.s.push_back(s);
    rep.ratio.push_back(q);
    if (!(q.real() > rep.bracket_lo && q.real() < rep.bracket_hi)) rep.in_bracket = false;
  }
  return rep;
}

struct WeightedMuSum {
  cplx value{0.0};
  bool nonzero = false;
};

inline WeightedMuSum weighted_mu_sum_check(double theta_m, double theta_M, double c_minus, double c_plus) {
  require(-pi < theta_m && theta_m < theta_M && theta_M < pi, "weighted_mu_sum_check: need -pi < theta_m < theta_M < pi");
  WeightedMuSum w;
  w.value = c_minus * std::pow(mu(theta_m), -2) + c_plus * std::pow(mu(theta_M), -2);
  w.nonzero = std::abs(w.value) > 1e-12 * (std::abs(c_minus) + std::abs(c_plus));
  return w;
}

}  // namespace cwl
