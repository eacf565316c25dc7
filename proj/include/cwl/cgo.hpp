#pragma once

#include <cmath>
#include <vector>

#include "cwl/field.hpp"
#include "cwl/geometry.hpp"
#include "cwl/herglotz.hpp"
#include "cwl/quadrature.hpp"

namespace cwl {

inline cplx mu(double theta) { return {-std::cos(0.5 * theta + pi), -std::sin(0.5 * theta + pi)}; }

inline double omega(double theta) { return -std::cos(0.5 * theta + pi); }

inline cplx mu_sum(double theta_m, double theta_M) {
  require(-pi < theta_m && theta_m < theta_M && theta_M < pi, "mu_sum: need -pi < theta_m < theta_M < pi");
  return std::pow(mu(theta_m), -2) + std::pow(mu(theta_M), -2);
}

// u0(s x) in polar coordinates.
inline cplx eval_u0(double s, double r, double theta) {
  require(s > 0.0, "eval_u0: s must be positive");
  require(r >= 0.0, "eval_u0: r must be non-negative");
  require(-pi < theta && theta < pi, "eval_u0: point on the branch cut");
  return std::exp(-std::sqrt(s * r) * mu(theta));
}

inline cplx eval_u0(double s, const Vec2& x) {
  require(!(x.y() == 0.0 && x.x() < 0.0), "eval_u0: point on the branch cut");
  return eval_u0(s, x.norm(), std::atan2(x.y(), x.x()));
}

inline CVec2 grad_u0(double s, const Vec2& x) {
  const double r = x.norm();
  require(r > 0.0, "grad_u0: undefined at the origin");
  require(!(x.y() == 0.0 && x.x() < 0.0), "grad_u0: point on the branch cut");
  const double th = std::atan2(x.y(), x.x());
  cplx g = -std::sqrt(s) / (2.0 * std::sqrt(r)) * std::exp(-std::sqrt(s * r) * mu(th) - 0.5 * I * th);
  return CVec2(g, I * g);
}

inline AnalyticField cgo_field(double s) {
  return {[s](const Vec2& x) { return eval_u0(s, x); }, [s](const Vec2& x) { return grad_u0(s, x); },
          [](const Vec2&) { return cplx(0.0); }};
}

// Integral of u0(s x) over the infinite wedge.
inline cplx sector_integral_u0(double theta_m, double theta_M, double s) {
  require(s > 0.0, "sector_integral_u0: s must be positive");
  return 6.0 * I * (std::exp(-2.0 * I * theta_M) - std::exp(-2.0 * I * theta_m)) / (s * s);
}

// Integral of u0(s x) along the ray at angle theta from 0 to h.
inline cplx boundary_integral_u0(double theta, double s, double h) {
  require(s > 0.0 && h >= 0.0, "boundary_integral_u0: need s > 0, h >= 0");
  cplx m = mu(theta);
  double t = std::sqrt(s * h);
  cplx e = std::exp(-t * m);
  return 2.0 / s * (1.0 / (m * m) - e / (m * m) - t * e / m);
}

// Adaptive polar quadrature over S_h: outer in theta, inner in r graded toward the apex.
template <class F>
QuadResult quad_sector(F&& f, const Sector& sec, double tol, int max_panels = 100000) {
  require(tol > 0.0, "quad_sector: tol must be positive");
  QuadOptions inner{tol * 1e-2 / std::max(1.0, sec.opening()), 1e-13, max_panels, 40};
  QuadOptions outer{tol * 0.5, 1e-13, max_panels, 0};
  double inner_err = 0.0;
  int evals = 0;
  auto row = [&](double th) -> cplx {
    Vec2 e(std::cos(th), std::sin(th));
    auto g = [&](double r) -> cplx { return f(Vec2(r * e)) * r; };
    QuadResult q = integrate(g, 0.0, sec.h, inner);
    inner_err = std::max(inner_err, q.error);
    ++evals;
    return q.value;
  };
  QuadResult r = integrate(row, sec.theta_m, sec.theta_M, outer);
  r.error += inner_err * sec.opening();
  if (r.error > tol) throw NumericalError("quad_sector: tolerance not met", r.value, r.error);
  return r;
}

// Right-hand side of the |x|^alpha estimate for the full wedge.
inline double xalpha_bound(const Sector& sec, double s, double alpha) {
  const double d = delta_W(sec);
  return 2.0 * sec.opening() * std::tgamma(2.0 * alpha + 4.0) * std::pow(d, -2.0 * alpha - 4.0) *
         std::pow(s, -alpha - 2.0);
}

// Bound on the integral of |u0| over W outside B_h.
inline double tail_bound(const Sector& sec, double s, double h) {
  const double d = delta_W(sec);
  return 6.0 * sec.opening() * std::pow(d, -4.0) / (s * s) * std::exp(-0.5 * d * std::sqrt(h * s));
}

// Majorant of the same tail from the closed-form radial integral with omega >= delta_W.
inline double tail_majorant(const Sector& sec, double s, double h) {
  const double d = delta_W(sec), t = std::sqrt(h * s);
  const double poly = t * t * t / d + 3.0 * t * t / (d * d) + 6.0 * t / (d * d * d) + 6.0 / (d * d * d * d);
  return 2.0 * sec.opening() * std::exp(-d * t) * poly / (s * s);
}

// Bound on the squared L2 norm of |x|^alpha u0 over S_h.
inline double weighted_l2_bound(const Sector& sec, double s, double alpha) {
  const double d = delta_W(sec);
  return std::pow(s, -(2.0 * alpha + 2.0)) * 2.0 * sec.opening() / std::pow(4.0 * d * d, 2.0 * alpha + 2.0) *
         std::tgamma(4.0 * alpha + 4.0);
}

// Exact quadrature of the |u0| integral over W outside B_h, by radial substitution t = sqrt(r).
inline double tail_integral_abs_u0(const Sector& sec, double s) {
  auto row = [&](double th) -> cplx {
    const double w = omega(th);
    double t0 = std::sqrt(sec.h), t1 = t0 + 60.0 / (w * std::sqrt(s));
    auto g = [&](double t) -> cplx { return 2.0 * t * t * t * std::exp(-std::sqrt(s) * t * w); };
    return integrate(g, t0, t1, {1e-300, 1e-12, 100000, 0}).value;
  };
  return integrate(row, sec.theta_m, sec.theta_M, {1e-300, 1e-11, 100000, 0}).value.real();
}

// int_0^h r^p exp(-c sqrt(s r)) dr via r = t^2, h = inf allowed.
inline double radial_moment(double s, double p, double c, double h) {
  require(s > 0.0 && c > 0.0 && h > 0.0, "radial_moment: need s, c, h > 0");
  const double scale = c * std::sqrt(s);
  const double t1 = std::min(std::sqrt(h), (4.0 * p + 80.0) / scale);
  auto g = [&](double t) -> cplx { return 2.0 * std::pow(t, 2.0 * p + 1.0) * std::exp(-scale * t); };
  return integrate(g, 0.0, t1, {1e-300, 1e-12, 100000, 0}).value.real();
}

// Quadrature of int_W |u0(s x)| |x|^alpha over the full wedge.
inline double xalpha_integral(const Sector& sec, double s, double alpha) {
  auto row = [&](double th) -> cplx { return radial_moment(s, alpha + 1.0, omega(th), HUGE_VAL); };
  return integrate(row, sec.theta_m, sec.theta_M, {1e-300, 1e-11, 100000, 0}).value.real();
}

// Quadrature of || |x|^alpha u0(s x) ||^2 over S_h.
inline double weighted_l2_norm_sq(const Sector& sec, double s, double alpha) {
  auto row = [&](double th) -> cplx { return radial_moment(s, 2.0 * alpha + 1.0, 2.0 * omega(th), sec.h); };
  return integrate(row, sec.theta_m, sec.theta_M, {1e-300, 1e-11, 100000, 0}).value.real();
}

struct SectorIntegralCheck {
  double s = 0.0, h = 0.0;
  cplx quadrature{0.0}, closed_form{0.0};
  double tail_bound = 0.0;  // tail_majorant at h
  double rel_err = 0.0;  // |quadrature - closed_form| / |closed_form|
};

// S_h quadrature of u0 with h chosen so that the tail majorant is below tail_rel * |closed form|.
inline SectorIntegralCheck sector_integral_check(double theta_m, double theta_M, double s, double tail_rel = 1e-9) {
  const Sector w = Sector::make(theta_m, theta_M, 1.0);
  SectorIntegralCheck c;
  c.s = s;
  c.closed_form = sector_integral_u0(theta_m, theta_M, s);
  const double target = tail_rel * std::abs(c.closed_form);
  double h = 1.0 / s;
  while (tail_majorant(w, s, h) > target) h *= 1.5;
  c.h = h;
  c.tail_bound = tail_majorant(w, s, h);
  auto row = [&](double th) -> cplx {
    const cplx m = mu(th);
    auto g = [&](double t) -> cplx { return 2.0 * t * t * t * std::exp(-std::sqrt(s) * t * m); };
    return integrate(g, 0.0, std::sqrt(h), {1e-300, 1e-13, 100000, 0}).value;
  };
  c.quadrature = integrate(row, theta_m, theta_M, {1e-300, 1e-12, 100000, 0}).value;
  c.rel_err = std::abs(c.quadrature - c.closed_form) / std::abs(c.closed_form);
  return c;
}

struct U0L2Check {
  double norm_sq = 0.0;   // ||u0||^2 over S_h
  double majorant = 0.0;  // opening * int_0^h exp(-2 sqrt(s r) delta) r dr
  double theta_mv = 0.0;  // mean-value radius realising the majorant
  bool holds = false;     // norm_sq <= majorant and theta_mv in [0, h]
};

inline U0L2Check u0_l2_check(const Sector& sec, double s) {
  U0L2Check c;
  const double d = delta_W(sec);
  c.norm_sq = quad_sector([&](const Vec2& x) { return std::norm(eval_u0(s, x)); }, sec, 1e-13).value.real();
  auto g = [&](double r) -> cplx { return std::exp(-2.0 * std::sqrt(s * r) * d) * r; };
  c.majorant = sec.opening() * integrate(g, 0.0, sec.h, {1e-300, 1e-12, 100000, 40}).value.real();
  double e = 2.0 * c.majorant / (sec.opening() * sec.h * sec.h);
  double t = -std::log(e) / (2.0 * d);
  c.theta_mv = t * t / s;
  c.holds = c.norm_sq <= c.majorant * (1.0 + 1e-10) && c.theta_mv >= 0.0 && c.theta_mv <= sec.h * (1.0 + 1e-12);
  return c;
}

// int_0^h r^zeta exp(-sqrt(s r) omega) dr
inline double zeta_integral(double s, double zeta, double om, double h) {
  require(om > 0.0 && s > 0.0 && h > 0.0, "zeta_integral: need omega, s, h > 0");
  auto g = [&](double r) -> cplx { return std::pow(r, zeta) * std::exp(-std::sqrt(s * r) * om); };
  return integrate(g, 0.0, h, {1e-300, 1e-12, 100000, 60}).value.real();
}

inline std::vector<double> geometric_grid(double a, double b, int n) {
  require(a > 0.0 && b > a && n >= 2, "geometric_grid: need 0 < a < b and n >= 2");
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(a * std::pow(b / a, static_cast<double>(i) / (n - 1)));
  return g;
}

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "loglog_slope: need matching samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && y[i] > 0.0, "loglog_slope: samples must be positive");
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Least-squares slope of log(sampler(s)) against log(s), discarding the smallest s values.
template <class F>
double decay_slope(F&& sampler, std::vector<double> s_grid, int discard = 2) {
  require(s_grid.size() >= 5, "decay_slope: need at least five grid points");
  std::sort(s_grid.begin(), s_grid.end());
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < s_grid.size(); ++i) {
    double v = sampler(s_grid[i]);
    require(v > 0.0, "decay_slope: sampler returned a non-positive value");
    if (static_cast<int>(i) < discard) continue;
    xs.push_back(s_grid[i]);
    ys.push_back(v);
  }
  return loglog_slope(xs, ys);
}

struct BoundaryExpansionReport {
  std::vector<double> s;
  std::vector<cplx> integral_minus, integral_plus;    // I2 on the theta_m and theta_M rays
  std::vector<double> remainder_minus, remainder_plus;  // |I2 - leading term|
  double slope_minus = 0.0, slope_plus = 0.0;
};

// Boundary integral of eta0 u0 v over each ray of S_h against its leading term
// eta0 v(0) times the closed-form ray integral of u0.
inline BoundaryExpansionReport boundary_expansion_check(const Sector& sec, const FourierKernel& g, cplx eta0,
                                                        const std::vector<double>& s_grid) {
  require(g.k * sec.h < 1.0, "boundary_expansion_check: need k h < 1");
  BoundaryExpansionReport rep;
  const cplx v0 = eval_jacobi_anger(g, Vec2::Zero(), 0);
  for (double s : s_grid) {
    rep.s.push_back(s);
    for (int side = 0; side < 2; ++side) {
      double th = side == 0 ? sec.theta_m : sec.theta_M;
      Vec2 e(std::cos(th), std::sin(th));
      auto f = [&](double r) -> cplx { return eta0 * eval_u0(s, r, th) * eval_quadrature(g, Vec2(r * e)); };
      cplx val = integrate(f, 0.0, sec.h, {1e-300, 1e-13, 100000, 60}).value;
      double rem = std::abs(val - eta0 * v0 * boundary_integral_u0(th, s, sec.h));
      (side == 0 ? rep.integral_minus : rep.integral_plus).push_back(val);
      (side == 0 ? rep.remainder_minus : rep.remainder_plus).push_back(rem);
    }
  }
  auto slope = [&](const std::vector<double>& r) {
    for (double v : r)
      if (!(v > 0.0)) return 0.0;
    return s_grid.size() >= 2 ? loglog_slope(rep.s, r) : 0.0;
  };
  rep.slope_minus = slope(rep.remainder_minus);
  rep.slope_plus = slope(rep.remainder_plus);
  return rep;
}

}  // namespace cwl
