#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <vector>

#include "cwl/core.hpp"

namespace cwl {

struct QuadOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  int max_panels = 100000;
  // Number of dyadic panels clustered at the left end point. Use for
  // integrable end point singularities such as r^{-1/2}.
  int grade_left = 0;
};

struct QuadResult {
  cplx value{0.0};
  double error = 0.0;
  int panels = 0;
};

namespace detail {

inline constexpr std::array<double, 8> gk_x = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> gk_wk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gk_wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b;
  cplx value;
  double error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  cplx fc = f(c);
  cplx k = fc * gk_wk[7];
  cplx g = fc * gk_wg[3];
  for (int j = 0; j < 7; ++j) {
    cplx s = f(c - h * gk_x[j]) + f(c + h * gk_x[j]);
    k += gk_wk[j] * s;
    if (j % 2 == 1) g += gk_wg[j / 2] * s;
  }
  return {a, b, k * h, std::abs((k - g) * h)};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod (7/15). Throws NumericalError with the best
// estimate when the panel budget runs out before the tolerance is met.
template <class F>
QuadResult integrate(F&& f, double a, double b, const QuadOptions& opt = {}) {
  require(std::isfinite(a) && std::isfinite(b), "integrate: limits must be finite");
  if (a == b) return {};
  std::priority_queue<detail::Panel> heap;
  cplx total = 0.0;
  double err = 0.0;
  auto push = [&](const detail::Panel& p) {
    total += p.value;
    err += p.error;
    heap.push(p);
  };
  if (opt.grade_left > 0) {
    double hi = b;
    for (int j = 0; j < opt.grade_left; ++j) {
      double lo = a + 0.5 * (hi - a);
      push(detail::gk15(f, lo, hi));
      hi = lo;
    }
    push(detail::gk15(f, a, hi));
  } else {
    push(detail::gk15(f, a, b));
  }
  int panels = static_cast<int>(heap.size());
  while (err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
    if (panels >= opt.max_panels)
      throw NumericalError("integrate: panel budget exhausted", total, err);
    detail::Panel p = heap.top();
    heap.pop();
    total -= p.value;
    err -= p.error;
    double m = 0.5 * (p.a + p.b);
    push(detail::gk15(f, p.a, m));
    push(detail::gk15(f, m, p.b));
    ++panels;
  }
  // Re-sum to shed the rounding drift of the running totals.
  total = 0.0;
  err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  return {total, err, panels};
}

// Integral over the triangle (a,b,c) through the Duffy map, nested adaptive.
template <class F>
QuadResult integrate_triangle(F&& f, const Vec2& a, const Vec2& b, const Vec2& c,
                              const QuadOptions& opt = {}) {
  const double jac = std::abs(orient(a, b, c));
  double inner_err = 0.0;
  QuadOptions in = opt;
  in.abs_tol = opt.abs_tol * 0.1;
  auto outer = [&](double u) -> cplx {
    auto g = [&](double v) -> cplx {
      Vec2 x = a + u * (b - a) + u * v * (c - b);
      return f(x);
    };
    QuadResult r = integrate(g, 0.0, 1.0, in);
    inner_err += r.error * jac * u;
    return r.value * jac * u;
  };
  QuadResult r = integrate(outer, 0.0, 1.0, opt);
  r.error += inner_err / (15.0 * r.panels);
  return r;
}

}  // namespace cwl
