#pragma once

#include <functional>

#include "cwl/bessel.hpp"
#include "cwl/core.hpp"

namespace cwl {

using CVec2 = Eigen::Vector2cd;

// A smooth complex field known in closed form, with gradient and Laplacian.
struct AnalyticField {
  std::function<cplx(const Vec2&)> value;
  std::function<CVec2(const Vec2&)> grad;
  std::function<cplx(const Vec2&)> laplacian;
};

// Directional derivative, no conjugation.
inline cplx dn(const CVec2& g, const Vec2& n) { return g[0] * n.x() + g[1] * n.y(); }

inline AnalyticField constant_field(cplx c) {
  return {[c](const Vec2&) { return c; }, [](const Vec2&) { return CVec2(0.0, 0.0); },
          [](const Vec2&) { return cplx(0.0); }};
}

// J_0(k|x - x0|), a Helmholtz solution regular everywhere.
inline AnalyticField bessel_j0_field(double k, Vec2 x0 = Vec2::Zero()) {
  return {[=](const Vec2& x) { return cplx(bessel_j(0, k * (x - x0).norm())); },
          [=](const Vec2& x) -> CVec2 {
            Vec2 d = x - x0;
            double r = d.norm();
            if (r == 0.0) return CVec2(0.0, 0.0);
            Vec2 g = -k * bessel_j(1, k * r) * d / r;
            return CVec2(g.x(), g.y());
          },
          [=](const Vec2& x) { return cplx(-k * k * bessel_j(0, k * (x - x0).norm())); }};
}

inline AnalyticField plane_wave_field(double k, Vec2 d) {
  return {[=](const Vec2& x) { return std::exp(I * k * x.dot(d)); },
          [=](const Vec2& x) -> CVec2 {
            cplx e = I * k * std::exp(I * k * x.dot(d));
            return CVec2(e * d.x(), e * d.y());
          },
          [=](const Vec2& x) { return -k * k * std::exp(I * k * x.dot(d)); }};
}

}  // namespace cwl
