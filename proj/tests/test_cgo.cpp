#include <catch_amalgamated.hpp>

#include <random>

#include "cwl/cgo.hpp"
#include "cwl/dimred3d.hpp"
#include "cwl/herglotz.hpp"
#include "cwl/mesh.hpp"

using namespace cwl;
using Catch::Approx;

namespace {

// Composite Simpson on [a, b] with n (even) panels.
template <class F>
cplx simpson(F&& f, double a, double b, int n) {
  const double h = (b - a) / n;
  cplx s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

double omega_min(double tm, double tM) {
  double m = 1e300;
  for (int i = 0; i <= 20000; ++i) m = std::min(m, -std::cos(0.5 * (tm + (tM - tm) * i / 20000.0) + pi));
  return m;
}

}  // namespace

TEST_CASE("adaptive quadrature") {
  auto r = integrate([](double x) -> cplx { return 1.0 / std::sqrt(x); }, 0.0, 1.0, {1e-13, 1e-12, 100000, 40});
  CHECK(std::abs(r.value - 2.0) < 1e-10);
  auto e = integrate([](double x) { return std::exp(I * x); }, 0.0, pi);
  CHECK(std::abs(e.value - 2.0 * I) < 1e-12);
  auto t = integrate_triangle([](const Vec2&) { return cplx(1.0); }, {0, 0}, {2, 0}, {0, 1});
  CHECK(std::abs(t.value - 1.0) < 1e-12);
  auto p = integrate_triangle([](const Vec2& x) { return cplx(x.x() * x.y()); }, {0, 0}, {1, 0}, {0, 1});
  CHECK(std::abs(p.value - 1.0 / 24.0) < 1e-13);
}

TEST_CASE("bessel functions against libstdc++") {
  for (double t : {0.1, 1.0, 5.0, 20.0})
    for (int n = 0; n <= 20; ++n) {
      CHECK(std::abs(bessel_j(n, t) - std::cyl_bessel_j(n, t)) < 1e-13);
      if (n <= 10) CHECK(std::abs(bessel_y(n, t) - std::cyl_neumann(n, t)) < 1e-11 * std::max(1.0, std::abs(std::cyl_neumann(n, t))));
    }
  CHECK(bessel_j(-3, 2.0) == Approx(-std::cyl_bessel_j(3, 2.0)).epsilon(1e-13));
  CHECK(std::abs(hankel1_prime(2, 3.0) - 0.5 * (hankel1(1, 3.0) - hankel1(3, 3.0))) < 1e-15);
}

TEST_CASE("spherical bessel") {
  CHECK(spherical_bessel_j(0, 0.0) == 1.0);
  CHECK(spherical_bessel_j(0, 0.7) == Approx(std::sin(0.7) / 0.7).epsilon(1e-15));
  CHECK(spherical_bessel_j(1, 1.0) == Approx(0.3011686789).margin(1e-10));
  CHECK(spherical_bessel_j(1, 1.0) == Approx(std::sin(1.0) - std::cos(1.0)).epsilon(1e-14));
  for (int l : {1, 2, 3}) {
    double df = 1.0;
    for (int j = 1; j <= 2 * l + 1; j += 2) df *= j;
    CHECK(spherical_bessel_j(l, 1e-4) / std::pow(1e-4, l) == Approx(1.0 / df).epsilon(1e-8));
    CHECK(spherical_bessel_j(l, 0.999) == Approx(std::sph_bessel(l, 0.999)).epsilon(1e-13));
  }
}

TEST_CASE("geometry") {
  CHECK_THROWS_AS(Sector::make(1.0, 0.5, 1.0), InvalidInput);
  CHECK_THROWS_AS(Sector::make(-0.5, 0.5, 0.0), InvalidInput);
  Sector s = Sector::make(-0.5, 1.0, 0.5);
  CHECK(delta_W(s) == Approx(omega_min(-0.5, 1.0)).epsilon(1e-8));
  CHECK(delta_W(Sector::make(-2.5, 2.0, 1.0)) == Approx(omega_min(-2.5, 2.0)).epsilon(1e-8));
  Polygon sq = Polygon::unit_square();
  CHECK(sq.interior_angle(0) == Approx(pi / 2));
  CHECK_THROWS_AS(Polygon::make({{0, 0}, {0, 1}, {1, 1}, {1, 0}}), InvalidInput);
  CHECK_THROWS_AS(Polygon::make({{0, 0}, {1, 1}, {1, 0}, {0, 1}}), InvalidInput);
  CHECK_THROWS_AS(Polygon::make({{0, 0}, {1, 0}, {2, 0}, {1, 1}}), InvalidInput);
  CHECK(sq.contains({0.5, 0.5}));
  CHECK_FALSE(sq.contains({1.5, 0.5}));
}

TEST_CASE("meshes") {
  for (double h : {0.2, 0.1}) {
    MeshOptions o;
    o.h = h;
    TriMesh m = mesh_polygon(Polygon::unit_square(), o);
    double a = 0.0;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) a += m.area(t);
    CHECK(a == Approx(1.0).epsilon(1e-12));
    CHECK(m.min_angle_deg() > 20.0);
    CHECK(m.max_edge() < 1.5 * h);
    TriMesh d = mesh_disk(Disk::make({0, 0}, 1.0), o);
    double ad = 0.0;
    for (std::size_t t = 0; t < d.triangles.size(); ++t) ad += d.area(t);
    const int n = disk_boundary_count(Disk::make({0, 0}, 1.0), o);
    CHECK(ad == Approx(0.5 * n * std::sin(2.0 * pi / n)).epsilon(1e-12));
  }
  MeshOptions o;
  o.h = 0.1;
  o.gradings = {{{0, 0}, 0.002, 0.3}};
  TriMesh g = mesh_polygon(Polygon::unit_square(), o);
  double near = 0.0;
  for (auto& t : g.triangles)
    for (int a = 0; a < 3; ++a)
      if (g.nodes[t[a]].norm() < 1e-12)
        for (int b = 0; b < 3; ++b) near = std::max(near, (g.nodes[t[b]] - g.nodes[t[a]]).norm());
  CHECK(near > 0.0);
  CHECK(near < 0.01);
  TriMesh sc = mesh_scatter(Polygon::unit_square(), 2.0, 128, MeshOptions{});
  int ring = 0;
  for (auto& b : sc.boundary) ring += b[2] == kRingTag;
  CHECK(ring == 128);
}

TEST_CASE("mu and omega") {
  for (double th = -3.1; th < 3.1; th += 0.1) {
    CHECK(std::abs(mu(th)) == Approx(1.0).epsilon(1e-15));
    CHECK(mu(th).real() == Approx(omega(th)));
    CHECK(omega(th) > 0.0);
    CHECK(std::abs(std::pow(mu(th), -2) - std::exp(-I * th)) < 1e-14);
  }
  CHECK(std::abs(mu_sum(0.0, pi / 2) - cplx(1.0, -1.0)) < 1e-14);
  CHECK(std::abs(mu_sum(-pi / 2, pi / 2)) < 1e-15);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-pi + 1e-3, pi - 1e-3);
  for (int i = 0; i < 1000; ++i) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    if (b - a < 1e-6 || std::abs(b - a - pi) < 1e-6) continue;
    CHECK(std::abs(mu_sum(a, b)) > 0.0);
  }
  CHECK_THROWS_AS(mu_sum(0.5, 0.2), InvalidInput);
}

TEST_CASE("cgo solution") {
  CHECK_THROWS_AS(eval_u0(1.0, Vec2(-1.0, 0.0)), InvalidInput);
  CHECK_THROWS_AS(grad_u0(1.0, Vec2(0.0, 0.0)), InvalidInput);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> r(0.05, 1.0), th(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    double rr = r(rng), t = th(rng), s = 4.0;
    Vec2 x(rr * std::cos(t), rr * std::sin(t));
    const double e = 1e-6;
    cplx fx = (eval_u0(s, x + Vec2(e, 0)) - eval_u0(s, x - Vec2(e, 0))) / (2 * e);
    cplx fy = (eval_u0(s, x + Vec2(0, e)) - eval_u0(s, x - Vec2(0, e))) / (2 * e);
    CVec2 g = grad_u0(s, x);
    CHECK(std::abs(fx - g[0]) < 1e-6 * std::max(1.0, std::abs(g[0])));
    CHECK(std::abs(fy - g[1]) < 1e-6 * std::max(1.0, std::abs(g[1])));
    CHECK(std::abs(dn(g, x / rr)) == Approx(std::sqrt(s / rr) * std::abs(eval_u0(s, x)) / 2.0).epsilon(1e-12));
    const double d = 1e-3;
    cplx lap = (eval_u0(s, x + Vec2(d, 0)) + eval_u0(s, x - Vec2(d, 0)) + eval_u0(s, x + Vec2(0, d)) +
                eval_u0(s, x - Vec2(0, d)) - 4.0 * eval_u0(s, x)) / (d * d);
    CHECK(std::abs(lap) < 1e-3 * std::max(1.0, s / rr));
  }
}

TEST_CASE("cgo closed forms") {
  CHECK(std::abs(sector_integral_u0(-pi / 3, pi / 3, 1.0) - 6.0 * std::sqrt(3.0)) < 1e-12);
  CHECK(std::abs(sector_integral_u0(-pi / 3, pi / 3, 10.0) - 0.06 * std::sqrt(3.0)) < 1e-14);
  CHECK(std::abs(sector_integral_u0(0.3, 0.3, 2.0)) == 0.0);
  for (auto sec : {std::array<double, 2>{-pi / 3, pi / 3}, {-0.5, 1.0}, {-2.5, 2.0}})
    for (double s : {1.0, 10.0, 100.0}) {
      auto c = sector_integral_check(sec[0], sec[1], s);
      CHECK(c.rel_err < 1e-6);
      CHECK(c.tail_bound < 1e-9 * std::abs(c.closed_form));
    }
  for (double th : {0.0, -0.5, 1.0, 2.5})
    for (double s : {1.0, 10.0, 100.0}) {
      const double h = 0.5;
      // oracle: Simpson in t = sqrt(s r), r = t^2 / s
      cplx m = std::exp(I * (0.5 * th + pi));
      cplx q = simpson([&](double t) { return 2.0 * t / s * std::exp(t * m); }, 0.0, std::sqrt(s * h), 4000);
      CHECK(std::abs(boundary_integral_u0(th, s, h) - q) < 1e-8 * std::abs(q));
    }
  CHECK(std::abs(boundary_integral_u0(0.0, 50.0, 1e4) - 2.0 / 50.0) < 1e-12);
  CHECK(std::abs(boundary_integral_u0(0.4, 5.0, 0.0)) == 0.0);
}

TEST_CASE("quad_sector") {
  Sector s = Sector::make(-0.5, 1.0, 0.5);
  auto a = quad_sector([](const Vec2&) { return cplx(1.0); }, s, 1e-12);
  CHECK(a.value.real() == Approx(0.5 * 1.5 * 0.25).epsilon(1e-12));
  for (double sv : {10.0, 100.0, 1000.0}) {
    auto x = quad_sector([&](const Vec2& p) { return std::abs(eval_u0(sv, p)) * std::sqrt(p.norm()); }, s, 1e-12);
    CHECK(x.value.real() <= xalpha_bound(s, sv, 0.5));
  }
  // S_h quadrature plus the tail majorant brackets the closed form.
  Sector w = Sector::make(-0.5, 1.0, 4.0);
  const double sv = 20.0;
  auto q = quad_sector([&](const Vec2& p) { return eval_u0(sv, p); }, w, 1e-12);
  CHECK(std::abs(q.value - sector_integral_u0(-0.5, 1.0, sv)) <= tail_majorant(w, sv, w.h) + 1e-11);
}

TEST_CASE("decay rates and estimates") {
  const auto grid = geometric_grid(1e2, 1e6, 9);
  CHECK(decay_slope([](double s) { return std::pow(s, -3.0); }, grid) == Approx(-3.0).margin(1e-10));
  CHECK_THROWS_AS(decay_slope([](double) { return 0.0; }, grid), InvalidInput);
  for (auto sv : {std::array<double, 2>{-0.5, 1.0}, {-pi / 3, pi / 3}, {-2.5, 2.0}}) {
    Sector sec = Sector::make(sv[0], sv[1], 0.5);
    for (double a : {0.25, 0.5, 0.75}) {
      CHECK(decay_slope([&](double s) { return xalpha_integral(sec, s, a); }, grid) == Approx(-(a + 2.0)).margin(0.05));
      CHECK(decay_slope([&](double s) { return weighted_l2_norm_sq(sec, s, a); }, grid) ==
            Approx(-(2.0 * a + 2.0)).margin(0.1));
      for (double s : grid) {
        CHECK(xalpha_integral(sec, s, a) <= xalpha_bound(sec, s, a));
        CHECK(weighted_l2_norm_sq(sec, s, a) <= weighted_l2_bound(sec, s, a));
      }
    }
    for (double s : grid) {
      CHECK(u0_l2_check(sec, s).holds);
      CHECK(tail_integral_abs_u0(sec, s) <= tail_majorant(sec, s, sec.h));
      if (delta_W(sec) * std::sqrt(sec.h * s) >= 12.0) CHECK(tail_integral_abs_u0(sec, s) <= tail_bound(sec, s, sec.h));
    }
  }
  // xalpha quadrature against an independent Simpson oracle in (theta, t)
  Sector sec = Sector::make(-0.5, 1.0, 0.5);
  const double s = 100.0, a = 0.5;
  auto row = [&](double th) {
    double w = omega(th);
    return simpson([&](double t) { return 2.0 * std::pow(t, 2 * a + 3) * std::exp(-w * t); }, 0.0, 120.0, 6000) /
           std::pow(s, a + 2.0);
  };
  CHECK(xalpha_integral(sec, s, a) == Approx(simpson(row, -0.5, 1.0, 200).real()).epsilon(1e-8));
  CHECK(decay_slope([](double s) { return zeta_integral(s, 1.0, 0.9, 0.5); }, grid) == Approx(-2.0).margin(0.05));
  for (double z : {0.5, 2.0})
    CHECK(decay_slope([&](double s) { return zeta_integral(s, z, 0.9, 0.5); }, grid) == Approx(-(z + 1.0)).margin(0.05));
}

TEST_CASE("boundary expansion") {
  Sector sec = Sector::make(-0.5, 1.0, 0.5);
  const auto grid = geometric_grid(1e2, 1e5, 6);
  auto zero = boundary_expansion_check(sec, FourierKernel::make(1.0, {0.0}), 1.0, grid);
  for (double r : zero.remainder_minus) CHECK(r == 0.0);
  auto one = boundary_expansion_check(sec, FourierKernel::make(1.0, {1.0 / (2.0 * pi)}), 1.0, grid);
  CHECK(one.slope_minus <= -2.0 + 0.05);
  CHECK(one.slope_plus <= -2.0 + 0.05);
  CHECK_THROWS_AS(boundary_expansion_check(Sector::make(-0.5, 1.0, 2.0), FourierKernel::make(1.0, {1.0}), 1.0, grid),
                  InvalidInput);
}

TEST_CASE("herglotz") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n01;
  std::vector<cplx> c;
  for (int p = -6; p <= 6; ++p) c.emplace_back(n01(rng), n01(rng));
  FourierKernel g = FourierKernel::make(2.0, c);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    double r = 2.5 * std::abs(std::sin(1.3 * i)), t = 0.7 * i;
    Vec2 x(r * std::cos(t), r * std::sin(t));
    worst = std::max(worst, std::abs(eval_jacobi_anger(g, x, 40) - eval_quadrature(g, x)));
  }
  CHECK(worst < 1e-10);
  FourierKernel one = FourierKernel::make(3.0, {1.0});
  for (double r : {0.0, 0.5, 1.2})
    CHECK(std::abs(eval_quadrature(one, {r, 0.3 * r}) - 2.0 * pi * std::cyl_bessel_j(0, 3.0 * std::hypot(r, 0.3 * r))) <
          1e-13);
  Vec2 x(0.3, -0.2);
  const double e = 1e-6;
  CVec2 gr = eval_quadrature_grad(g, x);
  CHECK(std::abs((eval_quadrature(g, x + Vec2(e, 0)) - eval_quadrature(g, x - Vec2(e, 0))) / (2 * e) - gr[0]) < 1e-6);
  CHECK_THROWS_AS(FourierKernel::make(1.0, {1.0, 2.0}), InvalidInput);

  MeshOptions o;
  o.h = 0.1;
  TriMesh m = mesh_disk(Disk::make({0, 0}, 0.5), o);
  std::vector<cplx> planted;
  for (int p = -4; p <= 4; ++p) planted.emplace_back(n01(rng), n01(rng));
  FourierKernel gp = FourierKernel::make(2.0, planted);
  CVec target = interpolate(m, [&](const Vec2& y) { return eval_jacobi_anger(gp, y, 60); });
  auto [fit, rep] = fit_kernel(m, target, 2.0, 4, 0.0);
  double err = 0.0;
  for (int p = -4; p <= 4; ++p) err = std::max(err, std::abs(fit.c(p) - gp.c(p)));
  CHECK(err < 1e-8);
  CHECK(rep.residual_h1 < 1e-10);
}

TEST_CASE("dimension reduction") {
  auto psi = BumpFunction::make(0.0, 0.1);
  // oracle: trapezoid on the bump (spectrally accurate for a compactly supported smooth function)
  double trap = 0.0;
  const int n = 4000;
  for (int i = 1; i < n; ++i) trap += psi(-0.1 + 0.2 * i / n);
  trap *= 0.2 / n;
  CHECK(c_psi(psi) == Approx(trap).epsilon(1e-10));
  CHECK(c_psi(psi) == Approx(0.0443993816).margin(1e-9));
  const double e = 1e-5;
  CHECK(psi.d2(0.03) == Approx((psi(0.03 + e) - 2 * psi(0.03) + psi(0.03 - e)) / (e * e)).epsilon(1e-5));

  std::vector<Vec2> smp{{0.1, 0.05}, {0.3, -0.1}, {0.02, 0.2}};
  CHECK(reduction_pde_residual(plane_wave_cylinder(2.0, 1.2, 0.4), psi, smp) < 1e-8);
  CHECK(reduction_pde_residual(bessel_cylinder(2.0, 1.2), psi, smp) < 1e-8);
  CylinderField zero = plane_wave_cylinder(1.0, 0.5, 0.0);
  zero.value = [](const Vec2&, double) { return cplx(0.0); };
  zero.lap_xp = zero.value;
  CHECK(reduction_pde_residual(zero, psi, smp) == 0.0);

  // linearity in g and translation of x3-independent factors
  auto f1 = plane_wave_cylinder(2.0, 1.2, 0.4), f2 = bessel_cylinder(2.0, 0.5);
  CylinderField sum = f1;
  sum.value = [&](const Vec2& x, double z) { return 2.0 * f1.value(x, z) - 3.0 * f2.value(x, z); };
  Vec2 x(0.2, 0.1);
  CHECK(std::abs(reduce(sum, psi, x) - (2.0 * reduce(f1, psi, x) - 3.0 * reduce(f2, psi, x))) < 1e-14);
  CylinderField sep = f1;
  sep.value = [](const Vec2& y, double z) { return std::exp(I * y.x()) * std::cos(z); };
  Vec2 t(0.4, 0.0);
  CHECK(std::abs(reduce(sep, psi, x + t) - std::exp(I * 0.4) * reduce(sep, psi, x)) < 1e-14);

  auto rows = c1_psi_bound_check(psi, {0.05, 0.2, 0.5, 1.0});
  CHECK(rows[0].skipped);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].holds);
    // oracle: angular form of C1
    double r = rows[i].r, lim = std::atan(psi.L / r);
    double ang = simpson([&](double w) { return cplx(psi(r * std::tan(w)) / std::pow(std::cos(w), 3)); }, -lim, lim, 4000)
                     .real();
    CHECK(rows[i].c1 == Approx(ang).epsilon(1e-8));
  }
  // C1 -> C(psi)/|x'| as L/|x'| -> 0
  CHECK(c1_psi(psi, 10.0) * 10.0 / c_psi(psi) == Approx(1.0).margin(1e-4));

  auto rep = c311_ratio(0.7, BumpFunction::make(0, 0.2), 1.0, 0.5, {1e3, 1e4});
  CHECK(rep.in_bracket);
  CHECK(std::abs(rep.ratio[1] - rep.ratio[0]) < 0.05 * std::abs(rep.ratio[0]));
  auto small = c311_ratio(0.7, BumpFunction::make(0, 0.2), 1e-4, 0.5, {1e4});
  CHECK(small.ratio[0].real() == Approx(small.c_psi).epsilon(1e-3));
  CHECK_THROWS_AS(c311_ratio(0.7, BumpFunction::make(0, 0.2), 6.0, 0.5, {1e3}), InvalidInput);

  CHECK(std::abs(weighted_mu_sum_check(-0.3, 0.9, 2.0, 2.0).value - 2.0 * mu_sum(-0.3, 0.9)) < 1e-14);
  CHECK_FALSE(weighted_mu_sum_check(-pi / 2, pi / 2, 1.0, 1.0).nonzero);
}
