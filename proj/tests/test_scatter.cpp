#include <catch_amalgamated.hpp>

#include "cwl/inverse.hpp"

using namespace cwl;
using Catch::Approx;

namespace {

ConductiveMedium mie_medium(cplx eta) {
  ConductiveMedium m;
  m.domain = Disk::make({0, 0}, 1.0);
  m.q = 2.0;
  m.eta = eta;
  return m;
}

Polygon centered_square() { return Polygon::make({{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}}); }

// Far field of the scattered trace on a circle, by direct (non-FFT) Fourier sums.
std::vector<cplx> ring_far_field_oracle(const std::vector<cplx>& tr, double R, double k, const std::vector<double>& th,
                                        int N) {
  const int M = static_cast<int>(tr.size());
  std::vector<cplx> out;
  for (double t : th) {
    cplx s = 0.0;
    for (int n = -N; n <= N; ++n) {
      cplx c = 0.0;
      for (int j = 0; j < M; ++j) c += tr[j] * std::exp(-I * (n * 2.0 * pi * j / M));
      c /= M;
      cplx h(std::cyl_bessel_j(std::abs(n), k * R), std::cyl_neumann(std::abs(n), k * R));
      if (n < 0 && (-n) % 2) h = -h;
      s += c / h * std::pow(-I, n) * std::exp(I * (n * t));
    }
    out.push_back(std::sqrt(2.0 / (pi * k)) * std::exp(-I * pi / 4.0) * s);
  }
  return out;
}

}  // namespace

TEST_CASE("incident waves and rings") {
  CHECK_THROWS_AS(IncidentWave::make(-1.0, {1, 0}), InvalidInput);
  CHECK_THROWS_AS(IncidentWave::make(1.0, {1, 1}), InvalidInput);
  auto ring = DtnRing::make(1.0, 2.0);
  CHECK(ring.N == 14);
  CHECK_THROWS_AS(far_field_from_ring(std::vector<cplx>(60, 1.0), 0.0, ring, 1.0), InvalidInput);
  auto u = uniform_angles(8);
  CHECK(u[2] == Approx(pi / 2));
}

TEST_CASE("mie series") {
  auto med = mie_medium(cplx(0.0, 0.5));
  auto inc = IncidentWave::make(1.0, {1, 0});
  auto s = disk_series_forward(med, inc);
  // transmission conditions at r = R from the series itself
  for (double t : {0.0, 1.0, 2.5}) {
    Vec2 xo = 1.0000001 * Vec2(std::cos(t), std::sin(t)), xi = 0.9999999 * Vec2(std::cos(t), std::sin(t));
    CHECK(std::abs(s.total_field(xo) - s.total_field(xi)) < 1e-5);
  }
  // reciprocity u_inf(b; a) = u_inf(-a; -b)
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    double a = 0.3 + 0.7 * t, b = 1.1 - 0.4 * t;
    auto s1 = disk_series_forward(med, IncidentWave::make(1.0, {std::cos(a), std::sin(a)}));
    auto s2 = disk_series_forward(med, IncidentWave::make(1.0, {-std::cos(b), -std::sin(b)}));
    worst = std::max(worst, std::abs(s1.far_field(b) - s2.far_field(a + pi)) / std::abs(s1.far_field(b)));
  }
  CHECK(worst < 1e-12);
  // no contrast, no conductivity: nothing scattered
  auto none = disk_series_forward(ConductiveMedium{Disk::make({0, 0}, 1.0), 1.0, {}, 0.0, {}}, inc);
  CHECK(std::abs(none.far_field(0.3)) < 1e-14);
  // ring map reproduces the series far field independent of R
  for (double R : {2.0, 3.0}) {
    auto ring = DtnRing::make(1.0, R);
    std::vector<cplx> tr;
    for (int j = 0; j < 128; ++j) {
      Vec2 x = R * Vec2(std::cos(2 * pi * j / 128), std::sin(2 * pi * j / 128));
      tr.push_back(s.total_field(x) - inc.value(x));
    }
    auto ff = far_field_from_ring(tr, 0.0, ring, 1.0);
    CHECK(far_field_rel_error(ff, s.far_field(ff.theta)) < 1e-10);
    auto oracle = ring_far_field_oracle(tr, R, 1.0, {0.0, 1.0, 2.0}, ring.N);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(oracle[i] - s.far_field(double(i))) < 1e-10);
  }
  // translation of the far field is a pure phase: |u_inf| unchanged, shift and back is identity
  auto base = s.far_field(uniform_angles(16));
  auto moved = translate_far_field(base, {0.3, -0.2}, inc.d);
  auto back = translate_far_field(moved, {-0.3, 0.2}, inc.d);
  CHECK(far_field_rel_error(back, base) < 1e-14);
  for (std::size_t i = 0; i < base.values.size(); ++i)
    CHECK(std::abs(moved.values[i]) == Approx(std::abs(base.values[i])));
}

TEST_CASE("fem forward solve against the series") {
  auto med = mie_medium(cplx(0.0, 0.5));
  auto inc = IncidentWave::make(1.0, {1, 0});
  auto ser = disk_series_forward(med, inc);
  MeshOptions o;
  o.h = 0.1;
  TriMesh m = mesh_scatter(med.domain, 2.0, 128, o);
  auto r = solve_forward(med, inc, m, DtnRing::make(1.0, 2.0));
  auto ff = r.far_field(m);
  CHECK(far_field_rel_error(ff, ser.far_field(ff.theta)) < 1e-2);
  CHECK_FALSE(ff.aliasing_warning);
  // absorbing boundary drains energy; a lossless one nearly conserves it
  CHECK(energy_flux(m, r) < -1.0);
  auto lossless = mie_medium(0.0);
  auto r0 = solve_forward(lossless, inc, m, DtnRing::make(1.0, 2.0));
  CHECK(std::abs(energy_flux(m, r0)) < 1e-2);
  // q = 1, eta = 0: the scattered field is only discretisation error, O(h^2) with the ring refined too
  ConductiveMedium empty{Disk::make({0, 0}, 1.0), 1.0, {}, 0.0, {}};
  double prev = 0.0;
  for (auto [h, M] : {std::pair{0.2, 64}, std::pair{0.1, 128}}) {
    o.h = h;
    TriMesh mm = mesh_scatter(empty.domain, 2.0, M, o);
    auto re = solve_forward(empty, inc, mm, DtnRing::make(1.0, 2.0));
    double e = (re.u - interpolate(mm, [&](const Vec2& x) { return inc.value(x); })).cwiseAbs().maxCoeff();
    if (prev > 0.0) CHECK(prev / e > 3.0);
    prev = e;
  }
  CHECK(prev < 2e-3);
}

TEST_CASE("physical parameters") {
  auto p = eta_from_physics(2.0, 0.5, 1.5, 3.0);
  CHECK(p.k == Approx(2.0 * std::sqrt(4.5)));
  CHECK(std::abs(p.eta - cplx(0.0, 1.5)) < 1e-15);
  CHECK_THROWS_AS(eta_from_physics(1.0, 0.0, 1.0, 1.0), InvalidInput);
}

TEST_CASE("inverse helpers") {
  Polygon sq = centered_square();
  Polygon ch = chamfer_corner(sq, 2, 0.3);
  CHECK(ch.size() == 5);
  CHECK(ch.signed_area() == Approx(1.0 - 0.045));
  CHECK_THROWS_AS(chamfer_corner(sq, 2, 1.5), InvalidInput);
  auto diff = differing_corners(sq, ch);
  CHECK(diff.size() == 3);

  FarField f;
  f.k = 1.0;
  f.theta = uniform_angles(64);
  for (double t : f.theta) f.values.push_back(std::exp(I * t) + 0.5);
  auto n1 = add_noise(f, 0.01, 5), n2 = add_noise(f, 0.01, 5), n3 = add_noise(f, 0.01, 6);
  CHECK(far_field_distance(n1, n2) == 0.0);
  CHECK(far_field_distance(n1, n3) > 0.0);
  CHECK(far_field_distance(n1, f) == Approx(0.01 * far_field_l2(f)).epsilon(1e-10));

  ConductiveMedium m{sq, 2.0, {}, 1.0, {}};
  auto dm = dirichlet_margin(m, 1.0, 0.1);
  // -Lap u = k^2 q u on the unit square: k = pi sqrt(2 / q)
  CHECK(dm.nearest_k == Approx(pi).epsilon(0.01));
  CHECK_THROWS_AS(recover_eta(m, IncidentWave::make(dm.nearest_k, {1, 0}), f, EtaSearch{}, InverseOptions{}), InvalidInput);
}

TEST_CASE("distinguish and recover") {
  Polygon sq = centered_square();
  ScattererConfig c1{ConductiveMedium{sq, 2.0, {}, 1.0, {}}, IncidentWave::make(1.0, {1, 0})};
  ScattererConfig c2 = c1;
  c2.medium.domain = chamfer_corner(sq, 2, 0.3);
  InverseOptions o;
  auto same = distinguish(c1, c1, o);
  CHECK(same.distance == 0.0);
  CHECK_FALSE(same.verdict);
  auto rep = distinguish(c1, c2, o);
  CHECK(rep.admissible1.ok());
  CHECK(rep.admissible2.ok());
  CHECK(rep.distance > rep.floor);
  CHECK(rep.verdict);
  ScattererConfig truth = c1;
  truth.medium.eta = 0.7;
  FarField obs = simulate_far_field(truth, o, o.h);
  auto rec = recover_eta(c1.medium, c1.inc, obs, EtaSearch{0.0, 2.0, 21, 1e-7}, o);
  CHECK(std::abs(rec.eta_hat - 0.7) < 1e-3);
  CHECK(rec.curve.size() >= 21);
  IncidentWave other = IncidentWave::make(1.0, {0, 1});
  CHECK_THROWS_AS(distinguish(c1, ScattererConfig{c2.medium, other}, o), InvalidInput);
}
