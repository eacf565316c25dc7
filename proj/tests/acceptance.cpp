#include <chrono>
#include <cstdio>
#include <random>
#include <string>

#include "cwl/cgo.hpp"
#include "cwl/dimred3d.hpp"
#include "cwl/herglotz.hpp"
#include "cwl/inverse.hpp"
#include "cwl/mesh.hpp"
#include "cwl/teig.hpp"

using namespace cwl;

namespace {

int failures = 0;

struct Line {
  bool pass = true;
  std::string detail;
  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [FAIL]");
  }
};

std::string sci(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3g", v);
  return b;
}

template <class F>
void criterion(int n, const char* name, F&& body) {
  auto t0 = std::chrono::steady_clock::now();
  Line l;
  try {
    body(l);
  } catch (const std::exception& e) {
    l.check(false, std::string("exception: ") + e.what());
  }
  double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  failures += !l.pass;
  std::printf("%s %2d %s (%.1fs): %s\n", l.pass ? "PASS" : "FAIL", n, name, sec, l.detail.c_str());
  std::fflush(stdout);
}

const std::vector<std::array<double, 2>> kSectors{{-pi / 3, pi / 3}, {-0.5, 1.0}, {-2.5, 2.0}};

Polygon centered_square() { return Polygon::make({{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}}); }

ConductiveMedium square_medium(double eta) {
  ConductiveMedium m;
  m.domain = Polygon::unit_square();
  m.q = 2.0;
  m.eta = eta;
  return m;
}

MeshOptions corner_mesh(double h, double hmin) {
  MeshOptions o;
  o.h = h;
  o.gradings = {{{0, 0}, hmin, 0.3}, {{0.5, 0}, hmin, 0.3}};
  return o;
}

void closed_forms(Line& l) {
  double worst = 0.0, worst_b = 0.0;
  for (auto& sv : kSectors)
    for (double s : {1.0, 10.0, 100.0}) {
      worst = std::max(worst, sector_integral_check(sv[0], sv[1], s).rel_err);
      for (double th : {sv[0], sv[1]}) {
        cplx b = boundary_integral_u0(th, s, 0.5);
        cplx q = integrate([&](double r) { return eval_u0(s, r, th); }, 0.0, 0.5, {1e-300, 1e-13, 100000, 40}).value;
        worst_b = std::max(worst_b, std::abs(b - q) / std::abs(q));
      }
    }
  l.check(worst < 1e-6, "sector integral rel err " + sci(worst) + " < 1e-6");
  l.check(worst_b < 1e-8, "boundary integral rel err " + sci(worst_b) + " < 1e-8");
}

void rates(Line& l) {
  const auto grid = geometric_grid(1e2, 1e6, 9);
  double dx = 0.0, dl = 0.0, dz = 0.0;
  int bad_x = 0, bad_l = 0, bad_u = 0, bad_t = 0, total = 0;
  std::string tail_worst;
  double tail_excess = 0.0;
  for (auto& sv : kSectors) {
    Sector sec = Sector::make(sv[0], sv[1], 0.5);
    for (double a : {0.25, 0.5, 0.75}) {
      std::vector<double> vx, vl;
      for (double s : grid) {
        vx.push_back(xalpha_integral(sec, s, a));
        vl.push_back(std::sqrt(weighted_l2_norm_sq(sec, s, a)));
        bad_x += vx.back() > xalpha_bound(sec, s, a);
        bad_l += vl.back() * vl.back() > weighted_l2_bound(sec, s, a);
      }
      dx = std::max(dx, std::abs(loglog_slope(grid, vx) + (a + 2.0)));
      dl = std::max(dl, std::abs(loglog_slope(grid, vl) + (a + 1.0)));
    }
    for (double s : grid) {
      ++total;
      bad_u += !u0_l2_check(sec, s).holds;
      double v = tail_integral_abs_u0(sec, s), b = tail_bound(sec, s, sec.h);
      if (v > b) {
        ++bad_t;
        if (v / b > tail_excess) {
          tail_excess = v / b;
          tail_worst = "s=" + sci(s) + " sector (" + sci(sv[0]) + "," + sci(sv[1]) + ") " + sci(v) + " > " + sci(b);
        }
      }
    }
  }
  for (double z : {0.5, 1.0, 2.0})
    dz = std::max(dz, std::abs(decay_slope([&](double s) { return zeta_integral(s, z, 0.9, 0.5); }, grid) + (z + 1.0)));
  l.check(dx <= 0.05, "xalpha slope dev " + sci(dx));
  l.check(dz <= 0.05, "zeta slope dev " + sci(dz));
  l.check(dl <= 0.05, "weighted L2 slope dev " + sci(dl));
  l.check(bad_x == 0, "xalpha bound violations " + std::to_string(bad_x));
  l.check(bad_l == 0, "weighted L2 bound violations " + std::to_string(bad_l));
  l.check(bad_u == 0, "u0 L2 bound violations " + std::to_string(bad_u));
  l.check(bad_t == 0, "tail bound violations " + std::to_string(bad_t) + "/" + std::to_string(total) +
                          (bad_t ? " worst " + tail_worst : ""));
}

void mu_law(Line& l) {
  const double step = 0.01;
  int pairs = 0, zeros = 0, mismatched = 0;
  for (double tm = -pi + step; tm < pi; tm += step) {
    std::vector<double> tops;
    for (double tM = tm + step; tM < pi; tM += step) tops.push_back(tM);
    if (tm + pi < pi) tops.push_back(tm + pi);
    for (double tM : tops) {
      bool zero = std::abs(mu_sum(tm, tM)) < 1e-12;
      bool degenerate = std::abs((tM - tm) - pi) < 1e-12;
      ++pairs;
      zeros += zero;
      mismatched += zero != degenerate;
    }
  }
  l.check(mismatched == 0, std::to_string(zeros) + " zeros on " + std::to_string(pairs) + " grid pairs, mismatched " +
                               std::to_string(mismatched));
  auto psi = BumpFunction::make(0.0, 0.1);
  const double kL = 1.0 * psi.L, cp = c_psi(psi);
  const double lo = cp * (1.0 - 2.0 * kL * kL) / (1.0 - kL * kL), hi = cp / (1.0 - kL * kL);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ang(-pi, pi), unit(0.0, 1.0);
  int trials = 0, vanish = 0;
  double min_abs = HUGE_VAL;
  while (trials < 10000) {
    double a = ang(rng), b = ang(rng);
    if (a > b) std::swap(a, b);
    if (a == b || std::abs((b - a) - pi) < 1e-9) continue;
    ++trials;
    auto w = weighted_mu_sum_check(a, b, lo + (hi - lo) * unit(rng), lo + (hi - lo) * unit(rng));
    min_abs = std::min(min_abs, std::abs(w.value));
    vanish += !w.nonzero;
  }
  l.check(vanish == 0, "weighted sum nonzero in " + std::to_string(trials - vanish) + "/" + std::to_string(trials) +
                           " trials, min " + sci(min_abs));
}

void herglotz(Line& l) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n01;
  std::vector<cplx> c;
  for (int p = -8; p <= 8; ++p) c.emplace_back(n01(rng), n01(rng));
  FourierKernel g = FourierKernel::make(2.0, c);
  double ja = 0.0, j0 = 0.0;
  for (int i = 0; i < 400; ++i) {
    double r = 2.5 * std::abs(std::sin(1.3 * i)), t = 0.7 * i;
    Vec2 x(r * std::cos(t), r * std::sin(t));
    ja = std::max(ja, std::abs(eval_jacobi_anger(g, x, 40) - eval_quadrature(g, x)));
  }
  FourierKernel one = FourierKernel::make(2.0, {1.0});
  for (double r = 0.0; r <= 2.5; r += 0.05)
    j0 = std::max(j0, std::abs(eval_quadrature(one, {r, 0.0}) - 2.0 * pi * std::cyl_bessel_j(0, 2.0 * r)));
  l.check(ja < 1e-10, "Jacobi-Anger vs quadrature " + sci(ja) + " < 1e-10 (k|x| <= 5)");
  l.check(j0 < 1e-10, "constant kernel vs 2 pi J0 " + sci(j0));
  MeshOptions o;
  o.h = 0.1;
  TriMesh m = mesh_disk(Disk::make({0, 0}, 0.5), o);
  std::vector<cplx> planted;
  for (int p = -4; p <= 4; ++p) planted.emplace_back(n01(rng), n01(rng));
  FourierKernel gp = FourierKernel::make(2.0, planted);
  CVec target = interpolate(m, [&](const Vec2& y) { return eval_jacobi_anger(gp, y, 60); });
  auto fit = fit_kernel(m, target, 2.0, 4, 0.0).first;
  double err = 0.0;
  for (int p = -4; p <= 4; ++p) err = std::max(err, std::abs(fit.c(p) - gp.c(p)));
  l.check(err < 1e-8, "planted kernel recovered to " + sci(err));
}

void disk_eigen(Line& l) {
  for (double eta : {0.0, 0.5}) {
    ConductiveMedium m;
    m.domain = Disk::make({0, 0}, 1.0);
    m.q = 4.0;
    m.eta = eta;
    double exact = 0.0;
    for (double r : disk_eigenvalues({1.0, 4.0, eta, 1}, 2.5, 3.0)) exact = r;
    std::vector<double> hs{0.2, 0.1, 0.05}, errs;
    for (double h : hs) {
      MeshOptions o;
      o.h = h;
      TriMesh mesh = mesh_disk(std::get<Disk>(m.domain), o);
      auto pairs = solve_near(assemble(m, mesh), exact, 2);
      errs.push_back(std::abs(pairs.at(0).k - exact) / exact);
    }
    double order = std::min(std::log2(errs[0] / errs[1]), std::log2(errs[1] / errs[2]));
    const std::string t = "eta=" + sci(eta) + " ";
    l.check(errs.back() < 0.02, t + "k*=" + sci(exact) + " rel err " + sci(errs[0]) + "/" + sci(errs[1]) + "/" + sci(errs[2]));
    l.check(order >= 1.8, t + "order " + sci(order));
  }
}

void corner_vanishing(Line& l) {
  TriMesh mesh = mesh_polygon(Polygon::unit_square(), corner_mesh(0.05, 0.005));
  auto profile = [&](double eta, cplx target) {
    ConductiveMedium m = square_medium(eta);
    return std::pair{m, solve_near(assemble(m, mesh), target, 3).at(0)};
  };
  auto ratio = [](const std::vector<BallAverage>& a) { return std::abs(a.back().value) / std::abs(a.front().value); };
  auto [m1, p1] = profile(1.0, cplx(4.36, -2.0));
  auto cp = corner_vanishing_profile(mesh, p1, CornerProbe::dyadic({0, 0}, 0.2, 5));
  auto fp = corner_vanishing_profile(mesh, p1, CornerProbe::dyadic({0.5, 0}, 0.2, 5));
  l.check(ratio(cp) < 0.2, "eta=1 k=" + sci(p1.k.real()) + sci(p1.k.imag()) + "i corner ratio " + sci(ratio(cp)) + " < 0.2");
  l.check(ratio(fp) > 0.5, "flat ratio " + sci(ratio(fp)) + " > 0.5");
  auto [m0, p0] = profile(0.0, cplx(4.8, -2.0));
  auto iv = interior_indicator(mesh, p0, CornerProbe::dyadic({0, 0}, 0.2, 5), [&](const Vec2& x) { return m0.q_at(x) - 1.0; });
  bool mono = true;
  std::string seq;
  for (std::size_t i = 0; i < iv.size(); ++i) {
    if (i) mono = mono && std::abs(iv[i].value) < std::abs(iv[i - 1].value);
    seq += (i ? "," : "") + sci(std::abs(iv[i].value));
  }
  l.check(mono, "eta=0 k=" + sci(p0.k.real()) + sci(p0.k.imag()) + "i V w averages " + seq + " decreasing");
}

AnalyticField poly_field(double c1, double c2, double a11, double a22, double a12, double b112, double b122) {
  AnalyticField f;
  f.value = [=](const Vec2& p) {
    double x = p.x(), y = p.y();
    return cplx(c1 * x + c2 * y + a11 * x * x + a22 * y * y + a12 * x * y + b112 * x * x * y + b122 * x * y * y);
  };
  f.grad = [=](const Vec2& p) {
    double x = p.x(), y = p.y();
    return CVec2(c1 + 2 * a11 * x + a12 * y + 2 * b112 * x * y + b122 * y * y,
                 c2 + 2 * a22 * y + a12 * x + b112 * x * x + 2 * b122 * x * y);
  };
  f.laplacian = [=](const Vec2& p) { return cplx(2 * a11 + 2 * a22 + 2 * b112 * p.y() + 2 * b122 * p.x()); };
  return f;
}

void identities(Line& l) {
  double g = 0.0;
  g = std::max(g, green_identity(poly_field(0, 0, 1, 0, 0, 0, 0), poly_field(0, 0, 0, 1, 0, 0, 0), Polygon::unit_square()).residual);
  g = std::max(g, green_identity(bessel_j0_field(3.0), cgo_field(20.0), Sector::make(-2.0, 1.5, 0.8)).residual);
  g = std::max(g, green_identity(poly_field(0, 0, 1, 0, 0, 1, 0), constant_field(1.0), Sector::make(-2.0, 1.5, 0.8)).residual);
  l.check(g < 1e-8, "Green identity " + sci(g));
  const double eta = 0.7, a = 0.3, b = -0.4, c = 0.2;
  auto v = poly_field(1, 1, a / eta, b / eta, c, 0, 0);
  auto w = poly_field(1, 1, a / eta, b / eta, c - eta, -a, -b);
  double mm = 0.0;
  for (auto& t : master_identity_residual(v, w, eta, Sector::make(0, pi / 2, 0.5), {1, 10, 100, 1000}))
    mm = std::max(mm, t.residual);
  l.check(mm < 1e-8, "master identity manufactured " + sci(mm));
  ConductiveMedium m = square_medium(1.0);
  std::vector<double> res;
  std::string seq;
  for (double h : {0.1, 0.05, 0.025}) {
    TriMesh mesh = mesh_polygon(Polygon::unit_square(), corner_mesh(h, 0.1 * h));
    auto p = solve_near(assemble(m, mesh), cplx(4.36, -2.0), 3).at(0);
    double r = 0.0;
    for (auto& t : master_identity_residual(mesh, m, p, 0, 0.3, {5, 20, 80})) r = std::max(r, t.residual);
    res.push_back(r);
    seq += (seq.empty() ? "" : ",") + sci(r);
  }
  l.check(res[1] < res[0] && res[2] < res[1], "FEM eigenpair master residual " + seq + " decreasing");
}

void scattering(Line& l) {
  ConductiveMedium med;
  med.domain = Disk::make({0, 0}, 1.0);
  med.q = 2.0;
  med.eta = cplx(0.0, 0.5);
  auto inc = IncidentWave::make(1.0, {1, 0});
  auto ser = disk_series_forward(med, inc);
  MeshOptions o;
  o.h = 0.1;
  TriMesh m = mesh_scatter(med.domain, 2.0, 128, o);
  auto ff = solve_forward(med, inc, m, DtnRing::make(1.0, 2.0)).far_field(m);
  double e = far_field_rel_error(ff, ser.far_field(ff.theta));
  l.check(e < 1e-2, "FEM vs series far field " + sci(e) + " (h=0.1)");
  std::vector<FarField> fs;
  for (double R : {2.0, 3.0}) {
    std::vector<cplx> tr;
    for (int j = 0; j < 128; ++j) {
      Vec2 x = R * Vec2(std::cos(2 * pi * j / 128), std::sin(2 * pi * j / 128));
      tr.push_back(ser.total_field(x) - inc.value(x));
    }
    fs.push_back(far_field_from_ring(tr, 0.0, DtnRing::make(1.0, R), 1.0));
  }
  double ind = far_field_rel_error(fs[0], fs[1]);
  l.check(ind < 1e-3, "ring radius 2 vs 3 " + sci(ind));
  double rec = 0.0;
  for (int t = 0; t < 20; ++t) {
    double a = 0.3 + 0.7 * t, b = 1.1 - 0.4 * t;
    auto s1 = disk_series_forward(med, IncidentWave::make(1.0, {std::cos(a), std::sin(a)}));
    auto s2 = disk_series_forward(med, IncidentWave::make(1.0, {-std::cos(b), -std::sin(b)}));
    rec = std::max(rec, std::abs(s1.far_field(b) - s2.far_field(a + pi)) / std::abs(s1.far_field(b)));
  }
  l.check(rec < 1e-12, "series reciprocity " + sci(rec));
}

void inverse(Line& l) {
  Polygon sq = centered_square();
  ScattererConfig c1{ConductiveMedium{sq, 2.0, {}, 1.0, {}}, IncidentWave::make(1.0, {1, 0})};
  ScattererConfig c2 = c1;
  c2.medium.domain = chamfer_corner(sq, 2, 0.3);
  InverseOptions o;
  auto rep = distinguish(c1, c2, o);
  l.check(rep.verdict && rep.distance > rep.floor, "square vs chamfered distance " + sci(rep.distance) +
                                                       " > 10x discretisation floor " + sci(rep.floor));
  ScattererConfig truth = c1;
  truth.medium.eta = 0.7;
  FarField obs = simulate_far_field(truth, o, o.h);
  EtaSearch search{0.0, 2.0, 21, 1e-7};
  auto clean = recover_eta(c1.medium, c1.inc, obs, search, o);
  l.check(std::abs(clean.eta_hat - 0.7) < 1e-3, "noiseless eta " + sci(clean.eta_hat.real()) + " vs 0.7");
  auto noisy = recover_eta(c1.medium, c1.inc, add_noise(obs, 0.01, 7), search, o);
  l.check(std::abs(noisy.eta_hat - 0.7) < 5e-2, "1% noise eta " + sci(noisy.eta_hat.real()));
}

void dimred(Line& l) {
  const std::vector<Vec2> samples{{0.1, 0.05}, {0.3, -0.1}, {0.02, 0.2}};
  double res = 0.0;
  int c1_bad = 0, c1_lit_bad = 0, c311_bad = 0, c311_n = 0;
  std::string lit;
  for (double L : {0.1, 0.2}) {
    auto psi = BumpFunction::make(0.0, L);
    for (double k : {0.5, 1.0, 2.0}) {
      res = std::max({res, reduction_pde_residual(plane_wave_cylinder(k, 0.6 * k, 0.4), psi, samples),
                      reduction_pde_residual(bessel_cylinder(k, 0.6 * k), psi, samples)});
      if (k * L >= 0.5) continue;
      auto rep = c311_ratio(0.7, psi, k, std::min(0.5, 0.4 / k), {1e3, 1e4});
      for (auto r : rep.ratio) {
        ++c311_n;
        c311_bad += !(r.real() > rep.bracket_lo && r.real() < rep.bracket_hi);
      }
    }
    for (auto& row : c1_psi_bound_check(psi, {0.2, 0.5, 1.0})) {
      if (row.skipped) continue;
      c1_bad += !row.holds;
      if (!row.literal_holds) {
        ++c1_lit_bad;
        lit += " L=" + sci(L) + " r=" + sci(row.r) + " " + sci(row.c1) + ">" + sci(row.literal_bound);
      }
    }
  }
  l.check(res < 1e-8, "reduced PDE residual " + sci(res));
  l.check(c1_bad == 0, "C1 bound with arctan(L/|x'|) violations " + std::to_string(c1_bad));
  l.check(c311_bad == 0, "bracket " + std::to_string(c311_n - c311_bad) + "/" + std::to_string(c311_n));
  std::printf("INFO 10 C1 bound with arctan L (as stated) violations %d:%s\n", c1_lit_bad, lit.c_str());
}

}  // namespace

int main() {
  criterion(1, "CGO closed forms", closed_forms);
  criterion(2, "asymptotic rates and estimates", rates);
  criterion(3, "mu-sum law", mu_law);
  criterion(4, "Herglotz", herglotz);
  criterion(5, "disk eigenvalue oracle", disk_eigen);
  criterion(6, "corner vanishing", corner_vanishing);
  criterion(7, "identity residuals", identities);
  criterion(8, "forward and far field", scattering);
  criterion(9, "inverse demos", inverse);
  criterion(10, "dimension reduction", dimred);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures ? 1 : 0;
}
