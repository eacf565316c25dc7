#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <fftw3.h>

#include <Eigen/SparseLU>

#include "cwl/bessel.hpp"
#include "cwl/fem.hpp"
#include "cwl/herglotz.hpp"
#include "cwl/medium.hpp"
#include "cwl/mesh.hpp"

namespace cwl {

struct IncidentWave {
  double k = 1.0;
  Vec2 d{1.0, 0.0};

  static IncidentWave make(double k, Vec2 d) {
    require(k > 0.0 && std::isfinite(k), "IncidentWave: k must be positive");
    require(std::abs(d.norm() - 1.0) < 1e-12, "IncidentWave: direction must be a unit vector");
    return {k, d};
  }
  double theta_d() const { return std::atan2(d.y(), d.x()); }
  cplx value(const Vec2& x) const { return std::exp(I * k * x.dot(d)); }
};

struct DtnRing {
  double R = 2.0;
  int N = 14;

  static DtnRing make(double k, double R, int N = -1) {
    require(R > 0.0 && k > 0.0, "DtnRing: need R > 0 and k > 0");
    if (N < 0) N = static_cast<int>(std::ceil(k * R)) + 12;
    require(N >= static_cast<int>(std::ceil(k * R)), "DtnRing: N must be at least k R");
    return {R, N};
  }
};

inline cplx dtn_symbol(int n, double k, double R) { return k * hankel1_prime(n, k * R) / hankel1(n, k * R); }

struct FarField {
  double k = 1.0;
  std::vector<double> theta;
  std::vector<cplx> values;
  bool aliasing_warning = false;
};

inline bool is_pow2(std::size_t n) { return n >= 1 && (n & (n - 1)) == 0; }

inline std::vector<double> uniform_angles(std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t j = 0; j < n; ++j) t[j] = 2.0 * pi * static_cast<double>(j) / static_cast<double>(n);
  return t;
}

// c_n = (1/M) sum_j u_j e^{-i n theta_j} for theta_j = theta0 + 2 pi j / M, stored at index n mod M.
inline std::vector<cplx> fourier_coeffs(const std::vector<cplx>& samples, double theta0 = 0.0) {
  const int M = static_cast<int>(samples.size());
  require(M >= 1, "fourier_coeffs: no samples");
  std::vector<cplx> in(samples), out(static_cast<std::size_t>(M));
  fftw_plan p = fftw_plan_dft_1d(M, reinterpret_cast<fftw_complex*>(in.data()), reinterpret_cast<fftw_complex*>(out.data()),
                                 FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(p);
  fftw_destroy_plan(p);
  for (int j = 0; j < M; ++j) {
    int n = j <= M / 2 ? j : j - M;
    out[static_cast<std::size_t>(j)] *= std::exp(-I * (n * theta0)) / static_cast<double>(M);
  }
  return out;
}

inline int mode_index(int n, int M) { return ((n % M) + M) % M; }

// Far field of the radiating field with ring trace `trace` sampled at theta0 + 2 pi j / M.
inline FarField far_field_from_ring(const std::vector<cplx>& trace, double theta0, const DtnRing& ring, double k) {
  const int M = static_cast<int>(trace.size());
  require(is_pow2(trace.size()), "far_field_from_ring: sample count must be a power of two");
  require(M >= 4 * ring.N, "far_field_from_ring: need at least 4N samples");
  auto c = fourier_coeffs(trace, theta0);
  FarField ff;
  ff.k = k;
  double total = 0.0, top = 0.0;
  for (int j = 0; j < M; ++j) {
    int n = j <= M / 2 ? j : j - M;
    double e = std::norm(c[static_cast<std::size_t>(j)]);
    total += e;
    if (std::abs(n) >= 3 * M / 8) top += e;
  }
  ff.aliasing_warning = total > 0.0 && top > 0.01 * total;
  const cplx pre = std::sqrt(2.0 / (pi * k)) * std::exp(-I * (pi / 4.0));
  std::vector<cplx> modes(2 * static_cast<std::size_t>(ring.N) + 1);
  for (int n = -ring.N; n <= ring.N; ++n)
    modes[static_cast<std::size_t>(n + ring.N)] =
        c[static_cast<std::size_t>(mode_index(n, M))] * pre * i_pow(-n) / hankel1(n, k * ring.R);
  ff.theta = uniform_angles(static_cast<std::size_t>(M));
  for (double t : ff.theta) {
    cplx s = 0.0;
    for (int n = -ring.N; n <= ring.N; ++n) s += modes[static_cast<std::size_t>(n + ring.N)] * std::exp(I * (n * t));
    ff.values.push_back(s);
  }
  return ff;
}

inline double far_field_l2(const FarField& f) {
  double s = 0.0;
  for (auto& v : f.values) s += std::norm(v);
  return std::sqrt(s * 2.0 * pi / static_cast<double>(std::max<std::size_t>(1, f.values.size())));
}

// L2(S^1) distance between two far fields on the same uniform grid.
inline double far_field_distance(const FarField& a, const FarField& b) {
  require(a.values.size() == b.values.size() && !a.values.empty(), "far_field_distance: sample grids differ");
  double s = 0.0;
  for (std::size_t j = 0; j < a.values.size(); ++j) s += std::norm(a.values[j] - b.values[j]);
  return std::sqrt(s * 2.0 * pi / static_cast<double>(a.values.size()));
}

inline double far_field_rel_error(const FarField& approx, const FarField& exact) {
  return far_field_distance(approx, exact) / far_field_l2(exact);
}

// u_z(x) = e^{i k (d - x).z} u_0(x): far field of the scatterer translated by z.
inline FarField translate_far_field(const FarField& f, const Vec2& z, const Vec2& d) {
  FarField out = f;
  for (std::size_t j = 0; j < f.theta.size(); ++j) {
    Vec2 xh(std::cos(f.theta[j]), std::sin(f.theta[j]));
    out.values[j] *= std::exp(I * f.k * (d - xh).dot(z));
  }
  return out;
}

// Separation-of-variables solution for a centred conductive disk.
struct DiskSeries {
  double k = 1.0, R = 1.0;
  cplx k1{1.0}, eta{0.0};
  int nmax = 0;
  double theta_d = 0.0;
  std::vector<cplx> a, b;  // index n + nmax

  cplx an(int n) const { return std::abs(n) > nmax ? cplx(0.0) : a[static_cast<std::size_t>(n + nmax)]; }
  cplx bn(int n) const { return std::abs(n) > nmax ? cplx(0.0) : b[static_cast<std::size_t>(n + nmax)]; }

  cplx far_field(double theta) const {
    cplx s = 0.0;
    for (int n = -nmax; n <= nmax; ++n) s += bn(n) * i_pow(-n) * std::exp(I * (n * theta));
    return std::sqrt(2.0 / (pi * k)) * std::exp(-I * (pi / 4.0)) * s;
  }

  FarField far_field(const std::vector<double>& thetas) const {
    FarField f;
    f.k = k;
    f.theta = thetas;
    for (double t : thetas) f.values.push_back(far_field(t));
    return f;
  }

  cplx total_field(const Vec2& x) const {
    const double r = x.norm(), th = std::atan2(x.y(), x.x());
    cplx s = 0.0;
    if (r < R) {
      for (int n = -nmax; n <= nmax; ++n) s += an(n) * bessel_j(n, k1 * r) * std::exp(I * (n * th));
      return s;
    }
    for (int n = -nmax; n <= nmax; ++n) s += bn(n) * hankel1(n, k * r) * std::exp(I * (n * th));
    return s + std::exp(I * k * r * std::cos(th - theta_d));
  }
};

inline DiskSeries disk_series_forward(const ConductiveMedium& medium, const IncidentWave& inc) {
  medium.validate();
  const auto* disk = std::get_if<Disk>(&medium.domain);
  require(disk != nullptr, "disk_series_forward: medium must be a disk");
  require(disk->center.norm() == 0.0, "disk_series_forward: disk must be centred at the origin");
  require(medium.q_patches.empty(), "disk_series_forward: q must be constant");
  DiskSeries s;
  s.k = inc.k;
  s.R = disk->radius;
  s.k1 = inc.k * std::sqrt(medium.q);
  s.eta = medium.eta_at(0);
  s.theta_d = inc.theta_d();
  s.nmax = static_cast<int>(std::ceil(std::max(inc.k, std::abs(s.k1)) * s.R)) + 20;
  const double kR = inc.k * s.R;
  const cplx k1R = s.k1 * s.R;
  for (int n = -s.nmax; n <= s.nmax; ++n) {
    const cplx Jn = bessel_j(n, kR), Jp = bessel_j_prime(n, kR);
    const cplx Hn = hankel1(n, kR), Hp = hankel1_prime(n, kR);
    const cplx J1 = bessel_j(n, k1R), J1p = bessel_j_prime(n, k1R);
    const cplx ph = i_pow(n) * std::exp(-I * (n * s.theta_d));
    Eigen::Matrix2cd M;
    M << J1, -Hn, s.k1 * J1p, -(s.k * Hp + s.eta * Hn);
    Eigen::Vector2cd rhs(ph * Jn, ph * (s.k * Jp + s.eta * Jn));
    const double c0 = M.col(0).cwiseAbs().maxCoeff(), c1 = M.col(1).cwiseAbs().maxCoeff();
    if (c0 == 0.0 || std::abs(M.determinant()) <= 1e-13 * c0 * c1)
      throw NumericalError("disk_series_forward: mode " + std::to_string(n) + " is singular (transmission eigenvalue)");
    Eigen::Vector2cd ab = M.partialPivLu().solve(rhs);
    s.a.push_back(ab[0]);
    s.b.push_back(ab[1]);
  }
  return s;
}

struct RingNodes {
  std::vector<int> nodes;  // ordered by angle
  double theta0 = 0.0;
  double R = 0.0;
};

inline RingNodes ring_nodes(const TriMesh& mesh) {
  std::vector<int> ids;
  for (auto& e : mesh.boundary)
    if (e[2] == kRingTag) {
      ids.push_back(e[0]);
      ids.push_back(e[1]);
    }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  require(ids.size() >= 8, "ring_nodes: mesh has no DtN ring");
  auto ang = [&](int i) {
    double t = std::atan2(mesh.nodes[i].y(), mesh.nodes[i].x());
    return t < 0.0 ? t + 2.0 * pi : t;
  };
  std::sort(ids.begin(), ids.end(), [&](int a, int b) { return ang(a) < ang(b); });
  RingNodes r;
  r.nodes = ids;
  r.theta0 = ang(ids[0]);
  r.R = mesh.nodes[ids[0]].norm();
  const double step = 2.0 * pi / static_cast<double>(ids.size());
  for (std::size_t j = 0; j < ids.size(); ++j) {
    require(std::abs(mesh.nodes[ids[j]].norm() - r.R) < 1e-9 * r.R, "ring_nodes: ring nodes are not on one circle");
    require(std::abs(ang(ids[j]) - r.theta0 - step * static_cast<double>(j)) < 1e-9, "ring_nodes: ring is not uniformly sampled");
  }
  return r;
}

struct ForwardResult {
  CVec u;  // total field
  RingNodes ring_nodes;
  DtnRing ring;
  IncidentWave inc;

  std::vector<cplx> scattered_trace(const TriMesh& mesh) const {
    std::vector<cplx> t;
    for (int i : ring_nodes.nodes) t.push_back(u[i] - inc.value(mesh.nodes[i]));
    return t;
  }
  FarField far_field(const TriMesh& mesh) const {
    return far_field_from_ring(scattered_trace(mesh), ring_nodes.theta0, ring, inc.k);
  }
};

// Helmholtz operator on B_R without the conductive term: K - k^2 M_q - T_N, and the
// incident-wave load on the ring. The conductive term is -E(eta) on the interfaces.
struct ForwardSystem {
  SpMat base;
  CVec rhs;
  RingNodes ring_nodes;
  DtnRing ring;
  IncidentWave inc;

  SpMat conductive(const TriMesh& mesh, const std::function<cplx(int)>& eta) const {
    return assemble_edge_mass(mesh, mesh.interfaces, eta);
  }

  ForwardResult solve(const SpMat& E) const {
    SpMat A = base - E;
    A.makeCompressed();
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success)
      throw NumericalError("solve_forward: singular system; enlarge the ring radius or the truncation order");
    ForwardResult res{lu.solve(rhs), ring_nodes, ring, inc};
    if (!res.u.allFinite())
      throw NumericalError("solve_forward: singular system; enlarge the ring radius or the truncation order");
    return res;
  }
};

inline ForwardSystem forward_system(const ConductiveMedium& medium, const IncidentWave& inc, const TriMesh& mesh,
                                    const DtnRing& ring) {
  medium.validate();
  RingNodes rn = ring_nodes(mesh);
  require(std::abs(rn.R - ring.R) < 1e-9 * ring.R, "solve_forward: ring radius does not match the mesh");
  double qmax = 1.0;
  std::vector<cplx> qt(mesh.triangles.size(), cplx(1.0));
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
    if (mesh.region[t] == 1) {
      qt[t] = medium.q_at(mesh.centroid(t));
      qmax = std::max(qmax, std::abs(qt[t]));
    }
  require(mesh.max_edge() * inc.k * std::sqrt(qmax) <= 2.0 * pi / 10.0 * (1.0 + 1e-9),
          "solve_forward: mesh does not resolve the wavelength (need 10 nodes per wavelength)");
  for (auto& e : mesh.interfaces)
    require(e[2] >= 0 && e[2] < medium.edge_count(), "solve_forward: dangling interface tag");
  ForwardSystem fs;
  fs.base = assemble_stiffness(mesh) - inc.k * inc.k * assemble_mass(mesh, [&](std::size_t t) { return qt[t]; });

  const int M = static_cast<int>(rn.nodes.size());
  const double dth = 2.0 * pi / M;
  std::vector<cplx> kappa(2 * static_cast<std::size_t>(ring.N) + 1);
  std::vector<double> sig(kappa.size());
  for (int n = -ring.N; n <= ring.N; ++n) {
    kappa[static_cast<std::size_t>(n + ring.N)] = dtn_symbol(n, inc.k, ring.R);
    double x = 0.5 * n * dth;
    double sc = n == 0 ? 1.0 : std::sin(x) / x;
    sig[static_cast<std::size_t>(n + ring.N)] = sc * sc;
  }
  // T_ij depends on i - j only
  std::vector<cplx> trow(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) {
    cplx s = 0.0;
    for (int n = -ring.N; n <= ring.N; ++n) {
      double sg = sig[static_cast<std::size_t>(n + ring.N)];
      s += kappa[static_cast<std::size_t>(n + ring.N)] * sg * sg * std::exp(I * (n * m * dth));
    }
    trow[static_cast<std::size_t>(m)] = s * ring.R * dth * dth / (2.0 * pi);
  }
  std::vector<Triplet> trip;
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) trip.emplace_back(rn.nodes[i], rn.nodes[j], -trow[static_cast<std::size_t>((i - j + M) % M)]);
  SpMat T(fs.base.rows(), fs.base.cols());
  T.setFromTriplets(trip.begin(), trip.end());
  fs.base += T;

  fs.rhs = CVec::Zero(fs.base.rows());
  const double thd = inc.theta_d();
  const double kR = inc.k * ring.R;
  for (int n = -ring.N; n <= ring.N; ++n) {
    const cplx mode = (inc.k * bessel_j_prime(n, kR) - kappa[static_cast<std::size_t>(n + ring.N)] * bessel_j(n, kR)) *
                      i_pow(n) * std::exp(-I * (n * thd));
    const cplx w = mode * ring.R * dth * sig[static_cast<std::size_t>(n + ring.N)];
    for (int i = 0; i < M; ++i) fs.rhs[rn.nodes[i]] += w * std::exp(I * (n * (rn.theta0 + i * dth)));
  }
  fs.ring_nodes = rn;
  fs.ring = ring;
  fs.inc = inc;
  return fs;
}

// P1 FEM on B_R with the conductive transmission term on the scatterer boundary
// and the truncated DtN map on |x| = R.
inline ForwardResult solve_forward(const ConductiveMedium& medium, const IncidentWave& inc, const TriMesh& mesh,
                                   const DtnRing& ring) {
  ForwardSystem fs = forward_system(medium, inc, mesh, ring);
  return fs.solve(fs.conductive(mesh, [&](int tag) { return medium.eta_at(tag); }));
}

// Im of the ring integral of conj(u) du/dr, from the modal expansion of the trace.
inline double energy_flux(const TriMesh& mesh, const ForwardResult& r) {
  std::vector<cplx> tot, sc;
  for (int i : r.ring_nodes.nodes) tot.push_back(r.u[i]);
  sc = r.scattered_trace(mesh);
  auto ct = fourier_coeffs(tot, r.ring_nodes.theta0);
  auto cs = fourier_coeffs(sc, r.ring_nodes.theta0);
  const int M = static_cast<int>(tot.size());
  const double kR = r.inc.k * r.ring.R, thd = r.inc.theta_d();
  cplx s = 0.0;
  for (int n = -r.ring.N; n <= r.ring.N; ++n) {
    cplx du = r.inc.k * bessel_j_prime(n, kR) * i_pow(n) * std::exp(-I * (n * thd)) +
              dtn_symbol(n, r.inc.k, r.ring.R) * cs[static_cast<std::size_t>(mode_index(n, M))];
    s += std::conj(ct[static_cast<std::size_t>(mode_index(n, M))]) * du;
  }
  return (2.0 * pi * r.ring.R * s).imag();
}

struct NonvanishingReport {
  double min_average = 0.0;
  Vec2 at{0.0, 0.0};
  double rho = 0.0;
  bool admissible = false;
};

inline NonvanishingReport nonvanishing_check(const TriMesh& mesh, const CVec& u, const std::vector<Vec2>& probes,
                                             const std::vector<double>& radii, double threshold = 0.5) {
  require(!probes.empty(), "nonvanishing_check: no probe points");
  NonvanishingReport rep;
  rep.min_average = 1e300;
  for (auto& p : probes) {
    for (auto& b : ball_averages(mesh, u, CornerProbe{p, radii}, true)) {
      if (b.measure > 0.0 && b.value.real() < rep.min_average) {
        rep.min_average = b.value.real();
        rep.at = p;
        rep.rho = b.rho;
      }
    }
  }
  rep.admissible = rep.min_average > threshold;
  return rep;
}

struct PhysicalParams {
  double k;
  cplx eta;
};

inline PhysicalParams eta_from_physics(double omega_, double gamma, double mu0, double eps0) {
  require(omega_ >= 0.0 && gamma > 0.0 && mu0 > 0.0 && eps0 > 0.0, "eta_from_physics: parameters must be positive");
  return {omega_ * std::sqrt(eps0 * mu0), I * omega_ * gamma * mu0};
}

}  // namespace cwl
