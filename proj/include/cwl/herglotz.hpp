#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "cwl/bessel.hpp"
#include "cwl/fem.hpp"
#include "cwl/field.hpp"

namespace cwl {

// Herglotz kernel g(phi) = sum_{|p|<=P} c_p e^{i p phi}; coeffs ordered p = -P..P.
struct FourierKernel {
  double k = 1.0;
  std::vector<cplx> coeffs{1.0};

  static FourierKernel make(double k, std::vector<cplx> coeffs) {
    require(k >= 0.0 && std::isfinite(k), "FourierKernel: k must be non-negative");
    require(coeffs.size() % 2 == 1, "FourierKernel: need 2P+1 coefficients");
    return {k, std::move(coeffs)};
  }
  int P() const { return static_cast<int>(coeffs.size() / 2); }
  cplx c(int p) const { return std::abs(p) > P() ? cplx(0.0) : coeffs[static_cast<std::size_t>(p + P())]; }
  cplx g(double phi) const {
    cplx s = 0.0;
    for (int p = -P(); p <= P(); ++p) s += c(p) * std::exp(I * (p * phi));
    return s;
  }
  double l2_norm() const {
    double s = 0.0;
    for (auto& v : coeffs) s += std::norm(v);
    return std::sqrt(2.0 * pi * s);
  }
};

inline int herglotz_nodes(const FourierKernel& g, const Vec2& x) {
  return std::max(64, 4 * (g.P() + static_cast<int>(std::ceil(g.k * x.norm()))) + 32);
}

// Trapezoidal rule for the integral over the unit circle of e^{i k xi.x} g(xi).
inline cplx eval_quadrature(const FourierKernel& g, const Vec2& x) {
  const int n = herglotz_nodes(g, x);
  cplx s = 0.0;
  for (int j = 0; j < n; ++j) {
    double phi = 2.0 * pi * j / n;
    s += std::exp(I * (g.k * (x.x() * std::cos(phi) + x.y() * std::sin(phi)))) * g.g(phi);
  }
  return s * (2.0 * pi / n);
}

inline CVec2 eval_quadrature_grad(const FourierKernel& g, const Vec2& x) {
  const int n = herglotz_nodes(g, x);
  CVec2 s(0.0, 0.0);
  for (int j = 0; j < n; ++j) {
    double phi = 2.0 * pi * j / n;
    Vec2 xi(std::cos(phi), std::sin(phi));
    cplx e = I * g.k * std::exp(I * (g.k * x.dot(xi))) * g.g(phi);
    s += CVec2(e * xi.x(), e * xi.y());
  }
  return s * (2.0 * pi / n);
}

inline cplx i_pow(int p) {
  static const cplx t[4] = {1.0, I, -1.0, -I};
  return t[((p % 4) + 4) % 4];
}

// Jacobi-Anger series truncated at |p| <= L.
inline cplx eval_jacobi_anger(const FourierKernel& g, const Vec2& x, int L) {
  require(L >= 0, "eval_jacobi_anger: L must be non-negative");
  const double r = x.norm(), th = std::atan2(x.y(), x.x());
  auto J = bessel_j_array(L, g.k * r);
  cplx s = 0.0;
  for (int p = -std::min(L, g.P()); p <= std::min(L, g.P()); ++p)
    s += g.c(p) * 2.0 * pi * i_pow(std::abs(p)) * J[static_cast<std::size_t>(std::abs(p))] * std::exp(I * (p * th));
  return s;
}

// Cosine moment of g.
inline cplx gamma_p(const FourierKernel& g, int p) {
  require(p >= 1, "gamma_p: p must be at least 1");
  return pi * (g.c(p) + g.c(-p));
}

inline AnalyticField herglotz_field(const FourierKernel& g) {
  return {[g](const Vec2& x) { return eval_quadrature(g, x); },
          [g](const Vec2& x) { return eval_quadrature_grad(g, x); },
          [g](const Vec2& x) { return -g.k * g.k * eval_quadrature(g, x); }};
}

inline double h1_misfit(const TriMesh& mesh, const CVec& a, const CVec& b) {
  require(a.size() == static_cast<Eigen::Index>(mesh.nodes.size()) && b.size() == a.size(),
          "h1_misfit: fields do not match the mesh");
  SpMat G = assemble_mass(mesh) + assemble_stiffness(mesh);
  CVec d = a - b;
  return std::sqrt(std::max(0.0, d.dot(G * d).real()));
}

struct FitReport {
  double residual_h1 = 0.0;
  double kernel_norm = 0.0;
  double reg_lambda = 0.0;
  int P = 0;
};

// Discrete H1 least squares fit of a Herglotz field to nodal data, Tikhonov
// regularised by reg_lambda * ||g||^2. A negative reg_lambda selects the default
// 1e-8 times the largest eigenvalue of the normal matrix.
inline std::pair<FourierKernel, FitReport> fit_kernel(const TriMesh& mesh, const CVec& target, double k, int P,
                                                      double reg_lambda = -1.0) {
  require(P >= 0, "fit_kernel: P must be non-negative");
  require(target.size() == static_cast<Eigen::Index>(mesh.nodes.size()), "fit_kernel: target does not match mesh");
  const int nb = 2 * P + 1;
  const Eigen::Index nn = static_cast<Eigen::Index>(mesh.nodes.size());
  Eigen::MatrixXcd B(nn, nb);
  for (Eigen::Index i = 0; i < nn; ++i) {
    const Vec2& x = mesh.nodes[static_cast<std::size_t>(i)];
    const double r = x.norm(), th = std::atan2(x.y(), x.x());
    auto J = bessel_j_array(P, k * r);
    for (int p = -P; p <= P; ++p)
      B(i, p + P) = 2.0 * pi * i_pow(std::abs(p)) * J[static_cast<std::size_t>(std::abs(p))] * std::exp(I * (p * th));
  }
  SpMat G = assemble_mass(mesh) + assemble_stiffness(mesh);
  Eigen::MatrixXcd GB = G * B;
  Eigen::MatrixXcd N = B.adjoint() * GB;
  N = 0.5 * (N + N.adjoint().eval());
  Eigen::VectorXcd rhs = GB.adjoint() * target;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(N);
  const double lmax = es.eigenvalues().maxCoeff(), lmin = es.eigenvalues().minCoeff();
  if (reg_lambda < 0.0) reg_lambda = 1e-8 * lmax;
  if (reg_lambda == 0.0 && lmin <= 1e-14 * lmax)
    throw NumericalError("fit_kernel: normal equations are singular; use reg_lambda > 0", 0.0, lmin / lmax);
  Eigen::MatrixXcd A = N + reg_lambda * 2.0 * pi * Eigen::MatrixXcd::Identity(nb, nb);
  Eigen::VectorXcd c = A.ldlt().solve(rhs);
  FourierKernel g = FourierKernel::make(k, std::vector<cplx>(c.data(), c.data() + nb));
  FitReport rep;
  rep.residual_h1 = h1_misfit(mesh, B * c, target);
  rep.kernel_norm = g.l2_norm();
  rep.reg_lambda = reg_lambda;
  rep.P = P;
  return {g, rep};
}

}  // namespace cwl
