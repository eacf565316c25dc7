#pragma once

#include <algorithm>
#include <complex>
#include <vector>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include "cwl/fem.hpp"

namespace cwl {

struct GeneralizedEig {
  std::vector<cplx> lambda;
  std::vector<CVec> vectors;
};

// Dense QZ (LAPACK zggev). Infinite eigenvalues (beta ~ 0) are dropped.
inline GeneralizedEig dense_qz(Eigen::MatrixXcd A, Eigen::MatrixXcd B) {
  require(A.rows() == A.cols() && B.rows() == A.rows() && B.cols() == A.cols(), "dense_qz: shape mismatch");
  const lapack_int n = static_cast<lapack_int>(A.rows());
  std::vector<cplx> alpha(static_cast<std::size_t>(n)), beta(static_cast<std::size_t>(n));
  Eigen::MatrixXcd vr(n, n);
  cplx dummy;
  lapack_int info = LAPACKE_zggev(LAPACK_COL_MAJOR, 'N', 'V', n, A.data(), n, B.data(), n, alpha.data(), beta.data(),
                                  &dummy, 1, vr.data(), n);
  if (info != 0) throw NumericalError("dense_qz: zggev failed with info " + std::to_string(info));
  GeneralizedEig out;
  for (lapack_int j = 0; j < n; ++j) {
    auto a = alpha[static_cast<std::size_t>(j)], b = beta[static_cast<std::size_t>(j)];
    if (std::abs(b) <= 1e-13 * std::abs(a) || std::abs(b) == 0.0) continue;
    out.lambda.push_back(a / b);
    out.vectors.push_back(vr.col(j));
  }
  return out;
}

using SparseLUc = Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>;

// One step of inverse iteration at shift lambda, followed by the
// residual-minimising eigenvalue update lambda = (Bx)^H A x / |Bx|^2.
inline void inverse_iteration(const SpMat& A, const SpMat& B, cplx& lambda, CVec& x, int steps = 1) {
  for (int it = 0; it < steps; ++it) {
    SpMat S = A - lambda * B;
    SparseLUc lu;
    lu.compute(S);
    if (lu.info() != Eigen::Success) return;  // shift hit the eigenvalue exactly
    CVec y = lu.solve(B * x);
    if (!y.allFinite() || y.norm() == 0.0) return;
    x = y / y.norm();
    CVec bx = B * x;
    lambda = bx.dot(A * x) / bx.squaredNorm();
  }
}

inline double pencil_residual(const SpMat& A, const SpMat& B, cplx lambda, const CVec& x) {
  CVec ax = A * x, bx = B * x;
  return (ax - lambda * bx).norm() / (ax.norm() + std::abs(lambda) * bx.norm());
}

// Eigenvalues of A x = lambda B x nearest sigma by shift-invert Arnoldi.
inline GeneralizedEig shift_invert(const SpMat& A, const SpMat& B, cplx sigma, int nev, int krylov = 0) {
  const Eigen::Index n = A.rows();
  require(nev >= 1 && nev < n, "shift_invert: need 1 <= nev < dimension");
  int m = krylov > 0 ? krylov : std::max(2 * nev + 20, 40);
  m = static_cast<int>(std::min<Eigen::Index>(m, n));
  SparseLUc lu;
  SpMat S = A - sigma * B;
  lu.compute(S);
  if (lu.info() != Eigen::Success) throw NumericalError("shift_invert: factorisation failed; move the shift");
  Eigen::MatrixXcd V(n, m + 1);
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 1, m);
  CVec v0 = CVec::Ones(n);
  for (Eigen::Index i = 0; i < n; ++i) v0[i] += 0.01 * std::sin(1.0 + i);  // deterministic start
  V.col(0) = v0 / v0.norm();
  int steps = m;
  for (int j = 0; j < m; ++j) {
    CVec w = lu.solve(B * V.col(j));
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= j; ++i) {
        cplx h = V.col(i).dot(w);
        H(i, j) += h;
        w -= h * V.col(i);
      }
    double nrm = w.norm();
    H(j + 1, j) = nrm;
    if (nrm < 1e-14) {
      steps = j + 1;
      break;
    }
    V.col(j + 1) = w / nrm;
  }
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(H.topLeftCorner(steps, steps));
  std::vector<int> idx(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return std::abs(es.eigenvalues()[a]) > std::abs(es.eigenvalues()[b]); });
  GeneralizedEig out;
  for (int r = 0; r < std::min(nev, steps); ++r) {
    int i = idx[static_cast<std::size_t>(r)];
    cplx theta = es.eigenvalues()[i];
    if (std::abs(theta) == 0.0) continue;
    CVec x = V.leftCols(steps) * es.eigenvectors().col(i);
    x /= x.norm();
    out.lambda.push_back(sigma + 1.0 / theta);
    out.vectors.push_back(x);
  }
  return out;
}

}  // namespace cwl
