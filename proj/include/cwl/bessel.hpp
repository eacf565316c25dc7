#pragma once

#include <cmath>
#include <vector>

#include "cwl/core.hpp"

namespace cwl {

// J_0..J_nmax at z by Miller's downward recurrence, normalised with
// J_0 + 2 sum J_2k = 1. Works for real or complex z of moderate imaginary part.
template <class T>
std::vector<T> bessel_j_array(int nmax, T z) {
  require(nmax >= 0, "bessel_j_array: nmax must be non-negative");
  std::vector<T> out(static_cast<std::size_t>(nmax) + 1, T(0));
  const double az = std::abs(z);
  if (az == 0.0) {
    out[0] = T(1);
    return out;
  }
  const double top = std::max<double>(nmax, az);
  int m = static_cast<int>(top + 30.0 + 4.0 * std::sqrt(top)) + 1;
  if (m % 2) ++m;
  T next(0), cur(1e-300), norm(0);
  for (int k = m; k >= 1; --k) {
    T prev = T(2.0 * k) / z * cur - next;  // J_{k-1}
    next = cur;
    cur = prev;
    if (k - 1 <= nmax) out[static_cast<std::size_t>(k - 1)] = cur;
    if ((k - 1) % 2 == 0 && k - 1 > 0) norm += 2.0 * cur;
    if (std::abs(cur) > 1e250) {
      const double sc = 1e-250;
      cur *= sc;
      next *= sc;
      norm *= sc;
      for (int j = k - 1; j <= nmax; ++j) out[static_cast<std::size_t>(j)] *= sc;
    }
  }
  norm += cur;
  for (auto& v : out) v /= norm;
  return out;
}

template <class T>
T bessel_j(int n, T z) {
  const int an = std::abs(n);
  T v = bessel_j_array(an, z)[static_cast<std::size_t>(an)];
  return (n < 0 && an % 2) ? -v : v;
}

template <class T>
T bessel_j_prime(int n, T z) {
  return 0.5 * (bessel_j(n - 1, z) - bessel_j(n + 1, z));
}

inline double bessel_y(int n, double t) {
  require(t > 0.0, "bessel_y: argument must be positive");
  const int an = std::abs(n);
  double v = std::cyl_neumann(static_cast<double>(an), t);
  return (n < 0 && an % 2) ? -v : v;
}

inline cplx hankel1(int n, double t) { return {bessel_j(n, t), bessel_y(n, t)}; }

inline cplx hankel1_prime(int n, double t) { return 0.5 * (hankel1(n - 1, t) - hankel1(n + 1, t)); }

// Spherical Bessel j_l. Power series for |t| <= 1, library routine beyond.
inline double spherical_bessel_j(int l, double t) {
  require(l >= 0, "spherical_bessel_j: order must be non-negative");
  if (std::abs(t) > 1.0) return std::sph_bessel(static_cast<unsigned>(l), t);
  double dfact = 1.0;
  for (int j = 1; j <= 2 * l + 1; j += 2) dfact *= j;
  double lead = std::pow(t, l) / dfact;
  double sum = 1.0, term = 1.0;
  for (int j = 1; j < 60; ++j) {
    term *= -t * t / (2.0 * j * (2.0 * l + 2.0 * j + 1.0));
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return lead * sum;
}

}  // namespace cwl
