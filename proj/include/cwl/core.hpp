#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cwl {

using cplx = std::complex<double>;
using Vec2 = Eigen::Vector2d;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

// Precondition or schema violation.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation did not reach its tolerance. Carries the best estimate found.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, cplx best = 0.0, double err = 0.0)
      : std::runtime_error(what), best_estimate(best), error_estimate(err) {}
  cplx best_estimate;
  double error_estimate;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidInput(msg);
}

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline double orient(const Vec2& a, const Vec2& b, const Vec2& c) { return cross2(b - a, c - a); }

}  // namespace cwl
