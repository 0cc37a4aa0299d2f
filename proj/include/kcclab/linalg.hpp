// Minimal fixed-size linear algebra for the planar setting: 2-vectors, 2x2
// matrices and a closed-form 2x2 eigensolver.

#pragma once

#include <array>
#include <cmath>
#include <complex>

namespace kcclab {

struct Vec2 {
  double v1 = 0.0;
  double v2 = 0.0;

  double norm() const { return std::hypot(v1, v2); }
  double norm_inf() const { return std::max(std::abs(v1), std::abs(v2)); }

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.v1 + b.v1, a.v2 + b.v2}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.v1 - b.v1, a.v2 - b.v2}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.v1, s * a.v2}; }
};

struct Mat2 {
  double a11 = 0.0, a12 = 0.0;
  double a21 = 0.0, a22 = 0.0;

  static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

  double trace() const { return a11 + a22; }
  double det() const { return a11 * a22 - a12 * a21; }

  friend Mat2 operator*(const Mat2& a, const Mat2& b) {
    return {a.a11 * b.a11 + a.a12 * b.a21, a.a11 * b.a12 + a.a12 * b.a22,
            a.a21 * b.a11 + a.a22 * b.a21, a.a21 * b.a12 + a.a22 * b.a22};
  }
  friend Mat2 operator*(double s, const Mat2& a) {
    return {s * a.a11, s * a.a12, s * a.a21, s * a.a22};
  }
  friend Mat2 operator+(const Mat2& a, const Mat2& b) {
    return {a.a11 + b.a11, a.a12 + b.a12, a.a21 + b.a21, a.a22 + b.a22};
  }
  friend Mat2 operator-(const Mat2& a, const Mat2& b) {
    return {a.a11 - b.a11, a.a12 - b.a12, a.a21 - b.a21, a.a22 - b.a22};
  }
  friend Vec2 operator*(const Mat2& a, Vec2 v) {
    return {a.a11 * v.v1 + a.a12 * v.v2, a.a21 * v.v1 + a.a22 * v.v2};
  }

  double max_abs() const {
    return std::max(std::max(std::abs(a11), std::abs(a12)),
                    std::max(std::abs(a21), std::abs(a22)));
  }
};

using Eigenpair = std::array<std::complex<double>, 2>;

/// Eigenvalues of a general real 2x2 matrix by the quadratic formula.
/// The discriminant is formed as (a11-a22)^2 + 4 a12 a21, which avoids the
/// cancellation in tr^2 - 4 det; the larger real root is computed first and
/// the other recovered from the determinant.
inline Eigenpair eigenvalues(const Mat2& m) {
  const double tr = m.trace();
  const double det = m.det();
  const double disc = (m.a11 - m.a22) * (m.a11 - m.a22) + 4.0 * m.a12 * m.a21;
  if (disc >= 0.0) {
    const double root = std::sqrt(disc);
    const double q = (tr >= 0.0) ? (tr + root) / 2.0 : (tr - root) / 2.0;
    if (q == 0.0) return {std::complex<double>(0.0), std::complex<double>(0.0)};
    return {std::complex<double>(q), std::complex<double>(det / q)};
  }
  const double re = tr / 2.0;
  const double im = std::sqrt(-disc) / 2.0;
  return {std::complex<double>(re, im), std::complex<double>(re, -im)};
}

inline double max_real_eigenvalue(const Mat2& m) {
  const Eigenpair mu = eigenvalues(m);
  return std::max(mu[0].real(), mu[1].real());
}

}  // namespace kcclab
