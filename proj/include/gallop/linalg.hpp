#pragma once

#include <array>
#include <cmath>
#include <complex>

namespace gallop {

/// Row-major 2x2 matrix.
struct Mat2 {
  double a11 = 0, a12 = 0, a21 = 0, a22 = 0;

  double trace() const { return a11 + a22; }
  double det() const { return a11 * a22 - a12 * a21; }
};

struct EigenPair {
  std::complex<double> first;
  std::complex<double> second;
};

/// Eigenvalues of a real 2x2 matrix, ordered by real part (then imaginary
/// part) ascending. Uses the trace/determinant form with a cancellation-free
/// root for the real case.
inline EigenPair eigenvalues(const Mat2& m) {
  const double tr = m.trace();
  const double det = m.det();
  const double half = 0.5 * tr;
  const double disc = half * half - det;
  if (disc >= 0.0) {
    const double sq = std::sqrt(disc);
    // q has the sign of tr so that tr/2 + sign*sq does not cancel.
    const double q = half + std::copysign(sq, half == 0.0 ? 1.0 : half);
    double l1 = q;
    double l2 = (q != 0.0) ? det / q : 0.0;
    if (l1 > l2) std::swap(l1, l2);
    return {{l1, 0.0}, {l2, 0.0}};
  }
  const double im = std::sqrt(-disc);
  return {{half, -im}, {half, im}};
}

/// Right eigenvector for a real eigenvalue lambda, normalized to unit length.
inline std::array<double, 2> real_eigenvector(const Mat2& m, double lambda) {
  // (a11 - l) u + a12 w = 0 ; a21 u + (a22 - l) w = 0. Pick the better row.
  std::array<double, 2> v;
  const double r1 = std::abs(m.a11 - lambda) + std::abs(m.a12);
  const double r2 = std::abs(m.a21) + std::abs(m.a22 - lambda);
  if (r1 >= r2) {
    v = {m.a12, lambda - m.a11};
  } else {
    v = {lambda - m.a22, m.a21};
  }
  const double n = std::hypot(v[0], v[1]);
  if (n == 0.0) return {1.0, 0.0};
  return {v[0] / n, v[1] / n};
}

}  // namespace gallop
