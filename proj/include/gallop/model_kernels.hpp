#pragma once

// Scalar kernels of the galloping-buckling model, templated on the floating
// type so that extended-precision integrations share the same formulas.

#include <cmath>

namespace gallop::kernel {

// P(y) for y >= 0 in Horner form.
template <class R>
R poly_pos(R y) {
  return y * (R(2) / 15 + y * y * (R(1) / 3 + y * (R(-1) / 10 - y / 15)));
}

template <class R>
R poly_pos_prime(R y) {
  return R(2) / 15 + y * y * (R(1) + y * (R(-2) / 5 - y / 3));
}

template <class R>
R cf(R alpha) {
  const R y = 8 * alpha;
  return y >= 0 ? poly_pos(y) : -poly_pos(-y);
}

template <class R>
R cf_prime(R alpha) {
  using std::abs;
  return 8 * poly_pos_prime(8 * abs(alpha));
}

template <class R>
R aero_force(R xdot, R v, R p) {
  if (v == 0) return 0;
  return p * v * v * cf(xdot / v) / 2;
}

template <class R>
R aero_damping_slope(R xdot, R v, R p) {
  if (v == 0) return 0;
  return p * v * cf_prime(xdot / v) / 2;
}

template <class R>
R aero_velocity_slope(R xdot, R v, R p) {
  if (v == 0) return 0;
  const R a = xdot / v;
  return p * v * cf(a) - p * xdot * cf_prime(a) / 2;
}

template <class R>
R static_force(R x, R b, R e) {
  using std::cos, std::sin;
  return (1 + b) * (e + sin(x)) * cos(x) - sin(x);
}

template <class R>
R static_stiffness(R x, R b, R e) {
  using std::cos, std::sin;
  const R s = sin(x);
  const R c = cos(x);
  return (1 + b) * (c * c - (e + s) * s) - c;
}

}  // namespace gallop::kernel
