#pragma once

// Galloping-buckling oscillator and the symmetric Hopf-pitchfork normal form.
//
// The structural model is the nondimensional propped cantilever with a
// quasi-static galloping force,
//
//   x'' + r x' + (1 + b)(e + sin x) cos x = sin x + 1/2 p v^2 Cf(x'/v),
//
// with the load parameter already scaled to one. Both vector fields are
// planar and second order (x' = xdot), which is what the rest of the library
// assumes through PlanarField.

#include <memory>
#include <numbers>

#include "gallop/linalg.hpp"

namespace gallop {

struct State {
  double x = 0.0;     ///< rotation of the rod [rad]
  double xdot = 0.0;  ///< angular rate [rad per unit nondimensional time]

  friend bool operator==(const State&, const State&) = default;
};

/// One nondimensional parameter point. b is the combined stiffness B - 1,
/// so b = 0 is the perfect-system pitchfork.
struct ModelParams {
  double b = 0.5;
  double e = 0.0;
  double v = 1.875;
  double p = 0.1;
  double r = 0.1;

  /// Throws SolverError(InvalidArgument) on p <= 0, r < 0, v < 0 or NaN.
  void validate() const;
};

struct NormalFormParams {
  double w = 0.0;
  double p_nf = 0.0;
};

/// Physical parameters of the rod-spring-prism model. `r` is the linear
/// structural damping rate added in the dimensionless-per-mass equation
/// (units 1/time); it is not derivable from the other fields.
struct DimensionalParams {
  double m = 1.0;
  double g = 9.81;
  double k = 0.0;
  double L1 = 1.0;
  double L2 = 1.0;
  double y0 = 0.0;
  double V = 0.0;
  double rho = 1.2;
  double a = 0.0;
  double r = 0.0;
};

inline constexpr double kHalfPi = std::numbers::pi / 2.0;

/// Aerodynamic lateral-force coefficient evaluated at alpha = x'/v:
/// Cf(alpha) = P(8 alpha), P(y) = 2y/15 + y^3/3 - y^4/10 - y^5/15 for y >= 0,
/// extended as an odd function.
double cf(double alpha);

/// dCf/dalpha. Equals 16/15 at the origin.
double cf_prime(double alpha);

/// The aerodynamic acceleration 1/2 p v^2 Cf(xdot/v); zero when v == 0.
double aero_force(double xdot, double v, double p);

/// d(aero_force)/d(xdot) = 1/2 p v cf'(xdot/v); zero when v == 0.
double aero_damping_slope(double xdot, double v, double p);

/// d(aero_force)/dv = p v Cf(xdot/v) - 1/2 p xdot cf'(xdot/v); zero when v == 0.
double aero_velocity_slope(double xdot, double v, double p);

/// Static restoring force (1+b)(e + sin x) cos x - sin x, i.e. dU/dx.
double static_force(double x, double b, double e);

/// d(static_force)/dx.
double static_stiffness(double x, double b, double e);

/// (x', x'') of the galloping-buckling model.
State rhs(const State& s, const ModelParams& q);

/// Exact Jacobian of rhs. Row 1 is always (0, 1).
Mat2 jacobian(const State& s, const ModelParams& q);

/// U(x) = (1+b)(e sin x + sin^2 x / 2) + cos x. No additive constant.
double potential(double x, const ModelParams& q);

/// (x', w x' + x^2 x' + p x + x^3).
State normal_form_rhs(const State& s, const NormalFormParams& n);
Mat2 normal_form_jacobian(const State& s, const NormalFormParams& n);

/// Reduces physical parameters to the nondimensional point with A = 1.
///
/// With A = g/L1, B = k L2^2/(m L1^2), e = y0/L2, v = V/L1, p = rho a L1/m,
/// time is rescaled by sqrt(A), giving b = B/A - 1, v -> v/sqrt(A),
/// r -> r/sqrt(A) and p unchanged. Throws on non-positive m, L1, L2, g.
ModelParams nondimensionalize(const DimensionalParams& d);

/// Autonomous planar field of second-order form x' = xdot, xdot' = F(x, xdot).
/// Equilibria therefore live on xdot = 0 at roots of F(x, 0).
class PlanarField {
 public:
  virtual ~PlanarField() = default;

  virtual State eval(const State& s) const = 0;
  virtual Mat2 jacobian(const State& s) const = 0;
  virtual double divergence(const State& s) const { return jacobian(s).trace(); }

  /// F(x, 0) and its x-derivative, used to locate and polish equilibria.
  virtual double static_accel(double x) const = 0;
  virtual double static_accel_dx(double x) const = 0;

  /// Trajectories with |x| >= escape_bound() have left the region of interest.
  virtual double escape_bound() const = 0;

  /// Interval on which equilibria are searched.
  virtual double search_lo() const { return -escape_bound(); }
  virtual double search_hi() const { return escape_bound(); }
};

class GallopingField final : public PlanarField {
 public:
  explicit GallopingField(const ModelParams& q) : q_(q) {}

  const ModelParams& params() const { return q_; }

  State eval(const State& s) const override { return rhs(s, q_); }
  Mat2 jacobian(const State& s) const override { return gallop::jacobian(s, q_); }
  double divergence(const State& s) const override;
  double static_accel(double x) const override { return -static_force(x, q_.b, q_.e); }
  double static_accel_dx(double x) const override { return -static_stiffness(x, q_.b, q_.e); }
  double escape_bound() const override { return kHalfPi; }

 private:
  ModelParams q_;
};

class NormalFormField final : public PlanarField {
 public:
  /// escape_bound <= 0 selects max(1, 3 sqrt|p_nf|).
  explicit NormalFormField(const NormalFormParams& n, double escape_bound = 0.0);

  const NormalFormParams& params() const { return n_; }

  State eval(const State& s) const override { return normal_form_rhs(s, n_); }
  Mat2 jacobian(const State& s) const override { return normal_form_jacobian(s, n_); }
  double static_accel(double x) const override { return n_.p_nf * x + x * x * x; }
  double static_accel_dx(double x) const override { return n_.p_nf + 3.0 * x * x; }
  double escape_bound() const override { return bound_; }

 private:
  NormalFormParams n_;
  double bound_;
};

}  // namespace gallop
