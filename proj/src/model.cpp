#include "gallop/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gallop/errors.hpp"
#include "gallop/model_kernels.hpp"

namespace gallop {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ResidualTooLarge: return "ResidualTooLarge";
    case ErrorCode::NoSignChange: return "NoSignChange";
    case ErrorCode::NewtonDiverged: return "NewtonDiverged";
    case ErrorCode::NoReturn: return "NoReturn";
    case ErrorCode::ContinuationStall: return "ContinuationStall";
    case ErrorCode::FocusLost: return "FocusLost";
    case ErrorCode::BranchEscapedBeforeSection: return "BranchEscapedBeforeSection";
  }
  return "Unknown";
}

void ModelParams::validate() const {
  auto bad = [](double x) { return !std::isfinite(x); };
  if (bad(b) || bad(e) || bad(v) || bad(p) || bad(r)) {
    throw SolverError(ErrorCode::InvalidArgument, "model parameters must be finite");
  }
  if (p <= 0.0) throw SolverError(ErrorCode::InvalidArgument, "p must be positive");
  if (r < 0.0) throw SolverError(ErrorCode::InvalidArgument, "r must be non-negative");
  if (v < 0.0) throw SolverError(ErrorCode::InvalidArgument, "v must be non-negative");
}

double cf(double alpha) { return kernel::cf(alpha); }
double cf_prime(double alpha) { return kernel::cf_prime(alpha); }
double aero_force(double xdot, double v, double p) { return kernel::aero_force(xdot, v, p); }
double aero_damping_slope(double xdot, double v, double p) { return kernel::aero_damping_slope(xdot, v, p); }
double aero_velocity_slope(double xdot, double v, double p) { return kernel::aero_velocity_slope(xdot, v, p); }
double static_force(double x, double b, double e) { return kernel::static_force(x, b, e); }
double static_stiffness(double x, double b, double e) { return kernel::static_stiffness(x, b, e); }

State rhs(const State& s, const ModelParams& q) {
  return {s.xdot, -q.r * s.xdot - static_force(s.x, q.b, q.e) + aero_force(s.xdot, q.v, q.p)};
}

Mat2 jacobian(const State& s, const ModelParams& q) {
  return {0.0, 1.0, -static_stiffness(s.x, q.b, q.e), -q.r + aero_damping_slope(s.xdot, q.v, q.p)};
}

double GallopingField::divergence(const State& s) const {
  return -q_.r + aero_damping_slope(s.xdot, q_.v, q_.p);
}

double potential(double x, const ModelParams& q) {
  const double s = std::sin(x);
  return (1.0 + q.b) * (q.e * s + 0.5 * s * s) + std::cos(x);
}

State normal_form_rhs(const State& s, const NormalFormParams& n) {
  const double x = s.x;
  return {s.xdot, n.w * s.xdot + x * x * s.xdot + n.p_nf * x + x * x * x};
}

Mat2 normal_form_jacobian(const State& s, const NormalFormParams& n) {
  const double x = s.x;
  return {0.0, 1.0, 2.0 * x * s.xdot + n.p_nf + 3.0 * x * x, n.w + x * x};
}

NormalFormField::NormalFormField(const NormalFormParams& n, double escape_bound)
    : n_(n), bound_(escape_bound > 0.0 ? escape_bound : std::max(1.0, 3.0 * std::sqrt(std::abs(n.p_nf)))) {}

ModelParams nondimensionalize(const DimensionalParams& d) {
  if (!(d.m > 0.0) || !(d.L1 > 0.0) || !(d.L2 > 0.0)) {
    throw SolverError(ErrorCode::InvalidArgument, "m, L1 and L2 must be positive");
  }
  if (!(d.g > 0.0)) {
    throw SolverError(ErrorCode::InvalidArgument, "g must be positive to scale the load to one");
  }
  if (!(d.rho > 0.0) || !(d.a > 0.0)) {
    throw SolverError(ErrorCode::InvalidArgument, "rho and a must be positive");
  }
  if (d.k < 0.0 || d.V < 0.0 || d.r < 0.0) {
    throw SolverError(ErrorCode::InvalidArgument, "k, V and r must be non-negative");
  }
  const double A = d.g / d.L1;
  const double B = d.k * d.L2 * d.L2 / (d.m * d.L1 * d.L1);
  const double root_a = std::sqrt(A);
  ModelParams q;
  q.b = B / A - 1.0;
  q.e = d.y0 / d.L2;
  q.v = (d.V / d.L1) / root_a;
  q.p = d.rho * d.a * d.L1 / d.m;
  q.r = d.r / root_a;
  return q;
}

}  // namespace gallop
