#pragma once

// Limit cycles of planar second-order fields via the Poincare section
// {xdot = 0, x'' < 0}, i.e. the upper turning points to the right of the
// central equilibrium. The section coordinate s is the turning-point x, which
// for a cycle is also its x_max.

#include <optional>
#include <string>
#include <vector>

#include "gallop/integrator.hpp"
#include "gallop/model.hpp"

namespace gallop {

struct ShootingConfig {
  IntegratorConfig integ = tight_integrator();
  double t_return_max = 400.0;  ///< a return slower than this is NoReturn
  double fd_step = 1e-7;        ///< one-sided difference on the section coordinate
  bool variational = false;     ///< derivative from the variational equations instead
  double newton_tol = 1e-10;
  int newton_max = 40;
  double marginal_band = 1e-6;  ///< |multiplier - 1| below this is marginal

  static IntegratorConfig tight_integrator() {
    IntegratorConfig c;
    c.rel_tol = 1e-12;
    c.abs_tol = 1e-14;
    c.max_step = 0.5;
    c.record = false;
    return c;
  }
};

enum class ReturnStatus { Returned, EscapedLeft, EscapedRight, NoCrossing };

struct ReturnResult {
  ReturnStatus status = ReturnStatus::NoCrossing;
  State state;               ///< next section point (valid when Returned)
  double time = 0.0;         ///< return time
  double x_min = 0.0;        ///< left turning point passed on the way
  double log_multiplier = 0.0;  ///< integral of div f over the return
  double slope = 0.0;        ///< dP/ds from the variational equations (if enabled)

  bool returned() const { return status == ReturnStatus::Returned; }
};

/// First-return map on the upper-turning-point section of a planar field.
class ReturnMap {
 public:
  ReturnMap(const PlanarField& field, double x_center, ShootingConfig cfg = {});

  /// Never throws on escape; inspect status.
  ReturnResult evaluate(double s) const;

  /// Throws SolverError(NoReturn) unless the orbit returns to the section.
  ReturnResult operator()(double s) const;

  /// dP/ds at s by the configured method.
  double slope(double s, const ReturnResult& at_s) const;

  const PlanarField& field() const { return field_; }
  double x_center() const { return x_center_; }
  const ShootingConfig& config() const { return cfg_; }

 private:
  const PlanarField& field_;
  double x_center_;
  ShootingConfig cfg_;
};

struct LimitCycle {
  State section_state;
  double period = 0.0;
  double multiplier = 1.0;     ///< exp of the divergence integral
  double multiplier_fd = 1.0;  ///< return-map slope (finite difference or variational)
  bool stable = false;
  bool marginal = false;
  double v = 0.0;
  double x_max = 0.0;
  double x_min = 0.0;
  double residual = 0.0;  ///< |P(s) - s| at the converged point
};

/// Poincare return of a section point of the galloping model. The point must
/// lie on xdot = 0 to the right of the central equilibrium.
ReturnResult poincare_return(const State& s, const ModelParams& q, const ShootingConfig& cfg = {});

/// Newton on P(s) - s from `guess`; throws NewtonDiverged or NoReturn.
LimitCycle find_cycle(const ReturnMap& map, double guess);
LimitCycle find_cycle(const State& guess, const ModelParams& q, const ShootingConfig& cfg = {});

/// Cycle from a sign-changing bracket [a, b] of P(s) - s (Brent).
LimitCycle find_cycle_bracketed(const ReturnMap& map, double a, double b);

/// Fills period, multipliers and stability from the converged section point.
LimitCycle describe_cycle(const ReturnMap& map, double s, double v);

enum class BranchOrigin { HopfOnset, Seeded };
/// Stalled: the step fell below min_step or the return map stopped being
/// resolved (slope and divergence multiplier disagree).
enum class BranchEnd { PeriodCap, HilltopReached, VelocityRange, MaxPoints, Stalled };

const char* to_string(BranchEnd e);

struct CycleBranch {
  std::vector<LimitCycle> cycles;
  std::vector<std::size_t> folds;   ///< indices i where v reverses between i and i+1
  std::vector<LimitCycle> fold_points;  ///< refined fold cycles
  BranchOrigin origin = BranchOrigin::Seeded;
  BranchEnd end = BranchEnd::MaxPoints;
  double hopf_v = 0.0;
  double x_eq = 0.0;
};

struct ContinuationConfig {
  double v_min = 0.0;
  double v_max = 10.0;
  double step = 0.01;
  double min_step = 1e-12;
  double max_step = 0.05;
  double period_cap = 200.0;
  double log_period_weight = 0.05;  ///< weight of ln T in the arclength metric
  int max_points = 4000;
  double hopf_offset = 1e-3;   ///< seed at v^H - offset
  double hopf_radius = 1e-3;   ///< initial amplitude guess
  double fold_multiplier_band = 0.1;  ///< v reversals with |multiplier - 1| above this are ignored
  double resolution_band = 0.5;  ///< relative slope/multiplier mismatch that ends the branch (Stalled)
  ShootingConfig shooting = branch_shooting();

  /// Branch points are integrated in long double; near the homoclinic the
  /// return map is resolved only as far as the integrator error allows.
  static ShootingConfig branch_shooting() {
    ShootingConfig s;
    s.integ.rel_tol = 1e-17;
    s.integ.abs_tol = 1e-19;
    s.integ.h_min = 1e-15;
    return s;
  }
};

/// Branch of cycles born at the Hopf point of the central equilibrium of the
/// galloping model at (b, e, p, r) of q. The first entry is the zero-amplitude
/// Hopf point itself. Continuation proceeds away from H with growing amplitude.
CycleBranch continue_branch_from_hopf(const ModelParams& q, const ContinuationConfig& cfg = {});

/// Branch through a known cycle at velocity start.v; `direction` +1 or -1
/// picks the initial sense of v.
CycleBranch continue_branch(const LimitCycle& start, const ModelParams& q, int direction,
                            const ContinuationConfig& cfg = {});

struct BranchRow {
  double v, x_max, x_min, period, multiplier;
  bool stable;
};

/// (v, x_max, x_min, period, multiplier, stable) per branch point.
std::vector<BranchRow> branch_extrema(const CycleBranch& branch);

void write_branch_csv(const CycleBranch& branch, const std::string& path, const std::string& header = {});

/// Samples one period of a cycle for phase-portrait overlays.
Trajectory sample_cycle(const PlanarField& field, const LimitCycle& c, double max_step = 0.05);

}  // namespace gallop
