#pragma once

#include <span>
#include <string>
#include <vector>

#include "gallop/linalg.hpp"
#include "gallop/model.hpp"

namespace gallop {

/// Center covers every marginal case: a real part within the degeneracy band
/// of zero, whether the pair is complex or real.
enum class EqClass { StableFocus, UnstableFocus, StableNode, UnstableNode, Saddle, Center };

const char* to_string(EqClass c);

inline constexpr double kDegeneracyBand = 1e-9;

struct Equilibrium {
  State state;
  EigenPair eigenvalues;
  EqClass cls = EqClass::Center;

  bool is_saddle() const { return cls == EqClass::Saddle; }
  bool is_stable() const { return cls == EqClass::StableFocus || cls == EqClass::StableNode; }
  bool is_focus() const { return eigenvalues.first.imag() != 0.0; }
  double max_real() const { return std::max(eigenvalues.first.real(), eigenvalues.second.real()); }
};

EqClass classify(const EigenPair& ev, double band = kDegeneracyBand);

/// All equilibria of the galloping-buckling model on (-pi/2, pi/2), sorted by x.
/// Sign scan on `subintervals` cells followed by Newton polishing.
std::vector<Equilibrium> find_equilibria(const ModelParams& q, int subintervals = 2000);

/// Same for any PlanarField on [search_lo, search_hi].
std::vector<Equilibrium> find_equilibria(const PlanarField& field, int subintervals = 2000);

/// Eigen-analysis of a point already known to be an equilibrium. Throws
/// ResidualTooLarge if |rhs| exceeds `residual_tol`.
Equilibrium eigen_classify(const State& s, const ModelParams& q, double residual_tol = 1e-10);
Equilibrium eigen_classify(const State& s, const PlanarField& field, double residual_tol = 1e-10);

/// The equilibrium bracketed by the two hilltop saddles (the middle of three),
/// or the only one if a single equilibrium exists.
const Equilibrium& central_equilibrium(const std::vector<Equilibrium>& eqs);

/// Closed-form Hopf velocity 2r / (p cf'(0)).
double hopf_velocity(const ModelParams& q);

/// Hopf velocity by bisection on the largest real part of the central
/// equilibrium's eigenvalues. Throws NoSignChange when no crossing exists.
double hopf_velocity_numeric(const ModelParams& q);

// ---------------------------------------------------------------------------
// Statics

struct StaticPoint {
  double b = 0.0;
  double x = 0.0;
  bool stable = false;
  int segment = 0;
};

struct StaticFold {
  double b = 0.0;
  double x = 0.0;
  int segment = 0;
};

/// Equilibrium paths of the static problem in the (b, x) plane at fixed e.
/// Segment 0 is the path through the central equilibrium at b_max, segment 1
/// the remote branch through the opposite hilltop (e != 0) or the
/// post-buckling branch switched onto at the pitchfork (e == 0).
struct StaticPath {
  double e = 0.0;
  std::vector<StaticPoint> points;
  std::vector<StaticFold> folds;
  std::vector<StaticFold> branch_points;
};

struct StaticPathOptions {
  double step = 0.01;
  double min_step = 1e-9;
  double max_step = 0.05;
  int max_points = 20000;
  double x_limit = 1.45;  ///< stop before the domain edge at pi/2
};

/// Pseudo-arclength continuation of static_force(x, b, e) = 0 in (b, x).
/// Folds (b turns) are polished on the bordered system {H = 0, H_x = 0}.
StaticPath static_path(double e, double b_min, double b_max, const StaticPathOptions& opt = {});

/// Fold of the static path starting from the central equilibrium at b_start;
/// throws NoConvergence if the path does not fold above b = 0.
StaticFold static_fold(double e, double b_start = 0.5);

/// Newton on the bordered system from a guess.
StaticFold polish_fold(double e, double b_guess, double x_guess);

struct SensitivityRow {
  double e = 0.0;
  double b_fold = 0.0;
  double x_fold = 0.0;
};

struct SensitivityResult {
  std::vector<SensitivityRow> rows;
  double exponent = 0.0;   ///< least-squares slope of log b_fold vs log |e|
  double prefactor = 0.0;  ///< exp(intercept)
};

/// Fold loads for a list of same-signed imperfections and the fitted power law.
SensitivityResult imperfection_sensitivity(std::span<const double> e_list);

void write_static_path_csv(const StaticPath& path, const std::string& file, const std::string& header = {});
void write_sensitivity_csv(const SensitivityResult& res, const std::string& file, const std::string& header = {});

}  // namespace gallop
