#pragma once

// Parameter-space charts and ramped-velocity runs built on the lower-level
// modules: the ellipsoid unfolding around the galloping-buckling point, the
// normal-form slice, ramped runs with their envelope prediction, and the
// escape-outcome maps.

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gallop/connections.hpp"
#include "gallop/cycles.hpp"
#include "gallop/integrator.hpp"
#include "gallop/model.hpp"

namespace gallop {

// ---------------------------------------------------------------------------
// Ellipsoid chart

struct EllipsoidCenter {
  double v_h = 1.875;
  double b0 = 0.0;
  double e0 = 0.0;
  double p = 0.1;
  double r = 0.1;
};

/// v = v_h + R^2 cos(pi phi) cos(pi psi / 2), b = b0 + R sin(pi phi) cos(pi psi / 2),
/// e = e0 + R^3 sin(pi psi / 2).
ModelParams ellipsoid_point(double phi, double psi, double R, const EllipsoidCenter& c = {});

enum class ArcKind { Fold, Cusp, Hopf, Homoclinic, Heteroclinic, CyclicFold, SymmetryLine };

const char* to_string(ArcKind k);

struct ArcPoint {
  ArcKind kind = ArcKind::Fold;
  double phi = 0.0;
  double psi = 0.0;
  double bracket = 0.0;  ///< length of the final bracket in chart coordinates
  std::string label;     ///< connection name where relevant
};

struct EllipsoidCell {
  double phi = 0.0;
  double psi = 0.0;
  PortraitClass portrait;
  bool failed = false;
  std::string error;
};

struct EllipsoidConfig {
  double R = 0.2;
  EllipsoidCenter center;
  int n_phi = 181;
  int n_psi = 181;
  int workers = 1;
  PortraitOptions portrait = chart_portrait();
  bool refine_arcs = true;
  double arc_tol = 1e-8;  ///< bracket length along the neighbour segment, in chart units

  static PortraitOptions chart_portrait() {
    PortraitOptions o;
    o.detect_connections = false;
    return o;
  }
};

struct EllipsoidChart {
  double R = 0.2;
  EllipsoidCenter center;
  int n_phi = 0;
  int n_psi = 0;
  std::vector<EllipsoidCell> cells;  ///< row-major: index = j_psi * n_phi + i_phi
  std::vector<ArcPoint> arcs;

  const EllipsoidCell& at(int i_phi, int j_psi) const { return cells[static_cast<std::size_t>(j_psi) * n_phi + i_phi]; }
  double phi(int i) const { return n_phi > 1 ? -1.0 + 2.0 * i / (n_phi - 1) : 0.0; }
  double psi(int j) const { return n_psi > 1 ? -1.0 + 2.0 * j / (n_psi - 1) : 0.0; }
  int failures() const;
  std::vector<ArcPoint> arcs_of(ArcKind k) const;
};

/// Classifies every grid cell (in parallel), then refines the arcs between
/// neighbouring cells whose classes differ. Cell failures are recorded and
/// the scan continues.
EllipsoidChart ellipsoid_scan(const EllipsoidConfig& cfg);

/// Refined transitions between two chart points whose portraits differ.
std::vector<ArcPoint> refine_transition(double phi_a, double psi_a, double phi_b, double psi_b,
                                        const EllipsoidConfig& cfg);

/// Cells whose class differs from the mirror image of the cell at -psi.
/// Only meaningful for e0 = 0.
int chart_asymmetry(const EllipsoidChart& chart);

/// Fold of cycles next to a homoclinic arc point, found along the phi
/// transect through it: the thin band of two coexisting cycles is sampled on
/// `samples` points over `window` in phi on each side, and its edge away from
/// the homoclinic is bisected on the cycle count.
struct CyclicFoldTransect {
  bool found = false;
  ArcPoint fold;
  ArcPoint homoclinic;
  double v_fold = 0.0;         ///< velocity at the chart fold point
  double v_branch_fold = 0.0;  ///< fold of the velocity branch at the same (b, e)
};

CyclicFoldTransect cyclic_fold_transect(const ArcPoint& homoclinic, const EllipsoidConfig& cfg, double window = 0.02,
                                        int samples = 41);

void write_ellipsoid(const EllipsoidChart& chart, const std::string& stem, const std::string& header = {});

// ---------------------------------------------------------------------------
// Ramped velocity

enum class RampOutcome { EscapeLeft, EscapeRight, Captured };

const char* to_string(RampOutcome o);

struct RampConfig {
  double t_max = 5000.0;
  IntegratorConfig integ = ramp_integrator();
  double growth_factor = 10.0;  ///< jump-off when the envelope exceeds this times its post-Hopf minimum
  bool record = true;           ///< keep the full trajectory

  static IntegratorConfig ramp_integrator() {
    IntegratorConfig c;
    c.rel_tol = 1e-10;
    c.abs_tol = 1e-12;
    c.max_step = 0.25;
    return c;
  }
};

/// Amplitude |x - x_eq| at a turning point of x.
struct EnvelopeSample {
  double t = 0.0;
  double v = 0.0;
  double amplitude = 0.0;
};

struct RampResult {
  double v0 = 0.0;
  double gamma = 0.0;
  State init;
  double x_eq = 0.0;
  double v_hopf = 0.0;
  Trajectory trajectory;
  std::vector<EnvelopeSample> envelope;
  RampOutcome outcome = RampOutcome::Captured;
  double t_end = 0.0;
  /// v at jump-off; the escape velocity if growth was never registered.
  double v_jump = std::numeric_limits<double>::quiet_NaN();
  double tunnelling = std::numeric_limits<double>::quiet_NaN();  ///< v_jump - v_hopf
};

/// Integrates the ramped model from v = q0.v until |x| reaches pi/2 or t_max.
RampResult ramp_run(const ModelParams& q0, double gamma, const State& init, const RampConfig& cfg = {});

/// Central equilibrium displaced by dx: the standard ramp start.
State ramp_start(const ModelParams& q, double dx = -0.05);

struct EnvelopePrediction {
  double nu0 = 0.0;
  double d0 = 0.0;
  double gamma = 0.0;
  std::vector<double> nu;
  std::vector<double> c;  ///< real part of the central eigenvalue
  std::vector<double> d;  ///< d0 exp(int_nu0^nu c / gamma)
  bool linearised = false;
  ModelParams q;
  double x_eq = 0.0;
  double v_hopf = 0.0;
  double c_slope = 0.0;  ///< dc/dnu at the Hopf point

  /// ln d at any nu, by quadrature of c.
  double log_d(double nu) const;
};

/// Throws FocusLost if the central equilibrium is not a focus on [nu0, nu_end].
EnvelopePrediction envelope_predict(const ModelParams& q, double gamma, double nu0, double d0, double nu_end,
                                    int n = 201);

/// Same with c replaced by its linearisation at the Hopf point.
EnvelopePrediction envelope_predict_linear(const ModelParams& q, double gamma, double nu0, double d0, double nu_end,
                                           int n = 201);

/// Largest |ln(d_sim / d_pred)| over envelope samples with amplitude in
/// [amp_floor, amp_max] and v in the prediction range.
struct EnvelopeComparison {
  double max_log_error = 0.0;
  double max_log_excursion = 0.0;  ///< largest |ln(d_pred / d0)| over the compared samples
  int samples = 0;
};

EnvelopeComparison compare_envelope(const RampResult& run, const EnvelopePrediction& pred, double amp_floor,
                                    double amp_max);

// ---------------------------------------------------------------------------
// Outcome maps

/// RampConfig without trajectory recording, for grids.
RampConfig no_record();

struct BasinMap {
  std::string x_label;
  std::string y_label;
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<RampOutcome> outcomes;  ///< row-major: index = j * xs.size() + i
  std::vector<double> v_jump;

  RampOutcome at(std::size_t i, std::size_t j) const { return outcomes[j * xs.size() + i]; }
  std::vector<RampOutcome> row(std::size_t j) const;
  int count(RampOutcome o) const;
};

/// Outcomes over (v0, log2 gamma) from a fixed start state.
BasinMap basin_map_ramp(const ModelParams& q, std::span<const double> v0s, std::span<const double> log2_gammas,
                        const State& init, const RampConfig& cfg = no_record(), int workers = 1);

/// Outcomes over initial states at fixed v0 = q.v and gamma.
BasinMap basin_map_ic(const ModelParams& q, double gamma, std::span<const double> x0s, std::span<const double> xdot0s,
                      const RampConfig& cfg = no_record(), int workers = 1);

/// Number of outcome changes between consecutive entries.
int outcome_flips(std::span<const RampOutcome> seq);

/// Evenly spaced values including both ends.
std::vector<double> linspace(double a, double b, int n);

/// CSV, PGM raster (EscapeLeft black, EscapeRight white, Captured grey).
void write_basin(const BasinMap& map, const std::string& stem, const std::string& header = {});

// ---------------------------------------------------------------------------
// Normal-form slice

struct NormalFormChart {
  std::vector<double> ws;
  std::vector<double> ps;
  std::vector<PortraitClass> cells;  ///< row-major: index = j_p * ws.size() + i_w
  std::vector<std::string> errors;   ///< empty string for a resolved cell

  const PortraitClass& at(std::size_t i_w, std::size_t j_p) const { return cells[j_p * ws.size() + i_w]; }
  int failures() const;
};

NormalFormChart normal_form_chart(std::span<const double> ws, std::span<const double> ps,
                                  const PortraitOptions& opt = {}, int workers = 1);

/// Curve S on a p-sweep at fixed w: the saddles' heteroclinic connection,
/// located by bisection on the miss distance.
ConnectionPoint normal_form_connection(double w, double p_lo, double p_hi, double width = 1e-8);

void write_normal_form_chart(const NormalFormChart& chart, const std::string& stem, const std::string& header = {});

}  // namespace gallop
