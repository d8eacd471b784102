#pragma once

// Saddle connections and phase-portrait classification.
//
// Saddles are the two hilltop equilibria flanking the central well. A
// manifold branch is named by its saddle, its kind and the sign of the x
// component of its launch offset; the "inner" branches point into the well.
// Stable branches are integrated on the time-reversed field, so their
// trajectory time runs backwards.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gallop/cycles.hpp"
#include "gallop/equilibria.hpp"
#include "gallop/integrator.hpp"
#include "gallop/model.hpp"

namespace gallop {

enum class ManifoldKind { Unstable, Stable };

struct ManifoldOptions {
  double delta = 1e-6;  ///< launch offset along the eigenvector
  double t_max = 400.0;
  IntegratorConfig integ = golden_config();
  double xdot_bound = 10.0;  ///< reversed-time runs beyond |xdot| count as escaped
};

struct ManifoldBranch {
  Equilibrium saddle;
  ManifoldKind kind = ManifoldKind::Unstable;
  int side = 1;  ///< sign of the launch offset's x component
  Trajectory trajectory;
};

/// Field with time reversed: f -> -f.
class ReversedField final : public PlanarField {
 public:
  explicit ReversedField(const PlanarField& f) : f_(f) {}
  State eval(const State& s) const override {
    const State d = f_.eval(s);
    return {-d.x, -d.xdot};
  }
  Mat2 jacobian(const State& s) const override {
    const Mat2 j = f_.jacobian(s);
    return {-j.a11, -j.a12, -j.a21, -j.a22};
  }
  double divergence(const State& s) const override { return -f_.divergence(s); }
  double static_accel(double x) const override { return -f_.static_accel(x); }
  double static_accel_dx(double x) const override { return -f_.static_accel_dx(x); }
  double escape_bound() const override { return f_.escape_bound(); }
  double search_lo() const override { return f_.search_lo(); }
  double search_hi() const override { return f_.search_hi(); }

 private:
  const PlanarField& f_;
};

/// Integrates one branch of a saddle's invariant manifold until it escapes
/// or t_max. `extra` events are added to the escape events. Throws
/// InvalidArgument if `saddle` is not a saddle.
ManifoldBranch manifold_branch(const PlanarField& field, const Equilibrium& saddle, ManifoldKind kind, int side,
                               const ManifoldOptions& opt = {}, std::span<const EventSpec> extra = {});
ManifoldBranch manifold_branch(const ModelParams& q, const Equilibrium& saddle, ManifoldKind kind, int side,
                               const ManifoldOptions& opt = {});

enum class SaddleSide { Left, Right };
enum class ConnectionKind { Homoclinic, Heteroclinic };

const char* to_string(SaddleSide s);
const char* to_string(ConnectionKind k);

/// Unstable inner branch of `source` meeting the stable inner branch of `target`.
struct ConnectionSpec {
  SaddleSide source = SaddleSide::Left;
  SaddleSide target = SaddleSide::Left;

  ConnectionKind kind() const { return source == target ? ConnectionKind::Homoclinic : ConnectionKind::Heteroclinic; }
  std::string name() const;
};

/// Magnitude reported when a branch escapes before reaching the section.
inline constexpr double kEscapedMiss = 1e3;

/// Miss distance on the line x = x_c of the central equilibrium.
///
/// A left target's stable branch arrives through the lower half plane and a
/// right target's through the upper half, so the branches are compared at
/// their first crossing in that half. value = xdot_unstable - xdot_stable:
/// positive means the unstable branch passes above. If a branch escapes
/// first, value is +kEscapedMiss for an escape to the right and
/// -kEscapedMiss to the left, and `escaped` is set.
struct MissDistance {
  double value = 0.0;
  bool escaped = false;
  double xdot_unstable = 0.0;
  double xdot_stable = 0.0;
};

MissDistance miss_distance(const PlanarField& field, const ConnectionSpec& pair, const ManifoldOptions& opt = {});
MissDistance miss_distance(const ModelParams& q, const ConnectionSpec& pair, const ManifoldOptions& opt = {});

struct ConnectionPoint {
  ConnectionKind kind = ConnectionKind::Homoclinic;
  ConnectionSpec pair;
  double parameter_value = 0.0;  ///< bracket midpoint
  double bracket_width = 0.0;
  double lo = 0.0, hi = 0.0;
  double miss_lo = 0.0, miss_hi = 0.0;
};

using FieldFamily = std::function<std::unique_ptr<PlanarField>(double)>;
using ParamFamily = std::function<ModelParams(double)>;

/// Bisection on the sign of the miss distance over [lo, hi] to `width`.
/// Throws NoSignChange if the ends agree in sign.
ConnectionPoint find_connection(const FieldFamily& family, double lo, double hi, const ConnectionSpec& pair,
                                double width = 1e-8, const ManifoldOptions& opt = {});
ConnectionPoint find_connection(const ParamFamily& family, double lo, double hi, const ConnectionSpec& pair,
                                double width = 1e-8, const ManifoldOptions& opt = {});

// ---------------------------------------------------------------------------
// Portrait classification

enum class Escape { Bounded, LeftOnly, RightOnly, Indeterminate };

const char* to_string(Escape e);

struct PortraitOptions {
  ShootingConfig shooting = scan_shooting();
  int scan_points = 48;     ///< return-map samples across the well
  int max_cycles = 2;       ///< census cap
  double back_t_max = 600;  ///< reversed-time budget for the saddle branches
  ManifoldOptions manifold = {1e-6, 600.0, grid_config(), 10.0};
  bool detect_connections = true;  ///< evaluate miss distances to flag connections
  double connection_band = 1e-6;   ///< |miss| below this labels a connection
  double hopf_band = 1e-8;         ///< |Re lambda| of the centre below this labels Hopf

  static ShootingConfig scan_shooting() {
    ShootingConfig s;
    s.integ.rel_tol = 1e-10;
    s.integ.abs_tol = 1e-12;
    s.t_return_max = 300.0;
    return s;
  }
};

struct PortraitClass {
  int n_equilibria = 0;
  std::vector<EqClass> eq_classes;
  std::vector<LimitCycle> cycles;  ///< ordered by section coordinate, innermost first
  Escape escape = Escape::Bounded;
  /// Bifurcations the portrait sits on (Hopf, CyclicFold, homoclinic or
  /// heteroclinic names), empty for a generic portrait.
  std::vector<std::string> markers;
  bool cycles_capped = false;

  int n_cycles() const { return static_cast<int>(cycles.size()); }
  int n_stable_cycles() const;
  bool on_bifurcation() const { return !markers.empty(); }

  /// Compact symbol, e.g. "3[S,SF,S] c[u] LeftOnly". Markers are appended
  /// after a '|'.
  std::string symbol() const;
  /// Topological class without markers; equal codes mean equal portraits.
  std::string code() const;
  /// Image under x -> -x: equilibria reversed, escape sides and connection
  /// names swapped. Cycles are unchanged.
  PortraitClass mirrored() const;
};

/// Cycles of the field surrounding its central equilibrium (three-equilibrium
/// case only), from a section scan plus refinement near the escape boundary.
std::vector<LimitCycle> cycle_census(const PlanarField& field, const std::vector<Equilibrium>& eqs,
                                     const PortraitOptions& opt = {});

/// Escape class from the saddles' inner stable branches: each branch whose
/// reversed-time orbit stays in the well (it comes from the outermost
/// repeller) opens that side.
Escape escape_from_manifolds(const PlanarField& field, const std::vector<Equilibrium>& eqs,
                             const std::vector<LimitCycle>& cycles, const PortraitOptions& opt = {});

/// Escape class from direct probes: `n_probes` points a distance `eps`
/// outside the outermost repeller, integrated forward. With n_probes = 2 the
/// probes sit on either side of the repeller along x.
Escape escape_from_probes(const PlanarField& field, const std::vector<Equilibrium>& eqs,
                          const std::vector<LimitCycle>& cycles, int n_probes = 2, double eps = 1e-4,
                          double t_max = 2000.0);

PortraitClass classify_portrait(const PlanarField& field, const PortraitOptions& opt = {});
PortraitClass classify_portrait(const ModelParams& q, const PortraitOptions& opt = {});

/// Layers of a phase portrait: equilibria, the four inner/outer branches of
/// each saddle, and sampled cycles. Writes `<stem>.csv` and `<stem>.svg`.
struct PortraitExport {
  std::vector<Equilibrium> equilibria;
  std::vector<ManifoldBranch> manifolds;
  std::vector<Trajectory> cycles;
};

PortraitExport portrait_layers(const PlanarField& field, const PortraitClass& pc, const ManifoldOptions& opt = {});
void write_portrait(const PortraitExport& layers, const std::string& stem, const std::string& header = {});

}  // namespace gallop
