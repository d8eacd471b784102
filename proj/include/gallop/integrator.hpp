#pragma once

// Dormand-Prince 5(4) integration with continuous output and event location.
//
// The stepper is a template over the state dimension so that the cycle code
// can carry extra quadratures (divergence integral, variational equations)
// alongside the planar state. Event functions are located on the dense
// output, so event states are interpolated, not re-integrated.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "gallop/errors.hpp"
#include "gallop/model.hpp"

namespace gallop {

struct IntegratorConfig {
  double rel_tol = 1e-9;
  double abs_tol = 1e-11;
  double max_step = 1.0;
  double t_max = 1000.0;
  double h_min = 1e-12;  ///< relative step floor; below it StepSizeUnderflow
  long max_steps = 50'000'000;
  bool record = true;  ///< keep every accepted step in the trajectory

  void validate() const;
};

/// Tolerances used for regression outputs and for large grids.
inline IntegratorConfig golden_config() { return {}; }
inline IntegratorConfig grid_config() {
  IntegratorConfig c;
  c.rel_tol = 1e-6;
  c.abs_tol = 1e-9;
  return c;
}

enum class EventKind { SectionCross, Escape, Converged, TimeOut };

const char* to_string(EventKind kind);

template <std::size_t N, class Real = double>
using Vec = std::array<Real, N>;

/// Zero-crossing event on g(t, y). direction +1 fires on increasing g only,
/// -1 on decreasing only, 0 on both. A terminal event stops integration.
template <std::size_t N, class Real = double>
struct EventFn {
  EventKind kind = EventKind::SectionCross;
  std::function<Real(Real, const Vec<N, Real>&)> g;
  int direction = 0;
  bool terminal = false;
  int tag = 0;
};

/// Converged fires once the first two components have stayed within `tol`
/// (Euclidean) of `target` for `dwell` time units.
struct ConvergenceSpec {
  State target;
  double tol = 1e-6;
  double dwell = 1.0;
};

template <std::size_t N, class Real = double>
struct RawEvent {
  EventKind kind;
  Real t;
  Vec<N, Real> y;
  int direction;
  int tag;
};

template <std::size_t N, class Real = double>
struct RawSolution {
  std::vector<Real> t;
  std::vector<Vec<N, Real>> y;
  std::vector<RawEvent<N, Real>> events;
  Real t_end = 0;
  Vec<N, Real> y_end{};
  EventKind stop = EventKind::TimeOut;  ///< kind of the terminating event
  long steps = 0;
};

namespace detail {

// Dormand-Prince coefficients (Hairer, Norsett & Wanner, DOPRI5), exact in
// the working precision.
template <class R> inline constexpr R c2 = R(1) / R(5);
template <class R> inline constexpr R c3 = R(3) / R(10);
template <class R> inline constexpr R c4 = R(4) / R(5);
template <class R> inline constexpr R c5 = R(8) / R(9);
template <class R> inline constexpr R a21 = R(1) / R(5);
template <class R> inline constexpr R a31 = R(3) / R(40);
template <class R> inline constexpr R a32 = R(9) / R(40);
template <class R> inline constexpr R a41 = R(44) / R(45);
template <class R> inline constexpr R a42 = -R(56) / R(15);
template <class R> inline constexpr R a43 = R(32) / R(9);
template <class R> inline constexpr R a51 = R(19372) / R(6561);
template <class R> inline constexpr R a52 = -R(25360) / R(2187);
template <class R> inline constexpr R a53 = R(64448) / R(6561);
template <class R> inline constexpr R a54 = -R(212) / R(729);
template <class R> inline constexpr R a61 = R(9017) / R(3168);
template <class R> inline constexpr R a62 = -R(355) / R(33);
template <class R> inline constexpr R a63 = R(46732) / R(5247);
template <class R> inline constexpr R a64 = R(49) / R(176);
template <class R> inline constexpr R a65 = -R(5103) / R(18656);
template <class R> inline constexpr R a71 = R(35) / R(384);
template <class R> inline constexpr R a73 = R(500) / R(1113);
template <class R> inline constexpr R a74 = R(125) / R(192);
template <class R> inline constexpr R a75 = -R(2187) / R(6784);
template <class R> inline constexpr R a76 = R(11) / R(84);
template <class R> inline constexpr R e1 = R(71) / R(57600);
template <class R> inline constexpr R e3 = -R(71) / R(16695);
template <class R> inline constexpr R e4 = R(71) / R(1920);
template <class R> inline constexpr R e5 = -R(17253) / R(339200);
template <class R> inline constexpr R e6 = R(22) / R(525);
template <class R> inline constexpr R e7 = -R(1) / R(40);
template <class R> inline constexpr R d1 = -R(12715105075) / R(11282082432);
template <class R> inline constexpr R d3 = R(87487479700) / R(32700410799);
template <class R> inline constexpr R d4 = -R(10690763975) / R(1880347072);
template <class R> inline constexpr R d5 = R(701980252875) / R(199316789632);
template <class R> inline constexpr R d6 = -R(1453857185) / R(822651844);
template <class R> inline constexpr R d7 = R(69997945) / R(29380423);

template <std::size_t N, class Real = double>
struct DenseStep {
  Real t0 = 0, h = 0;
  Vec<N, Real> r1{}, r2{}, r3{}, r4{}, r5{};

  Vec<N, Real> at(Real t) const {
    const Real th = (t - t0) / h;
    const Real th1 = 1 - th;
    Vec<N, Real> out;
    for (std::size_t i = 0; i < N; ++i) {
      out[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
    }
    return out;
  }
};

template <std::size_t N, class Real>
bool all_finite(const Vec<N, Real>& y) {
  return std::all_of(y.begin(), y.end(), [](Real v) { return std::isfinite(v); });
}

// Brent root of phi on [a, b] given phi(a), phi(b) of opposite sign.
template <class Real, class Phi>
Real brent_root(Phi&& phi, Real a, Real b, Real fa, Real fb, Real ftol) {
  if (std::abs(fa) <= ftol) return a;
  if (std::abs(fb) <= ftol) return b;
  Real c = a, fc = fa, d = b - a, e = d;
  for (int iter = 0; iter < 200; ++iter) {
    if ((fb > 0) == (fc > 0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const Real tol = Real(4) * std::numeric_limits<Real>::epsilon() * std::abs(b);
    const Real m = Real(0.5) * (c - b);
    if (std::abs(fb) <= ftol || std::abs(m) <= tol) return b;
    if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
      Real p, q, r;
      const Real s = fb / fa;
      if (a == c) {
        p = Real(2.0) * m * s;
        q = Real(1.0) - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (Real(2.0) * m * q * (q - r) - (b - a) * (r - Real(1.0)));
        q = (q - Real(1.0)) * (r - Real(1.0)) * (s - Real(1.0));
      }
      if (p > 0) q = -q; else p = -p;
      if (Real(2.0) * p < std::min(Real(3.0) * m * q - std::abs(tol * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = m;
        e = m;
      }
    } else {
      d = m;
      e = m;
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > tol) ? d : std::copysign(tol, m);
    fb = phi(b);
  }
  return b;
}

}  // namespace detail

/// Integrates y' = f(t, y) from (t0, y0) for at most cfg.t_max time units.
/// `f` has signature void(Real t, const Vec<N, Real>& y, Vec<N, Real>& dydt).
/// Terminal events stop the run; otherwise it ends with a TimeOut event.
template <std::size_t N, class Real = double, class F>
RawSolution<N, Real> dopri5(F&& f, std::type_identity_t<Real> t0, const std::type_identity_t<Vec<N, Real>>& y0,
                            const IntegratorConfig& cfg,
                            std::type_identity_t<std::span<const EventFn<N, Real>>> events = {},
                      const std::optional<ConvergenceSpec>& converge = std::nullopt) {
  using namespace detail;
  if (!all_finite(y0)) throw SolverError(ErrorCode::NonFiniteState, "initial state is not finite");

  RawSolution<N, Real> sol;
  const Real t_end = t0 + cfg.t_max;
  Real t = t0;
  Vec<N, Real> y = y0;
  Vec<N, Real> k1, k2, k3, k4, k5, k6, k7, ytmp, y1;
  f(t, y, k1);

  auto scale = [&](std::size_t i, const Vec<N, Real>& a, const Vec<N, Real>& b) {
    return cfg.abs_tol + cfg.rel_tol * std::max(std::abs(a[i]), std::abs(b[i]));
  };

  // Initial step from the derivative magnitude.
  Real h;
  {
    Real d0 = 0, d1n = 0;
    for (std::size_t i = 0; i < N; ++i) {
      const Real sc = cfg.abs_tol + cfg.rel_tol * std::abs(y[i]);
      d0 += (y[i] / sc) * (y[i] / sc);
      d1n += (k1[i] / sc) * (k1[i] / sc);
    }
    d0 = std::sqrt(d0 / N);
    d1n = std::sqrt(d1n / N);
    h = (d0 < 1e-5 || d1n < 1e-5) ? Real(1e-6) : Real(0.01) * d0 / d1n;
    h = std::min({h, Real(cfg.max_step), Real(cfg.t_max)});
    h = std::max(h, Real(1e-10));
  }

  if (cfg.record) {
    sol.t.push_back(t);
    sol.y.push_back(y);
  }

  std::vector<Real> g_prev(events.size());
  for (std::size_t j = 0; j < events.size(); ++j) g_prev[j] = events[j].g(t, y);

  Real conv_since = std::numeric_limits<Real>::quiet_NaN();
  auto conv_dist = [&](const Vec<N, Real>& s) {
    return std::hypot(s[0] - converge->target.x, s[1] - converge->target.xdot);
  };
  if (converge && conv_dist(y) < converge->tol) conv_since = t;

  Real err_old = 1e-4;
  bool last_rejected = false;
  DenseStep<N, Real> dense;

  for (long step = 0;; ++step) {
    if (step >= cfg.max_steps) {
      throw SolverError(ErrorCode::StepSizeUnderflow, "step budget exhausted before t_max");
    }
    bool final_step = false;
    if (t + h >= t_end) {
      h = t_end - t;
      final_step = true;
    }
    if (h < cfg.h_min * std::max(Real(1), std::abs(t))) {
      throw SolverError(ErrorCode::StepSizeUnderflow,
                        "step size fell below floor at t = " + std::to_string(t));
    }

    for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + h * a21<Real> * k1[i];
    f(t + c2<Real> * h, ytmp, k2);
    for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + h * (a31<Real> * k1[i] + a32<Real> * k2[i]);
    f(t + c3<Real> * h, ytmp, k3);
    for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + h * (a41<Real> * k1[i] + a42<Real> * k2[i] + a43<Real> * k3[i]);
    f(t + c4<Real> * h, ytmp, k4);
    for (std::size_t i = 0; i < N; ++i)
      ytmp[i] = y[i] + h * (a51<Real> * k1[i] + a52<Real> * k2[i] + a53<Real> * k3[i] + a54<Real> * k4[i]);
    f(t + c5<Real> * h, ytmp, k5);
    for (std::size_t i = 0; i < N; ++i)
      ytmp[i] = y[i] + h * (a61<Real> * k1[i] + a62<Real> * k2[i] + a63<Real> * k3[i] + a64<Real> * k4[i] + a65<Real> * k5[i]);
    f(t + h, ytmp, k6);
    for (std::size_t i = 0; i < N; ++i)
      y1[i] = y[i] + h * (a71<Real> * k1[i] + a73<Real> * k3[i] + a74<Real> * k4[i] + a75<Real> * k5[i] + a76<Real> * k6[i]);
    f(t + h, y1, k7);

    Real err = 0.0;
    bool finite = all_finite(y1) && all_finite(k7);
    if (finite) {
      for (std::size_t i = 0; i < N; ++i) {
        const Real ei = h * (e1<Real> * k1[i] + e3<Real> * k3[i] + e4<Real> * k4[i] + e5<Real> * k5[i] + e6<Real> * k6[i] + e7<Real> * k7[i]);
        const Real r = ei / scale(i, y, y1);
        err += r * r;
      }
      err = std::sqrt(err / N);
      finite = std::isfinite(err);
    }
    if (!finite) {
      h *= 0.1;
      last_rejected = true;
      if (h < cfg.h_min * std::max(Real(1), std::abs(t))) {
        throw SolverError(ErrorCode::NonFiniteState, "state left the finite range at t = " + std::to_string(t));
      }
      continue;
    }

    if (err > 1.0) {
      const Real fac = std::max(Real(0.2), Real(0.9) * std::pow(err, Real(-0.2)));
      h *= last_rejected ? std::min(fac, Real(0.5)) : fac;
      last_rejected = true;
      continue;
    }

    // Accepted: build the continuous extension on [t, t + h].
    dense.t0 = t;
    dense.h = h;
    for (std::size_t i = 0; i < N; ++i) {
      const Real ydiff = y1[i] - y[i];
      const Real bspl = h * k1[i] - ydiff;
      dense.r1[i] = y[i];
      dense.r2[i] = ydiff;
      dense.r3[i] = bspl;
      dense.r4[i] = ydiff - h * k7[i] - bspl;
      dense.r5[i] = h * (d1<Real> * k1[i] + d3<Real> * k3[i] + d4<Real> * k4[i] + d5<Real> * k5[i] + d6<Real> * k6[i] + d7<Real> * k7[i]);
    }
    const Real t_new = t + h;

    // Events, earliest terminal one wins.
    Real t_stop = std::numeric_limits<Real>::infinity();
    std::optional<RawEvent<N, Real>> terminal;
    std::vector<RawEvent<N, Real>> found;
    std::vector<Real> g_new(events.size());
    for (std::size_t j = 0; j < events.size(); ++j) {
      const auto& ev = events[j];
      g_new[j] = ev.g(t_new, y1);
      const Real ga = g_prev[j], gb = g_new[j];
      const bool up = ga < 0.0 && gb >= 0.0;
      const bool down = ga > 0.0 && gb <= 0.0;
      if (!((up && ev.direction >= 0) || (down && ev.direction <= 0))) continue;
      auto phi = [&](Real tt) { return ev.g(tt, dense.at(tt)); };
      const Real tr = brent_root(phi, t, t_new, ga, gb, Real(1e-12));
      RawEvent<N, Real> re{ev.kind, tr, dense.at(tr), up ? 1 : -1, ev.tag};
      found.push_back(re);
      if (ev.terminal && tr < t_stop) {
        t_stop = tr;
        terminal = re;
      }
    }
    std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
    for (const auto& re : found) {
      if (re.t <= t_stop) sol.events.push_back(re);
    }
    if (terminal) {
      // Drop non-terminal events recorded after the terminal one (already filtered) and stop.
      if (cfg.record) {
        sol.t.push_back(terminal->t);
        sol.y.push_back(terminal->y);
      }
      sol.t_end = terminal->t;
      sol.y_end = terminal->y;
      sol.stop = terminal->kind;
      sol.steps = step + 1;
      return sol;
    }

    if (converge) {
      const Real dist = conv_dist(y1);
      if (dist < converge->tol) {
        if (std::isnan(conv_since)) conv_since = t_new;
        if (t_new - conv_since >= converge->dwell) {
          if (cfg.record) {
            sol.t.push_back(t_new);
            sol.y.push_back(y1);
          }
          sol.events.push_back({EventKind::Converged, t_new, y1, 0, 0});
          sol.t_end = t_new;
          sol.y_end = y1;
          sol.stop = EventKind::Converged;
          sol.steps = step + 1;
          return sol;
        }
      } else {
        conv_since = std::numeric_limits<Real>::quiet_NaN();
      }
    }

    t = t_new;
    y = y1;
    k1 = k7;
    g_prev = std::move(g_new);
    if (cfg.record) {
      sol.t.push_back(t);
      sol.y.push_back(y);
    }
    if (final_step) {
      sol.events.push_back({EventKind::TimeOut, t, y, 0, 0});
      sol.t_end = t;
      sol.y_end = y;
      sol.stop = EventKind::TimeOut;
      sol.steps = step + 1;
      return sol;
    }

    // Step-size update with a mild PI controller.
    const Real e_safe = std::max(err, Real(1e-10));
    Real fac = Real(0.9) * std::pow(e_safe, Real(-0.16)) * std::pow(err_old, Real(0.04));
    fac = std::clamp(fac, Real(0.2), Real(10));
    if (last_rejected) fac = std::min(fac, Real(1));
    err_old = std::max(err, Real(1e-4));
    last_rejected = false;
    h = std::min(h * fac, Real(cfg.max_step));
  }
}

// ---------------------------------------------------------------------------
// Planar-state front end.

struct Event {
  EventKind kind = EventKind::TimeOut;
  double t = 0.0;
  State state;
  int direction = 0;
  int tag = 0;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<State> states;
  std::vector<double> v;  ///< wind speed per sample; empty for autonomous runs
  std::vector<Event> events;

  const Event& last_event() const { return events.back(); }
  EventKind stop_kind() const { return events.empty() ? EventKind::TimeOut : events.back().kind; }
};

/// Event on a planar state. g receives (t, state).
struct EventSpec {
  EventKind kind = EventKind::SectionCross;
  std::function<double(double, const State&)> g;
  int direction = 0;
  bool terminal = false;
  int tag = 0;
};

/// Terminal events for |x| reaching `bound` outward; tag -1 is the left side,
/// tag +1 the right side.
std::vector<EventSpec> escape_events(double bound);

/// Section x' = 0 crossed in the given direction (non-terminal by default).
EventSpec section_xdot_zero(int direction, bool terminal = false, int tag = 0);

using AutonomousField = std::function<State(const State&)>;
using TimeDependentField = std::function<State(double, const State&)>;

Trajectory integrate(const AutonomousField& f, const State& s0, const IntegratorConfig& cfg,
                     std::span<const EventSpec> events = {},
                     const std::optional<ConvergenceSpec>& converge = std::nullopt);

Trajectory integrate(const PlanarField& field, const State& s0, const IntegratorConfig& cfg,
                     std::span<const EventSpec> events = {},
                     const std::optional<ConvergenceSpec>& converge = std::nullopt);

/// Same contracts as integrate for a field with explicit time dependence,
/// starting at t = t0. If `v_of_t` is given, v(t) is recorded per sample.
Trajectory integrate_nonautonomous(const TimeDependentField& f, const State& s0, const IntegratorConfig& cfg,
                                   std::span<const EventSpec> events = {}, double t0 = 0.0,
                                   const std::function<double(double)>& v_of_t = {});

/// Ramped galloping field: v(t) = v0 + gamma t with the rest of q fixed.
TimeDependentField ramped_field(const ModelParams& q, double v0, double gamma);

/// Writes t, x, xdot (and v when present) with a '#' header block.
void write_trajectory_csv(const Trajectory& traj, const std::string& path, const std::string& header = {});

}  // namespace gallop
