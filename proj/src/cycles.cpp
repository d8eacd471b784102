#include "gallop/cycles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "gallop/equilibria.hpp"
#include "gallop/errors.hpp"
#include "gallop/io.hpp"
#include "gallop/model_kernels.hpp"

namespace gallop {

const char* to_string(BranchEnd e) {
  switch (e) {
    case BranchEnd::PeriodCap: return "PeriodCap";
    case BranchEnd::HilltopReached: return "HilltopReached";
    case BranchEnd::VelocityRange: return "VelocityRange";
    case BranchEnd::MaxPoints: return "MaxPoints";
    case BranchEnd::Stalled: return "Stalled";
  }
  return "?";
}

ReturnMap::ReturnMap(const PlanarField& field, double x_center, ShootingConfig cfg)
    : field_(field), x_center_(x_center), cfg_(std::move(cfg)) {}

namespace {

template <std::size_t N, class Real = double>
std::vector<EventFn<N, Real>> return_events(Real bound) {
  using V = Vec<N, Real>;
  std::vector<EventFn<N, Real>> ev(4);
  ev[0].kind = EventKind::SectionCross;
  ev[0].g = [](Real, const V& y) { return y[1]; };
  ev[0].direction = -1;
  ev[0].terminal = true;
  ev[0].tag = 0;
  ev[1].kind = EventKind::SectionCross;
  ev[1].g = [](Real, const V& y) { return y[1]; };
  ev[1].direction = +1;
  ev[1].tag = 1;
  ev[2].kind = EventKind::Escape;
  ev[2].g = [bound](Real, const V& y) { return y[0] + bound; };
  ev[2].direction = -1;
  ev[2].terminal = true;
  ev[2].tag = -1;
  ev[3].kind = EventKind::Escape;
  ev[3].g = [bound](Real, const V& y) { return y[0] - bound; };
  ev[3].direction = +1;
  ev[3].terminal = true;
  ev[3].tag = +1;
  return ev;
}

template <std::size_t N, class Real>
ReturnResult finish_return(const RawSolution<N, Real>& sol, double x_center) {
  ReturnResult r;
  r.time = double(sol.t_end);
  r.state = {double(sol.y_end[0]), double(sol.y_end[1])};
  r.log_multiplier = double(sol.y_end[2]);
  r.x_min = double(sol.y_end[0]);
  for (const auto& e : sol.events) {
    if (e.kind == EventKind::SectionCross && e.tag == 1) {
      r.x_min = double(e.y[0]);
      break;
    }
  }
  if (sol.stop == EventKind::Escape) {
    r.status = sol.y_end[0] < 0.0 ? ReturnStatus::EscapedLeft : ReturnStatus::EscapedRight;
  } else if (sol.stop == EventKind::SectionCross && sol.y_end[0] > x_center) {
    r.status = ReturnStatus::Returned;
    r.state.xdot = 0.0;
  } else {
    r.status = ReturnStatus::NoCrossing;
  }
  return r;
}

}  // namespace

ReturnResult ReturnMap::evaluate(double s) const {
  IntegratorConfig ic = cfg_.integ;
  ic.t_max = cfg_.t_return_max;
  ic.record = false;
  const double bound = field_.escape_bound();
  if (!cfg_.variational) {
    auto f = [this](double, const Vec<3>& y, Vec<3>& dy) {
      const State st{y[0], y[1]};
      const State d = field_.eval(st);
      dy[0] = d.x;
      dy[1] = d.xdot;
      dy[2] = field_.divergence(st);
    };
    const auto ev = return_events<3>(bound);
    return finish_return(dopri5<3>(f, 0.0, Vec<3>{s, 0.0, 0.0}, ic, ev), x_center_);
  }
  auto f = [this](double, const Vec<7>& y, Vec<7>& dy) {
    const State st{y[0], y[1]};
    const State d = field_.eval(st);
    const Mat2 J = field_.jacobian(st);
    dy[0] = d.x;
    dy[1] = d.xdot;
    dy[2] = J.trace();
    // Phi' = J Phi, Phi stored row-major in y[3..6].
    dy[3] = J.a11 * y[3] + J.a12 * y[5];
    dy[4] = J.a11 * y[4] + J.a12 * y[6];
    dy[5] = J.a21 * y[3] + J.a22 * y[5];
    dy[6] = J.a21 * y[4] + J.a22 * y[6];
  };
  const auto ev = return_events<7>(bound);
  const auto sol = dopri5<7>(f, 0.0, Vec<7>{s, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0}, ic, ev);
  ReturnResult r = finish_return(sol, x_center_);
  // On the section xdot = 0 the time correction drops out: dP/ds = Phi_11.
  r.slope = sol.y_end[3];
  return r;
}

ReturnResult ReturnMap::operator()(double s) const {
  ReturnResult r = evaluate(s);
  if (!r.returned()) {
    const char* why = r.status == ReturnStatus::EscapedLeft    ? "escaped left"
                      : r.status == ReturnStatus::EscapedRight ? "escaped right"
                                                               : "no section crossing before t_max";
    throw SolverError(ErrorCode::NoReturn, std::string("from s = ") + io::fmt(s) + ": " + why);
  }
  return r;
}

double ReturnMap::slope(double s, const ReturnResult& at_s) const {
  if (cfg_.variational) return at_s.slope;
  const double h = cfg_.fd_step;
  ReturnResult r = evaluate(s + h);
  if (r.returned()) return (r.state.x - at_s.state.x) / h;
  r = evaluate(s - h);
  if (r.returned()) return (at_s.state.x - r.state.x) / h;
  throw SolverError(ErrorCode::NoReturn, "return-map slope undefined at s = " + io::fmt(s));
}

LimitCycle describe_cycle(const ReturnMap& map, double s, double v) {
  const ReturnResult r = map(s);
  LimitCycle c;
  c.section_state = {s, 0.0};
  c.period = r.time;
  c.multiplier = std::exp(r.log_multiplier);
  c.multiplier_fd = map.slope(s, r);
  c.stable = std::abs(c.multiplier) < 1.0;
  c.marginal = std::abs(c.multiplier - 1.0) < map.config().marginal_band;
  c.v = v;
  c.x_max = s;
  c.x_min = r.x_min;
  c.residual = std::abs(r.state.x - s);
  return c;
}

namespace {

double field_v(const PlanarField& f) {
  if (const auto* g = dynamic_cast<const GallopingField*>(&f)) return g->params().v;
  return 0.0;
}

}  // namespace

LimitCycle find_cycle(const ReturnMap& map, double guess) {
  const auto& cfg = map.config();
  double s = guess;
  ReturnResult r = map(s);
  double G = r.state.x - s;
  for (int it = 0; it < cfg.newton_max; ++it) {
    if (std::abs(G) < cfg.newton_tol) return describe_cycle(map, s, field_v(map.field()));
    const double dG = map.slope(s, r) - 1.0;
    if (dG == 0.0) break;
    double step = -G / dG;
    bool accepted = false;
    for (int half = 0; half < 30; ++half) {
      const double sn = s + step;
      if (sn > map.x_center()) {
        ReturnResult rn = map.evaluate(sn);
        if (rn.returned()) {
          const double Gn = rn.state.x - sn;
          if (std::abs(Gn) < std::abs(G) || half > 4) {
            s = sn;
            r = rn;
            G = Gn;
            accepted = true;
            break;
          }
        }
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  if (std::abs(G) < cfg.newton_tol) return describe_cycle(map, s, field_v(map.field()));
  throw SolverError(ErrorCode::NewtonDiverged,
                    "cycle Newton stalled at s = " + io::fmt(s) + ", residual " + io::fmt(G));
}

LimitCycle find_cycle_bracketed(const ReturnMap& map, double a, double b) {
  auto G = [&](double s) { return map(s).state.x - s; };
  const double ga = G(a), gb = G(b);
  if ((ga < 0.0) == (gb < 0.0)) {
    throw SolverError(ErrorCode::NoSignChange, "return map does not bracket a cycle");
  }
  const double s = detail::brent_root(G, a, b, ga, gb, 0.1 * map.config().newton_tol);
  return describe_cycle(map, s, field_v(map.field()));
}

ReturnResult poincare_return(const State& s, const ModelParams& q, const ShootingConfig& cfg) {
  const GallopingField field(q);
  const auto eqs = find_equilibria(q);
  const ReturnMap map(field, central_equilibrium(eqs).state.x, cfg);
  return map(s.x);
}

LimitCycle find_cycle(const State& guess, const ModelParams& q, const ShootingConfig& cfg) {
  const GallopingField field(q);
  const auto eqs = find_equilibria(q);
  const ReturnMap map(field, central_equilibrium(eqs).state.x, cfg);
  return find_cycle(map, guess.x);
}

// ---------------------------------------------------------------------------
// Continuation in (s, v).

namespace {

// The branch is computed in extended precision: near the homoclinic the
// cycle's velocity differs from the connection's by less than a double ulp
// long before the period has grown large.
using Real = long double;

struct BranchEval {
  Real G = 0, T = 0;
  Real Gs = 0, Gv = 0, Ts = 0, Tv = 0;
  ReturnResult r;
};

class BranchProblem {
 public:
  BranchProblem(const ModelParams& q, double x_center, const ShootingConfig& sc)
      : q_(q), xc_(x_center), sc_(sc) {}

  // Return plus exact derivatives: variational equations in s and the
  // parameter sensitivity in v, integrated alongside the orbit.
  std::optional<BranchEval> full(Real s, Real v) const {
    if (!(s > xc_) || v < 0) return std::nullopt;
    const Real b = q_.b, e = q_.e, p = q_.p, r = q_.r;
    auto accel = [&](Real x, Real xd) {
      return -r * xd - kernel::static_force(x, b, e) + kernel::aero_force(xd, v, p);
    };
    auto f = [&](Real, const Vec<9, Real>& y, Vec<9, Real>& dy) {
      const Real a21 = -kernel::static_stiffness(y[0], b, e);
      const Real a22 = -r + kernel::aero_damping_slope(y[1], v, p);
      dy[0] = y[1];
      dy[1] = accel(y[0], y[1]);
      dy[2] = a22;
      dy[3] = y[5];
      dy[4] = y[6];
      dy[5] = a21 * y[3] + a22 * y[5];
      dy[6] = a21 * y[4] + a22 * y[6];
      dy[7] = y[8];
      dy[8] = a21 * y[7] + a22 * y[8] + kernel::aero_velocity_slope(y[1], v, p);
    };
    IntegratorConfig ic = sc_.integ;
    ic.t_max = sc_.t_return_max;
    ic.record = false;
    const auto ev = return_events<9, Real>(Real(kHalfPi));
    const auto sol = dopri5<9, Real>(f, 0, Vec<9, Real>{s, 0, 0, 1, 0, 0, 1, 0, 0}, ic, ev);
    BranchEval out;
    out.r = finish_return(sol, xc_);
    if (!out.r.returned()) return std::nullopt;
    const Real acc = accel(sol.y_end[0], 0);
    if (acc == 0) return std::nullopt;
    out.G = sol.y_end[0] - s;
    out.T = sol.t_end;
    out.Gs = sol.y_end[3] - 1;
    out.Ts = -sol.y_end[5] / acc;
    out.Gv = sol.y_end[7];
    out.Tv = -sol.y_end[8] / acc;
    return out;
  }

 private:
  ModelParams q_;
  double xc_;
  ShootingConfig sc_;
};

struct Point {
  Real s, v;
  Real ts, tv;  // unit tangent in (s, v)
  BranchEval ev;
};

LimitCycle cycle_of(const Point& p, double band) {
  LimitCycle c;
  c.section_state = {double(p.s), 0.0};
  c.period = double(p.ev.T);
  c.multiplier = std::exp(p.ev.r.log_multiplier);
  c.multiplier_fd = double(p.ev.Gs + 1);
  c.stable = std::abs(c.multiplier) < 1.0;
  c.marginal = std::abs(c.multiplier - 1.0) < band;
  c.v = double(p.v);
  c.x_max = double(p.s);
  c.x_min = p.ev.r.x_min;
  c.residual = double(std::abs(p.ev.G));
  return c;
}

void tangent(const BranchEval& e, Real ref_s, Real ref_v, Real& ts, Real& tv) {
  ts = e.Gv;
  tv = -e.Gs;
  const Real n = std::hypot(ts, tv);
  ts /= n;
  tv /= n;
  if (ts * ref_s + tv * ref_v < 0) {
    ts = -ts;
    tv = -tv;
  }
}

// One predictor-corrector step of length h from p. Returns nullopt on failure.
std::optional<Point> corrector_step(const BranchProblem& prob, const Point& p, Real h, double tol) {
  const Real sp = p.s + h * p.ts;
  const Real vp = p.v + h * p.tv;
  Real s = sp, v = vp;
  for (int it = 0; it < 8; ++it) {
    const auto e = prob.full(s, v);
    if (!e) return std::nullopt;
    const Real f1 = e->G;
    const Real f2 = p.ts * (s - sp) + p.tv * (v - vp);
    // Near a homoclinic G_v grows without bound; G cannot be resolved below
    // the rounding of (s, v) times its gradient.
    const Real floor = 16 * std::numeric_limits<Real>::epsilon() *
                         (std::abs(s * e->Gs) + std::abs(v * e->Gv));
    if (std::abs(f1) < std::max(Real(tol), floor) && std::abs(f2) < Real(1e-15)) {
      Point out;
      out.s = s;
      out.v = v;
      out.ev = *e;
      tangent(*e, p.ts, p.tv, out.ts, out.tv);
      return out;
    }
    const Real det = e->Gs * p.tv - e->Gv * p.ts;
    if (det == 0 || !std::isfinite(det)) return std::nullopt;
    const Real ds = (-f1 * p.tv + e->Gv * f2) / det;
    const Real dv = (-e->Gs * f2 + p.ts * f1) / det;
    s += ds;
    v += dv;
    if (std::hypot(s - sp, v - vp) > 2.0 * std::abs(h) + 1e-6) return std::nullopt;
  }
  return std::nullopt;
}

Real arclength_factor(const Point& p, Real weight) {
  const Real dlnT = (p.ev.Ts * p.ts + p.ev.Tv * p.tv) / p.ev.T;
  return std::sqrt(1.0 + weight * weight * dlnT * dlnT);
}

CycleBranch run_continuation(const BranchProblem& prob, Point p, double x_left, double x_right,
                             const ContinuationConfig& cfg, CycleBranch branch) {
  const double tol = cfg.shooting.newton_tol;
  const double band = cfg.shooting.marginal_band;
  Real h = cfg.step;
  branch.cycles.push_back(cycle_of(p, band));

  auto near_hill = [&](const LimitCycle& c) {
    return c.x_max > x_right - 1e-11 || c.x_min < x_left + 1e-11;
  };

  int stagnant = 0;
  for (int n = 0; n < cfg.max_points; ++n) {
    std::optional<Point> next;
    while (!next) {
      if (h < cfg.min_step) {
        const LimitCycle& last = branch.cycles.back();
        if (last.period > 0.25 * cfg.period_cap || near_hill(last)) {
          branch.end = BranchEnd::Stalled;
          return branch;
        }
        throw SolverError(ErrorCode::ContinuationStall,
                          "cycle continuation stalled at v = " + io::fmt(p.v) + ", s = " + io::fmt(p.s));
      }
      const Real heff = h / arclength_factor(p, cfg.log_period_weight);
      next = corrector_step(prob, p, heff, tol);
      if (next && (next->ts * p.ts + next->tv * p.tv) < std::cos(0.2)) next.reset();
      if (!next) h *= 0.5;
    }

    // A cyclic fold has multiplier 1; a v reversal elsewhere is rounding noise
    // on a branch that has gone vertical in v (homoclinic approach).
    const bool fold = (next->tv > 0.0) != (p.tv > 0.0) &&
                      std::abs(std::exp(next->ev.r.log_multiplier) - 1.0) < cfg.fold_multiplier_band;
    if (fold) {
      // Bisect on the predictor length for the point where the tangent's v
      // component vanishes.
      Real lo = 0, hi = h / arclength_factor(p, cfg.log_period_weight);
      Point best = *next;
      for (int it = 0; it < 40 && hi - lo > 1e-10; ++it) {
        const Real mid = 0.5 * (lo + hi);
        const auto m = corrector_step(prob, p, mid, tol);
        if (!m) break;
        best = *m;
        ((m->tv > 0.0) == (p.tv > 0.0) ? lo : hi) = mid;
      }
      branch.folds.push_back(branch.cycles.size() - 1);
      branch.fold_points.push_back(cycle_of(best, band));
    }

    // The return-map slope and the divergence integral are the same
    // multiplier; once they part the map is no longer resolved.
    const double mu = std::exp(next->ev.r.log_multiplier);
    const double slope = double(next->ev.Gs + 1);
    if (std::abs(slope - mu) > cfg.resolution_band * std::max(std::abs(mu), 1e-6)) {
      branch.end = BranchEnd::Stalled;
      return branch;
    }

    // Accepted steps that no longer move the point: the metric factor has
    // shrunk the step below the resolution of (s, v).
    const Real moved = std::abs(next->s - p.s) + std::abs(next->v - p.v);
    stagnant = moved < 64 * std::numeric_limits<Real>::epsilon() * (std::abs(p.s) + std::abs(p.v)) ? stagnant + 1 : 0;
    if (stagnant >= 20) {
      branch.end = BranchEnd::Stalled;
      return branch;
    }

    p = *next;
    branch.cycles.push_back(cycle_of(p, band));
    const LimitCycle& c = branch.cycles.back();
    if (c.period > cfg.period_cap) {
      branch.end = BranchEnd::PeriodCap;
      return branch;
    }
    if (near_hill(c)) {
      branch.end = BranchEnd::HilltopReached;
      return branch;
    }
    if (p.v < cfg.v_min || p.v > cfg.v_max) {
      branch.end = BranchEnd::VelocityRange;
      return branch;
    }
    h = std::min(h * Real(1.3), Real(cfg.max_step));
  }
  branch.end = BranchEnd::MaxPoints;
  return branch;
}

}  // namespace

CycleBranch continue_branch(const LimitCycle& start, const ModelParams& q, int direction,
                            const ContinuationConfig& cfg) {
  ModelParams q0 = q;
  q0.v = start.v;
  const auto eqs = find_equilibria(q0);
  const Equilibrium& c = central_equilibrium(eqs);
  const double x_left = eqs.size() == 3 ? eqs.front().state.x : -kHalfPi;
  const double x_right = eqs.size() == 3 ? eqs.back().state.x : kHalfPi;
  const BranchProblem prob(q, c.state.x, cfg.shooting);

  Point p;
  p.s = start.section_state.x;
  p.v = start.v;
  const auto e = prob.full(p.s, p.v);
  if (!e) throw SolverError(ErrorCode::NoReturn, "start cycle does not return");
  p.ev = *e;
  tangent(*e, 0.0, direction >= 0 ? 1.0 : -1.0, p.ts, p.tv);

  CycleBranch branch;
  branch.origin = BranchOrigin::Seeded;
  branch.x_eq = c.state.x;
  branch.hopf_v = hopf_velocity(q);
  return run_continuation(prob, p, x_left, x_right, cfg, std::move(branch));
}

CycleBranch continue_branch_from_hopf(const ModelParams& q, const ContinuationConfig& cfg) {
  const auto eqs = find_equilibria(q);
  const Equilibrium& c = central_equilibrium(eqs);
  if (c.is_saddle()) throw SolverError(ErrorCode::InvalidArgument, "central equilibrium is a saddle; no Hopf point");
  const double xc = c.state.x;
  const double x_left = eqs.size() == 3 ? eqs.front().state.x : -kHalfPi;
  const double x_right = eqs.size() == 3 ? eqs.back().state.x : kHalfPi;
  const double vh = hopf_velocity(q);
  const BranchProblem prob(q, xc, cfg.shooting);

  // Seed on the subcritical side first, then the supercritical side.
  std::optional<std::pair<double, double>> seed;  // (s, v)
  for (double side : {-1.0, 1.0}) {
    const double v1 = vh + side * cfg.hopf_offset;
    ModelParams q1 = q;
    q1.v = v1;
    const GallopingField f(q1);
    const ReturnMap map(f, xc, cfg.shooting);
    auto G = [&](double a) -> std::optional<double> {
      const ReturnResult r = map.evaluate(xc + a);
      if (!r.returned()) return std::nullopt;
      return r.state.x - (xc + a);
    };
    // Near the focus the sign of G is the sign of the focus' growth rate.
    const double inner_sign = side < 0.0 ? -1.0 : 1.0;
    double a_prev = 0.0;
    for (double a = cfg.hopf_radius / 8.0; a < 0.5 * (x_right - xc); a *= 1.5) {
      const auto g = G(a);
      if (!g) break;
      if ((*g > 0.0) != (inner_sign > 0.0)) {
        const double lo = a_prev > 0.0 ? a_prev : a / 1.5;
        const LimitCycle cyc = find_cycle_bracketed(map, xc + lo, xc + a);
        seed = {cyc.section_state.x, v1};
        break;
      }
      a_prev = a;
      if (a > 64.0 * cfg.hopf_radius) break;  // small cycles only
    }
    if (seed) break;
  }
  if (!seed) throw SolverError(ErrorCode::NoConvergence, "no small-amplitude cycle near the Hopf point");

  CycleBranch branch;
  branch.origin = BranchOrigin::HopfOnset;
  branch.x_eq = xc;
  branch.hopf_v = vh;

  LimitCycle h0;
  ModelParams qh = q;
  qh.v = vh;
  const Equilibrium eh = eigen_classify(c.state, qh);
  h0.section_state = c.state;
  h0.period = 2.0 * std::numbers::pi / std::abs(eh.eigenvalues.first.imag());
  h0.multiplier = h0.multiplier_fd = 1.0;
  h0.marginal = true;
  h0.v = vh;
  h0.x_max = h0.x_min = xc;
  branch.cycles.push_back(h0);

  Point p;
  p.s = seed->first;
  p.v = seed->second;
  const auto e = prob.full(p.s, p.v);
  if (!e) throw SolverError(ErrorCode::NoReturn, "Hopf seed cycle does not return");
  p.ev = *e;
  tangent(*e, 1.0, 0.0, p.ts, p.tv);  // growing amplitude
  return run_continuation(prob, p, x_left, x_right, cfg, std::move(branch));
}

std::vector<BranchRow> branch_extrema(const CycleBranch& branch) {
  std::vector<BranchRow> rows;
  rows.reserve(branch.cycles.size());
  for (const auto& c : branch.cycles) rows.push_back({c.v, c.x_max, c.x_min, c.period, c.multiplier, c.stable});
  return rows;
}

void write_branch_csv(const CycleBranch& branch, const std::string& path, const std::string& header) {
  io::CsvTable t({"v", "x_max", "x_min", "period", "multiplier", "stable"});
  if (!header.empty()) t.add_comment(header);
  t.add_comment("cycle branch; x_eq = " + io::fmt(branch.x_eq) + ", Hopf v = " + io::fmt(branch.hopf_v) +
                ", end = " + to_string(branch.end));
  for (const auto& f : branch.fold_points) {
    t.add_comment("cyclic fold v = " + io::fmt(f.v) + " x_max = " + io::fmt(f.x_max) +
                  " multiplier = " + io::fmt(f.multiplier));
  }
  for (const auto& r : branch_extrema(branch)) {
    t.add_row({r.v, r.x_max, r.x_min, r.period, r.multiplier, r.stable ? 1.0 : 0.0});
  }
  t.write(path);
}

Trajectory sample_cycle(const PlanarField& field, const LimitCycle& c, double max_step) {
  IntegratorConfig ic = ShootingConfig::tight_integrator();
  ic.record = true;
  ic.max_step = max_step;
  ic.t_max = c.period;
  return integrate(field, c.section_state, ic);
}

}  // namespace gallop
