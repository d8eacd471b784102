#include "gallop/integrator.hpp"

#include "gallop/io.hpp"

namespace gallop {

void IntegratorConfig::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
    throw SolverError(ErrorCode::InvalidArgument, "integrator tolerances must be positive");
  }
  if (!(t_max > 0.0) || !(max_step > 0.0)) {
    throw SolverError(ErrorCode::InvalidArgument, "t_max and max_step must be positive");
  }
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::SectionCross: return "SectionCross";
    case EventKind::Escape: return "Escape";
    case EventKind::Converged: return "Converged";
    case EventKind::TimeOut: return "TimeOut";
  }
  return "?";
}

std::vector<EventSpec> escape_events(double bound) {
  std::vector<EventSpec> ev(2);
  ev[0].kind = EventKind::Escape;
  ev[0].g = [bound](double, const State& s) { return s.x + bound; };
  ev[0].direction = -1;
  ev[0].terminal = true;
  ev[0].tag = -1;
  ev[1].kind = EventKind::Escape;
  ev[1].g = [bound](double, const State& s) { return s.x - bound; };
  ev[1].direction = +1;
  ev[1].terminal = true;
  ev[1].tag = +1;
  return ev;
}

EventSpec section_xdot_zero(int direction, bool terminal, int tag) {
  EventSpec ev;
  ev.kind = EventKind::SectionCross;
  ev.g = [](double, const State& s) { return s.xdot; };
  ev.direction = direction;
  ev.terminal = terminal;
  ev.tag = tag;
  return ev;
}

namespace {

std::vector<EventFn<2>> lift(std::span<const EventSpec> events) {
  std::vector<EventFn<2>> out;
  out.reserve(events.size());
  for (const auto& e : events) {
    EventFn<2> f;
    f.kind = e.kind;
    f.direction = e.direction;
    f.terminal = e.terminal;
    f.tag = e.tag;
    f.g = [g = e.g](double t, const Vec<2>& y) { return g(t, State{y[0], y[1]}); };
    out.push_back(std::move(f));
  }
  return out;
}

Trajectory lower(RawSolution<2>&& raw) {
  Trajectory tr;
  tr.t = std::move(raw.t);
  tr.states.reserve(raw.y.size());
  for (const auto& y : raw.y) tr.states.push_back({y[0], y[1]});
  for (const auto& e : raw.events) tr.events.push_back({e.kind, e.t, {e.y[0], e.y[1]}, e.direction, e.tag});
  if (tr.events.empty() || tr.events.back().t != raw.t_end) {
    tr.events.push_back({raw.stop, raw.t_end, {raw.y_end[0], raw.y_end[1]}, 0, 0});
  }
  return tr;
}

}  // namespace

Trajectory integrate(const AutonomousField& f, const State& s0, const IntegratorConfig& cfg,
                     std::span<const EventSpec> events, const std::optional<ConvergenceSpec>& converge) {
  cfg.validate();
  const auto lifted = lift(events);
  auto rhs = [&f](double, const Vec<2>& y, Vec<2>& dy) {
    const State d = f(State{y[0], y[1]});
    dy[0] = d.x;
    dy[1] = d.xdot;
  };
  return lower(dopri5<2>(rhs, 0.0, Vec<2>{s0.x, s0.xdot}, cfg, lifted, converge));
}

Trajectory integrate(const PlanarField& field, const State& s0, const IntegratorConfig& cfg,
                     std::span<const EventSpec> events, const std::optional<ConvergenceSpec>& converge) {
  cfg.validate();
  const auto lifted = lift(events);
  auto rhs = [&field](double, const Vec<2>& y, Vec<2>& dy) {
    const State d = field.eval(State{y[0], y[1]});
    dy[0] = d.x;
    dy[1] = d.xdot;
  };
  return lower(dopri5<2>(rhs, 0.0, Vec<2>{s0.x, s0.xdot}, cfg, lifted, converge));
}

Trajectory integrate_nonautonomous(const TimeDependentField& f, const State& s0, const IntegratorConfig& cfg,
                                   std::span<const EventSpec> events, double t0,
                                   const std::function<double(double)>& v_of_t) {
  cfg.validate();
  const auto lifted = lift(events);
  auto rhs = [&f](double t, const Vec<2>& y, Vec<2>& dy) {
    const State d = f(t, State{y[0], y[1]});
    dy[0] = d.x;
    dy[1] = d.xdot;
  };
  Trajectory tr = lower(dopri5<2>(rhs, t0, Vec<2>{s0.x, s0.xdot}, cfg, lifted));
  if (v_of_t) {
    tr.v.reserve(tr.t.size());
    for (double t : tr.t) tr.v.push_back(v_of_t(t));
  }
  return tr;
}

TimeDependentField ramped_field(const ModelParams& q, double v0, double gamma) {
  return [q, v0, gamma](double t, const State& s) {
    ModelParams qt = q;
    qt.v = v0 + gamma * t;
    return rhs(s, qt);
  };
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path, const std::string& header) {
  const bool ramped = !traj.v.empty();
  io::CsvTable table(ramped ? std::vector<std::string>{"t", "x", "xdot", "v"}
                            : std::vector<std::string>{"t", "x", "xdot"});
  if (!header.empty()) table.add_comment(header);
  table.add_comment("units: t nondimensional time, x rad, xdot rad per unit time");
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    if (ramped) {
      table.add_row({traj.t[i], traj.states[i].x, traj.states[i].xdot, traj.v[i]});
    } else {
      table.add_row({traj.t[i], traj.states[i].x, traj.states[i].xdot});
    }
  }
  table.write(path);
}

}  // namespace gallop
