#include "gallop/connections.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gallop/errors.hpp"
#include "gallop/io.hpp"

namespace gallop {

const char* to_string(SaddleSide s) { return s == SaddleSide::Left ? "left" : "right"; }

const char* to_string(ConnectionKind k) { return k == ConnectionKind::Homoclinic ? "homoclinic" : "heteroclinic"; }

const char* to_string(Escape e) {
  switch (e) {
    case Escape::Bounded: return "Bounded";
    case Escape::LeftOnly: return "LeftOnly";
    case Escape::RightOnly: return "RightOnly";
    case Escape::Indeterminate: return "Indeterminate";
  }
  return "?";
}

std::string ConnectionSpec::name() const {
  if (kind() == ConnectionKind::Homoclinic) return std::string("homoclinic-") + to_string(source);
  return std::string("heteroclinic-") + to_string(source) + "-" + to_string(target);
}

namespace {

// In reversed time strong aerodynamic damping becomes anti-damping and xdot
// can blow up before x reaches the escape bound. Such an orbit is moving
// against the sign of xdot, so it is an escape to that side.
std::vector<EventSpec> reversed_escape_events(double x_bound, double xdot_bound) {
  std::vector<EventSpec> ev = escape_events(x_bound);
  for (int sgn : {-1, +1}) {
    EventSpec e;
    e.kind = EventKind::Escape;
    e.g = [sgn, xdot_bound](double, const State& s) { return sgn * s.xdot - xdot_bound; };
    e.direction = +1;
    e.terminal = true;
    e.tag = -sgn;
    ev.push_back(e);
  }
  return ev;
}

}  // namespace

ManifoldBranch manifold_branch(const PlanarField& field, const Equilibrium& saddle, ManifoldKind kind, int side,
                               const ManifoldOptions& opt, std::span<const EventSpec> extra) {
  if (!saddle.is_saddle()) throw SolverError(ErrorCode::InvalidArgument, "manifold_branch needs a saddle");
  const Mat2 J = field.jacobian(saddle.state);
  const double lambda = kind == ManifoldKind::Stable ? saddle.eigenvalues.first.real() : saddle.eigenvalues.second.real();
  auto vec = real_eigenvector(J, lambda);
  if ((vec[0] < 0.0) != (side < 0)) {
    vec[0] = -vec[0];
    vec[1] = -vec[1];
  }
  const State start{saddle.state.x + opt.delta * vec[0], saddle.state.xdot + opt.delta * vec[1]};

  std::vector<EventSpec> events = kind == ManifoldKind::Stable
                                       ? reversed_escape_events(field.escape_bound(), opt.xdot_bound)
                                       : escape_events(field.escape_bound());
  events.insert(events.end(), extra.begin(), extra.end());
  IntegratorConfig ic = opt.integ;
  ic.t_max = opt.t_max;

  ManifoldBranch out;
  out.saddle = saddle;
  out.kind = kind;
  out.side = side;
  if (kind == ManifoldKind::Unstable) {
    out.trajectory = integrate(field, start, ic, events);
  } else {
    const ReversedField rev(field);
    out.trajectory = integrate(rev, start, ic, events);
  }
  return out;
}

ManifoldBranch manifold_branch(const ModelParams& q, const Equilibrium& saddle, ManifoldKind kind, int side,
                               const ManifoldOptions& opt) {
  const GallopingField f(q);
  return manifold_branch(f, saddle, kind, side, opt);
}

namespace {

struct Hills {
  Equilibrium left, centre, right;
};

Hills hills_of(const std::vector<Equilibrium>& eqs) {
  if (eqs.size() != 3 || !eqs[0].is_saddle() || !eqs[2].is_saddle()) {
    throw SolverError(ErrorCode::InvalidArgument, "connections need two flanking saddles");
  }
  return {eqs[0], eqs[1], eqs[2]};
}

const Equilibrium& pick(const Hills& h, SaddleSide s) { return s == SaddleSide::Left ? h.left : h.right; }
int inner_side(SaddleSide s) { return s == SaddleSide::Left ? +1 : -1; }

// First crossing of x = xc with physical xdot of sign `half`; returns the
// escape tag instead when the branch leaves first.
struct Crossing {
  bool found = false;
  double xdot = 0.0;
  int escape = 0;
};

Crossing cross_centre(const PlanarField& field, const Equilibrium& saddle, ManifoldKind kind, int side, double xc,
                      int half, const ManifoldOptions& opt) {
  EventSpec ev;
  ev.kind = EventKind::SectionCross;
  ev.g = [xc](double, const State& s) { return s.x - xc; };
  // Physical motion along x has the sign of xdot; reversed time flips it.
  ev.direction = kind == ManifoldKind::Unstable ? half : -half;
  ev.terminal = true;
  ev.tag = 7;
  ManifoldOptions o = opt;
  o.integ.record = false;
  const auto br = manifold_branch(field, saddle, kind, side, o, std::span<const EventSpec>(&ev, 1));
  Crossing c;
  for (const auto& e : br.trajectory.events) {
    if (e.kind == EventKind::SectionCross && e.tag == 7) {
      c.found = true;
      c.xdot = e.state.xdot;
      return c;
    }
    if (e.kind == EventKind::Escape) {
      c.escape = e.tag;
      return c;
    }
  }
  return c;
}

}  // namespace

MissDistance miss_distance(const PlanarField& field, const ConnectionSpec& pair, const ManifoldOptions& opt) {
  const Hills h = hills_of(find_equilibria(field));
  const double xc = h.centre.state.x;
  const int half = pair.target == SaddleSide::Left ? -1 : +1;
  const Crossing u = cross_centre(field, pick(h, pair.source), ManifoldKind::Unstable, inner_side(pair.source), xc,
                                  half, opt);
  const Crossing s = cross_centre(field, pick(h, pair.target), ManifoldKind::Stable, inner_side(pair.target), xc,
                                  half, opt);
  MissDistance m;
  m.xdot_unstable = u.xdot;
  m.xdot_stable = s.xdot;
  if (!u.found || !s.found) {
    m.escaped = true;
    const int tag = !u.found ? u.escape : s.escape;
    m.value = tag < 0 ? -kEscapedMiss : kEscapedMiss;
    return m;
  }
  m.value = u.xdot - s.xdot;
  return m;
}

MissDistance miss_distance(const ModelParams& q, const ConnectionSpec& pair, const ManifoldOptions& opt) {
  const GallopingField f(q);
  return miss_distance(f, pair, opt);
}

ConnectionPoint find_connection(const FieldFamily& family, double lo, double hi, const ConnectionSpec& pair,
                                double width, const ManifoldOptions& opt) {
  auto miss = [&](double mu) { return miss_distance(*family(mu), pair, opt); };
  MissDistance mlo = miss(lo), mhi = miss(hi);
  if ((mlo.value < 0.0) == (mhi.value < 0.0)) {
    throw SolverError(ErrorCode::NoSignChange, pair.name() + " miss distance has one sign on [" + io::fmt(lo) + ", " +
                                                   io::fmt(hi) + "]");
  }
  while (hi - lo > width) {
    const double mid = 0.5 * (lo + hi);
    const MissDistance m = miss(mid);
    if ((m.value < 0.0) == (mlo.value < 0.0)) {
      lo = mid;
      mlo = m;
    } else {
      hi = mid;
      mhi = m;
    }
  }
  if (mlo.escaped || mhi.escaped) {
    throw SolverError(ErrorCode::NoSignChange, pair.name() + ": sign change is an escape boundary, not a connection");
  }
  ConnectionPoint c;
  c.kind = pair.kind();
  c.pair = pair;
  c.lo = lo;
  c.hi = hi;
  c.parameter_value = 0.5 * (lo + hi);
  c.bracket_width = hi - lo;
  c.miss_lo = mlo.value;
  c.miss_hi = mhi.value;
  return c;
}

ConnectionPoint find_connection(const ParamFamily& family, double lo, double hi, const ConnectionSpec& pair,
                                double width, const ManifoldOptions& opt) {
  const FieldFamily ff = [&family](double mu) -> std::unique_ptr<PlanarField> {
    return std::make_unique<GallopingField>(family(mu));
  };
  return find_connection(ff, lo, hi, pair, width, opt);
}

// ---------------------------------------------------------------------------
// Portraits

int PortraitClass::n_stable_cycles() const {
  return static_cast<int>(std::count_if(cycles.begin(), cycles.end(), [](const LimitCycle& c) { return c.stable; }));
}

namespace {

const char* abbrev(EqClass c) {
  switch (c) {
    case EqClass::StableFocus: return "SF";
    case EqClass::UnstableFocus: return "UF";
    case EqClass::StableNode: return "SN";
    case EqClass::UnstableNode: return "UN";
    case EqClass::Saddle: return "S";
    case EqClass::Center: return "C";
  }
  return "?";
}

}  // namespace

std::string PortraitClass::code() const {
  std::ostringstream os;
  os << n_equilibria << "[";
  for (std::size_t i = 0; i < eq_classes.size(); ++i) os << (i ? "," : "") << abbrev(eq_classes[i]);
  os << "] c[";
  for (const auto& c : cycles) os << (c.stable ? 's' : 'u');
  os << "] " << to_string(escape);
  return os.str();
}

std::string PortraitClass::symbol() const {
  std::string s = code();
  if (!markers.empty()) {
    s += " |";
    for (const auto& m : markers) s += " " + m;
  }
  return s;
}

PortraitClass PortraitClass::mirrored() const {
  PortraitClass m = *this;
  std::reverse(m.eq_classes.begin(), m.eq_classes.end());
  if (escape == Escape::LeftOnly) m.escape = Escape::RightOnly;
  if (escape == Escape::RightOnly) m.escape = Escape::LeftOnly;
  for (auto& name : m.markers) {
    if (name == "homoclinic-left") name = "homoclinic-right";
    else if (name == "homoclinic-right") name = "homoclinic-left";
    else if (name == "heteroclinic-left-right") name = "heteroclinic-right-left";
    else if (name == "heteroclinic-right-left") name = "heteroclinic-left-right";
  }
  std::sort(m.markers.begin(), m.markers.end());
  return m;
}

namespace {

// Reversed-time run of a saddle's inner stable branch. Reports whether it
// escaped and its first upper turning point right of xc (the escape
// boundary on the section).
struct BackRun {
  bool escaped = false;
  std::optional<double> section_x;
};

BackRun back_run(const PlanarField& field, const Equilibrium& saddle, int side, double xc,
                 const std::optional<ConvergenceSpec>& converge, const PortraitOptions& opt) {
  // A downward physical crossing of xdot = 0 is upward in reversed time.
  const EventSpec sec = section_xdot_zero(+1, false, 3);
  std::vector<EventSpec> events = reversed_escape_events(field.escape_bound(), opt.manifold.xdot_bound);
  events.push_back(sec);
  ManifoldOptions mo = opt.manifold;
  mo.t_max = opt.back_t_max;
  mo.integ.record = false;
  const Mat2 J = field.jacobian(saddle.state);
  auto vec = real_eigenvector(J, saddle.eigenvalues.first.real());
  if ((vec[0] < 0.0) != (side < 0)) {
    vec[0] = -vec[0];
    vec[1] = -vec[1];
  }
  const State start{saddle.state.x + mo.delta * vec[0], saddle.state.xdot + mo.delta * vec[1]};
  IntegratorConfig ic = mo.integ;
  ic.t_max = mo.t_max;
  const ReversedField rev(field);
  const Trajectory tr = integrate(rev, start, ic, events, converge);
  BackRun b;
  for (const auto& e : tr.events) {
    if (e.kind == EventKind::SectionCross && e.tag == 3 && e.state.x > xc && !b.section_x) b.section_x = e.state.x;
    if (e.kind == EventKind::Escape) b.escaped = true;
  }
  return b;
}

std::optional<ConvergenceSpec> focus_convergence(const Equilibrium& centre, const std::vector<LimitCycle>& cycles) {
  if (!cycles.empty()) return std::nullopt;
  return ConvergenceSpec{centre.state, 1e-5, 0.0};
}

}  // namespace

std::vector<LimitCycle> cycle_census(const PlanarField& field, const std::vector<Equilibrium>& eqs,
                                     const PortraitOptions& opt) {
  if (eqs.size() != 3 || eqs[1].is_saddle()) return {};
  const Equilibrium& c = eqs[1];
  const double xc = c.state.x;
  const double xr = eqs[2].state.x;
  const double w = xr - xc;
  const ReturnMap map(field, xc, opt.shooting);

  struct Sample {
    double s;
    bool returned;
    double G;
  };
  std::vector<Sample> samples;
  auto add = [&](double s) {
    if (!(s > xc && s < xr)) return;
    const ReturnResult r = map.evaluate(s);
    samples.push_back({s, r.returned(), r.returned() ? r.state.x - s : 0.0});
  };

  // Geometric clustering toward both ends of the well.
  const int half = std::max(2, opt.scan_points / 2);
  for (int i = 0; i < half; ++i) {
    const double g = 1e-4 * std::pow(0.5 / 1e-4, double(i) / (half - 1));
    add(xc + g * w);
    add(xr - g * w);
  }

  // The escape boundary on the section is where the saddles' inner stable
  // branches first cross it; homoclinic-born cycles hug it.
  for (const auto& [saddle, side] : {std::pair{eqs[0], +1}, std::pair{eqs[2], -1}}) {
    const BackRun b = back_run(field, saddle, side, xc, std::nullopt, opt);
    if (!b.section_x) continue;
    for (int k = 2; k <= 10; ++k) {
      add(*b.section_x - w * std::pow(10.0, -k));
      add(*b.section_x + w * std::pow(10.0, -k));
    }
  }

  // A small cycle around the focus shows as a growth-rate sign mismatch.
  std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) { return a.s < b.s; });
  const double growth = c.max_real();
  if (!samples.empty() && samples.front().returned && growth != 0.0 &&
      (samples.front().G > 0.0) != (growth > 0.0)) {
    const double d0 = samples.front().s - xc;
    for (int k = 1; k <= 6; ++k) add(xc + d0 * std::pow(10.0, -k));
  }
  std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) { return a.s < b.s; });

  std::vector<LimitCycle> cycles;
  auto G = [&](double s) {
    const ReturnResult r = map.evaluate(s);
    if (!r.returned()) throw SolverError(ErrorCode::NoReturn, "census bracket lost its return");
    return r.state.x - s;
  };
  const double v = [&] {
    if (const auto* g = dynamic_cast<const GallopingField*>(&field)) return g->params().v;
    return 0.0;
  }();
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    const Sample& a = samples[i];
    const Sample& b = samples[i + 1];
    if (!a.returned || !b.returned || a.G == 0.0 || (a.G > 0.0) == (b.G > 0.0)) continue;
    try {
      const double s = detail::brent_root(G, a.s, b.s, a.G, b.G, 1e-13);
      const LimitCycle cyc = describe_cycle(map, s, v);
      // At a Hopf point the flat return map yields a zero-amplitude root:
      // the equilibrium itself, not a cycle.
      if (eqs[1].cls == EqClass::Center && cyc.marginal && s - xc < 1e-3 * (xr - xc)) continue;
      cycles.push_back(cyc);
    } catch (const SolverError&) {
      // A bracket that straddles an escape gap is not a cycle.
    }
  }
  return cycles;
}

Escape escape_from_manifolds(const PlanarField& field, const std::vector<Equilibrium>& eqs,
                             const std::vector<LimitCycle>& cycles, const PortraitOptions& opt) {
  if (eqs.size() == 1) return eqs[0].is_stable() ? Escape::Bounded : Escape::Indeterminate;
  if (eqs.size() != 3 || !eqs[0].is_saddle() || !eqs[2].is_saddle() || eqs[1].is_saddle()) {
    return Escape::Indeterminate;
  }
  const Equilibrium& c = eqs[1];
  const bool outer_stable = cycles.empty() ? c.max_real() < 0.0 : cycles.back().stable;
  if (outer_stable) return Escape::Bounded;

  const auto conv = focus_convergence(c, cycles);
  const bool left = !back_run(field, eqs[0], +1, c.state.x, conv, opt).escaped;
  const bool right = !back_run(field, eqs[2], -1, c.state.x, conv, opt).escaped;
  if (left && right) return Escape::Indeterminate;
  if (left) return Escape::LeftOnly;
  if (right) return Escape::RightOnly;
  // Neither separatrix reaches the repeller: fall back on direct probes.
  return escape_from_probes(field, eqs, cycles, 16);
}

Escape escape_from_probes(const PlanarField& field, const std::vector<Equilibrium>& eqs,
                          const std::vector<LimitCycle>& cycles, int n_probes, double eps, double t_max) {
  if (eqs.empty()) return Escape::Indeterminate;
  const Equilibrium& c = eqs.size() == 3 ? eqs[1] : eqs[0];
  std::vector<State> probes;
  if (!cycles.empty() && !cycles.back().stable) {
    const LimitCycle& cyc = cycles.back();
    const Trajectory orbit = sample_cycle(field, cyc, 0.01);
    if (n_probes == 2) {
      probes = {{cyc.x_max + eps, 0.0}, {cyc.x_min - eps, 0.0}};
    } else {
      for (int k = 0; k < n_probes; ++k) {
        const double tk = cyc.period * k / n_probes;
        const auto it = std::lower_bound(orbit.t.begin(), orbit.t.end(), tk);
        const State p = orbit.states[std::min<std::size_t>(it - orbit.t.begin(), orbit.states.size() - 1)];
        const double dx = p.x - c.state.x, dy = p.xdot - c.state.xdot;
        const double n = std::hypot(dx, dy);
        probes.push_back({p.x + eps * dx / n, p.xdot + eps * dy / n});
      }
    }
  } else {
    for (int k = 0; k < n_probes; ++k) {
      const double th = 2.0 * std::numbers::pi * k / n_probes;
      probes.push_back({c.state.x + eps * std::cos(th), c.state.xdot + eps * std::sin(th)});
    }
  }
  IntegratorConfig ic = grid_config();
  ic.t_max = t_max;
  ic.record = false;
  const auto ev = escape_events(field.escape_bound());
  bool left = false, right = false;
  for (const auto& p : probes) {
    const Trajectory tr = integrate(field, p, ic, ev);
    if (tr.stop_kind() == EventKind::Escape) (tr.last_event().tag < 0 ? left : right) = true;
  }
  if (left && right) return Escape::Indeterminate;
  if (left) return Escape::LeftOnly;
  if (right) return Escape::RightOnly;
  return Escape::Bounded;
}

PortraitClass classify_portrait(const PlanarField& field, const PortraitOptions& opt) {
  PortraitClass pc;
  const auto eqs = find_equilibria(field);
  pc.n_equilibria = static_cast<int>(eqs.size());
  for (const auto& e : eqs) pc.eq_classes.push_back(e.cls);

  pc.cycles = cycle_census(field, eqs, opt);
  if (static_cast<int>(pc.cycles.size()) > opt.max_cycles) {
    pc.cycles_capped = true;
    pc.cycles.erase(pc.cycles.begin(), pc.cycles.end() - opt.max_cycles);
  }
  pc.escape = escape_from_manifolds(field, eqs, pc.cycles, opt);

  if (eqs.size() == 3) {
    const Equilibrium& c = eqs[1];
    if (c.is_focus() && std::abs(c.max_real()) < opt.hopf_band) pc.markers.push_back("Hopf");
  }
  for (const auto& cyc : pc.cycles) {
    if (cyc.marginal) {
      pc.markers.push_back("CyclicFold");
      break;
    }
  }
  if (opt.detect_connections && eqs.size() == 3 && eqs[0].is_saddle() && eqs[2].is_saddle()) {
    for (const ConnectionSpec pair : {ConnectionSpec{SaddleSide::Left, SaddleSide::Left},
                                      ConnectionSpec{SaddleSide::Right, SaddleSide::Right},
                                      ConnectionSpec{SaddleSide::Left, SaddleSide::Right},
                                      ConnectionSpec{SaddleSide::Right, SaddleSide::Left}}) {
      const MissDistance m = miss_distance(field, pair, opt.manifold);
      if (!m.escaped && std::abs(m.value) < opt.connection_band) pc.markers.push_back(pair.name());
    }
  }
  return pc;
}

PortraitClass classify_portrait(const ModelParams& q, const PortraitOptions& opt) {
  const GallopingField f(q);
  return classify_portrait(f, opt);
}

PortraitExport portrait_layers(const PlanarField& field, const PortraitClass& pc, const ManifoldOptions& opt) {
  PortraitExport out;
  out.equilibria = find_equilibria(field);
  for (const auto& e : out.equilibria) {
    if (!e.is_saddle()) continue;
    for (ManifoldKind k : {ManifoldKind::Unstable, ManifoldKind::Stable}) {
      for (int side : {-1, +1}) out.manifolds.push_back(manifold_branch(field, e, k, side, opt));
    }
  }
  for (const auto& c : pc.cycles) out.cycles.push_back(sample_cycle(field, c));
  return out;
}

void write_portrait(const PortraitExport& layers, const std::string& stem, const std::string& header) {
  io::CsvTable t({"layer", "id", "x", "xdot"});
  if (!header.empty()) t.add_comment(header);
  t.add_comment("layers: eq (equilibria), wu/ws (unstable/stable manifold branches), cycle");
  double ymax = 0.5;
  int id = 0;
  for (const auto& e : layers.equilibria) {
    t.add_row_text({"eq", std::to_string(id++), io::fmt(e.state.x), io::fmt(e.state.xdot)});
  }
  for (const auto& m : layers.manifolds) {
    const std::string name = m.kind == ManifoldKind::Unstable ? "wu" : "ws";
    for (const auto& s : m.trajectory.states) {
      t.add_row_text({name, std::to_string(id), io::fmt(s.x), io::fmt(s.xdot)});
    }
    ++id;
  }
  for (const auto& c : layers.cycles) {
    for (const auto& s : c.states) {
      t.add_row_text({"cycle", std::to_string(id), io::fmt(s.x), io::fmt(s.xdot)});
      ymax = std::max(ymax, std::abs(s.xdot));
    }
    ++id;
  }
  t.write(stem + ".csv");

  const double xb = kHalfPi;
  ymax = std::max(ymax * 1.5, 1.0);
  io::SvgCanvas svg(-xb, xb, -ymax, ymax);
  auto clip = [&](const Trajectory& tr) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& s : tr.states) {
      if (std::abs(s.x) <= xb && std::abs(s.xdot) <= ymax) pts.emplace_back(s.x, s.xdot);
    }
    return pts;
  };
  for (const auto& m : layers.manifolds) {
    svg.add({clip(m.trajectory), m.kind == ManifoldKind::Unstable ? "#c0392b" : "#2471a3", 1.2, false});
  }
  for (const auto& c : layers.cycles) svg.add({clip(c), "#1e8449", 1.6, false});
  for (const auto& e : layers.equilibria) svg.add_point(e.state.x, e.state.xdot, e.is_saddle() ? "black" : "#7d3c98");
  svg.write(stem + ".svg");
}

}  // namespace gallop
