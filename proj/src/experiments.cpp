#include "gallop/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gallop/equilibria.hpp"
#include "gallop/errors.hpp"
#include "gallop/io.hpp"
#include "gallop/parallel.hpp"

namespace gallop {

using std::numbers::pi;

ModelParams ellipsoid_point(double phi, double psi, double R, const EllipsoidCenter& c) {
  const double cpsi = std::cos(psi * pi / 2.0);
  ModelParams q;
  q.v = c.v_h + R * R * std::cos(pi * phi) * cpsi;
  q.b = c.b0 + R * std::sin(pi * phi) * cpsi;
  q.e = c.e0 + R * R * R * std::sin(psi * pi / 2.0);
  q.p = c.p;
  q.r = c.r;
  return q;
}

const char* to_string(ArcKind k) {
  switch (k) {
    case ArcKind::Fold: return "Fold";
    case ArcKind::Cusp: return "Cusp";
    case ArcKind::Hopf: return "Hopf";
    case ArcKind::Homoclinic: return "Homoclinic";
    case ArcKind::Heteroclinic: return "Heteroclinic";
    case ArcKind::CyclicFold: return "CyclicFold";
    case ArcKind::SymmetryLine: return "SymmetryLine";
  }
  return "?";
}

const char* to_string(RampOutcome o) {
  switch (o) {
    case RampOutcome::EscapeLeft: return "EscapeLeft";
    case RampOutcome::EscapeRight: return "EscapeRight";
    case RampOutcome::Captured: return "Captured";
  }
  return "?";
}

int EllipsoidChart::failures() const {
  return static_cast<int>(std::count_if(cells.begin(), cells.end(), [](const EllipsoidCell& c) { return c.failed; }));
}

std::vector<ArcPoint> EllipsoidChart::arcs_of(ArcKind k) const {
  std::vector<ArcPoint> out;
  for (const auto& a : arcs)
    if (a.kind == k) out.push_back(a);
  return out;
}

namespace {

// Bisection on a boolean predicate with pred(0) != pred(1); returns the
// final bracket in t.
template <class Pred>
std::pair<double, double> bisect(Pred&& pred, double tol) {
  const bool at0 = pred(0.0);
  double lo = 0.0, hi = 1.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (pred(mid) == at0 ? lo : hi) = mid;
  }
  return {lo, hi};
}

std::vector<Equilibrium> equilibria_or_empty(const ModelParams& q) {
  try {
    return find_equilibria(q);
  } catch (const SolverError&) {
    return {};
  }
}

// Sign of the largest real part at the central equilibrium, 0 if unavailable.
int centre_sign(const std::vector<Equilibrium>& eqs) {
  if (eqs.empty()) return 0;
  const Equilibrium& c = central_equilibrium(eqs);
  if (!c.is_focus()) return 0;
  return c.max_real() > 0.0 ? 1 : -1;
}

bool three_with_saddles(const std::vector<Equilibrium>& eqs) {
  return eqs.size() == 3 && eqs[0].is_saddle() && eqs[2].is_saddle();
}

int cycle_count(const ModelParams& q, const PortraitOptions& opt) {
  const GallopingField f(q);
  const auto eqs = find_equilibria(f);
  return static_cast<int>(cycle_census(f, eqs, opt).size());
}

const std::vector<ConnectionSpec>& all_pairs() {
  static const std::vector<ConnectionSpec> pairs{{SaddleSide::Left, SaddleSide::Left},
                                                 {SaddleSide::Right, SaddleSide::Right},
                                                 {SaddleSide::Left, SaddleSide::Right},
                                                 {SaddleSide::Right, SaddleSide::Left}};
  return pairs;
}

}  // namespace

std::vector<ArcPoint> refine_transition(double phi_a, double psi_a, double phi_b, double psi_b,
                                        const EllipsoidConfig& cfg) {
  std::vector<ArcPoint> out;
  const double len = std::hypot(phi_b - phi_a, psi_b - psi_a);
  if (!(len > 0.0)) return out;
  const double tol = cfg.arc_tol / len;
  auto params = [&](double t) {
    return ellipsoid_point(phi_a + t * (phi_b - phi_a), psi_a + t * (psi_b - psi_a), cfg.R, cfg.center);
  };
  auto emit = [&](ArcKind k, double lo, double hi, std::string label = {}) {
    const double t = 0.5 * (lo + hi);
    out.push_back({k, phi_a + t * (phi_b - phi_a), psi_a + t * (psi_b - psi_a), (hi - lo) * len, std::move(label)});
  };

  const auto ea = equilibria_or_empty(params(0.0));
  const auto eb = equilibria_or_empty(params(1.0));
  if (ea.empty() || eb.empty()) return out;

  if (ea.size() != eb.size()) {
    const auto [lo, hi] = bisect([&](double t) { return equilibria_or_empty(params(t)).size() == ea.size(); }, tol);
    const bool on_symmetry = cfg.center.e0 == 0.0 && psi_a == 0.0 && psi_b == 0.0;
    emit(on_symmetry ? ArcKind::Cusp : ArcKind::Fold, lo, hi);
    return out;
  }

  const int sa = centre_sign(ea), sb = centre_sign(eb);
  if (sa != 0 && sb != 0 && sa != sb) {
    const auto [lo, hi] = bisect([&](double t) { return centre_sign(equilibria_or_empty(params(t))) == sa; }, tol);
    emit(ArcKind::Hopf, lo, hi);
  }

  if (!three_with_saddles(ea) || !three_with_saddles(eb)) return out;

  bool connection = false;
  const ParamFamily fam = params;
  for (const ConnectionSpec& pair : all_pairs()) {
    const MissDistance ma = miss_distance(params(0.0), pair);
    const MissDistance mb = miss_distance(params(1.0), pair);
    if ((ma.value > 0.0) == (mb.value > 0.0)) continue;
    try {
      const ConnectionPoint cp = find_connection(fam, 0.0, 1.0, pair, tol);
      emit(pair.kind() == ConnectionKind::Homoclinic ? ArcKind::Homoclinic : ArcKind::Heteroclinic, cp.lo, cp.hi,
           pair.name());
      connection = true;
    } catch (const SolverError&) {
      // sign change carried by an escaped branch only
    }
  }

  if (!connection) {
    try {
      const int ca = cycle_count(params(0.0), cfg.portrait);
      const int cb = cycle_count(params(1.0), cfg.portrait);
      if (std::abs(ca - cb) == 2) {
        const auto [lo, hi] = bisect([&](double t) { return cycle_count(params(t), cfg.portrait) == ca; }, tol);
        emit(ArcKind::CyclicFold, lo, hi);
      }
    } catch (const SolverError&) {
    }
  }
  return out;
}

EllipsoidChart ellipsoid_scan(const EllipsoidConfig& cfg) {
  if (!(cfg.R > 0.0) || cfg.n_phi < 2 || cfg.n_psi < 2) {
    throw SolverError(ErrorCode::InvalidArgument, "ellipsoid scan needs R > 0 and at least 2x2 cells");
  }
  EllipsoidChart chart;
  chart.R = cfg.R;
  chart.center = cfg.center;
  chart.n_phi = cfg.n_phi;
  chart.n_psi = cfg.n_psi;
  const std::size_t n = static_cast<std::size_t>(cfg.n_phi) * cfg.n_psi;
  chart.cells = parallel_map(n, cfg.workers, [&](std::size_t k) {
    EllipsoidCell cell;
    cell.phi = chart.phi(static_cast<int>(k % cfg.n_phi));
    cell.psi = chart.psi(static_cast<int>(k / cfg.n_phi));
    try {
      cell.portrait = classify_portrait(ellipsoid_point(cell.phi, cell.psi, cfg.R, cfg.center), cfg.portrait);
    } catch (const SolverError& e) {
      cell.failed = true;
      cell.error = e.what();
    }
    return cell;
  });

  if (cfg.center.e0 == 0.0 && cfg.n_psi % 2 == 1) {
    for (int i = 0; i < cfg.n_phi; ++i) chart.arcs.push_back({ArcKind::SymmetryLine, chart.phi(i), 0.0, 0.0, {}});
  }
  if (!cfg.refine_arcs) return chart;

  struct Edge {
    int ia, ja, ib, jb;
  };
  std::vector<Edge> edges;
  for (int j = 0; j < cfg.n_psi; ++j) {
    for (int i = 0; i < cfg.n_phi; ++i) {
      const auto& c = chart.at(i, j);
      if (c.failed) continue;
      if (i + 1 < cfg.n_phi && !chart.at(i + 1, j).failed && chart.at(i + 1, j).portrait.code() != c.portrait.code())
        edges.push_back({i, j, i + 1, j});
      if (j + 1 < cfg.n_psi && !chart.at(i, j + 1).failed && chart.at(i, j + 1).portrait.code() != c.portrait.code())
        edges.push_back({i, j, i, j + 1});
    }
  }
  auto refined = parallel_map(edges.size(), cfg.workers, [&](std::size_t k) {
    const Edge& e = edges[k];
    try {
      return refine_transition(chart.phi(e.ia), chart.psi(e.ja), chart.phi(e.ib), chart.psi(e.jb), cfg);
    } catch (const SolverError&) {
      return std::vector<ArcPoint>{};
    }
  });
  for (auto& r : refined) chart.arcs.insert(chart.arcs.end(), r.begin(), r.end());
  return chart;
}

int chart_asymmetry(const EllipsoidChart& chart) {
  int bad = 0;
  for (int j = 0; j < chart.n_psi; ++j) {
    for (int i = 0; i < chart.n_phi; ++i) {
      const auto& a = chart.at(i, j);
      const auto& b = chart.at(i, chart.n_psi - 1 - j);
      if (a.failed || b.failed) continue;
      if (a.portrait.mirrored().code() != b.portrait.code()) ++bad;
    }
  }
  return bad;
}

CyclicFoldTransect cyclic_fold_transect(const ArcPoint& homoclinic, const EllipsoidConfig& cfg, double window,
                                        int samples) {
  CyclicFoldTransect res;
  res.homoclinic = homoclinic;
  const double psi = homoclinic.psi;
  auto params = [&](double phi) { return ellipsoid_point(phi, psi, cfg.R, cfg.center); };
  auto count = [&](double phi) {
    try {
      return cycle_count(params(phi), cfg.portrait);
    } catch (const SolverError&) {
      return -1;
    }
  };

  // Offsets from the homoclinic point: uniform over the window plus a
  // geometric sequence that resolves a band much thinner than the window.
  std::vector<double> offsets;
  for (int k = 1; k <= samples; ++k) offsets.push_back(window * k / samples);
  for (int k = 1; k <= 30; ++k) offsets.push_back(window * std::pow(2.0, -k));
  std::sort(offsets.begin(), offsets.end());

  for (int side : {-1, +1}) {
    double last_two = std::nan("");
    for (double d : offsets) {
      const double phi = homoclinic.phi + side * d;
      const int c = count(phi);
      if (c >= 2) {
        last_two = phi;
        continue;
      }
      if (std::isnan(last_two) || c < 0) continue;
      const auto [lo, hi] = bisect([&](double t) { return count(last_two + t * (phi - last_two)) >= 2; },
                                   cfg.arc_tol / std::abs(phi - last_two));
      const double t = 0.5 * (lo + hi);
      res.fold = {ArcKind::CyclicFold, last_two + t * (phi - last_two), psi, (hi - lo) * std::abs(phi - last_two), {}};
      res.found = true;
      break;
    }
    if (res.found) break;
  }
  if (!res.found) return res;

  const ModelParams qf = params(res.fold.phi);
  res.v_fold = qf.v;
  try {
    const CycleBranch br = continue_branch_from_hopf(qf);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& f : br.fold_points) {
      if (std::abs(f.v - qf.v) < std::abs(best - qf.v)) best = f.v;
    }
    res.v_branch_fold = best;
  } catch (const SolverError&) {
    res.v_branch_fold = std::nan("");
  }
  return res;
}

void write_ellipsoid(const EllipsoidChart& chart, const std::string& stem, const std::string& header) {
  io::CsvTable cells({"phi", "psi", "v", "b", "e", "n_eq", "n_cycles", "n_stable_cycles", "escape", "code", "markers",
                      "failed"});
  if (!header.empty()) cells.add_comment(header);
  cells.add_comment("R = " + io::fmt(chart.R));
  std::set<std::string> codes;
  for (const auto& c : chart.cells) {
    const ModelParams q = ellipsoid_point(c.phi, c.psi, chart.R, chart.center);
    std::string markers;
    for (const auto& m : c.portrait.markers) markers += (markers.empty() ? "" : ";") + m;
    const std::string code = c.failed ? "failed" : c.portrait.code();
    codes.insert(code);
    cells.add_row_text({io::fmt(c.phi), io::fmt(c.psi), io::fmt(q.v), io::fmt(q.b), io::fmt(q.e),
                        std::to_string(c.portrait.n_equilibria), std::to_string(c.portrait.n_cycles()),
                        std::to_string(c.portrait.n_stable_cycles()), to_string(c.portrait.escape), code, markers,
                        c.failed ? "1" : "0"});
  }
  cells.write(stem + ".csv");

  io::CsvTable arcs({"kind", "phi", "psi", "v", "b", "e", "bracket", "label"});
  if (!header.empty()) arcs.add_comment(header);
  for (const auto& a : chart.arcs) {
    const ModelParams q = ellipsoid_point(a.phi, a.psi, chart.R, chart.center);
    arcs.add_row_text({to_string(a.kind), io::fmt(a.phi), io::fmt(a.psi), io::fmt(q.v), io::fmt(q.b), io::fmt(q.e),
                       io::fmt(a.bracket), a.label});
  }
  arcs.write(stem + "_arcs.csv");

  // Raster of class indices; codes sorted so the grey levels are stable.
  std::map<std::string, int> index;
  for (const auto& c : codes) index.emplace(c, static_cast<int>(index.size()));
  std::vector<std::uint8_t> grey;
  grey.reserve(chart.cells.size());
  for (int j = chart.n_psi - 1; j >= 0; --j) {
    for (int i = 0; i < chart.n_phi; ++i) {
      const auto& c = chart.at(i, j);
      const int k = index.at(c.failed ? "failed" : c.portrait.code());
      grey.push_back(static_cast<std::uint8_t>(255 * (k + 1) / (index.size() + 1)));
    }
  }
  io::write_pgm(stem + ".pgm", chart.n_phi, chart.n_psi, grey);

  io::SvgCanvas svg(-1.0, 1.0, -1.0, 1.0, 800, 800);
  static const std::map<ArcKind, std::string> colour{
      {ArcKind::Fold, "blue"},          {ArcKind::Cusp, "navy"},         {ArcKind::Hopf, "darkgreen"},
      {ArcKind::Homoclinic, "limegreen"}, {ArcKind::Heteroclinic, "purple"}, {ArcKind::CyclicFold, "orange"},
      {ArcKind::SymmetryLine, "red"}};
  for (const auto& a : chart.arcs) {
    svg.add_point(a.phi, a.psi, colour.at(a.kind), a.kind == ArcKind::Cusp || a.kind == ArcKind::CyclicFold ? 5.0 : 1.5);
  }
  svg.write(stem + ".svg");
}

// ---------------------------------------------------------------------------
// Ramped velocity

State ramp_start(const ModelParams& q, double dx) {
  const auto eqs = find_equilibria(q);
  if (eqs.empty()) throw SolverError(ErrorCode::InvalidArgument, "no equilibrium to start the ramp from");
  return {central_equilibrium(eqs).state.x + dx, 0.0};
}

RampResult ramp_run(const ModelParams& q0, double gamma, const State& init, const RampConfig& cfg) {
  q0.validate();
  if (!(gamma > 0.0)) throw SolverError(ErrorCode::InvalidArgument, "gamma must be positive");
  if (!std::isfinite(init.x) || !std::isfinite(init.xdot)) {
    throw SolverError(ErrorCode::InvalidArgument, "initial state must be finite");
  }
  RampResult res;
  res.v0 = q0.v;
  res.gamma = gamma;
  res.init = init;
  const auto eqs = find_equilibria(q0);
  if (eqs.empty()) throw SolverError(ErrorCode::InvalidArgument, "no equilibrium in the well");
  res.x_eq = central_equilibrium(eqs).state.x;
  res.v_hopf = hopf_velocity(q0);

  const double v0 = q0.v;
  auto v_of_t = [v0, gamma](double t) { return v0 + gamma * t; };
  std::vector<EventSpec> events = escape_events(kHalfPi);
  events.push_back(section_xdot_zero(0, false, 5));
  IntegratorConfig ic = cfg.integ;
  ic.t_max = cfg.t_max;
  ic.record = cfg.record;

  // Already beyond a hilltop: escape at once without integrating.
  if (std::abs(init.x) >= kHalfPi) {
    res.outcome = init.x < 0.0 ? RampOutcome::EscapeLeft : RampOutcome::EscapeRight;
    res.v_jump = v0;
    res.tunnelling = v0 - res.v_hopf;
    return res;
  }

  res.trajectory = integrate_nonautonomous(ramped_field(q0, v0, gamma), init, ic, events, 0.0, v_of_t);
  const Trajectory& tr = res.trajectory;

  if (init.xdot == 0.0) res.envelope.push_back({0.0, v0, std::abs(init.x - res.x_eq)});
  for (const auto& e : tr.events) {
    if (e.kind == EventKind::SectionCross && e.tag == 5) {
      res.envelope.push_back({e.t, v_of_t(e.t), std::abs(e.state.x - res.x_eq)});
    }
  }
  const Event& last = tr.events.back();
  res.t_end = last.t;
  if (last.kind == EventKind::Escape) {
    res.outcome = last.tag < 0 ? RampOutcome::EscapeLeft : RampOutcome::EscapeRight;
  } else {
    res.outcome = RampOutcome::Captured;
  }

  double running_min = std::numeric_limits<double>::infinity();
  for (const auto& s : res.envelope) {
    if (s.v < res.v_hopf) continue;
    if (s.amplitude > cfg.growth_factor * running_min) {
      res.v_jump = s.v;
      break;
    }
    running_min = std::min(running_min, s.amplitude);
  }
  if (std::isnan(res.v_jump) && res.outcome != RampOutcome::Captured) res.v_jump = v_of_t(res.t_end);
  res.tunnelling = res.v_jump - res.v_hopf;
  return res;
}

namespace {

double centre_real_part(const ModelParams& q, double x_eq, double nu) {
  ModelParams qn = q;
  qn.v = nu;
  const Equilibrium e = eigen_classify({x_eq, 0.0}, qn);
  if (!e.is_focus()) {
    std::ostringstream os;
    os << "central equilibrium is not a focus at v = " << nu;
    throw SolverError(ErrorCode::FocusLost, os.str());
  }
  return e.eigenvalues.first.real();
}

EnvelopePrediction make_prediction(const ModelParams& q, double gamma, double nu0, double d0, double nu_end, int n,
                                   bool linear) {
  q.validate();
  if (!(gamma > 0.0) || !(d0 > 0.0) || n < 2) {
    throw SolverError(ErrorCode::InvalidArgument, "envelope prediction needs gamma > 0, d0 > 0 and n >= 2");
  }
  EnvelopePrediction pred;
  pred.nu0 = nu0;
  pred.d0 = d0;
  pred.gamma = gamma;
  pred.linearised = linear;
  pred.q = q;
  pred.x_eq = central_equilibrium(find_equilibria(q)).state.x;
  pred.v_hopf = hopf_velocity(q);
  const double h = 1e-4 * std::max(1.0, pred.v_hopf);
  pred.c_slope =
      (centre_real_part(q, pred.x_eq, pred.v_hopf + h) - centre_real_part(q, pred.x_eq, pred.v_hopf - h)) / (2.0 * h);
  pred.nu = linspace(nu0, nu_end, n);
  for (double nu : pred.nu) {
    pred.c.push_back(linear ? pred.c_slope * (nu - pred.v_hopf) : centre_real_part(q, pred.x_eq, nu));
  }
  for (double nu : pred.nu) pred.d.push_back(std::exp(pred.log_d(nu)));
  return pred;
}

}  // namespace

double EnvelopePrediction::log_d(double nu) const {
  if (nu == nu0) return std::log(d0);
  auto c_of = [this](double w) {
    return linearised ? c_slope * (w - v_hopf) : centre_real_part(q, x_eq, w);
  };
  const double integral = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(c_of, nu0, nu, 10, 1e-12);
  return std::log(d0) + integral / gamma;
}

EnvelopePrediction envelope_predict(const ModelParams& q, double gamma, double nu0, double d0, double nu_end, int n) {
  return make_prediction(q, gamma, nu0, d0, nu_end, n, false);
}

EnvelopePrediction envelope_predict_linear(const ModelParams& q, double gamma, double nu0, double d0, double nu_end,
                                           int n) {
  return make_prediction(q, gamma, nu0, d0, nu_end, n, true);
}

EnvelopeComparison compare_envelope(const RampResult& run, const EnvelopePrediction& pred, double amp_floor,
                                    double amp_max) {
  EnvelopeComparison cmp;
  const double lo = std::min(pred.nu.front(), pred.nu.back());
  const double hi = std::max(pred.nu.front(), pred.nu.back());
  for (const auto& s : run.envelope) {
    if (s.v < lo || s.v > hi || s.amplitude < amp_floor || s.amplitude > amp_max) continue;
    const double ld = pred.log_d(s.v);
    cmp.max_log_error = std::max(cmp.max_log_error, std::abs(std::log(s.amplitude) - ld));
    cmp.max_log_excursion = std::max(cmp.max_log_excursion, std::abs(ld - std::log(pred.d0)));
    ++cmp.samples;
  }
  return cmp;
}

// ---------------------------------------------------------------------------
// Outcome maps

RampConfig no_record() {
  RampConfig c;
  c.record = false;
  return c;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out;
  if (n <= 0) return out;
  if (n == 1) return {a};
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(i + 1 == n ? b : a + (b - a) * i / (n - 1));
  return out;
}

std::vector<RampOutcome> BasinMap::row(std::size_t j) const {
  return {outcomes.begin() + static_cast<std::ptrdiff_t>(j * xs.size()),
          outcomes.begin() + static_cast<std::ptrdiff_t>((j + 1) * xs.size())};
}

int BasinMap::count(RampOutcome o) const { return static_cast<int>(std::count(outcomes.begin(), outcomes.end(), o)); }

int outcome_flips(std::span<const RampOutcome> seq) {
  int flips = 0;
  for (std::size_t i = 1; i < seq.size(); ++i) flips += seq[i] != seq[i - 1];
  return flips;
}

namespace {

BasinMap run_grid(std::vector<double> xs, std::vector<double> ys, int workers,
                  const std::function<RampResult(double, double)>& cell) {
  if (xs.empty() || ys.empty()) throw SolverError(ErrorCode::InvalidArgument, "basin map needs a nonempty grid");
  BasinMap map;
  map.xs = std::move(xs);
  map.ys = std::move(ys);
  const std::size_t nx = map.xs.size();
  auto results = parallel_map(nx * map.ys.size(), workers, [&](std::size_t k) {
    const RampResult r = cell(map.xs[k % nx], map.ys[k / nx]);
    return std::pair{r.outcome, r.v_jump};
  });
  for (const auto& [o, vj] : results) {
    map.outcomes.push_back(o);
    map.v_jump.push_back(vj);
  }
  return map;
}

}  // namespace

BasinMap basin_map_ramp(const ModelParams& q, std::span<const double> v0s, std::span<const double> log2_gammas,
                        const State& init, const RampConfig& cfg, int workers) {
  BasinMap map = run_grid({v0s.begin(), v0s.end()}, {log2_gammas.begin(), log2_gammas.end()}, workers,
                          [&](double v0, double lg) {
                            ModelParams qq = q;
                            qq.v = v0;
                            return ramp_run(qq, std::exp2(lg), init, cfg);
                          });
  map.x_label = "v0";
  map.y_label = "log2_gamma";
  return map;
}

BasinMap basin_map_ic(const ModelParams& q, double gamma, std::span<const double> x0s, std::span<const double> xdot0s,
                      const RampConfig& cfg, int workers) {
  BasinMap map = run_grid({x0s.begin(), x0s.end()}, {xdot0s.begin(), xdot0s.end()}, workers,
                          [&](double x0, double xd0) { return ramp_run(q, gamma, {x0, xd0}, cfg); });
  map.x_label = "x0";
  map.y_label = "xdot0";
  return map;
}

void write_basin(const BasinMap& map, const std::string& stem, const std::string& header) {
  io::CsvTable t({map.x_label, map.y_label, "outcome", "v_jump"});
  if (!header.empty()) t.add_comment(header);
  t.add_comment("EscapeLeft is black, EscapeRight white");
  const std::size_t nx = map.xs.size();
  for (std::size_t k = 0; k < map.outcomes.size(); ++k) {
    t.add_row_text({io::fmt(map.xs[k % nx]), io::fmt(map.ys[k / nx]), to_string(map.outcomes[k]),
                    io::fmt(map.v_jump[k])});
  }
  t.write(stem + ".csv");
  std::vector<std::uint8_t> grey;
  grey.reserve(map.outcomes.size());
  for (std::size_t j = map.ys.size(); j-- > 0;) {
    for (std::size_t i = 0; i < nx; ++i) {
      const RampOutcome o = map.at(i, j);
      grey.push_back(o == RampOutcome::EscapeLeft ? 0 : o == RampOutcome::EscapeRight ? 255 : 128);
    }
  }
  io::write_pgm(stem + ".pgm", static_cast<int>(nx), static_cast<int>(map.ys.size()), grey);
}

// ---------------------------------------------------------------------------
// Normal-form slice

int NormalFormChart::failures() const {
  return static_cast<int>(std::count_if(errors.begin(), errors.end(), [](const std::string& s) { return !s.empty(); }));
}

NormalFormChart normal_form_chart(std::span<const double> ws, std::span<const double> ps, const PortraitOptions& opt,
                                  int workers) {
  if (ws.empty() || ps.empty()) throw SolverError(ErrorCode::InvalidArgument, "normal-form chart needs a nonempty grid");
  NormalFormChart chart;
  chart.ws.assign(ws.begin(), ws.end());
  chart.ps.assign(ps.begin(), ps.end());
  const std::size_t nw = ws.size();
  auto cells = parallel_map(nw * ps.size(), workers, [&](std::size_t k) {
    const NormalFormField f({chart.ws[k % nw], chart.ps[k / nw]});
    try {
      return std::pair{classify_portrait(f, opt), std::string()};
    } catch (const SolverError& e) {
      return std::pair{PortraitClass{}, std::string(e.what())};
    }
  });
  for (auto& [pc, err] : cells) {
    chart.cells.push_back(std::move(pc));
    chart.errors.push_back(std::move(err));
  }
  return chart;
}

ConnectionPoint normal_form_connection(double w, double p_lo, double p_hi, double width) {
  const FieldFamily fam = [w](double p) -> std::unique_ptr<PlanarField> {
    return std::make_unique<NormalFormField>(NormalFormParams{w, p});
  };
  return find_connection(fam, p_lo, p_hi, {SaddleSide::Left, SaddleSide::Right}, width);
}

void write_normal_form_chart(const NormalFormChart& chart, const std::string& stem, const std::string& header) {
  io::CsvTable t({"w", "p", "n_eq", "n_cycles", "n_stable_cycles", "escape", "code", "markers", "error"});
  if (!header.empty()) t.add_comment(header);
  const std::size_t nw = chart.ws.size();
  for (std::size_t k = 0; k < chart.cells.size(); ++k) {
    const auto& pc = chart.cells[k];
    std::string markers;
    for (const auto& m : pc.markers) markers += (markers.empty() ? "" : ";") + m;
    t.add_row_text({io::fmt(chart.ws[k % nw]), io::fmt(chart.ps[k / nw]), std::to_string(pc.n_equilibria),
                    std::to_string(pc.n_cycles()), std::to_string(pc.n_stable_cycles()), to_string(pc.escape),
                    pc.code(), markers, chart.errors[k]});
  }
  t.write(stem + ".csv");
}

}  // namespace gallop
