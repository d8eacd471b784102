#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <memory>

#include "gallop/connections.hpp"
#include "gallop/cycles.hpp"
#include "gallop/equilibria.hpp"
#include "gallop/errors.hpp"
#include "gallop/experiments.hpp"
#include "gallop/io.hpp"
#include "run_context.hpp"

using namespace gallop;
using namespace gallop::cli;

namespace {

// Each subcommand owns its option values; `body` runs after the config has
// been applied and checked.
struct Command {
  Command(std::string n, CLI::App* a) : name(std::move(n)), app(a), opts(std::make_unique<OptionSet>(a)) {}

  std::string name;
  CLI::App* app;
  std::unique_ptr<OptionSet> opts;
  std::function<int(Run&)> body;
};

struct ModelOpts {
  double b, e, v, p = 0.1, r = 0.1;

  void bind(OptionSet& o, bool with_v) {
    o.add("b", b, "stiffness distance from the pitchfork, b = B - 1");
    o.add("e", e, "imperfection");
    if (with_v) o.add("v", v, "wind speed");
    o.add("p", p, "aerodynamic coefficient");
    o.add("r", r, "structural damping");
  }
  ModelParams params() const {
    ModelParams q{b, e, v, p, r};
    q.validate();
    return q;
  }
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

ConnectionSpec connection_by_name(const std::string& name) {
  for (auto s : {SaddleSide::Left, SaddleSide::Right}) {
    for (auto t : {SaddleSide::Left, SaddleSide::Right}) {
      const ConnectionSpec c{s, t};
      if (c.name() == name) return c;
    }
  }
  throw ConfigError("unknown connection '" + name +
                    "' (homoclinic-left, homoclinic-right, heteroclinic-left-right, heteroclinic-right-left)");
}

std::string join(const std::vector<std::string>& parts) {
  std::string s;
  for (const auto& p : parts) s += (s.empty() ? "" : ";") + p;
  return s;
}

// ---------------------------------------------------------------------------

void add_equilibria(CLI::App& root, std::vector<Command>& cmds) {
  struct Opts {
    ModelOpts m{0.5, 0.0, 1.0};
    double b_min = -0.5, b_max = 1.0;
    bool sensitivity = false;
    double e_min = 1e-4, e_max = 1e-2;
    int e_count = 9;
  };
  auto o = std::make_shared<Opts>();
  Command c{"equilibria", root.add_subcommand("equilibria", "equilibria, potential, static path, imperfection law")};
  o->m.bind(*c.opts, true);
  c.opts->add("b-min", o->b_min, "static path sweep start");
  c.opts->add("b-max", o->b_max, "static path sweep end");
  c.opts->flag("sensitivity", o->sensitivity, "fit the fold stiffness against |e|");
  c.opts->add("e-min", o->e_min, "smallest |e| for the fit");
  c.opts->add("e-max", o->e_max, "largest |e| for the fit");
  c.opts->add("e-count", o->e_count, "geometric samples of |e|");
  c.body = [o](Run& run) {
    const ModelParams q = o->m.params();
    require(o->b_min < o->b_max, "b-min must be below b-max");

    const auto eqs = find_equilibria(q);
    io::CsvTable t({"x", "xdot", "re1", "im1", "re2", "im2", "class"});
    t.add_comment(run.header());
    std::printf("%-14s %-14s %s\n", "x", "xdot", "class");
    for (const auto& eq : eqs) {
      t.add_row_text({io::fmt(eq.state.x), io::fmt(eq.state.xdot), io::fmt(eq.eigenvalues.first.real()),
                      io::fmt(eq.eigenvalues.first.imag()), io::fmt(eq.eigenvalues.second.real()),
                      io::fmt(eq.eigenvalues.second.imag()), to_string(eq.cls)});
      std::printf("%-14.10f %-14.3g %s\n", eq.state.x, eq.state.xdot, to_string(eq.cls));
    }
    t.write(run.path("equilibria.csv"));
    run.record(run.path("equilibria.csv"));

    io::CsvTable pot({"x", "potential"});
    pot.add_comment(run.header());
    for (double x : linspace(-1.5, 1.5, 301)) pot.add_row({x, potential(x, q)});
    pot.write(run.path("potential.csv"));
    run.record(run.path("potential.csv"));

    write_static_path_csv(static_path(q.e, o->b_min, o->b_max), run.path("static_path.csv"), run.header());
    run.record(run.path("static_path.csv"));

    if (o->sensitivity) {
      require(o->e_min > 0 && o->e_max > o->e_min && o->e_count >= 2, "need 0 < e-min < e-max and e-count >= 2");
      std::vector<double> es;
      for (double l : linspace(std::log(o->e_min), std::log(o->e_max), o->e_count)) es.push_back(std::exp(l));
      const auto res = imperfection_sensitivity(es);
      write_sensitivity_csv(res, run.path("sensitivity.csv"), run.header());
      run.record(run.path("sensitivity.csv"));
      std::printf("fold stiffness b_fold = %.6g |e|^%.6f\n", res.prefactor, res.exponent);
    }
    return kOk;
  };
  cmds.push_back(std::move(c));
}

void add_hopf(CLI::App& root, std::vector<Command>& cmds) {
  auto m = std::make_shared<ModelOpts>(ModelOpts{0.5, 0.0, 1.0});
  Command c{"hopf", root.add_subcommand("hopf", "Hopf velocity, analytic and by eigenvalue bisection")};
  m->bind(*c.opts, false);
  c.body = [m](Run& run) {
    const ModelParams q = m->params();
    const double va = hopf_velocity(q);
    const double vn = hopf_velocity_numeric(q);
    std::printf("v_hopf analytic %.15g\nv_hopf numeric  %.15g\n", va, vn);
    io::CsvTable t({"b", "e", "p", "r", "v_hopf_analytic", "v_hopf_numeric"});
    t.add_comment(run.header());
    t.add_row({q.b, q.e, q.p, q.r, va, vn});
    t.write(run.path("hopf.csv"));
    run.record(run.path("hopf.csv"));
    return kOk;
  };
  cmds.push_back(std::move(c));
}

void add_branch(CLI::App& root, std::vector<Command>& cmds) {
  struct Opts {
    ModelOpts m{0.5, -0.01, 1.0};
    double v_max = 10.0, period_cap = 200.0;
    int max_points = 4000;
    int cycles = 12;
  };
  auto o = std::make_shared<Opts>();
  Command c{"branch", root.add_subcommand("branch", "limit-cycle branch continued from the Hopf point")};
  o->m.bind(*c.opts, false);
  c.opts->add("v-max", o->v_max, "upper velocity bound");
  c.opts->add("period-cap", o->period_cap, "stop when the period exceeds this");
  c.opts->add("max-points", o->max_points, "continuation point budget");
  c.opts->add("cycles", o->cycles, "cycles sampled into the phase-plane file");
  c.body = [o](Run& run) {
    const ModelParams q = o->m.params();
    require(o->max_points > 1 && o->period_cap > 0 && o->cycles >= 0, "bad branch budget");
    ContinuationConfig cc;
    cc.v_max = o->v_max;
    cc.period_cap = o->period_cap;
    cc.max_points = o->max_points;
    run.set_numerics({{"continuation", to_json(cc)}});
    const CycleBranch br = continue_branch_from_hopf(q, cc);
    write_branch_csv(br, run.path("branch.csv"), run.header());
    run.record(run.path("branch.csv"));

    io::CsvTable orbits({"id", "v", "stable", "x", "xdot"});
    orbits.add_comment(run.header());
    const std::size_t n = br.cycles.size();
    const int k_max = std::min<int>(o->cycles, static_cast<int>(n) - 1);
    for (int k = 1; k <= k_max; ++k) {
      const LimitCycle& cyc = br.cycles[k * (n - 1) / k_max];
      ModelParams qk = q;
      qk.v = cyc.v;
      const Trajectory tr = sample_cycle(GallopingField(qk), cyc);
      for (const auto& s : tr.states) {
        orbits.add_row_text({std::to_string(k), io::fmt(cyc.v), cyc.stable ? "1" : "0", io::fmt(s.x), io::fmt(s.xdot)});
      }
    }
    orbits.write(run.path("branch_cycles.csv"));
    run.record(run.path("branch_cycles.csv"));

    const auto rows = branch_extrema(br);
    double lo = br.hopf_v, hi = br.hopf_v, xb = 0.1;
    for (const auto& r : rows) {
      lo = std::min(lo, r.v);
      hi = std::max(hi, r.v);
      xb = std::max({xb, std::abs(r.x_max), std::abs(r.x_min)});
    }
    io::SvgCanvas svg(lo - 0.05, hi + 0.05, -1.1 * xb, 1.1 * xb);
    io::Polyline top, bottom;
    for (const auto& r : rows) {
      top.points.emplace_back(r.v, r.x_max);
      bottom.points.emplace_back(r.v, r.x_min);
    }
    svg.add(top);
    svg.add(bottom);
    svg.add_point(br.hopf_v, br.x_eq, "#1e8449");
    for (const auto& f : br.fold_points) svg.add_point(f.v, f.x_max, "#c0392b");
    svg.write(run.path("branch.svg"));
    run.record(run.path("branch.svg"));

    std::printf("branch: %zu points, end %s, Hopf v %.10g\n", n, to_string(br.end), br.hopf_v);
    for (const auto& f : br.fold_points) std::printf("cyclic fold v = %.10g\n", f.v);
    if (!rows.empty()) std::printf("final period %.6g\n", rows.back().period);
    return kOk;
  };
  cmds.push_back(std::move(c));
}

void add_portrait(CLI::App& root, std::vector<Command>& cmds) {
  struct Opts {
    ModelOpts m{0.175, 0.003, 1.0};
    std::string locate;
    double v_lo = 0.0, v_hi = 0.0;
    bool no_connections = false;
  };
  auto o = std::make_shared<Opts>();
  Command c{"portrait", root.add_subcommand("portrait", "phase-portrait classification and layers")};
  o->m.bind(*c.opts, true);
  c.opts->add("locate", o->locate, "connection to bracket in v first (e.g. homoclinic-left)");
  c.opts->add("v-lo", o->v_lo, "lower end of the connection bracket");
  c.opts->add("v-hi", o->v_hi, "upper end of the connection bracket");
  c.opts->flag("no-connections", o->no_connections, "skip miss-distance markers");
  c.body = [o](Run& run) {
    ModelParams q = o->m.params();
    if (!o->locate.empty()) {
      const ConnectionSpec pair = connection_by_name(o->locate);
      require(o->v_lo < o->v_hi, "locate needs v-lo < v-hi");
      const ParamFamily fam = [q](double v) {
        ModelParams k = q;
        k.v = v;
        return k;
      };
      const ConnectionPoint cp = find_connection(fam, o->v_lo, o->v_hi, pair);
      io::CsvTable t({"connection", "v", "v_lo", "v_hi", "bracket", "miss_lo", "miss_hi"});
      t.add_comment(run.header());
      t.add_row_text({pair.name(), io::fmt(cp.parameter_value), io::fmt(cp.lo), io::fmt(cp.hi),
                      io::fmt(cp.bracket_width), io::fmt(cp.miss_lo), io::fmt(cp.miss_hi)});
      t.write(run.path("connection.csv"));
      run.record(run.path("connection.csv"));
      std::printf("%s at v = %.12g (bracket %.3g)\n", pair.name().c_str(), cp.parameter_value, cp.bracket_width);
      q.v = cp.parameter_value;
    }
    PortraitOptions po;
    po.detect_connections = !o->no_connections;
    run.set_numerics({{"portrait", to_json(po)}, {"connection_width", 1e-8}});
    const GallopingField field(q);
    const PortraitClass pc = classify_portrait(field, po);
    std::vector<std::string> eqc;
    for (auto k : pc.eq_classes) eqc.push_back(to_string(k));
    io::CsvTable t({"v", "n_equilibria", "equilibria", "n_cycles", "n_stable_cycles", "escape", "symbol", "markers"});
    t.add_comment(run.header());
    t.add_row_text({io::fmt(q.v), std::to_string(pc.n_equilibria), join(eqc), std::to_string(pc.n_cycles()),
                    std::to_string(pc.n_stable_cycles()), to_string(pc.escape), pc.symbol(), join(pc.markers)});
    t.write(run.path("portrait_class.csv"));
    run.record(run.path("portrait_class.csv"));
    write_portrait(portrait_layers(field, pc, po.manifold), run.path("portrait"), run.header());
    run.record(run.path("portrait.csv"));
    run.record(run.path("portrait.svg"));
    std::printf("v = %.10g: %s, escape %s\n", q.v, pc.symbol().c_str(), to_string(pc.escape));
    return kOk;
  };
  cmds.push_back(std::move(c));
}

void add_ellipsoid(CLI::App& root, std::vector<Command>& cmds) {
  struct Opts {
    EllipsoidConfig cfg;
    bool no_refine = false;
    int transects = 1;
  };
  auto o = std::make_shared<Opts>();
  Command c{"ellipsoid", root.add_subcommand("ellipsoid", "bifurcation arcs on the ellipsoid chart")};
  c.opts->add("R", o->cfg.R, "ellipsoid radius");
  c.opts->add("v-h", o->cfg.center.v_h, "centre velocity");
  c.opts->add("b0", o->cfg.center.b0, "centre stiffness");
  c.opts->add("e0", o->cfg.center.e0, "centre imperfection");
  c.opts->add("p", o->cfg.center.p, "aerodynamic coefficient");
  c.opts->add("r", o->cfg.center.r, "structural damping");
  c.opts->add("n-phi", o->cfg.n_phi, "grid points in phi");
  c.opts->add("n-psi", o->cfg.n_psi, "grid points in psi");
  c.opts->add("arc-tol", o->cfg.arc_tol, "arc bracket length in chart units");
  c.opts->flag("no-refine", o->no_refine, "classify cells only");
  c.opts->add("transects", o->transects, "homoclinic points checked for a nearby fold of cycles");
  c.body = [o](Run& run) {
    EllipsoidConfig cfg = o->cfg;
    require(cfg.R > 0 && cfg.n_phi >= 2 && cfg.n_psi >= 2 && cfg.arc_tol > 0, "bad ellipsoid grid");
    require(o->transects >= 0, "transects must be non-negative");
    cfg.refine_arcs = !o->no_refine;
    cfg.workers = run.workers();
    run.set_numerics({{"portrait", to_json(cfg.portrait)}});
    const EllipsoidChart chart = ellipsoid_scan(cfg);
    write_ellipsoid(chart, run.path("ellipsoid"), run.header());
    for (const char* f : {"ellipsoid.csv", "ellipsoid_arcs.csv", "ellipsoid.pgm", "ellipsoid.svg"}) {
      run.record(run.path(f));
    }
    std::printf("cells %d, failures %d, asymmetric cells %d\n", chart.n_phi * chart.n_psi, chart.failures(),
                cfg.center.e0 == 0.0 ? chart_asymmetry(chart) : -1);
    for (auto k : {ArcKind::Fold, ArcKind::Cusp, ArcKind::Hopf, ArcKind::Homoclinic, ArcKind::Heteroclinic,
                   ArcKind::CyclicFold}) {
      std::printf("  %-13s %zu\n", to_string(k), chart.arcs_of(k).size());
    }

    const auto hom = chart.arcs_of(ArcKind::Homoclinic);
    if (o->transects > 0 && !hom.empty()) {
      io::CsvTable t({"phi_homoclinic", "psi", "label", "found", "phi_fold", "v_fold", "v_branch_fold"});
      t.add_comment(run.header());
      const int n = std::min<int>(o->transects, static_cast<int>(hom.size()));
      for (int k = 0; k < n; ++k) {
        const ArcPoint& h = hom[static_cast<std::size_t>(k) * hom.size() / n];
        const CyclicFoldTransect tr = cyclic_fold_transect(h, cfg);
        t.add_row_text({io::fmt(h.phi), io::fmt(h.psi), h.label, tr.found ? "1" : "0", io::fmt(tr.fold.phi),
                        io::fmt(tr.v_fold), io::fmt(tr.v_branch_fold)});
        std::printf("transect psi=%.6f %s: fold %s phi=%.9f\n", h.psi, h.label.c_str(), tr.found ? "found" : "absent",
                    tr.fold.phi);
      }
      t.write(run.path("ellipsoid_transects.csv"));
      run.record(run.path("ellipsoid_transects.csv"));
    }
    return chart.failures() > 0 ? kPartialFailure : kOk;
  };
  cmds.push_back(std::move(c));
}

void add_ramp(CLI::App& root, std::vector<Command>& cmds) {
  struct Opts {
    ModelOpts m{0.5, -0.01, 0.0};
    double gamma = 0.01;
    std::vector<double> v0{0.234375, 0.46875, 0.9375};
    double dx = -0.05;
    double t_max = 5000.0;
    double growth = 10.0;
    double rel_tol = 1e-10, abs_tol = 1e-12;
  };
  auto o = std::make_shared<Opts>();
  Command c{"ramp", root.add_subcommand("ramp", "runs with linearly ramped wind speed")};
  o->m.bind(*c.opts, false);
  c.opts->add("gamma", o->gamma, "ramp rate dv/dt");
  c.opts->add("v0", o->v0, "starting velocities");
  c.opts->add("dx", o->dx, "initial offset from the central equilibrium");
  c.opts->add("t-max", o->t_max, "time budget per run");
  c.opts->add("growth", o->growth, "jump-off factor over the post-Hopf envelope minimum");
  c.opts->add("rel-tol", o->rel_tol, "integrator relative tolerance");
  c.opts->add("abs-tol", o->abs_tol, "integrator absolute tolerance");
  c.body = [o](Run& run) {
    ModelParams q = o->m.params();
    require(o->gamma > 0 && !o->v0.empty() && o->t_max > 0 && o->growth > 1, "bad ramp settings");
    for (double v : o->v0) require(v >= 0, "v0 must be non-negative");
    RampConfig rc;
    rc.t_max = o->t_max;
    rc.growth_factor = o->growth;
    rc.integ.rel_tol = o->rel_tol;
    rc.integ.abs_tol = o->abs_tol;
    run.set_numerics({{"integrator", to_json(rc.integ)}, {"envelope_quadrature", "Gauss-Kronrod 15, tol 1e-12"}});

    io::CsvTable summary({"v0", "gamma", "x0", "xdot0", "x_eq", "v_hopf", "outcome", "t_end", "v_jump", "tunnelling"});
    summary.add_comment(run.header());
    io::CsvTable env({"run", "t", "v", "amplitude", "predicted"});
    env.add_comment(run.header());
    env.add_comment("predicted: d0 exp(int c dv / gamma), c the real part of the central eigenvalue");

    std::vector<RampResult> results;
    double v_hi = 0.0;
    for (std::size_t k = 0; k < o->v0.size(); ++k) {
      q.v = o->v0[k];
      const State init = ramp_start(q, o->dx);
      RampResult res = ramp_run(q, o->gamma, init, rc);
      summary.add_row_text({io::fmt(res.v0), io::fmt(res.gamma), io::fmt(init.x), io::fmt(init.xdot),
                            io::fmt(res.x_eq), io::fmt(res.v_hopf), to_string(res.outcome), io::fmt(res.t_end),
                            io::fmt(res.v_jump), io::fmt(res.tunnelling)});
      std::printf("v0 = %-10.6g %-12s v_jump = %.6g tunnelling = %.6g\n", res.v0, to_string(res.outcome), res.v_jump,
                  res.tunnelling);

      const double v_end = res.v0 + res.gamma * res.t_end;
      v_hi = std::max(v_hi, v_end);
      std::unique_ptr<EnvelopePrediction> pred;
      try {
        pred = std::make_unique<EnvelopePrediction>(
            envelope_predict(q, o->gamma, res.v0, std::abs(o->dx), std::max(v_end, res.v0 + 1e-9)));
      } catch (const SolverError& e) {
        if (e.code() != ErrorCode::FocusLost) throw;
      }
      for (const auto& s : res.envelope) {
        const double p = pred ? std::exp(pred->log_d(s.v)) : std::nan("");
        env.add_row_text({std::to_string(k), io::fmt(s.t), io::fmt(s.v), io::fmt(s.amplitude), io::fmt(p)});
      }
      const std::string name = "ramp_run" + std::to_string(k) + ".csv";
      write_trajectory_csv(res.trajectory, run.path(name), run.header());
      run.record(run.path(name));
      results.push_back(std::move(res));
    }
    summary.write(run.path("ramp_summary.csv"));
    run.record(run.path("ramp_summary.csv"));
    env.write(run.path("ramp_envelope.csv"));
    run.record(run.path("ramp_envelope.csv"));

    io::SvgCanvas svg(0.0, std::max(v_hi, 1.0), -kHalfPi, kHalfPi);
    const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"};
    for (std::size_t k = 0; k < results.size(); ++k) {
      io::Polyline line;
      line.stroke = colours[k % 6];
      const auto& tr = results[k].trajectory;
      for (std::size_t i = 0; i < tr.states.size(); ++i) line.points.emplace_back(tr.v[i], tr.states[i].x);
      svg.add(line);
    }
    if (!results.empty()) svg.add({{{results[0].v_hopf, -kHalfPi}, {results[0].v_hopf, kHalfPi}}, "grey", 1.0, true});
    svg.write(run.path("ramp.svg"));
    run.record(run.path("ramp.svg"));
    return kOk;
  };
  cmds.push_back(std::move(c));
}

void add_basin(CLI::App& root, std::vector<Command>& cmds) {
  struct Opts {
    ModelOpts m{0.5, -0.01, 0.0, 0.1, 0.2};
    std::string mode = "ramp";
    double v0_min = 0.0, v0_max = -1.0;
    int n_v0 = 512;
    int log2_gamma_min = -5, log2_gamma_max = 0;
    double dx = -0.05;
    double v0 = -1.0, gamma = 0.01;
    double x_min = -1.0, x_max = 1.0, xdot_min = -1.0, xdot_max = 1.0;
    int nx = 256, ny = 256;
    double t_max = 5000.0;
  };
  auto o = std::make_shared<Opts>();
  Command c{"basin", root.add_subcommand("basin", "escape-outcome maps under a ramped wind")};
  o->m.bind(*c.opts, false);
  c.opts->add("mode", o->mode, "ramp: (v0, log2 gamma) map; ic: (x0, xdot0) map");
  c.opts->add("v0-min", o->v0_min, "ramp mode: smallest v0");
  c.opts->add("v0-max", o->v0_max, "ramp mode: largest v0 (negative: the Hopf velocity)");
  c.opts->add("n-v0", o->n_v0, "ramp mode: v0 samples");
  c.opts->add("log2-gamma-min", o->log2_gamma_min, "ramp mode: lowest log2 gamma row");
  c.opts->add("log2-gamma-max", o->log2_gamma_max, "ramp mode: highest log2 gamma row");
  c.opts->add("dx", o->dx, "ramp mode: start offset from the central equilibrium");
  c.opts->add("v0", o->v0, "ic mode: starting velocity (negative: half the Hopf velocity)");
  c.opts->add("gamma", o->gamma, "ic mode: ramp rate");
  c.opts->add("x-min", o->x_min, "ic mode");
  c.opts->add("x-max", o->x_max, "ic mode");
  c.opts->add("xdot-min", o->xdot_min, "ic mode");
  c.opts->add("xdot-max", o->xdot_max, "ic mode");
  c.opts->add("nx", o->nx, "ic mode: x0 samples");
  c.opts->add("ny", o->ny, "ic mode: xdot0 samples");
  c.opts->add("t-max", o->t_max, "time budget per run");
  c.body = [o](Run& run) {
    ModelParams q = o->m.params();
    require(o->mode == "ramp" || o->mode == "ic", "mode must be ramp or ic");
    require(o->t_max > 0, "t-max must be positive");
    const double vh = hopf_velocity(q);
    RampConfig rc = no_record();
    rc.t_max = o->t_max;
    run.set_numerics({{"integrator", to_json(rc.integ)}});
    BasinMap map;
    if (o->mode == "ramp") {
      const double hi = o->v0_max < 0 ? vh : o->v0_max;
      require(o->n_v0 >= 2 && o->v0_min >= 0 && hi > o->v0_min, "bad v0 range");
      require(o->log2_gamma_min <= o->log2_gamma_max, "bad log2 gamma range");
      q.v = o->v0_min;
      const State init = ramp_start(q, o->dx);
      std::vector<double> lg;
      for (int g = o->log2_gamma_min; g <= o->log2_gamma_max; ++g) lg.push_back(g);
      map = basin_map_ramp(q, linspace(o->v0_min, hi, o->n_v0), lg, init, rc, run.workers());
    } else {
      require(o->nx >= 2 && o->ny >= 2 && o->x_max > o->x_min && o->xdot_max > o->xdot_min && o->gamma > 0,
              "bad ic grid");
      q.v = o->v0 < 0 ? 0.5 * vh : o->v0;
      map = basin_map_ic(q, o->gamma, linspace(o->x_min, o->x_max, o->nx),
                         linspace(o->xdot_min, o->xdot_max, o->ny), rc, run.workers());
    }
    const std::string stem = o->mode == "ramp" ? "basin_ramp" : "basin_ic";
    write_basin(map, run.path(stem), run.header());
    run.record(run.path(stem + ".csv"));
    run.record(run.path(stem + ".pgm"));
    std::printf("EscapeLeft %d  EscapeRight %d  Captured %d\n", map.count(RampOutcome::EscapeLeft),
                map.count(RampOutcome::EscapeRight), map.count(RampOutcome::Captured));
    if (o->mode == "ramp") {
      for (std::size_t j = 0; j < map.ys.size(); ++j) {
        std::printf("  log2 gamma %+g: %d flips\n", map.ys[j], outcome_flips(map.row(j)));
      }
    }
    return kOk;
  };
  cmds.push_back(std::move(c));
}

void add_normal_form(CLI::App& root, std::vector<Command>& cmds) {
  struct Opts {
    double w_min = -0.5, w_max = 0.5, p_min = -0.5, p_max = 0.5;
    int n_w = 21, n_p = 21;
    double s_w = -0.04, s_p_lo = -0.5, s_p_hi = -0.05;
  };
  auto o = std::make_shared<Opts>();
  Command c{"normal-form", root.add_subcommand("normal-form", "portrait chart of the symmetric normal form")};
  c.opts->add("w-min", o->w_min, "");
  c.opts->add("w-max", o->w_max, "");
  c.opts->add("n-w", o->n_w, "");
  c.opts->add("p-min", o->p_min, "");
  c.opts->add("p-max", o->p_max, "");
  c.opts->add("n-p", o->n_p, "");
  c.opts->add("s-w", o->s_w, "w of the p-sweep locating the saddle connection");
  c.opts->add("s-p-lo", o->s_p_lo, "sweep bracket start");
  c.opts->add("s-p-hi", o->s_p_hi, "sweep bracket end");
  c.body = [o](Run& run) {
    require(o->n_w >= 1 && o->n_p >= 1 && o->w_min <= o->w_max && o->p_min <= o->p_max, "bad normal-form grid");
    require(o->s_p_lo < o->s_p_hi, "s-p-lo must be below s-p-hi");
    const auto ws = linspace(o->w_min, o->w_max, o->n_w);
    const auto ps = linspace(o->p_min, o->p_max, o->n_p);
    run.set_numerics({{"portrait", to_json(PortraitOptions{})}, {"connection_width", 1e-8}});
    const NormalFormChart chart = normal_form_chart(ws, ps, {}, run.workers());
    write_normal_form_chart(chart, run.path("normal_form"), run.header());
    run.record(run.path("normal_form.csv"));

    const ConnectionPoint s = normal_form_connection(o->s_w, o->s_p_lo, o->s_p_hi);
    io::CsvTable t({"w", "p", "p_lo", "p_hi", "bracket", "p_over_5"});
    t.add_comment(run.header());
    t.add_comment("saddle connection between the outer equilibria on a p-sweep at fixed w");
    t.add_row({o->s_w, s.parameter_value, s.lo, s.hi, s.bracket_width, s.parameter_value / 5.0});
    t.write(run.path("normal_form_S.csv"));
    run.record(run.path("normal_form_S.csv"));
    std::printf("cells %zu, failures %d; S at w = %g: p = %.10g\n", chart.cells.size(), chart.failures(), o->s_w,
                s.parameter_value);
    return chart.failures() > 0 ? kPartialFailure : kOk;
  };
  cmds.push_back(std::move(c));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Galloping-buckling oscillator: simulation and bifurcation toolkit", "gallop"};
  app.require_subcommand(1);
  app.set_version_flag("--version", GALLOP_VERSION);
  std::string config_path;
  const char* env_out = std::getenv("GALLOP_OUT_DIR");
  std::string out_dir = env_out != nullptr && *env_out != '\0' ? env_out : ".";
  int workers = 1;
  app.add_option("--config", config_path, "JSON config (options object or a previous run manifest)");
  app.add_option("--out", out_dir, "output directory (default: $GALLOP_OUT_DIR or .)");
  app.add_option("--workers", workers, "worker threads for grid maps")->check(CLI::PositiveNumber);
  app.fallthrough();

  std::vector<Command> cmds;
  add_equilibria(app, cmds);
  add_hopf(app, cmds);
  add_branch(app, cmds);
  add_portrait(app, cmds);
  add_ellipsoid(app, cmds);
  add_ramp(app, cmds);
  add_basin(app, cmds);
  add_normal_form(app, cmds);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  Command* cmd = nullptr;
  for (auto& c : cmds) {
    if (c.app->parsed()) cmd = &c;
  }

  std::unique_ptr<Run> run;
  const auto start = std::chrono::steady_clock::now();
  auto finish = [&](int code) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (run) run->write_manifest(wall, code);
    return code;
  };
  try {
    if (!config_path.empty()) cmd->opts->apply(load_config(config_path, cmd->name));
    run = std::make_unique<Run>(cmd->name, cmd->opts->echo(), out_dir, workers);
    return finish(cmd->body(*run));
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "gallop %s: config error: %s\n", cmd->name.c_str(), e.what());
    return finish(kConfigError);
  } catch (const SolverError& e) {
    const bool bad_input = e.code() == ErrorCode::InvalidArgument;
    std::fprintf(stderr, "gallop %s: %s: %s\n", cmd->name.c_str(), bad_input ? "invalid input" : "solver failure",
                 e.what());
    return finish(bad_input ? kConfigError : kSolverFailure);
  }
}
