#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "gallop/errors.hpp"
#include "gallop/integrator.hpp"
#include "gallop/model.hpp"

using namespace gallop;
using Catch::Approx;

namespace {

State oscillator(const State& s) { return {s.xdot, -s.x}; }

}  // namespace

TEST_CASE("harmonic oscillator against the exact solution", "[integrator]") {
  IntegratorConfig cfg = golden_config();
  cfg.t_max = 20.0;
  const Trajectory tr = integrate(oscillator, {1.0, 0.0}, cfg);
  REQUIRE(tr.t.back() == Approx(20.0));
  double err = 0.0;
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    err = std::max(err, std::abs(tr.states[i].x - std::cos(tr.t[i])));
    err = std::max(err, std::abs(tr.states[i].xdot + std::sin(tr.t[i])));
  }
  CHECK(err < 1e-8);
  CHECK(tr.stop_kind() == EventKind::TimeOut);
}

TEST_CASE("section events are located on the crossing", "[integrator]") {
  IntegratorConfig cfg = golden_config();
  cfg.t_max = 10.0;
  const std::vector<EventSpec> ev{{EventKind::SectionCross, [](double, const State& s) { return s.x; }, -1, false, 7}};
  const Trajectory tr = integrate(oscillator, {1.0, 0.0}, cfg, ev);
  std::vector<double> hits;
  for (const auto& e : tr.events) {
    if (e.kind == EventKind::SectionCross) {
      CHECK(e.tag == 7);
      CHECK(e.direction == -1);
      hits.push_back(e.t);
    }
  }
  REQUIRE(hits.size() == 2);
  CHECK(hits[0] == Approx(std::numbers::pi / 2).margin(1e-9));
  CHECK(hits[1] == Approx(2.5 * std::numbers::pi).margin(1e-9));
}

TEST_CASE("turning-point section fires in both directions", "[integrator]") {
  IntegratorConfig cfg = golden_config();
  cfg.t_max = 7.0;
  const std::vector<EventSpec> ev{section_xdot_zero(0)};
  const Trajectory tr = integrate(oscillator, {0.0, 1.0}, cfg, ev);
  int n = 0;
  for (const auto& e : tr.events) n += e.kind == EventKind::SectionCross;
  CHECK(n == 2);
}

TEST_CASE("escape events stop the run on the correct side", "[integrator]") {
  IntegratorConfig cfg = golden_config();
  cfg.t_max = 100.0;
  const auto ev = escape_events(kHalfPi);
  const AutonomousField drift = [](const State& s) { return State{s.xdot, 0.0}; };
  const Trajectory right = integrate(drift, {0.0, 1.0}, cfg, ev);
  REQUIRE(right.stop_kind() == EventKind::Escape);
  CHECK(right.last_event().tag == 1);
  CHECK(right.last_event().t == Approx(kHalfPi).margin(1e-9));
  const Trajectory left = integrate(drift, {0.0, -2.0}, cfg, ev);
  CHECK(left.last_event().tag == -1);
}

TEST_CASE("convergence event fires after the dwell time", "[integrator]") {
  IntegratorConfig cfg = golden_config();
  cfg.t_max = 200.0;
  const AutonomousField damped = [](const State& s) { return State{s.xdot, -s.x - 0.5 * s.xdot}; };
  const Trajectory tr = integrate(damped, {1.0, 0.0}, cfg, {}, ConvergenceSpec{{0.0, 0.0}, 1e-6, 2.0});
  CHECK(tr.stop_kind() == EventKind::Converged);
  CHECK(tr.t.back() < 200.0);
}

TEST_CASE("ramped field records the wind speed", "[integrator]") {
  const ModelParams q{0.5, -0.01, 0.0, 0.1, 0.1};
  IntegratorConfig cfg = golden_config();
  cfg.t_max = 5.0;
  const Trajectory tr =
      integrate_nonautonomous(ramped_field(q, 0.3, 0.02), {0.0, 0.0}, cfg, {}, 0.0, [](double t) { return 0.3 + 0.02 * t; });
  REQUIRE(tr.v.size() == tr.t.size());
  CHECK(tr.v.back() == Approx(0.4));
}

TEST_CASE("integrations are deterministic", "[integrator][property]") {
  const GallopingField f({0.175, 0.003, 1.1, 0.1, 0.1});
  IntegratorConfig cfg = golden_config();
  cfg.t_max = 50.0;
  const Trajectory a = integrate(f, {0.2, 0.0}, cfg);
  const Trajectory b = integrate(f, {0.2, 0.0}, cfg);
  CHECK(a.t == b.t);
  CHECK(a.states == b.states);
}

TEST_CASE("invalid integrator settings are rejected", "[integrator]") {
  IntegratorConfig cfg;
  cfg.rel_tol = -1.0;
  CHECK_THROWS_AS(cfg.validate(), SolverError);
  cfg = IntegratorConfig{};
  cfg.max_step = 0.0;
  CHECK_THROWS_AS(cfg.validate(), SolverError);
}

TEST_CASE("non-finite states raise an error", "[integrator]") {
  IntegratorConfig cfg = golden_config();
  cfg.t_max = 10.0;
  const AutonomousField blowup = [](const State& s) { return State{s.x * s.x, 0.0}; };
  CHECK_THROWS_AS(integrate(blowup, {1.0, 0.0}, cfg), SolverError);
}
