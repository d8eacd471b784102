#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "gallop/connections.hpp"
#include "gallop/cycles.hpp"
#include "gallop/equilibria.hpp"

using namespace gallop;
using Catch::Approx;

TEST_CASE("Floquet identity on unstable cycles", "[cycles][property]") {
  for (const ModelParams q : {ModelParams{0.175, 0.003, 1.0, 0.1, 0.1}, ModelParams{0.5, -0.01, 1.5, 0.1, 0.1},
                              ModelParams{0.5, -0.01, 1.8, 0.1, 0.1}}) {
    const PortraitClass pc = classify_portrait(q);
    REQUIRE(pc.n_cycles() >= 1);
    for (const auto& c : pc.cycles) {
      CHECK(std::abs(c.multiplier - c.multiplier_fd) < 1e-4 * c.multiplier);
      CHECK(c.stable == (c.multiplier < 1.0));
    }
  }
}

TEST_CASE("small cycle near the Hopf point has the linear period", "[cycles]") {
  const ModelParams q{0.5, 0.0, 1.87, 0.1, 0.1};
  const GallopingField f(q);
  const auto eqs = find_equilibria(f);
  const ReturnMap map(f, central_equilibrium(eqs).state.x);
  const PortraitClass pc = classify_portrait(f);
  REQUIRE(pc.n_cycles() == 1);
  const double omega = std::abs(central_equilibrium(eqs).eigenvalues.first.imag());
  CHECK(pc.cycles[0].period == Approx(2 * std::numbers::pi / omega).epsilon(0.01));
  CHECK_FALSE(pc.cycles[0].stable);
  // Fixed point of the return map.
  const ReturnResult r = map(pc.cycles[0].section_state.x);
  REQUIRE(r.returned());
  CHECK(r.state.x == Approx(pc.cycles[0].section_state.x).margin(1e-8));
}

TEST_CASE("no cycles past the Hopf point on the stable side", "[cycles]") {
  const PortraitClass pc = classify_portrait(ModelParams{0.5, -0.01, 0.5, 0.1, 0.1});
  CHECK(pc.n_cycles() == 0);
}

TEST_CASE("Newton refinement reproduces a census cycle", "[cycles]") {
  // Between the cyclic fold and the Hopf point: unstable inner, stable outer.
  const ModelParams q{0.5, -0.01, 1.5, 0.1, 0.1};
  const PortraitClass pc = classify_portrait(q);
  REQUIRE(pc.n_cycles() == 2);
  CHECK_FALSE(pc.cycles[0].stable);
  CHECK(pc.cycles[1].stable);
  const GallopingField f(q);
  const ReturnMap map(f, central_equilibrium(find_equilibria(f)).state.x);
  const LimitCycle c = find_cycle(map, pc.cycles[0].section_state.x * 1.001);
  CHECK(c.section_state.x == Approx(pc.cycles[0].section_state.x).margin(1e-8));
  CHECK(c.period == Approx(pc.cycles[0].period).epsilon(1e-6));
}

TEST_CASE("branch from the Hopf point starts subcritically", "[cycles]") {
  ContinuationConfig cc;
  cc.max_points = 25;
  const CycleBranch br = continue_branch_from_hopf(ModelParams{0.5, -0.01, 1.875, 0.1, 0.1}, cc);
  REQUIRE(br.cycles.size() >= 5);
  CHECK(br.hopf_v == Approx(1.875));
  for (std::size_t i = 1; i < 5; ++i) {
    CHECK(br.cycles[i].v < 1.875);
    CHECK_FALSE(br.cycles[i].stable);
  }
  CHECK(br.end == BranchEnd::MaxPoints);
}
