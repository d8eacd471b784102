#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gallop/connections.hpp"
#include "gallop/equilibria.hpp"

using namespace gallop;
using Catch::Approx;

namespace {

ParamFamily v_family(double b, double e) {
  return [b, e](double v) { return ModelParams{b, e, v, 0.1, 0.1}; };
}

}  // namespace

TEST_CASE("connection names", "[connections]") {
  CHECK(ConnectionSpec{SaddleSide::Left, SaddleSide::Left}.name() == "homoclinic-left");
  CHECK(ConnectionSpec{SaddleSide::Left, SaddleSide::Right}.name() == "heteroclinic-left-right");
  CHECK(ConnectionSpec{SaddleSide::Right, SaddleSide::Left}.kind() == ConnectionKind::Heteroclinic);
}

TEST_CASE("saddle manifolds leave along the eigenvectors", "[connections]") {
  const ModelParams q{0.5, -0.01, 1.0, 0.1, 0.1};
  const auto eqs = find_equilibria(q);
  ManifoldOptions opt;
  opt.t_max = 5.0;
  const ManifoldBranch m = manifold_branch(q, eqs[0], ManifoldKind::Unstable, 1, opt);
  REQUIRE(m.trajectory.states.size() > 2);
  CHECK(m.trajectory.states.front().x > eqs[0].state.x);
}

TEST_CASE("homoclinic and heteroclinic velocities at e = 0.003, b = 0.175", "[connections]") {
  const ConnectionPoint hl =
      find_connection(v_family(0.175, 0.003), 0.85, 0.95, {SaddleSide::Left, SaddleSide::Left});
  CHECK(hl.bracket_width <= 1e-8);
  CHECK(hl.parameter_value == Approx(0.8934824).margin(2e-7));
  CHECK(hl.miss_lo * hl.miss_hi <= 0.0);
  const ConnectionPoint lr =
      find_connection(v_family(0.175, 0.003), 1.1, 1.3, {SaddleSide::Left, SaddleSide::Right});
  CHECK(lr.bracket_width <= 1e-8);
  CHECK(lr.parameter_value == Approx(1.2154082).margin(2e-7));
}

TEST_CASE("bracket without a sign change is rejected", "[connections]") {
  CHECK_THROWS(find_connection(v_family(0.175, 0.003), 0.3, 0.4, {SaddleSide::Left, SaddleSide::Left}));
}

TEST_CASE("portrait classes along the e = 0.003 family", "[connections]") {
  const auto at = [](double v) { return classify_portrait(ModelParams{0.175, 0.003, v, 0.1, 0.1}); };
  const PortraitClass a = at(0.6);
  CHECK(a.n_cycles() == 0);
  CHECK(a.escape == Escape::Bounded);
  const PortraitClass c = at(1.0);
  CHECK(c.n_cycles() == 1);
  CHECK(c.escape == Escape::LeftOnly);
  const PortraitClass d = at(1.5);
  CHECK(d.escape == Escape::Indeterminate);
  const PortraitClass e = at(2.0);
  CHECK(e.eq_classes[1] == EqClass::UnstableFocus);
  CHECK(e.escape == Escape::Indeterminate);
}

TEST_CASE("portraits mirror under e -> -e", "[connections][property]") {
  for (const double v : {0.6, 1.0, 1.5, 2.0}) {
    const PortraitClass p = classify_portrait(ModelParams{0.175, 0.003, v, 0.1, 0.1});
    const PortraitClass m = classify_portrait(ModelParams{0.175, -0.003, v, 0.1, 0.1});
    CHECK(p.mirrored().code() == m.code());
    CHECK(p.mirrored().mirrored().code() == p.code());
  }
}

TEST_CASE("symmetric portraits are their own mirror image", "[connections][property]") {
  for (const double v : {0.8, 1.4, 2.2}) {
    const PortraitClass p = classify_portrait(ModelParams{0.3, 0.0, v, 0.1, 0.1});
    CHECK(p.mirrored().code() == p.code());
    CHECK(p.escape != Escape::LeftOnly);
    CHECK(p.escape != Escape::RightOnly);
  }
}

TEST_CASE("manifold and probe escape agree away from connections", "[connections]") {
  const ModelParams q{0.175, 0.003, 1.0, 0.1, 0.1};
  const GallopingField f(q);
  const auto eqs = find_equilibria(f);
  const PortraitClass pc = classify_portrait(f);
  CHECK(escape_from_probes(f, eqs, pc.cycles) == pc.escape);
}

TEST_CASE("single-well portrait", "[connections]") {
  const PortraitClass p = classify_portrait(ModelParams{-0.1, 0.0, 1.0, 0.1, 0.1});
  CHECK(p.n_equilibria == 1);
  CHECK(p.n_cycles() == 0);
}
