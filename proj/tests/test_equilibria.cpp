#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gallop/equilibria.hpp"

using namespace gallop;
using Catch::Approx;

TEST_CASE("three equilibria at b = 0.5, e = 0", "[equilibria]") {
  const auto eqs = find_equilibria(ModelParams{0.5, 0.0, 1.0, 0.1, 0.1});
  REQUIRE(eqs.size() == 3);
  // (1 + b) cos x = 1 off the trivial root.
  const double xs = std::acos(2.0 / 3.0);
  CHECK(eqs[0].state.x == Approx(-xs).epsilon(1e-12));
  CHECK(eqs[1].state.x == Approx(0.0).margin(1e-14));
  CHECK(eqs[2].state.x == Approx(xs).epsilon(1e-12));
  CHECK(eqs[0].is_saddle());
  CHECK(eqs[2].is_saddle());
  CHECK(eqs[1].cls == EqClass::StableFocus);
  CHECK(eqs[1].state.x == central_equilibrium(eqs).state.x);
}

TEST_CASE("single equilibrium past the pitchfork", "[equilibria]") {
  const auto eqs = find_equilibria(ModelParams{-0.1, 0.0, 1.0, 0.1, 0.1});
  REQUIRE(eqs.size() == 1);
  CHECK(eqs[0].is_saddle());
}

TEST_CASE("equilibria do not depend on v", "[equilibria][property]") {
  for (const double e : {-0.01, 0.0, 0.003}) {
    const auto ref = find_equilibria(ModelParams{0.3, e, 0.0, 0.1, 0.1});
    for (const double v : {0.5, 1.875, 3.0}) {
      const auto eqs = find_equilibria(ModelParams{0.3, e, v, 0.1, 0.1});
      REQUIRE(eqs.size() == ref.size());
      for (std::size_t i = 0; i < eqs.size(); ++i) CHECK(eqs[i].state.x == ref[i].state.x);
    }
  }
}

TEST_CASE("equilibria mirror under e -> -e", "[equilibria][property]") {
  const auto a = find_equilibria(ModelParams{0.5, 0.01, 1.0, 0.1, 0.1});
  const auto b = find_equilibria(ModelParams{0.5, -0.01, 1.0, 0.1, 0.1});
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].state.x == Approx(-b[a.size() - 1 - i].state.x).margin(1e-13));
}

TEST_CASE("Hopf velocity analytic and numeric", "[equilibria]") {
  CHECK(std::abs(hopf_velocity(ModelParams{0.5, 0.0, 1.0, 0.1, 0.1}) - 1.875) < 1e-12);
  CHECK(std::abs(hopf_velocity(ModelParams{0.5, 0.0, 1.0, 0.1, 0.2}) - 3.75) < 1e-12);
  for (const double b : {0.2, 0.5}) {
    for (const double e : {-0.01, 0.0, 0.01}) {
      CHECK(std::abs(hopf_velocity_numeric(ModelParams{b, e, 1.0, 0.1, 0.1}) - 1.875) < 1e-6);
    }
  }
}

TEST_CASE("eigenvalue classification", "[equilibria]") {
  const ModelParams q{0.5, 0.0, 1.0, 0.1, 0.1};
  CHECK(eigen_classify({0.0, 0.0}, ModelParams{0.5, 0.0, 1.875, 0.1, 0.1}).cls == EqClass::Center);
  CHECK(eigen_classify({0.0, 0.0}, ModelParams{0.5, 0.0, 2.5, 0.1, 0.1}).cls == EqClass::UnstableFocus);
  CHECK(eigen_classify({0.0, 0.0}, q).cls == EqClass::StableFocus);
  CHECK_THROWS(eigen_classify({0.3, 0.0}, q));
}

TEST_CASE("perfect-system static path", "[equilibria]") {
  const StaticPath path = static_path(0.0, -0.5, 1.0);
  REQUIRE_FALSE(path.branch_points.empty());
  CHECK(path.branch_points.front().b == Approx(0.0).margin(1e-8));
  int checked = 0;
  for (const auto& p : path.points) {
    if (std::abs(p.x) < 1e-3) continue;
    // A = B cos x with A = 1 and B = 1 + b.
    CHECK(std::abs((1.0 + p.b) * std::cos(p.x) - 1.0) < 1e-10);
    ++checked;
  }
  CHECK(checked > 10);
}

TEST_CASE("imperfect static path has a fold", "[equilibria]") {
  const StaticFold f = static_fold(0.01);
  CHECK(f.b > 0.0);
  CHECK(static_stiffness(f.x, f.b, 0.01) == Approx(0.0).margin(1e-9));
  CHECK(static_force(f.x, f.b, 0.01) == Approx(0.0).margin(1e-9));
}

TEST_CASE("imperfection sensitivity follows a two-thirds law", "[equilibria]") {
  std::vector<double> es;
  for (int k = 0; k <= 8; ++k) es.push_back(1e-4 * std::pow(10.0, k / 4.0));
  const SensitivityResult r = imperfection_sensitivity(es);
  CHECK(r.rows.size() == es.size());
  CHECK(std::abs(r.exponent - 2.0 / 3.0) < 0.034);
}
