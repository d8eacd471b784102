#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gallop/errors.hpp"
#include "gallop/integrator.hpp"
#include "gallop/model.hpp"

using namespace gallop;
using Catch::Approx;

TEST_CASE("cf is odd and has slope 16/15 at the origin", "[model]") {
  for (double a : {1e-6, 0.01, 0.05, 0.1, 0.2, 0.4}) {
    CHECK(cf(-a) == -cf(a));
    CHECK(cf_prime(-a) == cf_prime(a));
  }
  CHECK(cf(0.0) == 0.0);
  CHECK(cf_prime(0.0) == Approx(16.0 / 15.0).epsilon(1e-15));
}

TEST_CASE("cf matches its polynomial on the positive side", "[model]") {
  const double a = 0.07;
  const double y = 8.0 * a;
  const double expect = 2.0 * y / 15.0 + y * y * y / 3.0 - std::pow(y, 4) / 10.0 - std::pow(y, 5) / 15.0;
  CHECK(cf(a) == Approx(expect).epsilon(1e-14));
}

TEST_CASE("cf_prime agrees with a central difference", "[model]") {
  const double h = 1e-6;
  for (double a : {-0.3, -0.1, 0.02, 0.15, 0.3}) {
    CHECK(cf_prime(a) == Approx((cf(a + h) - cf(a - h)) / (2 * h)).epsilon(1e-7));
  }
}

TEST_CASE("aerodynamic terms vanish at zero wind", "[model]") {
  CHECK(aero_force(0.3, 0.0, 0.1) == 0.0);
  CHECK(aero_damping_slope(0.3, 0.0, 0.1) == 0.0);
  CHECK(aero_velocity_slope(0.3, 0.0, 0.1) == 0.0);
}

TEST_CASE("Jacobian matches finite differences", "[model][property]") {
  const double h = 1e-6;
  for (const ModelParams q : {ModelParams{0.5, -0.01, 1.875, 0.1, 0.1}, ModelParams{0.175, 0.003, 1.2, 0.1, 0.1},
                              ModelParams{-0.1, 0.02, 0.4, 0.3, 0.05}}) {
    for (const State s : {State{0.1, 0.05}, State{-0.6, -0.2}, State{1.2, 0.4}, State{0.0, 0.0}}) {
      const Mat2 J = jacobian(s, q);
      const State xp = rhs({s.x + h, s.xdot}, q), xm = rhs({s.x - h, s.xdot}, q);
      const State yp = rhs({s.x, s.xdot + h}, q), ym = rhs({s.x, s.xdot - h}, q);
      CHECK(std::abs(J.a11 - (xp.x - xm.x) / (2 * h)) < 1e-5);
      CHECK(std::abs(J.a21 - (xp.xdot - xm.xdot) / (2 * h)) < 1e-5);
      CHECK(std::abs(J.a12 - (yp.x - ym.x) / (2 * h)) < 1e-5);
      CHECK(std::abs(J.a22 - (yp.xdot - ym.xdot) / (2 * h)) < 1e-5);
    }
  }
}

TEST_CASE("potential is the antiderivative of the static force", "[model]") {
  const ModelParams q{0.5, -0.01, 0.0, 0.1, 0.1};
  const double h = 1e-6;
  for (double x : {-1.2, -0.4, 0.0, 0.3, 1.1}) {
    CHECK((potential(x + h, q) - potential(x - h, q)) / (2 * h) == Approx(static_force(x, q.b, q.e)).margin(1e-8));
  }
}

TEST_CASE("energy is conserved without damping or wind", "[model][property]") {
  const ModelParams q{0.5, -0.01, 0.0, 0.1, 0.0};
  const GallopingField f(q);
  IntegratorConfig cfg = golden_config();
  cfg.t_max = 100.0;
  cfg.rel_tol = 1e-12;
  cfg.abs_tol = 1e-14;
  const Trajectory tr = integrate(f, {0.3, 0.1}, cfg);
  auto energy = [&](const State& s) { return 0.5 * s.xdot * s.xdot + potential(s.x, q); };
  const double e0 = energy(tr.states.front());
  double drift = 0.0;
  for (const auto& s : tr.states) drift = std::max(drift, std::abs(energy(s) - e0));
  CHECK(tr.t.back() == Approx(100.0));
  CHECK(drift < 1e-7);
}

TEST_CASE("fields are odd under x -> -x when e = 0", "[model][property]") {
  const ModelParams q{0.3, 0.0, 1.4, 0.1, 0.1};
  const NormalFormParams n{-0.2, -0.3};
  for (const State s : {State{0.2, 0.1}, State{-0.9, 0.5}, State{1.3, -0.7}}) {
    const State a = rhs(s, q);
    const State b = rhs({-s.x, -s.xdot}, q);
    CHECK(b.x == Approx(-a.x));
    CHECK(b.xdot == Approx(-a.xdot).margin(1e-15));
    const State c = normal_form_rhs(s, n);
    const State d = normal_form_rhs({-s.x, -s.xdot}, n);
    CHECK(d.xdot == Approx(-c.xdot).margin(1e-15));
  }
}

TEST_CASE("normal form right-hand side", "[model]") {
  const State s{0.5, -0.2};
  const State f = normal_form_rhs(s, {0.1, -0.3});
  CHECK(f.x == -0.2);
  CHECK(f.xdot == Approx(0.1 * -0.2 + 0.25 * -0.2 - 0.3 * 0.5 + 0.125));
}

TEST_CASE("parameter validation", "[model]") {
  CHECK_THROWS_AS((ModelParams{0.5, 0.0, 1.0, 0.1, -0.1}.validate()), SolverError);
  CHECK_THROWS_AS((ModelParams{0.5, 0.0, -1.0, 0.1, 0.1}.validate()), SolverError);
  CHECK_THROWS_AS((ModelParams{0.5, std::nan(""), 1.0, 0.1, 0.1}.validate()), SolverError);
  CHECK_NOTHROW(ModelParams{}.validate());
}

TEST_CASE("nondimensionalisation scales the load to one", "[model]") {
  DimensionalParams d;
  d.m = 2.0;
  d.g = 9.81;
  d.L1 = 0.5;
  d.L2 = 0.8;
  d.k = 1.5 * (d.g / d.L1) * d.m * d.L1 * d.L1 / (d.L2 * d.L2);
  d.y0 = 0.008;
  d.V = 3.0;
  d.rho = 1.2;
  d.a = 0.1;
  d.r = 0.2;
  const ModelParams q = nondimensionalize(d);
  const double A = d.g / d.L1;
  CHECK(q.b == Approx(0.5));
  CHECK(q.e == Approx(0.01));
  CHECK(q.v == Approx(d.V / d.L1 / std::sqrt(A)));
  CHECK(q.p == Approx(d.rho * d.a * d.L1 / d.m));
  CHECK(q.r == Approx(d.r / std::sqrt(A)));
  d.g = 0.0;
  CHECK_THROWS_AS(nondimensionalize(d), SolverError);
}
