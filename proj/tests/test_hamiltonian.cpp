#include <cmath>
#include <vector>

#include "doctest.h"
#include "wkam/hamiltonian.hpp"

using namespace wkam;

TEST_SUITE("hamiltonian") {
  TEST_CASE("kinetic Lagrangian in closed form") {
    const HamiltonianModel m = make_kinetic(2);
    CHECK(m.H({0, 0}, {1, 1}) == doctest::Approx(1.0));
    CHECK(lagrangian(m, {0, 0}, {1, 1}).value() == doctest::Approx(1.0));
    CHECK(lagrangian(m, {0.3, 0.1}, {0, 0}).value() == 0.0);
  }

  TEST_CASE("mechanical Lagrangian adds the potential") {
    const HamiltonianModel m = make_mechanical(Expr::parse("x^2 + y^2"), 2);
    CHECK(lagrangian(m, {0.5, 0.0}, {0, 0}).value() == doctest::Approx(0.25));
    CHECK(lagrangian(m, {0.5, 0.0}, {2, 0}).value() == doctest::Approx(2.25));
    CHECK(m.H({0.5, 0.0}, {0, 0}) == doctest::Approx(-0.25));
  }

  TEST_CASE("shifted model solves H = a") {
    const HamiltonianModel m = make_kinetic(2).shifted(0.5);
    CHECK(m.H({0, 0}, {1, 0}) == doctest::Approx(0.0));
    CHECK(m.H_raw({0, 0}, {1, 0}) == doctest::Approx(0.5));
    CHECK(m.analytic_L({0, 0}, {0, 0}).value() == doctest::Approx(0.5));
  }

  TEST_CASE("eikonal Lagrangian is an indicator of the speed ball") {
    const HamiltonianModel m = make_eikonal(Expr::parse("1 + x"), 2);
    CHECK(lagrangian(m, {0.5, 0}, {1.0, 0}).value() == doctest::Approx(1.5));
    CHECK(lagrangian(m, {0.5, 0}, {2.0, 0}).is_infinite());
  }

  TEST_CASE("numeric Legendre transform agrees with the closed forms") {
    const LagrangianOptions opt{};
    const std::vector<HamiltonianModel> models{
        make_kinetic(2), make_mechanical(Expr::parse("0.5*(x-0.3)^2 + y^2"), 2),
        make_anisotropic(Expr::parse("2"), Expr::parse("0.3"), Expr::parse("1 + 0.5*x^2"), Expr::parse("y"), 2)};
    for (const HamiltonianModel& m : models) {
      for (const Vec2 x : {Vec2{0, 0}, Vec2{0.4, -0.3}, Vec2{-0.7, 0.2}}) {
        for (const Vec2 xi : {Vec2{0, 0}, Vec2{1.0, -0.5}, Vec2{0.2, 0.9}}) {
          const double exact = lagrangian(m, x, xi).value();
          const ExtReal num = lagrangian_numeric(m, x, xi, opt);
          REQUIRE(num.is_finite());
          CHECK(std::abs(num.value() - exact) <= 10 * opt.tol * (1 + std::abs(exact)));
        }
      }
    }
  }

  TEST_CASE("numeric Legendre transform of a general H") {
    // H = |p|^4 / 4, L = (3/4)|xi|^(4/3).
    const HamiltonianModel m = make_numeric(
        [](const Vec2&, const Vec2& p) {
          const double r2 = dot(p, p);
          return 0.25 * r2 * r2;
        },
        2, 1.0, "quartic");
    const Vec2 xi{0.8, 0.0};
    CHECK(lagrangian(m, {0, 0}, xi).value() == doctest::Approx(0.75 * std::pow(0.8, 4.0 / 3.0)).epsilon(1e-6));
  }

  TEST_CASE("numeric transform of the eikonal grows without bound outside the ball") {
    const HamiltonianModel eik = make_eikonal(Expr::parse("1"), 2);
    CHECK(lagrangian_numeric(eik, {0, 0}, {3.0, 0}).is_infinite());
    CHECK(lagrangian_numeric(eik, {0, 0}, {0.5, 0}).value() == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("control bound and lower envelope") {
    const HamiltonianModel m = make_kinetic(2);
    const std::vector<Vec2> xs{{0, 0}, {0.5, 0.5}};
    // C1 = max |H| on B(0, 2) = 2, so C = 5 / 1.
    CHECK(control_bound(m, xs, 1.0) == doctest::Approx(5.0).epsilon(1e-3));
    CHECK(lagrangian_lower_envelope(m, xs, 2.0) == doctest::Approx(2.0).epsilon(1e-3));
    // L(ξ) ≥ A|ξ| − C_A on samples.
    const double C = lagrangian_lower_envelope(m, xs, 2.0);
    for (double r = 0; r < 5; r += 0.25) CHECK(0.5 * r * r >= 2.0 * r - C - 1e-9);
  }

  TEST_CASE("model checks flag non-convex and non-coercive H") {
    const std::vector<Vec2> xs{{0, 0}, {0.5, 0.1}, {-0.3, 0.4}};
    CHECK(check_model(make_mechanical(Expr::parse("x*y"), 2), xs).ok());
    const HamiltonianModel bumpy = make_numeric(
        [](const Vec2&, const Vec2& p) { return 0.5 * dot(p, p) + std::cos(4 * p.x); }, 2, 1.0, "bumpy");
    CHECK(check_model(bumpy, xs).convexity_defect > 1e-3);
    const HamiltonianModel flat = make_numeric([](const Vec2&, const Vec2& p) { return std::tanh(p.x); }, 2, 1.0,
                                               "bounded");
    CHECK_FALSE(check_model(flat, xs).coercive);
  }

  TEST_CASE("ExtReal arithmetic") {
    CHECK((ExtReal::infinite() + 3.0).is_infinite());
    CHECK((ExtReal(1.0) + 2.0).value() == 3.0);
    CHECK(ExtReal::infinite().value_or(-1.0) == -1.0);
  }
}
