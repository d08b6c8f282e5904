#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <vector>

#include "doctest.h"
#include "wkam/kernels.hpp"
#include "wkam/lax_oleinik.hpp"

using namespace wkam;

namespace {

double zero_g(const Vec2&) { return 0.0; }

// min_{y ∈ [lo, hi]} u0(y) + (x − y)² / (2t), by dense sampling plus a local
// golden-section polish.
double hopf_lax_1d(const std::function<double(double)>& u0, double lo, double hi, double x, double t) {
  auto f = [&](double y) { return u0(y) + (x - y) * (x - y) / (2 * t); };
  const int n = 20000;
  double best = f(lo), arg = lo;
  for (int i = 1; i <= n; ++i) {
    const double y = lo + (hi - lo) * i / n;
    if (f(y) < best) best = f(y), arg = y;
  }
  double a = std::max(lo, arg - (hi - lo) / n), b = std::min(hi, arg + (hi - lo) / n);
  for (int it = 0; it < 60; ++it) {
    const double m1 = a + 0.382 * (b - a), m2 = a + 0.618 * (b - a);
    (f(m1) < f(m2) ? b : a) = f(m1) < f(m2) ? m2 : m1;
  }
  return std::min(best, f(0.5 * (a + b)));
}

}  // namespace

TEST_SUITE("lax_oleinik") {
  TEST_CASE("constants move at the resting cost") {
    const ImplicitDomain d = make_disk({0, 0}, 1.0);
    auto grid = std::make_shared<const Grid>(d, 0.1);
    const ObliqueField f = make_rotated_normal(d, 20.0, zero_g);
    const std::vector<double> u0(grid->size(), 2.5);
    const TimeField kin = solve_cauchy(make_kinetic(2), f, grid, u0, 0.5);
    for (double v : kin.final()) CHECK(v == doctest::Approx(2.5).epsilon(1e-14));
    // V = −1: L(x, 0) = −1, so resting lowers the value at unit rate.
    const TimeField lowered = solve_cauchy(make_mechanical(Expr::parse("-1"), 2), f, grid, u0, 0.5);
    const double T = lowered.horizon();
    for (double v : lowered.final()) CHECK(v == doctest::Approx(2.5 - T).epsilon(1e-12));
  }

  TEST_CASE("the step is monotone and commutes with constants") {
    const ImplicitDomain d = make_disk({0, 0}, 1.0);
    auto grid = std::make_shared<const Grid>(d, 0.1);
    const ObliqueField f = make_rotated_normal(d, -30.0, [](const Vec2& x) { return 0.2 * x.x; });
    const HamiltonianModel m = make_mechanical(Expr::parse("x^2 + 0.5*y"), 2);
    auto solver = CauchySolver::create(m, f, grid);
    const std::vector<double> u = sample_on_grid(*grid, [](const Vec2& x) { return std::sin(3 * x.x) + x.y; });
    std::vector<double> v = u, u_plus = u;
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] += 0.1 * (1 + std::cos(7.0 * static_cast<double>(i)));
      u_plus[i] += 0.75;
    }
    std::vector<double> wu(u.size()), wv(u.size()), wc(u.size());
    solver->step(u, wu);
    solver->step(v, wv);
    solver->step(u_plus, wc);
    for (std::size_t i = 0; i < u.size(); ++i) {
      CHECK(wu[i] <= wv[i] + 1e-14);
      CHECK(wc[i] == doctest::Approx(wu[i] + 0.75).epsilon(1e-12));
    }
  }

  TEST_CASE("1-D kinetic problem matches the Hopf-Lax formula") {
    const ImplicitDomain d = make_interval(-1.0, 1.0);
    const ObliqueField f = make_rotated_normal(d, 0.0, zero_g);
    auto u0f = [](double x) { return std::abs(x - 0.3) + 0.5 * std::sin(4 * x); };
    double prev_err = 0.0;
    for (double h : {0.02, 0.01}) {
      auto grid = std::make_shared<const Grid>(d, h);
      const std::vector<double> u0 = sample_on_grid(*grid, [&](const Vec2& x) { return u0f(x.x); });
      const TimeField w = solve_cauchy(make_kinetic(1), f, grid, u0, 0.5);
      const double t = w.horizon();
      double err = 0.0;
      for (int i = 0; i < grid->size(); ++i) {
        const double ref = hopf_lax_1d(u0f, -1.0, 1.0, grid->node(i).x, t);
        err = std::max(err, std::abs(w.final()[i] - ref));
      }
      MESSAGE("h=" << h << " max error " << err);
      CHECK(err <= 1.5 * h);
      if (prev_err > 0) CHECK(err <= 0.7 * prev_err);
      prev_err = err;
    }
  }

  TEST_CASE("barriers, control bound and dynamic programming") {
    const ImplicitDomain d = make_disk({0, 0}, 1.0);
    auto grid = std::make_shared<const Grid>(d, 0.1);
    const ObliqueField f = make_rotated_normal(d, 20.0, [](const Vec2& x) { return 0.1 * x.y; });
    const HamiltonianModel m = make_mechanical(Expr::parse("(x-0.25)^2 + y^2"), 2);
    const std::vector<double> u0 = sample_on_grid(*grid, [](const Vec2& x) { return 0.5 * norm(x - Vec2{-0.3, 0.2}); });
    const TimeField w = solve_cauchy(m, f, grid, u0, 1.0);
    const BarrierReport b = w.barriers();
    CHECK(b.upper_defect <= 1e-9);
    CHECK(b.lower_defect <= (grid->h() + w.dt()) * (1 + w.horizon()) * (1 + b.lipschitz_u0));
    CHECK(w.control_bound_respected());
    const int n = w.steps();
    const double s = (n / 2) * w.dt(), t = (n / 4) * w.dt();
    const DppReport dpp = check_dpp(w, s, t, 3 * (grid->h() + w.dt()), 0.5 * w.dt());
    CHECK(dpp.pass);
    // The same time step reproduces the slices exactly.
    const DppReport same = check_dpp(w, t, s, 1e-12);
    CHECK(same.max_defect <= 1e-12);
  }

  TEST_CASE("scalar and AVX2 solves are bit-identical") {
    const ImplicitDomain d = make_ellipse({0, 0}, 1.0, 0.6);
    auto grid = std::make_shared<const Grid>(d, 0.08);
    const ObliqueField f = make_rotated_normal(d, 15.0, [](const Vec2& x) { return 0.3 * x.x; });
    const HamiltonianModel m = make_mechanical(Expr::parse("x^2*y + 0.3"), 2);
    const std::vector<double> u0 = sample_on_grid(*grid, [](const Vec2& x) { return std::cos(2 * x.x) * x.y; });
    kernels::force_isa(kernels::Isa::Scalar);
    const TimeField a = solve_cauchy(m, f, grid, u0, 0.5);
    kernels::force_isa(kernels::Isa::Avx2);
    const TimeField b = solve_cauchy(m, f, grid, u0, 0.5);
    kernels::reset_isa();
    REQUIRE(a.steps() == b.steps());
    for (int k = 0; k <= a.steps(); ++k) {
      const auto sa = a.slice(k), sb = b.slice(k);
      CHECK(std::memcmp(sa.data(), sb.data(), sa.size() * sizeof(double)) == 0);
    }
  }

  TEST_CASE("control sets start at rest and are sorted by speed") {
    const ControlSet c = ControlSet::polar(2, 3.0, 16, 8);
    CHECK(c.controls.front() == Vec2{});
    for (std::size_t i = 2; i < c.controls.size(); ++i) CHECK(norm(c.controls[i]) >= norm(c.controls[i - 1]) - 1e-15);
    CHECK(norm(c.controls.back()) == doctest::Approx(3.0));
    const ControlSet line = ControlSet::polar(1, 2.0, 16, 8);
    for (const Vec2& v : line.controls) CHECK(v.y == 0.0);
  }
}
