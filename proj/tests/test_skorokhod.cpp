#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "wkam/errors.hpp"
#include "wkam/skorokhod.hpp"

using namespace wkam;

namespace {

double zero_g(const Vec2&) { return 0.0; }

// Position on the unit circle when sliding under v = (0, 1) from (1, 0) with
// normal reflection: θ' = cos θ, so θ(t) = 2 atan(tanh(t / 2)).
Vec2 sliding_oracle(double t) {
  const double th = 2.0 * std::atan(std::tanh(0.5 * t));
  return {std::cos(th), std::sin(th)};
}

// RK4 on the projected dynamics η' = v − (v·ν)⁺ ν, re-normalized onto the
// circle after each step. Independent of the penalty solver.
Vec2 projected_rk4(Vec2 x, const Vec2& v, double T, int steps) {
  auto f = [&](const Vec2& p) {
    const Vec2 n = unit(p);
    return v - n * std::max(0.0, dot(v, n));
  };
  const double dt = T / steps;
  for (int i = 0; i < steps; ++i) {
    const Vec2 k1 = f(x), k2 = f(x + k1 * (dt / 2)), k3 = f(x + k2 * (dt / 2)), k4 = f(x + k3 * dt);
    x = x + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (dt / 6);
    x = unit(x);
  }
  return x;
}

}  // namespace

TEST_SUITE("skorokhod") {
  const ImplicitDomain disk = make_disk({0, 0}, 1.0);
  const ObliqueField normal = make_rotated_normal(disk, 0.0, zero_g);

  TEST_CASE("zero input keeps the path still with no push") {
    const InputSignal in = constant_input({0, 0}, 1.0, 20);
    const ReflectedResult r = solve_reflected(disk, normal, {0.3, -0.2}, in);
    for (std::size_t i = 0; i < r.triple.eta.size(); ++i) {
      CHECK(dist(r.triple.eta[i], Vec2{0.3, -0.2}) < 1e-14);
      CHECK(r.triple.l[i] == 0.0);
    }
    CHECK(r.excursion_K == 0.0);
  }

  TEST_CASE("interior motion is free") {
    const InputSignal in = constant_input({0.2, 0.1}, 1.0, 20);
    const ReflectedResult r = solve_reflected(disk, normal, {0, 0}, in);
    CHECK(dist(r.triple.eta.back(), Vec2{0.2, 0.1}) < 1e-9);
    CHECK(*std::max_element(r.triple.l.begin(), r.triple.l.end()) == 0.0);
  }

  TEST_CASE("outward push at the boundary is absorbed by l") {
    const InputSignal in = constant_input({1.0, 0.0}, 1.0, 20);
    const ReflectedResult r = solve_reflected(disk, normal, {1.0, 0.0}, in);
    const double eps = r.triple.epsilon;
    for (std::size_t i = 0; i < r.triple.t.size(); ++i) {
      CHECK(dist(r.triple.eta[i], Vec2{1.0, 0.0}) <= 10 * eps);
      if (r.triple.t[i] >= 5 * eps) CHECK(r.triple.l[i] == doctest::Approx(1.0).epsilon(0.02));
    }
    CHECK(validate_triple(disk, normal, r.triple, default_tolerances(r.triple)).all_pass());
  }

  TEST_CASE("tangential input slides along the circle") {
    const double T = 2.0;
    const InputSignal in = constant_input({0.0, 1.0}, T, 40);
    const ReflectedResult r = solve_reflected(disk, normal, {1.0, 0.0}, in);
    const Vec2 end = r.triple.eta.back();
    CHECK(dist(end, sliding_oracle(T)) < 5e-3);
    CHECK(dist(projected_rk4({1.0, 0.0}, {0.0, 1.0}, T, 4000), sliding_oracle(T)) < 1e-6);
    for (std::size_t i = 0; i < r.triple.t.size(); i += 5) {
      const Vec2 o = sliding_oracle(r.triple.t[i]);
      CHECK(dist(r.triple.eta[i], o) < 5e-3);
      // l = v·ν on the contact set.
      if (r.triple.t[i] > 0.1) CHECK(r.triple.l[i] == doctest::Approx(o.y).epsilon(0.03));
    }
    CHECK(validate_triple(disk, normal, r.triple, default_tolerances(r.triple)).all_pass());
  }

  TEST_CASE("excursion stays of order epsilon") {
    const InputSignal in = constant_input({1.0, 0.0}, 1.0, 20);
    const ReflectedResult r = solve_reflected(disk, normal, {0.5, 0.0}, in);
    CHECK(r.excursion_K > 0.0);
    CHECK(r.excursion_K < 2.0);
    MESSAGE("excursion ratio " << r.excursion_K);
  }

  TEST_CASE("1-D interval: pushing into the wall gives l = v") {
    const ImplicitDomain iv = make_interval(0.0, 1.0);
    const ObliqueField nf = make_rotated_normal(iv, 0.0, zero_g);
    const InputSignal in = constant_input({1.0, 0.0}, 2.0, 40);
    const ReflectedResult r = solve_reflected(iv, nf, {1.0, 0.0}, in);
    const double eps = r.triple.epsilon;
    for (std::size_t i = 0; i < r.triple.t.size(); ++i) {
      CHECK(r.triple.eta[i].x <= 1.0 + 10 * eps);
      if (r.triple.t[i] >= 5 * eps) CHECK(r.triple.l[i] == doctest::Approx(1.0).epsilon(1e-3));
    }
  }

  TEST_CASE("1-D interval: reaching the wall from inside") {
    const ImplicitDomain iv = make_interval(0.0, 1.0);
    const ObliqueField nf = make_rotated_normal(iv, 0.0, zero_g);
    const InputSignal in = constant_input({1.0, 0.0}, 2.0, 40);
    const ReflectedResult r = solve_reflected(iv, nf, {0.5, 0.0}, in);
    for (std::size_t i = 0; i < r.triple.t.size(); ++i) {
      const double t = r.triple.t[i];
      CHECK(r.triple.eta[i].x == doctest::Approx(std::min(0.5 + t, 1.0)).epsilon(1e-3));
      if (t < 0.45) CHECK(r.triple.l[i] == 0.0);
      if (t > 0.55) CHECK(r.triple.l[i] == doctest::Approx(1.0).epsilon(1e-3));
    }
  }

  TEST_CASE("concatenation: restarting from the midpoint reproduces the path") {
    const ObliqueField oblique = make_rotated_normal(disk, 30.0, zero_g);
    auto v = [](double t) { return Vec2{std::cos(2 * t), std::sin(3 * t)}; };
    const InputSignal whole = sampled_input(v, 2.0, 40);
    const InputSignal first = sampled_input(v, 1.0, 20);
    const InputSignal second = sampled_input([&](double t) { return v(t + 1.0); }, 1.0, 20);
    const ReflectedResult a = solve_reflected(disk, oblique, {0.2, 0.3}, whole);
    const ReflectedResult b1 = solve_reflected(disk, oblique, {0.2, 0.3}, first);
    const ReflectedResult b2 = solve_reflected(disk, oblique, b1.triple.eta.back(), second);
    CHECK(dist(a.triple.eta[20], b1.triple.eta.back()) < 5e-3);
    CHECK(dist(a.triple.eta.back(), b2.triple.eta.back()) < 1e-2);
  }

  TEST_CASE("clipping bounds the input norm") {
    const InputSignal in = sampled_input([](double t) { return Vec2{10 * t, 0}; }, 1.0, 10);
    CHECK(in.max_norm() == doctest::Approx(9.5));
    CHECK(clip_input(in, 2.0).max_norm() == doctest::Approx(2.0));
  }

  TEST_CASE("constructed violations are caught clause by clause") {
    SkorokhodTriple tr;
    tr.t = {0.0, 0.1, 0.2};
    tr.eta = {{0, 0}, {0.1, 0}, {0.2, 0}};
    tr.v = {{1, 0}, {1, 0}, {1, 0}};
    tr.l = {0, 0, 0};
    tr.epsilon = 1e-4;
    const TripleTolerances tol = default_tolerances(tr);
    CHECK(validate_triple(disk, normal, tr, tol).all_pass());

    SkorokhodTriple outside = tr;
    outside.eta[2] = {1.2, 0};
    CHECK_FALSE(validate_triple(disk, normal, outside, tol).clause("membership").pass);

    SkorokhodTriple negative = tr;
    negative.l[1] = -0.5;
    CHECK_FALSE(validate_triple(disk, normal, negative, tol).clause("l_nonnegative").pass);

    SkorokhodTriple interior_push = tr;
    interior_push.l[0] = 1.0;
    const TripleReport rep = validate_triple(disk, normal, interior_push, tol);
    CHECK_FALSE(rep.clause("complementarity").pass);
    CHECK(rep.clause("complementarity").witness == 0);

    SkorokhodTriple wrong_rate = tr;
    wrong_rate.eta[1] = {0.3, 0};
    CHECK_FALSE(validate_triple(disk, normal, wrong_rate, tol).clause("ode_residual").pass);

    SkorokhodTriple fast = tr;
    fast.eta = {{0, 0}, {0.5, 0}, {0.5, 0.5}};
    fast.v = {{5, 0}, {0, 5}, {0, 5}};
    fast.t = {0.0, 0.1, 0.2};
    fast.l = {0, 0, 0};
    SkorokhodTriple slow = fast;
    slow.v = {{0.5, 0}, {0, 0.5}, {0, 0.5}};
    CHECK(validate_triple(disk, normal, fast, default_tolerances(fast)).clause("a_priori_bound").pass);
    CHECK_FALSE(validate_triple(disk, normal, slow, default_tolerances(slow)).clause("a_priori_bound").pass);
  }

  TEST_CASE("implicit reflected substep lands on the boundary along gamma") {
    const ObliqueField oblique = make_rotated_normal(disk, 25.0, zero_g);
    const ReflectStep s = reflect_step(disk, oblique, {0.9, 0.0}, {0.3, 0.0});
    CHECK(std::abs(disk.psi(s.foot)) <= disk.boundary_tol());
    CHECK(s.push > 0.0);
    const Vec2 back = s.foot + oblique.gamma(s.foot) * s.push;
    CHECK(dist(back, Vec2{1.2, 0.0}) < 0.05);
    const ReflectStep inside = reflect_step(disk, oblique, {0.0, 0.0}, {0.3, 0.1});
    CHECK(inside.push == 0.0);
  }
}
