#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "wkam/kernels.hpp"

using namespace wkam;
using kernels::MinArg;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

MinArg brute_min_plus(const std::vector<double>& a, const std::vector<double>& b) {
  MinArg best{std::numeric_limits<double>::infinity(), -1};
  for (std::size_t i = 0; i < a.size(); ++i)
    if (best.index < 0 || a[i] + b[i] < best.value) best = {a[i] + b[i], static_cast<std::int32_t>(i)};
  return best;
}

struct Table {
  std::vector<double> cost, w1, w2, w3;
  std::vector<std::int32_t> i0, i1, i2, i3;
  kernels::TransitionView view() const {
    return {cost.data(), i0.data(), i1.data(), i2.data(), i3.data(), w1.data(), w2.data(), w3.data(), cost.size()};
  }
};

Table random_table(std::mt19937_64& rng, std::size_t n, int values) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::uniform_int_distribution<int> I(0, values - 1);
  Table t;
  for (std::size_t k = 0; k < n; ++k) {
    double a = U(rng), b = U(rng), c = U(rng);
    const double s = a + b + c + U(rng);
    t.cost.push_back(U(rng) * 0.1);
    t.w1.push_back(a / s);
    t.w2.push_back(b / s);
    t.w3.push_back(c / s);
    t.i0.push_back(I(rng));
    t.i1.push_back(I(rng));
    t.i2.push_back(I(rng));
    t.i3.push_back(I(rng));
  }
  return t;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("min_plus matches a plain loop on every length") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (std::size_t n = 0; n < 40; ++n) {
      std::vector<double> a(n), b(n);
      for (std::size_t i = 0; i < n; ++i) a[i] = U(rng), b[i] = U(rng);
      const MinArg ref = brute_min_plus(a, b);
      const MinArg s = kernels::scalar::min_plus(a, b);
      CHECK(s.index == ref.index);
      if (n > 0) CHECK(same_bits(s.value, ref.value));
    }
  }

  TEST_CASE("max_excess matches a plain loop") {
    std::vector<double> a{1.0, 5.0, -2.0, 7.5, 0.0, 3.0, 3.0, 9.0, 1.0, 2.0, 4.0};
    std::vector<double> b{0.5, 1.0, 0.0, 8.0, 0.0, 1.0, 0.0, 2.0, 1.0, 0.0, 5.0};
    CHECK(kernels::max_excess(a, b, 1.0) == 6.0);
    std::vector<double> none;
    CHECK(std::isinf(kernels::max_excess(none, none, 0.0)));
  }

  TEST_CASE("empty input reports index -1") {
    std::vector<double> none;
    CHECK(kernels::scalar::min_plus(none, none).index == -1);
    CHECK(kernels::scalar::affine_min(none, none, 1.0).index == -1);
    if (kernels::avx2_available()) {
      CHECK(kernels::avx2::min_plus(none, none).index == -1);
      CHECK(kernels::avx2::affine_min(none, none, 1.0).index == -1);
    }
  }

  TEST_CASE("ties resolve to the lowest index on both paths") {
    std::vector<double> a{3.0, 1.0, 2.0, 1.0, 1.0, 5.0, 1.0, 0.5, 0.5, 9.0};
    std::vector<double> zero(a.size(), 0.0);
    CHECK(kernels::scalar::min_plus(a, zero).index == 7);
    std::vector<double> flat(13, 2.0);
    std::vector<double> z13(13, 0.0);
    CHECK(kernels::scalar::min_plus(flat, z13).index == 0);
    if (kernels::avx2_available()) {
      CHECK(kernels::avx2::min_plus(a, zero).index == 7);
      CHECK(kernels::avx2::min_plus(flat, z13).index == 0);
    }
  }

  TEST_CASE("scalar and AVX2 paths are bit-identical") {
    if (!kernels::avx2_available()) {
      MESSAGE("AVX2 not available; only the scalar path is exercised");
      return;
    }
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t n = static_cast<std::size_t>(trial % 37);
      std::vector<double> a(n), b(n);
      for (std::size_t i = 0; i < n; ++i) {
        a[i] = U(rng);
        b[i] = trial % 5 == 0 ? 0.0 : std::abs(U(rng));
        if (trial % 7 == 0 && i % 3 == 0) a[i] = 0.25;  // forced ties
      }
      const MinArg s1 = kernels::scalar::min_plus(a, b), v1 = kernels::avx2::min_plus(a, b);
      CHECK(s1.index == v1.index);
      if (n > 0) CHECK(same_bits(s1.value, v1.value));
      const double level = U(rng);
      const MinArg s2 = kernels::scalar::affine_min(a, b, level), v2 = kernels::avx2::affine_min(a, b, level);
      CHECK(s2.index == v2.index);
      if (n > 0) CHECK(same_bits(s2.value, v2.value));

      const double c = U(rng);
      const double s4 = kernels::scalar::max_excess(a, b, c), v4 = kernels::avx2::max_excess(a, b, c);
      CHECK(same_bits(s4, v4));

      const Table t = random_table(rng, n, 50);
      std::vector<double> values(50);
      for (double& v : values) v = U(rng);
      const MinArg s3 = kernels::scalar::transition_min(t.view(), values.data());
      const MinArg v3 = kernels::avx2::transition_min(t.view(), values.data());
      CHECK(s3.index == v3.index);
      if (n > 0) CHECK(same_bits(s3.value, v3.value));
    }
  }

  TEST_CASE("transition_min evaluates the documented stencil expression") {
    std::mt19937_64 rng(3);
    const Table t = random_table(rng, 9, 20);
    std::vector<double> u(20);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::sin(static_cast<double>(i));
    double best = std::numeric_limits<double>::infinity();
    int arg = -1;
    for (std::size_t k = 0; k < t.cost.size(); ++k) {
      const double u0 = u[t.i0[k]];
      const double v =
          (u0 + ((t.w1[k] * (u[t.i1[k]] - u0) + t.w2[k] * (u[t.i2[k]] - u0)) + t.w3[k] * (u[t.i3[k]] - u0))) +
          t.cost[k];
      if (v < best) best = v, arg = static_cast<int>(k);
    }
    const MinArg r = kernels::transition_min(t.view(), u.data());
    CHECK(r.index == arg);
    CHECK(same_bits(r.value, best));
  }

  TEST_CASE("dispatch honours forced choices") {
    kernels::force_isa(kernels::Isa::Scalar);
    CHECK(kernels::active_isa() == kernels::Isa::Scalar);
    kernels::force_isa(kernels::Isa::Avx2);
    CHECK(kernels::active_isa() == (kernels::avx2_available() ? kernels::Isa::Avx2 : kernels::Isa::Scalar));
    kernels::reset_isa();
    const char* env = std::getenv("WKAM_SIMD");
    if (env != nullptr && std::string(env) == "scalar") CHECK(kernels::active_isa() == kernels::Isa::Scalar);
    MESSAGE("active kernel set: " << kernels::to_string(kernels::active_isa()));
  }
}
