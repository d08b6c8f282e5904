#include <cmath>
#include <numbers>

#include "doctest.h"
#include "wkam/errors.hpp"
#include "wkam/expr.hpp"

using namespace wkam;

namespace {

ErrorCode code_of(const char* text) {
  try {
    (void)Expr::parse(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;  // sentinel: parse succeeded
}

}  // namespace

TEST_SUITE("expr") {
  TEST_CASE("precedence and associativity") {
    CHECK(Expr::parse("1 + 2 * 3")(0, 0) == 7.0);
    CHECK(Expr::parse("(1 + 2) * 3")(0, 0) == 9.0);
    CHECK(Expr::parse("2 ^ 3 ^ 2")(0, 0) == 512.0);
    CHECK(Expr::parse("-x^2")(3.0, 0) == -9.0);
    CHECK(Expr::parse("8 / 4 / 2")(0, 0) == 1.0);
    CHECK(Expr::parse("1 - 2 - 3")(0, 0) == -4.0);
    CHECK(Expr::parse("2^-1")(0, 0) == 0.5);
  }

  TEST_CASE("variables, constants and functions") {
    const Expr e = Expr::parse("(x-0.25)^2 + y^2");
    CHECK(e(0.25, 0.0) == 0.0);
    CHECK(e(1.25, 1.0) == doctest::Approx(2.0));
    CHECK(Expr::parse("pi")(0, 0) == doctest::Approx(std::numbers::pi));
    CHECK(Expr::parse("sin(x) + cos(y)")(0.3, 0.7) == doctest::Approx(std::sin(0.3) + std::cos(0.7)));
    CHECK(Expr::parse("exp(abs(x)) * sqrt(y)")(-1.0, 4.0) == doctest::Approx(2.0 * std::exp(1.0)));
    CHECK(Expr::parse("1.5e-3")(0, 0) == doctest::Approx(1.5e-3));
  }

  TEST_CASE("constant detection") {
    CHECK(Expr::parse("2*pi + 1").is_constant());
    CHECK_FALSE(Expr::parse("0*x").is_constant());
    CHECK(Expr::constant(4.5)(1.0, 2.0) == 4.5);
  }

  TEST_CASE("malformed input raises SpecError") {
    for (const char* bad : {"", "1 +", "(x", "x)", "foo(x)", "sin x", "1 2", "x ** 2", "@", "sqrt()"})
      CHECK_MESSAGE(code_of(bad) == ErrorCode::SpecError, bad);
  }

  TEST_CASE("source text is kept") { CHECK(Expr::parse("x + y").source() == "x + y"); }
}
