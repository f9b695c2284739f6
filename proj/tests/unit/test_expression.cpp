#include <doctest.h>

#include <cmath>
#include <vector>

#include "geodex/error.hpp"
#include "geodex/expression.hpp"

using geodex::Expression;

TEST_CASE("expression precedence and functions") {
  const std::vector<double> xy{2.0, 3.0};
  CHECK(Expression("1 + 2*3", {})(xy) == doctest::Approx(7));
  CHECK(Expression("2^3^2", {})(xy) == doctest::Approx(512));
  CHECK(Expression("-x^2", {"x", "y"})(xy) == doctest::Approx(-4));
  CHECK(Expression("sin(x)^2 + cos(x)^2", {"x", "y"})(xy) == doctest::Approx(1));
  CHECK(Expression("y/(x - 1) * pi", {"x", "y"})(xy) == doctest::Approx(3 * M_PI));
  CHECK(Expression("sqrt(abs(-y*3))", {"x", "y"})(xy) == doctest::Approx(3));
  CHECK(Expression("1e-3 * 2.5E2", {})(xy) == doctest::Approx(0.25));
}

TEST_CASE("expression errors are reported") {
  CHECK_THROWS_AS(Expression("1 +", {}), geodex::Error);
  CHECK_THROWS_AS(Expression("z", {"x"}), geodex::Error);
  CHECK_THROWS_AS(Expression("foo(1)", {}), geodex::Error);
  CHECK_THROWS_AS(Expression("(1 + 2", {}), geodex::Error);
}
