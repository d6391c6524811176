#include "catch2/catch_amalgamated.hpp"

#include <cmath>
#include <limits>

#include "qkd/errors.hpp"
#include "qkd/quadrature.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

TEST_CASE("integrate handles smooth reference integrals", "[quadrature]") {
  const auto sq = qkd::integrate([](double x) { return x * x; }, 0.0, 1.0);
  REQUIRE_THAT(sq.value, WithinAbs(1.0 / 3.0, 1e-14));
  REQUIRE(std::abs(sq.value - 1.0 / 3.0) <= sq.abs_error + 1e-15);

  const auto sn = qkd::integrate([](double x) { return std::sin(x); }, 0.0, kPi);
  REQUIRE_THAT(sn.value, WithinAbs(2.0, 1e-13));

  const auto ex = qkd::integrate([](double x) { return std::exp(-x); }, 0.0, 10.0);
  REQUIRE_THAT(ex.value, WithinRel(1.0 - std::exp(-10.0), 1e-12));
}

TEST_CASE("integrate resolves low-degree polynomials in one panel",
          "[quadrature]") {
  // Gauss-Kronrod 15 is exact through degree 22; no subdivision needed.
  const auto r = qkd::integrate([](double x) { return std::pow(x, 8); }, 0.0, 1.0);
  REQUIRE(r.evaluations == 15);
  REQUIRE_THAT(r.value, WithinAbs(1.0 / 9.0, 1e-15));
}

TEST_CASE("integrate subdivides where the integrand demands it",
          "[quadrature]") {
  // A narrow Gaussian bump off-center forces adaptive refinement.
  const auto f = [](double x) { return std::exp(-1e4 * (x - 0.3) * (x - 0.3)); };
  const auto r = qkd::integrate(f, 0.0, 1.0, 1e-14, 1e-12);
  const double want = std::sqrt(kPi / 1e4); // erf terms are ~1 to 1e-80
  REQUIRE(r.evaluations > 15);
  REQUIRE_THAT(r.value, WithinRel(want, 1e-10));
  REQUIRE(std::abs(r.value - want) <= r.abs_error + 1e-12 * want);
}

TEST_CASE("integrate reports zero for an empty interval", "[quadrature]") {
  const auto r = qkd::integrate([](double x) { return x; }, 2.5, 2.5);
  REQUIRE(r.value == 0.0);
  REQUIRE(r.abs_error == 0.0);
}

TEST_CASE("integrate handles intervals spanning zero", "[quadrature]") {
  const auto r = qkd::integrate([](double x) { return x * x * x; }, -1.0, 2.0);
  REQUIRE_THAT(r.value, WithinAbs(15.0 / 4.0, 1e-12));
}

TEST_CASE("integrate rejects unattainable tolerance demands", "[quadrature]") {
  // x^{-1/2} is integrable but the endpoint singularity exhausts the
  // subdivision depth before the requested accuracy is met.
  REQUIRE_THROWS_AS(qkd::integrate([](double x) { return 1.0 / std::sqrt(x); },
                                   0.0, 1.0, 1e-14, 1e-14),
                    qkd::numeric_error);
}

TEST_CASE("integrate rejects non-finite bounds", "[quadrature]") {
  const double inf = std::numeric_limits<double>::infinity();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto f = [](double x) { return std::exp(-x * x); };
  REQUIRE_THROWS_AS(qkd::integrate(f, 0.0, inf), qkd::numeric_error);
  REQUIRE_THROWS_AS(qkd::integrate(f, -inf, 0.0), qkd::numeric_error);
  REQUIRE_THROWS_AS(qkd::integrate(f, 0.0, nan), qkd::numeric_error);
}

TEST_CASE("integrate_value returns the same value as integrate",
          "[quadrature]") {
  const auto f = [](double x) { return std::cos(x); };
  REQUIRE(qkd::integrate_value(f, 0.0, 1.0) ==
          qkd::integrate(f, 0.0, 1.0).value);
}
