#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "phi4/inequality.hpp"

using namespace phi4;

TEST_CASE("heat smoothing exponent matches (beta - alpha)/2") {
  for (double gap : {0.5, 1.0, 1.5}) {
    InequalitySpec s;
    s.alpha = gap;
    s.beta = 0.0;
    InequalityFit fit = fit_inequality_exponent(s, 24, 11);
    CHECK(fit.expected_exponent == doctest::Approx(-0.5 * gap));
    CHECK(std::abs(fit.exponent / fit.expected_exponent - 1.0) <= 0.1);
    CHECK(std::isfinite(fit.worst_constant));
  }
}

TEST_CASE("interpolation holds with constant one") {
  InequalitySpec s;
  s.kind = InequalityKind::interpolation;
  s.alpha = -0.5;
  s.beta = 1.5;
  s.nu = 0.5;
  s.p = 2.0;
  s.n = 64;
  InequalityFit fit = fit_inequality_exponent(s, 40, 2);
  CHECK(fit.worst_constant <= 1.0 + 1e-12);
}

TEST_CASE("resonant constant is stable across resolutions") {
  InequalitySpec s;
  s.kind = InequalityKind::resonant;
  s.alpha = -0.5;
  s.beta = 1.0;
  s.n = 32;
  double c32 = fit_inequality_exponent(s, 40, 5).worst_constant;
  s.n = 64;
  double c64 = fit_inequality_exponent(s, 40, 5).worst_constant;
  CHECK(std::isfinite(c32));
  CHECK(c32 > 0.0);
  CHECK(std::max(c32, c64) / std::min(c32, c64) <= 2.0);
}

TEST_CASE("bounded inequalities do not grow with the band level") {
  InequalitySpec s;
  s.n = 64;
  s.d = 2;
  s.kind = InequalityKind::para_lt;
  s.alpha = -0.5;
  s.beta = 1.0;
  CHECK(fit_inequality_exponent(s, 40, 1).exponent < 0.3);
  s.kind = InequalityKind::embedding;
  s.alpha = 0.5;
  s.p = 2.0;
  CHECK(fit_inequality_exponent(s, 40, 1).exponent < 0.3);
  s.kind = InequalityKind::sobolev;
  CHECK(fit_inequality_exponent(s, 40, 1).exponent < 0.3);
}

TEST_CASE("fits are deterministic in the seed") {
  InequalitySpec s;
  s.kind = InequalityKind::resonant;
  s.alpha = -0.25;
  s.beta = 0.75;
  s.n = 32;
  InequalityFit a = fit_inequality_exponent(s, 20, 9);
  InequalityFit b = fit_inequality_exponent(s, 20, 9);
  CHECK(csv_row(a) == csv_row(b));
}

TEST_CASE("preconditions and degenerate inputs") {
  InequalitySpec s;
  CHECK_THROWS_AS(fit_inequality_exponent(s, 0, 1), std::invalid_argument);
  s.alpha = -1.0;
  CHECK_THROWS_AS(fit_inequality_exponent(s, 4, 1), std::invalid_argument);
  s = InequalitySpec{};
  s.kind = InequalityKind::resonant;
  s.alpha = -1.0;
  s.beta = 0.5;
  CHECK_THROWS_AS(fit_inequality_exponent(s, 4, 1), std::invalid_argument);
  s.kind = InequalityKind::para_lt;
  s.alpha = 0.5;
  CHECK_THROWS_AS(fit_inequality_exponent(s, 4, 1), std::invalid_argument);
  CHECK_THROWS_AS(parse_inequality_kind("holder"), std::invalid_argument);
  CHECK(parse_inequality_kind("sobolev") == InequalityKind::sobolev);
  CHECK(to_string(InequalityKind::heat_smoothing) == "heat_smoothing");
}

TEST_CASE("csv serialization") {
  CHECK(csv_header_inequality() == "tag,param,fitted_exponent,worst_constant,n,seed");
  InequalityFit fit;
  fit.tag = "interpolation";
  fit.param = "alpha=0;beta=1;nu=0.5;p=2;d=1";
  fit.exponent = -0.25;
  fit.worst_constant = 1.0;
  fit.n = 64;
  fit.seed = 42;
  CHECK(csv_row(fit) == "interpolation,alpha=0;beta=1;nu=0.5;p=2;d=1,-0.25,1,64,42");
}
