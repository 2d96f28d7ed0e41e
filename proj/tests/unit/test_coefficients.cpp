#include <doctest.h>

#include <cmath>

#include "nlfp/coefficients.hpp"
#include "nlfp/error.hpp"

using namespace nlfp;

namespace {

CoefficientSet pure_cubic() {
  CustomCoefficientSpec s;
  s.beta = {0.0, 0.0, 0.0, 1.0};
  s.gamma0 = 1.0;  // claimed, and false: beta'(0) = 0
  return make_custom(s);
}

}  // namespace

TEST_CASE("presets pass every condition on [-5, 5]") {
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    const ValidationReport r = validate_conditions(preset(name), {-5.0, 5.0}, 2000, 3);
    for (const auto& c : r.conditions) {
      CAPTURE(c.id);
      CHECK(c.passed);
    }
    CHECK(r.all_passed());
  }
  CHECK_THROWS_AS(preset("no-such-preset"), ConfigError);
}

TEST_CASE("strong monotonicity margin and observed quotient") {
  // beta(r) = r: every difference quotient is exactly 1 = gamma0.
  const auto heat = validate_conditions(preset("linear-heat"), {-5.0, 5.0}, 500, 1);
  CHECK(heat.find("ii").observed == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(heat.find("ii").margin == doctest::Approx(0.0).epsilon(1e-12));
  // beta(r) = r + r^3: (beta(r1)-beta(r2))/(r1-r2) = 1 + r1^2 + r1 r2 + r2^2 >= 1, equality at 0.
  const auto cub = validate_conditions(preset("cubic-tanh"), {-5.0, 5.0}, 501, 1);
  CHECK(cub.find("ii").observed == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("degenerate beta(r) = r^3 fails monotonicity with a witness near 0") {
  const ValidationReport r = validate_conditions(pure_cubic(), {-5.0, 5.0}, 1000, 2);
  const ConditionResult& c = r.find("ii");
  CHECK_FALSE(c.passed);
  CHECK(c.margin < -0.99);
  REQUIRE(c.witness.size() == 2);
  // The quotient r1^2 + r1 r2 + r2^2 is tiny only when both points are near 0.
  CHECK(std::abs(c.witness[0]) < 0.05);
  CHECK(std::abs(c.witness[1]) < 0.05);
  CHECK_FALSE(r.find("nondegeneracy").passed);
  CHECK_FALSE(r.all_passed());
}

TEST_CASE("a(r) = beta(r)/r with the removable singularity filled") {
  const CoefficientSet c = preset("cubic-tanh");
  CHECK(c.a(0.0) == 1.0);
  CHECK(c.a(1e-9) == 1.0);
  CHECK(c.a(2.0) == doctest::Approx(5.0));
  CHECK(c.a(-3.0) == doctest::Approx(10.0));
  CHECK(eval_a(preset("logistic-b"), 0.7) == doctest::Approx(2.0));
  CHECK_THROWS_AS(eval_a(c, std::nan("")), DomainError);
  CHECK_THROWS_AS(eval_a(c, INFINITY), DomainError);
}

TEST_CASE("preset coefficient values") {
  const CoefficientSet c = preset("cubic-tanh");
  CHECK(c.b.eval(1.0) == doctest::Approx(0.5));
  CHECK(c.E.eval(0.5) == doctest::Approx(-std::tanh(0.5)));
  CHECK(c.E.div_eval(0.0) == doctest::Approx(-1.0));
  CHECK(c.beta.eval(2.0) == doctest::Approx(10.0));
  CHECK(c.beta.deriv(2.0) == doctest::Approx(13.0));

  const CoefficientSet l = preset("logistic-b");
  CHECK(l.b.eval(0.0) == doctest::Approx(0.5));
  CHECK(l.beta.gamma0 == 2.0);
}

TEST_CASE("custom specs") {
  CustomCoefficientSpec s;
  s.beta = {0.0, 1.0, 0.0, 1.0};
  s.b = {"rational", 1.0, 1.0, 1.0};
  s.E = {"neg-tanh", 1.0};
  const CoefficientSet c = make_custom(s);
  const CoefficientSet p = preset("cubic-tanh");
  for (double r : {-2.0, -0.3, 0.0, 0.8, 4.0}) {
    CHECK(c.beta.eval(r) == doctest::Approx(p.beta.eval(r)));
    CHECK(c.b.eval(r) == doctest::Approx(p.b.eval(r)));
    CHECK(c.E.eval(r) == doctest::Approx(p.E.eval(r)));
  }
  CHECK(c.E.sup_bound == doctest::Approx(1.0));
  CHECK(c.b.sup_bound == doctest::Approx(1.0));
  CHECK(validate_conditions(c, {-5.0, 5.0}, 1000, 1).all_passed());

  CustomCoefficientSpec bad = s;
  bad.beta = {1.0, 1.0};
  CHECK_THROWS_AS(make_custom(bad), ConfigError);
  bad = s;
  bad.gamma0 = 0.0;
  CHECK_THROWS_AS(make_custom(bad), ConfigError);
  bad = s;
  bad.b.kind = "weird";
  CHECK_THROWS_AS(make_custom(bad), ConfigError);
}

TEST_CASE("declared Lipschitz constant of a holds on sampled pairs") {
  const CoefficientSet c = preset("cubic-tanh");
  // a(r) = 1 + r^2 has |a'| <= 10 on [-5, 5].
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double r1 = -5.0 + 10.0 * i / 999.0, r2 = 5.0 - 7.3 * i / 999.0;
    if (r1 != r2) worst = std::max(worst, std::abs(c.a(r1) - c.a(r2)) / std::abs(r1 - r2));
  }
  CHECK(worst <= c.lipschitz_a_local);
}

TEST_CASE("a wrong sup bound is reported, not thrown") {
  CoefficientSet c = preset("cubic-tanh");
  c.E.sup_bound = 0.5;
  const auto r = validate_conditions(c, {-5.0, 5.0}, 200, 1);
  CHECK_FALSE(r.find("iii.sup").passed);
  CHECK(r.find("iii.sup").observed == doctest::Approx(std::tanh(5.0)));
  CHECK_THROWS_AS(validate_conditions(c, {1.0, 1.0}, 200, 1), DomainError);
  CHECK_THROWS_AS(r.find("vi"), DomainError);
}
