#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "kcclab/expr.hpp"
#include "support.hpp"

using namespace kcclab;
using testsupport::central_difference;
using testsupport::guarded_eval;
using testsupport::random_expr;
using testsupport::uniform;

TEST_CASE("parse builds the literal grammar tree") {
  CHECK(parse("x1 + 2*x2").str() == "x1 + 2*x2");
  CHECK(parse("x1 + 2*x2").eval(1.0, 3.0) == 7.0);

  const Expr pendulum =
      parse("x2^2/(2*m) + (1 - cos(x1))", ParseOptions{{"m"}, false});
  const ParamBindings m15{{"m", 1.5}};
  CHECK(pendulum.eval(0.3, 0.7, m15) ==
        Catch::Approx(0.7 * 0.7 / 3.0 + 1.0 - std::cos(0.3)).epsilon(1e-15));
}

TEST_CASE("parse reports the byte offset of the first error") {
  try {
    parse("x1 + * 2");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.offset() == 5);
  }
  CHECK_THROWS_AS(parse("(x1 + 2"), SyntaxError);
  CHECK_THROWS_AS(parse("x1 x2"), SyntaxError);
  CHECK_THROWS_AS(parse(""), SyntaxError);
}

TEST_CASE("identifiers outside the declared set are rejected") {
  try {
    parse("x1 + q");
    FAIL("expected UnknownIdentifier");
  } catch (const UnknownIdentifier& e) {
    CHECK(e.name() == "q");
    CHECK(e.offset() == 5);
  }
  CHECK_NOTHROW(parse("x1 + q", ParseOptions{{"q"}, false}));
}

TEST_CASE("hamiltonian aliases x and p map onto x1 and x2") {
  const Expr h = parse("p^2/2 + x^2/2", ParseOptions{{}, true});
  CHECK(h.eval(3.0, 4.0) == Catch::Approx(12.5));
  CHECK_THROWS_AS(parse("p^2/2 + x^2/2"), UnknownIdentifier);
}

TEST_CASE("precedence: pow binds tighter than unary minus") {
  CHECK(parse("-x1^2").eval(3.0, 0.0) == -9.0);
  CHECK(parse("(-x1)^2").eval(3.0, 0.0) == 9.0);
  CHECK(parse("2*x1^2").eval(3.0, 0.0) == 18.0);
  CHECK(parse("x1 - x2 - x1").eval(5.0, 2.0) == -2.0);  // left associative
}

TEST_CASE("spec derivative examples") {
  CHECK(parse("x1*x2").diff(1).str() == "x2");

  const Expr quad = parse("(1/2)*k*x1^2", ParseOptions{{"k"}, false});
  CHECK(quad.diff(1).diff(1).str() == "k");

  const Expr e = parse("sin(x1)*x2");
  const double sym = e.diff(1).eval(0.7, 1.3);
  CHECK(sym == Catch::Approx(std::cos(0.7) * 1.3).epsilon(1e-15));
  const auto fd = central_difference(e, 1, 0.7, 1.3);
  REQUIRE(fd);
  CHECK(std::abs(sym - *fd) <= 1e-8 * std::abs(sym));
}

TEST_CASE("spec evaluation examples") {
  CHECK(parse("x1^2 + x2").eval(2.0, 3.0) == 7.0);

  try {
    parse("1/x1").eval(0.0, 1.0);
    FAIL("expected EvalError");
  } catch (const EvalError& e) {
    CHECK(e.kind() == EvalErrorKind::DivByZero);
  }

  const double v = parse("exp(x1*x2)").diff(2).eval(0.5, 0.25);
  CHECK(v == Catch::Approx(0.5 * std::exp(0.125)).epsilon(1e-15));
  const auto fd = central_difference(parse("exp(x1*x2)"), 2, 0.5, 0.25);
  REQUIRE(fd);
  CHECK(std::abs(v - *fd) <= 1e-8 * std::abs(v) + 1e-12);
}

TEST_CASE("evaluation domain errors carry their kind") {
  CHECK_THROWS_AS(parse("ln(x1)").eval(-1.0, 0.0), EvalError);
  CHECK_THROWS_AS(parse("sqrt(x1)").eval(-4.0, 0.0), EvalError);
  try {
    parse("ln(x1)").eval(0.0, 0.0);
    FAIL("expected EvalError");
  } catch (const EvalError& e) {
    CHECK(e.kind() == EvalErrorKind::LogNonpositive);
  }
  try {
    parse("x1^0.5").eval(-2.0, 0.0);
    FAIL("expected EvalError");
  } catch (const EvalError& e) {
    CHECK(e.kind() == EvalErrorKind::SqrtNegative);
  }
}

TEST_CASE("unbound parameters are rejected at evaluation") {
  const Expr e = parse("k*x1", ParseOptions{{"k"}, false});
  CHECK_THROWS_AS(e.eval(1.0, 0.0), UnboundParameter);
  CHECK(e.eval(2.0, 0.0, {{"k", 3.0}}) == 6.0);
  CHECK(e.parameters() == std::set<std::string>{"k"});
}

TEST_CASE("derivatives flag pole risk introduced by quotients and roots") {
  CHECK_FALSE(parse("x1^2 + x2").diff(1).has_domain_risk());
  CHECK(parse("ln(x1)").diff(1).has_domain_risk());
  CHECK(parse("sqrt(x1)").diff(1).has_domain_risk());
  CHECK(parse("x1/x2").diff(1).has_domain_risk());
}

TEST_CASE("derivatives match central finite differences on random expressions") {
  std::mt19937 rng(20260809);
  int accepted = 0;
  int attempts = 0;
  while (accepted < 1000 && attempts < 40000) {
    ++attempts;
    const Expr e = random_expr(rng, 6);
    const double x1 = uniform(rng, -2.0, 2.0);
    const double x2 = uniform(rng, -2.0, 2.0);
    const int var = attempts % 2 + 1;
    if (!guarded_eval(e, x1, x2, 1e3)) continue;
    const auto fd = central_difference(e, var, x1, x2);
    if (!fd || std::abs(*fd) > 1e4) continue;
    // The oracle has to be trustworthy itself: halving the step must not
    // move it, otherwise the truncation term dominates at this point.
    const auto fd_half = central_difference(e, var, x1, x2, 5e-7);
    if (!fd_half || std::abs(*fd - *fd_half) > 1e-7 * std::max(1.0, std::abs(*fd)))
      continue;
    double sym;
    try {
      sym = e.diff(var).eval(x1, x2);
    } catch (const EvalError&) {
      continue;
    }
    if (!std::isfinite(sym) || std::abs(sym) > 1e4) continue;
    ++accepted;
    const double err = std::abs(sym - *fd);
    const double tol = 1e-6 * std::max(std::abs(sym), std::abs(*fd)) + 1e-9;
    if (err > tol) {
      CAPTURE(e.str(), x1, x2, var, sym, *fd);
      REQUIRE(err <= tol);
    }
  }
  REQUIRE(accepted == 1000);
}

TEST_CASE("mixed partial derivatives commute in value") {
  std::mt19937 rng(77);
  int checked = 0;
  while (checked < 200) {
    const Expr e = random_expr(rng, 5);
    const Expr d12 = e.diff(1).diff(2);
    const Expr d21 = e.diff(2).diff(1);
    const double x1 = uniform(rng, -2.0, 2.0);
    const double x2 = uniform(rng, -2.0, 2.0);
    const auto a = guarded_eval(d12, x1, x2, 1e8);
    const auto b = guarded_eval(d21, x1, x2, 1e8);
    if (!a || !b) continue;
    ++checked;
    CHECK(std::abs(*a - *b) <= 1e-12 * std::max({1.0, std::abs(*a), std::abs(*b)}));
  }
}

TEST_CASE("printer round trip evaluates identically") {
  std::mt19937 rng(4242);
  int checked = 0;
  while (checked < 300) {
    const Expr e = random_expr(rng, 5);
    const Expr back = parse(e.str());
    const double x1 = uniform(rng, -2.0, 2.0);
    const double x2 = uniform(rng, -2.0, 2.0);
    const auto v0 = guarded_eval(e, x1, x2, 1e9);
    if (!v0) continue;
    const auto v1 = guarded_eval(back, x1, x2, 1e9);
    REQUIRE(v1);
    ++checked;
    CHECK(*v0 == *v1);  // bit-identical by construction
  }
}

TEST_CASE("simplification preserves values") {
  std::mt19937 rng(99);
  int checked = 0;
  while (checked < 300) {
    const Expr e = random_expr(rng, 5);
    const Expr s = e.simplified();
    const double x1 = uniform(rng, -2.0, 2.0);
    const double x2 = uniform(rng, -2.0, 2.0);
    const auto v0 = guarded_eval(e, x1, x2, 1e9);
    const auto v1 = guarded_eval(s, x1, x2, 1e9);
    if (!v0 || !v1) continue;
    ++checked;
    CHECK(std::abs(*v0 - *v1) <= 1e-14 * std::max({1.0, std::abs(*v0), std::abs(*v1)}));
  }
}

TEST_CASE("simplifier identities") {
  CHECK(parse("x1 + 0").simplified().str() == "x1");
  CHECK(parse("0*x1 + x2*1").simplified().str() == "x2");
  CHECK(parse("-(-x1)").simplified().str() == "x1");
  CHECK(parse("x1^0").simplified().str() == "1");
  CHECK(parse("2*3").simplified().constant_value() == 6.0);
  CHECK((parse("x1*x2") - parse("x2*x1")).is_zero());
  CHECK(parse("1/0").simplified().str() == "1/0");  // fold must not raise
}
