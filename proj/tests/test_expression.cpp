#include <doctest.h>

#include <cmath>
#include <random>

#include "morse/expression.hpp"

using namespace morse;

namespace {

double at(const std::string& src, std::vector<double> vars) { return parse_expression(src).evaluate(vars); }

// Random expression generator for property tests; keeps sqrt/division
// arguments away from their singular sets.
Expression random_expr(std::mt19937_64& rng, int depth, int nvars) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 9);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  std::uniform_int_distribution<int> var(0, nvars - 1);
  switch (pick(rng)) {
    case 0:
      return Expression::constant(std::round(val(rng) * 100) / 100);
    case 1:
      return Expression::variable(var(rng));
    case 2:
      return random_expr(rng, depth - 1, nvars) + random_expr(rng, depth - 1, nvars);
    case 3:
      return random_expr(rng, depth - 1, nvars) - random_expr(rng, depth - 1, nvars);
    case 4:
      return random_expr(rng, depth - 1, nvars) * random_expr(rng, depth - 1, nvars);
    case 5:
      return random_expr(rng, depth - 1, nvars) /
             (Expression::constant(3.0) + pow(random_expr(rng, depth - 1, nvars), 2));
    case 6:
      return pow(random_expr(rng, depth - 1, nvars), std::uniform_int_distribution<int>(2, 3)(rng));
    case 7:
      return sin(random_expr(rng, depth - 1, nvars));
    case 8:
      return cos(random_expr(rng, depth - 1, nvars)) * exp(Expression::constant(0.1) * random_expr(rng, depth - 1, nvars));
    default:
      return sqrt(Expression::constant(1.0) + pow(random_expr(rng, depth - 1, nvars), 2));
  }
}

}  // namespace

TEST_CASE("parse_expression evaluates the grammar") {
  CHECK(at("cos(2*pi*t1)+cos(2*pi*t2)", {0.0, 0.0}) == doctest::Approx(2.0));
  CHECK(at("t1^2 - t2", {3.0, 4.0}) == doctest::Approx(5.0));
  CHECK(at("-t1^2", {3.0}) == doctest::Approx(-9.0));
  CHECK(at("2^(-2)", {}) == doctest::Approx(0.25));
  CHECK(at("1.5e1 / 3", {}) == doctest::Approx(5.0));
  CHECK(at("exp(0) + sqrt(t1) * sin(pi/2)", {4.0}) == doctest::Approx(3.0));
  CHECK(at("t1 - t2 - t3", {1.0, 2.0, 3.0}) == doctest::Approx(-4.0));
  CHECK(at("t1 / t2 / t3", {8.0, 2.0, 2.0}) == doctest::Approx(2.0));
}

TEST_CASE("evaluation errors on domain violations") {
  CHECK_THROWS_AS(at("sqrt(t1)", {-1.0}), EvaluationError);
  CHECK_THROWS_AS(at("1/(t1-1)", {1.0}), EvaluationError);
  CHECK_THROWS_AS(at("t3", {1.0, 2.0}), EvaluationError);
  CHECK_THROWS_AS(Program(parse_expression("sqrt(t1)"))(std::vector<double>{-1.0}), EvaluationError);
}

TEST_CASE("syntax errors carry positions") {
  try {
    parse_expression("t1 + * 2");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.position() == 5);
  }
  CHECK_THROWS_AS(parse_expression("foo(t1)"), ParseError);
  CHECK_THROWS_AS(parse_expression("t0"), ParseError);
  CHECK_THROWS_AS(parse_expression("t1^t2"), ParseError);
  CHECK_THROWS_AS(parse_expression("(t1"), ParseError);
  CHECK_THROWS_AS(parse_expression(""), ParseError);
}

TEST_CASE("symbolic derivatives of named nodes") {
  Expression e = parse_expression("sin(2*pi*t2)");
  CHECK(e.derivative(1).evaluate(std::vector<double>{0.0, 0.0}) == doctest::Approx(2 * M_PI));
  CHECK(e.derivative(0).is_zero());
  CHECK(parse_expression("t1").derivative(0).constant_value() == 1.0);
  CHECK(parse_expression("t1^3").derivative(0).evaluate(std::vector<double>{2.0}) == doctest::Approx(12.0));
  CHECK(parse_expression("t1^(-1)").derivative(0).evaluate(std::vector<double>{2.0}) == doctest::Approx(-0.25));
}

TEST_CASE("symbolic derivatives match central differences on random expressions") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pt(-1.0, 1.0);
  const double h = 1e-5;
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Expression e = random_expr(rng, 4, 2);
    Program f(e);
    for (int var = 0; var < 2; ++var) {
      Program df(e.derivative(var));
      for (int k = 0; k < 5; ++k) {
        std::vector<double> x{pt(rng), pt(rng)};
        std::vector<double> xp = x, xm = x;
        xp[static_cast<std::size_t>(var)] += h;
        xm[static_cast<std::size_t>(var)] -= h;
        double fd = (f(xp) - f(xm)) / (2 * h);
        double sym = df(x);
        CHECK(std::fabs(sym - fd) <= 1e-6 * std::max(1.0, std::fabs(sym)));
        ++checked;
      }
    }
  }
  CHECK(checked == 2000);
}

TEST_CASE("printing re-parses to a bit-identical evaluator") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pt(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Expression e = random_expr(rng, 4, 3);
    Expression back = parse_expression(e.to_string());
    CHECK(back.to_string() == e.to_string());
    std::vector<double> x{pt(rng), pt(rng), pt(rng)};
    CHECK(Program(back)(x) == Program(e)(x));
    CHECK(e.evaluate(x) == Program(e)(x));
  }
}

TEST_CASE("substitute composes expressions") {
  Expression f = parse_expression("t1^2 + t2");
  Expression g = f.substitute({parse_expression("sin(t1)"), parse_expression("t2*3")});
  std::vector<double> x{0.3, 0.7};
  CHECK(g.evaluate(x) == doctest::Approx(std::sin(0.3) * std::sin(0.3) + 2.1));
  CHECK(f.max_variable() == 1);
}
