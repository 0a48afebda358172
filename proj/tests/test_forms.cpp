#include <doctest.h>

#include <cmath>
#include <random>

#include "morse/forms.hpp"
#include "morse/scenario.hpp"

using namespace morse;

namespace {

Expression t(int i) { return Expression::variable(i); }
Expression num(double v) { return Expression::constant(v); }

ChartPoint point2(double a, double b) {
  Vec v(2);
  v << a, b;
  return {0, v};
}

DifferentialForm torus_form(int degree, std::vector<Expression> coeffs) {
  return DifferentialForm::uniform(degree, 2, 1, std::move(coeffs));
}

// Random torus forms built from trig monomials.
Expression random_coefficient(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> k(0, 2);
  std::uniform_real_distribution<double> a(-1.0, 1.0);
  Expression two_pi = num(2.0) * Expression::pi();
  Expression e = num(std::round(a(rng) * 100) / 100);
  e = e + num(std::round(a(rng) * 100) / 100) * sin(two_pi * num(k(rng)) * t(0) + num(0.3)) *
              cos(two_pi * num(k(rng)) * t(1));
  return e + num(std::round(a(rng) * 100) / 100) * cos(two_pi * t(0)) * sin(two_pi * t(1) + num(0.7));
}

DifferentialForm random_torus_form(std::mt19937_64& rng, int degree) {
  std::vector<Expression> coeffs;
  for (std::size_t k = 0; k < multi_indices(2, degree).size(); ++k) coeffs.push_back(random_coefficient(rng));
  return torus_form(degree, coeffs);
}

}  // namespace

TEST_CASE("multi-index layout is lexicographic") {
  const auto& idx = multi_indices(3, 2);
  REQUIRE(idx.size() == 3);
  CHECK(idx[0] == std::vector<int>{0, 1});
  CHECK(idx[1] == std::vector<int>{0, 2});
  CHECK(idx[2] == std::vector<int>{1, 2});
  CHECK(multi_index_position(3, {1, 2}) == 2);
  CHECK(multi_indices(2, 0).size() == 1);
}

TEST_CASE("exterior derivative examples on the torus chart") {
  ChartPoint p = point2(0.13, 0.37);
  DifferentialForm g = torus_form(0, {t(0)});
  DifferentialForm dg = exterior_derivative(g);
  CHECK(dg.degree() == 1);
  CHECK(dg.coefficients_at(p)[0] == doctest::Approx(1.0));
  CHECK(dg.coefficients_at(p)[1] == doctest::Approx(0.0));

  Expression two_pi = num(2.0) * Expression::pi();
  DifferentialForm w = torus_form(1, {sin(two_pi * t(1)), Expression()});
  DifferentialForm dw = exterior_derivative(w);
  CHECK(dw.degree() == 2);
  CHECK(dw.coefficients_at(p)[0] == doctest::Approx(-2 * M_PI * std::cos(2 * M_PI * 0.37)).epsilon(1e-12));

  // Finite-difference cross-check of the same coefficient.
  const double h = 1e-5;
  double fd = -(std::sin(2 * M_PI * (0.37 + h)) - std::sin(2 * M_PI * (0.37 - h))) / (2 * h);
  CHECK(dw.coefficients_at(p)[0] == doctest::Approx(fd).epsilon(1e-8));

  DifferentialForm dt1 = torus_form(1, {num(1.0), Expression()});
  DifferentialForm z = exterior_derivative(dt1);
  CHECK(z.coefficient(0, 0).is_zero());

  CHECK_THROWS_AS(exterior_derivative(torus_form(2, {num(1.0)})), DegreeError);
}

TEST_CASE("d of d vanishes") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    DifferentialForm f = random_torus_form(rng, 0);
    DifferentialForm ddf = exterior_derivative(exterior_derivative(f));
    for (int k = 0; k < 10; ++k) CHECK(std::fabs(ddf.coefficients_at(point2(u(rng), u(rng)))[0]) < 1e-9);
  }
}

TEST_CASE("wedge examples") {
  ChartPoint p = point2(0.2, 0.6);
  DifferentialForm dt1 = torus_form(1, {num(1.0), Expression()});
  DifferentialForm dt2 = torus_form(1, {Expression(), num(1.0)});
  CHECK(wedge(dt1, dt2).coefficients_at(p)[0] == doctest::Approx(1.0));
  CHECK(wedge(dt2, dt1).coefficients_at(p)[0] == doctest::Approx(-1.0));
  CHECK(wedge(dt1, dt1).coefficients_at(p)[0] == 0.0);

  Expression f = sin(t(0)) + num(2.0), g = cos(t(1));
  DifferentialForm w = wedge(torus_form(1, {f, Expression()}), torus_form(1, {Expression(), g}));
  CHECK(w.coefficients_at(p)[0] == doctest::Approx((std::sin(0.2) + 2.0) * std::cos(0.6)));

  CHECK_THROWS_AS(wedge(dt1, torus_form(2, {num(1.0)})), DegreeError);
}

TEST_CASE("wedge is graded commutative and d is a graded derivation") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    for (int r = 0; r <= 1; ++r) {
      int p = 1 - r;
      DifferentialForm a = random_torus_form(rng, r);
      DifferentialForm b = random_torus_form(rng, p);
      DifferentialForm ab = wedge(a, b), ba = wedge(b, a);
      double sign = ((r * p) % 2 == 0) ? 1.0 : -1.0;
      DifferentialForm lhs = exterior_derivative(ab);
      DifferentialForm rhs = wedge(exterior_derivative(a), b) + wedge(a, exterior_derivative(b)).scaled(r % 2 ? -1.0 : 1.0);
      for (int k = 0; k < 5; ++k) {
        ChartPoint q = point2(u(rng), u(rng));
        Vec x = ab.coefficients_at(q), y = ba.coefficients_at(q);
        CHECK((x - sign * y).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((lhs.coefficients_at(q) - rhs.coefficients_at(q)).cwiseAbs().maxCoeff() < 1e-9);
      }
    }
  }
}

TEST_CASE("apply evaluates forms on tangent vectors") {
  ChartPoint p = point2(0.1, 0.2);
  DifferentialForm vol = torus_form(2, {num(3.0)});
  Mat v(2, 2);
  v << 1.0, 2.0, 3.0, 4.0;
  CHECK(vol.apply(p, v) == doctest::Approx(3.0 * (1.0 * 4.0 - 2.0 * 3.0)));
  DifferentialForm one = torus_form(1, {num(2.0), num(-1.0)});
  CHECK(one.apply(p, v.col(0)) == doctest::Approx(2.0 * 1.0 - 3.0));
}

TEST_CASE("sphere forms pull back consistently across stereographic charts") {
  const Scenario& s = builtin_scenario("round_sphere_height");
  std::mt19937_64 rng(1);
  std::vector<ChartPoint> pts;
  for (int k = 0; k < 500; ++k) pts.push_back(s.atlas().sample(rng));
  for (const NamedForm& f : s.data().forms) {
    CHECK(chart_consistency_defect(f.form, s.atlas(), pts) < 1e-9);
    if (f.form.declared_closed()) CHECK(closedness_defect(f.form, pts) < 1e-9);
  }
  CHECK(closedness_defect(s.form("x_dz"), pts) > 1e-3);
}
