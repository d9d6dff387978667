#include <doctest.h>

#include <cmath>
#include <numbers>

#include "superdensity/surfaces.hpp"

using namespace superdensity;

TEST_CASE("builtin charts evaluate") {
  const auto c = builtin_chart("circle");
  const Point p = c->eval(Point{0.0});
  CHECK(p[0] == doctest::Approx(1.0));
  CHECK(jacobian_factor(*c, Point{0.3}) == doctest::Approx(1.0));
  CHECK(jacobian_factor(*builtin_chart("diagonal"), Point{0.1}) == doctest::Approx(std::sqrt(2.0)));
  CHECK(jacobian_factor(*builtin_chart("plane", {1, 0, -1, 1}), Point{0.1, 0.1}) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(builtin_chart("torus"), InvalidArgument);
  CHECK(builtin_chart_names().size() >= 4);
}

TEST_CASE("chart validation") {
  for (const auto& n : builtin_chart_names()) CHECK(validate_chart(*builtin_chart(n)).empty());
  SurfaceChart bad = *builtin_chart("diagonal");
  bad.phi = [](const Point& y) { return Point{y[0] * y[0], 0.0}; };
  bad.jacobian = {};
  CHECK_FALSE(validate_chart(bad).empty());
}

TEST_CASE("min eigenvalue") {
  Matrix m(2, 2);
  m(0, 0) = 2;
  m(0, 1) = 1;
  m(1, 0) = 1;
  m(1, 1) = 2;
  CHECK(min_eigenvalue(m) == doctest::Approx(1.0));
  m(0, 1) = 1.5;
  CHECK_THROWS_AS(min_eigenvalue(m), InvalidArgument);
}

TEST_CASE("frame constants and audits for the diagonal") {
  const auto c = builtin_chart("diagonal");
  const auto fc = frame_constants(*c);
  CHECK(fc.j_min == doctest::Approx(std::sqrt(2.0)));
  CHECK(fc.bounds.p == 1.0);
  CHECK(fc.bounds.q == 1.0);
  CHECK(fc.r0 > 0.0);
  QuadratureOptions q;
  q.tol = 1e-3;
  CHECK(two_sided_audit(*c, fc, 10, 1, q).ok());
  CHECK(inclusion_audit(*c, fc, 16, 5, 1).ok());
}

TEST_CASE("pullback agreement on the diagonal half plane") {
  const auto c = builtin_chart("diagonal");
  QuadratureOptions q;
  q.tol = 1e-4;
  const auto r = pullback_degree_check(c, half_space(Point{1.0, 0.0}, 0.0), Point{0.0},
                                       RadiiSchedule{0.2, 0.7, 12}.radii(), q);
  CHECK(r.classes_agree);
  CHECK(r.agree);
  CHECK(r.ambient.classification == DegreeClass::NotDensityPoint);
}
