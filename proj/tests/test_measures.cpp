#include <doctest.h>

#include <numbers>

#include "superdensity/measures.hpp"
#include "superdensity/surfaces.hpp"

using namespace superdensity;

namespace {
QuadratureOptions opts(double tol = 1e-4) {
  QuadratureOptions q;
  q.tol = tol;
  return q;
}
}  // namespace

TEST_CASE("lebesgue disk encloses pi") {
  const auto L2 = lebesgue(2);
  const auto m = ball_measure(*L2, Point{0.0, 0.0}, 1.0, opts());
  CHECK(m.contains(std::numbers::pi));
  CHECK(m.width() <= 1e-3);
  CHECK((m.flags & kUncertified) == 0);
}

TEST_CASE("lebesgue in 1 and 3 dimensions") {
  CHECK(ball_measure(*lebesgue(1), Point{0.3}, 0.25, opts()).contains(0.5));
  const auto m3 = ball_measure(*lebesgue(3), Point{0.0, 0.0, 0.0}, 0.5, opts(1e-3));
  CHECK(m3.contains(4.0 / 3.0 * std::numbers::pi * 0.125));
}

TEST_CASE("dirac and sums") {
  const auto d = dirac(Point{0.5, 0.5});
  CHECK(ball_measure(*d, Point{0.5, 0.6}, 0.2).contains(1.0));
  CHECK(ball_measure(*d, Point{0.5, 0.8}, 0.2).upper == 0.0);
  // the atom sits on the sphere of an open ball: not counted
  CHECK(ball_measure(*d, Point{0.5, 0.75}, 0.25).upper == 0.0);
  const auto s = sum({lebesgue(2), d});
  CHECK(ball_measure(*s, Point{0.5, 0.5}, 0.1, opts()).contains(1.0 + std::numbers::pi * 0.01));
}

TEST_CASE("restriction to a half plane halves the disk") {
  const auto half = restrict_to(lebesgue(2), half_space(Point{0.0, 1.0}, 0.0));
  CHECK(ball_measure(*half, Point{0.0, 0.0}, 1.0, opts()).contains(std::numbers::pi / 2));
  const auto e = restricted_ball_measure(*lebesgue(2), half_space(Point{0.0, 1.0}, 0.0), Point{0.0, 0.0}, 1.0, opts());
  CHECK(e.contains(std::numbers::pi / 2));
}

TEST_CASE("weighted lebesgue") {
  const auto w = lebesgue(2, builtin_density("one_plus_y1sq"));
  // integral of 1 + x^2 over the unit disk = pi + pi/4
  CHECK(ball_measure(*w, Point{0.0, 0.0}, 1.0, opts(1e-5)).contains(std::numbers::pi * 1.25));
  CHECK_THROWS_AS(builtin_density("nope"), InvalidArgument);
}

TEST_CASE("surface measure of the diagonal") {
  const auto mu = surface_measure(builtin_chart("diagonal"));
  for (double r : {0.5, 0.25, 0.1}) {
    const auto m = ball_measure(*mu, Point{0.2, 0.2}, r, opts());
    CHECK(m.contains(2 * r));
  }
  CHECK(ball_measure(*mu, Point{0.5, -0.5}, 0.1, opts()).upper == 0.0);
}

TEST_CASE("signed integrand") {
  const auto L2 = lebesgue(2);
  const auto m = measure_of(*L2, box(Point{-1.0, -1.0}, Point{1.0, 1.0}), Box{Point{-1.0, -1.0}, Point{1.0, 1.0}},
                            opts(1e-5), [](const Point& x) { return x[0]; });
  CHECK(m.lower <= 0.0);
  CHECK(m.upper >= 0.0);
  CHECK(m.width() < 1e-3);
}

TEST_CASE("interval helpers") {
  const auto a = MeasureInterval{1.0, 2.0, 1.5, 0}, b = MeasureInterval{0.5, 1.0, 0.75, kUncertified};
  const auto s = a + b;
  CHECK(s.lower == 1.5);
  CHECK(s.upper == 3.0);
  CHECK((s.flags & kUncertified) != 0);
  const auto q = divide(a, b);
  CHECK(q.lower == 1.0);
  CHECK(q.upper == 4.0);
  CHECK((divide(a, MeasureInterval{0.0, 1.0, 0.5, 0}).flags & kResolutionLimited) != 0);
  CHECK(overlaps(a, b));
  CHECK_FALSE(overlaps(a, MeasureInterval{3.0, 4.0, 3.5, 0}));
}

TEST_CASE("dimension mismatch") {
  CHECK_THROWS_AS(ball_measure(*lebesgue(2), Point{0.0, 0.0, 0.0}, 1.0), DimensionMismatch);
}

TEST_CASE("support proxy") {
  const auto mu = surface_measure(builtin_chart("diagonal"));
  const std::vector<double> radii{0.1, 0.01};
  CHECK(in_support(*mu, Point{0.3, 0.3}, radii, opts(1e-3)));
  CHECK_FALSE(in_support(*mu, Point{0.3, -0.3}, radii, opts(1e-3)));
}
