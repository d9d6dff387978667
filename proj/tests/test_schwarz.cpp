#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "superdensity/schwarz.hpp"

using namespace superdensity;

TEST_CASE("bump profile") {
  const Bump b = bump(0.5);
  CHECK(b.value(0.0) == 1.0);
  CHECK(b.value(0.5) == 1.0);
  CHECK(b.value(1.0) == 0.0);
  CHECK(b.value(0.75) == doctest::Approx(0.5));
  CHECK(b.slope(0.25) == 0.0);
  double worst = 0.0;
  for (int i = 0; i <= 1000; ++i) worst = std::max(worst, std::abs(b.slope(i / 1000.0)));
  CHECK(worst <= b.slope_bound());
  CHECK_THROWS_AS(bump(1.0), InvalidArgument);
}

TEST_CASE("bump partials match finite differences") {
  const Bump b = bump(0.3);
  const Point c{0.1, -0.2}, x{0.35, 0.05};
  const double h = 1e-6;
  for (int a = 0; a < 2; ++a) {
    Point xp = x, xm = x;
    xp[a] += h;
    xm[a] -= h;
    const double fd = (b.at(xp, c, 0.5) - b.at(xm, c, 0.5)) / (2 * h);
    CHECK(b.partial(x, c, 0.5, a) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("density form pairing equals integration by parts") {
  const auto d = density_form(0, builtin_density("one_plus_y1sq"));
  const auto t = product_bump(Point{0.2, 0.1}, Point{0.5, 0.4});
  const auto a = derivative_pairing(d, t), b = parts_pairing(d, t);
  CHECK(overlaps(a, b, 1e-12));
  CHECK(a.estimate != 0.0);
}

TEST_CASE("disk flux against a plateau gives the divergence theorem") {
  // D_1 of L^2 on the unit disk tested against x -> x1 near the disk: -int nu_1 x1 dH^1 = -pi
  const auto d = disk_flux(0, Point{0.0, 0.0}, 1.0);
  const auto plate = plateau(Box{Point{-1.5, -1.5}, Point{1.5, 1.5}}, 0.2);
  TestFunction t{[&](const Point& x) { return x[0] * plate.f(x); },
                 [&](const Point& x, int a) { return (a == 0 ? plate.f(x) : 0.0) + x[0] * plate.grad(x, a); },
                 plate.support};
  CHECK(derivative_pairing(d, t).contains(-std::numbers::pi) );
}

TEST_CASE("total variation of the disk flux") {
  QuadratureOptions q;
  q.tol = 1e-5;
  const auto d = disk_flux(1, Point{0.0, 0.0}, 1.0);
  // |nu_2| over the whole circle integrates to 4
  const auto tv = derivative_total_variation(d, Point{0.0, 0.0}, 2.0, q);
  CHECK(tv.estimate == doctest::Approx(4.0).epsilon(1e-3));
  CHECK((tv.flags & kMidpoint) != 0);
  CHECK(derivative_total_variation(d, Point{0.0, 0.0}, 0.5, q).upper == 0.0);
}

TEST_CASE("estimator on builtin fields") {
  QuadratureOptions q;
  q.tol = 1e-6;
  const auto mu = lebesgue(2);
  const auto c = schwarz_estimator(*mu, builtin_field("curl"), 0, 1, Point{0.0, 0.0}, 0.05, 0.5, q);
  CHECK(c.gamma.contains(2.0));
  CHECK(c.has_analytic);
  const auto s = schwarz_estimator(*mu, builtin_field("sin_product"), 0, 1, Point{0.3, 0.2}, 0.05, 0.5, q);
  CHECK(s.gamma.contains(0.0));
  CHECK_THROWS_AS(builtin_field("nope"), InvalidArgument);
}

TEST_CASE("sigma profile for lebesgue is rho^-2") {
  const auto mu = lebesgue(2);
  QuadratureOptions q;
  q.tol = 1e-5;
  const auto s = sigma_profile(*mu, Point{0.0, 0.0}, {0.1, 0.05}, {0.5, 0.9}, 10.0, q);
  REQUIRE(s.size() == 2);
  CHECK(s[0] == doctest::Approx(4.0).epsilon(1e-3));
  CHECK(s[1] == doctest::Approx(1.0 / 0.81).epsilon(1e-3));
}

TEST_CASE("counterexample values") {
  CHECK(counterexample_eta(0.0) == 1.0);
  CHECK(counterexample_eta(2 * std::numbers::pi * std::numbers::pi + 1.0) == 0.0);
  for (int j = 1; j <= 3; ++j) {
    const auto v = diagonal_counterexample(j);
    CHECK(v.ok());
    CHECK(v.bound == doctest::Approx(j * std::numbers::pi * std::sqrt(2.0) - std::sqrt(2.0)));
  }
  std::ostringstream os;
  write_counterexample_csv(os, {diagonal_counterexample(1)});
  CHECK(os.str().rfind("j,value,bound", 0) == 0);
}
