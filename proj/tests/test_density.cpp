#include <doctest.h>

#include <cmath>

#include "superdensity/density.hpp"

using namespace superdensity;

namespace {
QuadratureOptions opts() {
  QuadratureOptions q;
  q.tol = 1e-4;
  return q;
}
}  // namespace

TEST_CASE("fit_line recovers a line") {
  const auto f = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r2 == doctest::Approx(1.0));
}

TEST_CASE("radii schedule") {
  const auto r = RadiiSchedule{0.5, 0.5, 4}.radii();
  REQUIRE(r.size() == 4);
  CHECK(r[3] == doctest::Approx(0.0625));
}

TEST_CASE("interior point of a ball is locally interior") {
  const auto L2 = lebesgue(2);
  const auto E = ball(Point{0.0, 0.0}, 1.0);
  const auto p = ratio_profile(*L2, E, Point{0.2, 0.1}, RadiiSchedule{0.5, 0.7, 16}.radii(), opts());
  const auto est = estimate_density_degree(p);
  CHECK(est.classification == DegreeClass::LocallyInterior);
  CHECK(std::isinf(est.value()));
  CHECK(superdensity_test(p, 3.0) == TestVerdict::Pass);
}

TEST_CASE("boundary of a half plane is not a density point") {
  const auto L2 = lebesgue(2);
  const auto E = half_space(Point{1.0, 0.0}, 0.0);
  const auto p = ratio_profile(*L2, E, Point{0.0, 0.0}, RadiiSchedule{0.5, 0.7, 16}.radii(), opts());
  const auto est = estimate_density_degree(p);
  CHECK(est.classification == DegreeClass::NotDensityPoint);
  CHECK(est.value() == -2.0);
  CHECK(superdensity_test(p, 0.0) == TestVerdict::Fail);
}

TEST_CASE("cusp degree alpha - 1") {
  const auto L2 = lebesgue(2);
  const auto E = complement(predicate(builtin_predicate("cusp", 2, {2.0})));
  const auto p = ratio_profile(*L2, E, Point{0.0, 0.0}, RadiiSchedule{0.5, 0.7, 16}.radii(), opts());
  const auto est = estimate_density_degree(p);
  CHECK(est.classification == DegreeClass::FiniteDegree);
  CHECK(est.slope == doctest::Approx(1.0).epsilon(0.15));
  CHECK(superdensity_test(p, 0.5) == TestVerdict::Pass);
  CHECK(superdensity_test(p, 1.8) == TestVerdict::Fail);
  CHECK(classify_point(est, 1.0, 0.1) == PointClass::Boundary);
  CHECK(classify_point(est, 2.0, 0.1) == PointClass::Exterior);
  CHECK(classify_point(est, 0.5, 0.1) == PointClass::Interior);
}

TEST_CASE("base statistic of a ball union") {
  const auto L2 = lebesgue(2);
  const auto A = ball(Point{0.0, 0.0}, 0.3);
  const auto in = base_statistic(*L2, A, Point{0.0, 0.0}, 1.0, RadiiSchedule{0.2, 0.7, 10}.radii(), opts());
  CHECK(in.verdict == BaseStatistic::Verdict::Member);
  const auto out = base_statistic(*L2, A, Point{0.8, 0.0}, 1.0, RadiiSchedule{0.2, 0.7, 10}.radii(), opts());
  CHECK(out.verdict == BaseStatistic::Verdict::NonMember);
}

TEST_CASE("empty radius list is insufficient") {
  DensityProfile p;
  p.x = Point{0.0, 0.0};
  CHECK_THROWS_AS(estimate_density_degree(p), InsufficientData);
}
