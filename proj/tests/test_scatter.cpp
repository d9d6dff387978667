#include <doctest.h>

#include <cmath>
#include <numbers>

#include "superdensity/scatter.hpp"

using namespace superdensity;

namespace {
const FrameBounds kFrame{std::numbers::pi, 2.0, 2.0, 1.0};

QuadratureOptions opts() {
  QuadratureOptions q;
  q.tol = 1e-4;
  return q;
}
}  // namespace

TEST_CASE("parameters for the planar lebesgue case") {
  const auto p = scatter_parameters(kFrame, 2, 1, 0.1, 1.0);
  CHECK(p.m == doctest::Approx(3.0));
  CHECK(p.beta == 6);
  CHECK(p.lower_bound_constant == doctest::Approx(1.49e-5).epsilon(0.01));
  CHECK(check_parameters(p).empty());
  CHECK(p.rho(1) == doctest::Approx(std::sqrt(0.1 / (std::numbers::pi * 216.0))));
  CHECK(p.frame_chain_limit() > 0.0);
}

TEST_CASE("h at or below m_bar is a hypothesis violation") {
  CHECK_THROWS_AS(scatter_parameters(kFrame, 2, 1, 0.1, 0.0), HypothesisViolation);
  CHECK_THROWS_AS(scatter_parameters(kFrame, 2, 1, 0.0, 1.0), InvalidArgument);
  try {
    scatter_parameters(kFrame, 2, 1, 0.1, -0.5);
  } catch (const HypothesisViolation& e) {
    CHECK(std::string(e.what()).find("np/q - q") != std::string::npos);
  }
}

TEST_CASE("materialized and structured constructions agree") {
  const auto mu = lebesgue(2);
  const auto p = scatter_parameters(kFrame, 2, 1, 0.1, 1.0);
  const Box omega{Point{-1.0, -1.0}, Point{1.0, 1.0}};
  const GridCloud cloud(omega, 0.002, Point{0.001, 0.001});
  const auto a = construct_scattered_set(*mu, p, box(omega.lo, omega.hi), cloud, 2, opts());
  const auto b = construct_scattered_set_structured(*mu, p, omega, cloud, 2, opts());
  CHECK(a.ball_count() == b.ball_count());
  REQUIRE(a.levels.size() == b.levels.size());
  for (std::size_t i = 0; i < a.levels.size(); ++i) CHECK(a.levels[i].gamma_count == b.levels[i].gamma_count);
  CHECK(a.measure_upper_bound == doctest::Approx(b.measure_upper_bound));
  CHECK(a.measure_upper_bound < 0.1);
  CHECK(balls_inside(a, box(omega.lo, omega.hi)));
  CHECK(balls_inside(b, box(omega.lo, omega.hi)));
  const auto ra = a.region(), rb = b.region();
  for (const auto& x : halton_points(omega, 2000)) CHECK(ra->contains(x) == rb->contains(x));
}

TEST_CASE("verification at low resolution") {
  const auto mu = lebesgue(2);
  const auto p = scatter_parameters(kFrame, 2, 1, 0.1, 1.0);
  const Box omega{Point{-1.0, -1.0}, Point{1.0, 1.0}};
  const GridCloud cloud(omega, 0.002, Point{0.001, 0.001});
  const auto s = construct_scattered_set(*mu, p, box(omega.lo, omega.hi), cloud, 2, opts());
  const auto samples = sample_cloud_points(box(omega.lo, omega.hi), omega, cloud, 5);
  CHECK(samples.size() == 5);
  VerifyOptions v;
  v.measure_A = false;
  const auto r = verify_scattered_set(*mu, s, box(omega.lo, omega.hi), samples, opts(), v);
  CHECK(r.budget_ok);
  CHECK(r.statistic_ok);
  CHECK(r.pass());
}

TEST_CASE("halton points are deterministic and inside") {
  const Box b{Point{0.0, 0.0}, Point{2.0, 1.0}};
  const auto a = halton_points(b, 50), c = halton_points(b, 50);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] == c[i]);
    CHECK(a[i][0] > 0.0);
    CHECK(a[i][1] < 1.0);
  }
  CHECK(halton_points(b, 1)[0] == Point{1.0, 1.0 / 3.0});
}

TEST_CASE("shrink of a box") {
  const auto s = shrink(box(Point{-1.0, -1.0}, Point{1.0, 1.0}), 0.25);
  CHECK(contains(s, Point{0.7, 0.0}));
  CHECK_FALSE(contains(s, Point{0.8, 0.0}));
  CHECK_FALSE(boundary_samples(box(Point{-1.0, -1.0}, Point{1.0, 1.0})).empty());
}

TEST_CASE("K_max must be positive") {
  const auto mu = lebesgue(2);
  const auto p = scatter_parameters(kFrame, 2, 1, 0.1, 1.0);
  const Box omega{Point{-1.0, -1.0}, Point{1.0, 1.0}};
  const GridCloud cloud(omega, 0.1, Point{0.05, 0.05});
  CHECK_THROWS_AS(construct_scattered_set(*mu, p, box(omega.lo, omega.hi), cloud, 0, opts()), InvalidArgument);
}
