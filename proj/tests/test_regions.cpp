#include <doctest.h>

#include "superdensity/chart.hpp"
#include "superdensity/regions.hpp"
#include "superdensity/surfaces.hpp"

using namespace superdensity;

TEST_CASE("primitives are open") {
  const Region b = ball(Point{0.0, 0.0}, 1.0);
  CHECK(contains(b, Point{0.5, 0.5}));
  CHECK_FALSE(contains(b, Point{1.0, 0.0}));
  const Region bx = box(Point{0.0, 0.0}, Point{1.0, 2.0});
  CHECK(contains(bx, Point{0.5, 1.9}));
  CHECK_FALSE(contains(bx, Point{0.0, 1.0}));
  const Region h = half_space(Point{2.0, 0.0}, 0.5);  // 2x < 0.5
  CHECK(contains(h, Point{0.24, 7.0}));
  CHECK_FALSE(contains(h, Point{0.25, 0.0}));
}

TEST_CASE("dimension mismatch is reported") {
  const Region b = ball(Point{0.0, 0.0}, 1.0);
  CHECK_THROWS_AS(contains(b, Point{0.0, 0.0, 0.0}), DimensionMismatch);
  CHECK_THROWS_AS(intersect({b, ball(Point{0.0}, 1.0)}), DimensionMismatch);
}

TEST_CASE("boolean combinators") {
  const Region a = ball(Point{0.0, 0.0}, 1.0), b = ball(Point{1.0, 0.0}, 1.0);
  const Point mid{0.5, 0.0}, left{-0.5, 0.0}, far{5.0, 5.0};
  CHECK(contains(intersect({a, b}), mid));
  CHECK_FALSE(contains(intersect({a, b}), left));
  CHECK(contains(unite({a, b}), left));
  CHECK(contains(complement(unite({a, b})), far));
  CHECK_FALSE(contains(empty_region(2), mid));
  CHECK(contains(whole_space(2), far));
}

TEST_CASE("cover of a cell fully inside, outside and straddling") {
  const Region b = ball(Point{0.0, 0.0}, 1.0);
  const Cover in = cover_box(*b, Box{Point{-0.1, -0.1}, Point{0.1, 0.1}});
  CHECK(in.lo == 1.0);
  const Cover out = cover_box(*b, Box{Point{2.0, 2.0}, Point{3.0, 3.0}});
  CHECK(out.hi == 0.0);
  const Cover mixed = cover_box(*b, Box{Point{0.5, 0.5}, Point{1.5, 1.5}});
  CHECK(mixed.lo < mixed.hi);
  CHECK(mixed.lo <= mixed.est);
  CHECK(mixed.est <= mixed.hi);
}

TEST_CASE("ball union index") {
  std::vector<BallUnionIndex::Ball> balls = {{Point{0.0, 0.0}, 0.1, 1}, {Point{0.5, 0.5}, 0.05, 2}};
  auto idx = std::make_shared<const BallUnionIndex>(2, balls);
  CHECK(idx->size() == 2);
  CHECK(idx->query(Point{0.05, 0.0}));
  CHECK(idx->query(Point{0.52, 0.5}));
  CHECK_FALSE(idx->query(Point{0.52, 0.5}, 1));
  CHECK_FALSE(idx->query(Point{0.3, 0.3}));
  const Region r = ball_union(idx, 1);
  CHECK(contains(r, Point{0.0, 0.05}));
  CHECK_FALSE(contains(r, Point{0.5, 0.5}));
  CHECK_THROWS(BallUnionIndex(2, {{Point{0.0, 0.0}, 0.0, 1}}));
}

TEST_CASE("product ball union matches its expansion") {
  ProductBallLevel lv;
  lv.label = 1;
  lv.radius = 0.05;
  lv.axis = {{-0.5, 0.0, 0.5}, {-0.25, 0.25}};
  CHECK(lv.count() == 6);
  const ProductBallUnion pu(2, std::vector<ProductBallLevel>{lv});
  CHECK(pu.contains(Point{0.51, 0.26}));
  CHECK_FALSE(pu.contains(Point{0.25, 0.25}));
  const Cover c = cover_box(pu, Box{Point{-0.56, -0.31}, Point{-0.44, -0.19}});
  CHECK(c.lo > 0.0);
  CHECK(c.hi < 1.0);
}

TEST_CASE("builtin predicates") {
  const Region cusp = predicate(builtin_predicate("cusp", 2, {2.0}));
  CHECK(contains(cusp, Point{0.5, 0.2}));
  CHECK_FALSE(contains(cusp, Point{0.5, 0.3}));
  CHECK_FALSE(contains(cusp, Point{-0.5, 0.1}));
  CHECK(cusp_area(2.0, 0.0, 1.0, 0.0, 1.0) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(builtin_predicate("nope", 2, {}), InvalidArgument);
}

TEST_CASE("pullback through a chart") {
  const auto diag = builtin_chart("diagonal");
  const Region pre = pullback(diag, half_space(Point{1.0, 0.0}, 0.0));
  CHECK(pre->dim() == 1);
  CHECK(contains(pre, Point{-0.3}));
  CHECK_FALSE(contains(pre, Point{0.3}));
}
