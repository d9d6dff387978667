#include <doctest.h>

#include <sstream>

#include "superdensity/lattice.hpp"

using namespace superdensity;

TEST_CASE("lattice spec validation and scale") {
  LatticeSpec s{2, 1, 6, 4};
  s.validate();
  CHECK(s.scale(3) == 216.0);
  CHECK(s.per_axis(2) == 72);
  CHECK_THROWS_AS((LatticeSpec{2, 1, 1, 2}.validate()), InvalidArgument);
  CHECK_THROWS_AS((LatticeSpec{2, 1, 6, 40}.scale(40)), InvalidArgument);
}

TEST_CASE("floor_scaled at cell boundaries") {
  // the double nearest 1/3 is below it, so the exact product is below 1
  CHECK(floor_scaled(1.0 / 3.0, 3.0) == 0);
  CHECK(floor_scaled(0.1, 10.0) == 1);
  CHECK(floor_scaled(-1e-300, 6.0) == -1);
  CHECK(floor_scaled(0.5, 6.0) == 3);
  CHECK(floor_scaled(-0.5, 6.0) == -3);
}

TEST_CASE("cell ids and keys round trip") {
  LatticeSpec s{2, 1, 6, 3};
  const CellId c = cell_of(Point{0.51, -0.99}, 2, s);
  CHECK(c.level == 2);
  CHECK(c.index[0] == 18);
  CHECK(c.index[1] == -36);
  const auto key = cell_key(c, s);
  CHECK(cell_from_key(key, 2, s) == c);
  const Box b = c.box(s);
  CHECK(b.lo[0] <= 0.51);
  CHECK(0.51 < b.hi[0]);
}

TEST_CASE("exactly-one property on an explicit cloud") {
  LatticeSpec s{2, 1, 2, 3};
  PointSet pts(2);
  for (double x : {-0.9, -0.3, 0.1, 0.2, 0.7})
    for (double y : {-0.7, 0.05, 0.6}) pts.push_back(Point{x, y});
  const ExplicitCloud cloud(pts, 0.01);
  const auto d = lambda_distribution(cloud, s);
  std::string why;
  CHECK(verify_exactly_one(d, cloud, &why));
  CHECK(why.empty());
  REQUIRE(d.counts.size() == 3);
  CHECK(d.counts[0] <= d.counts[1]);
  CHECK(d.counts[1] <= d.counts[2]);
  CHECK(d.counts[2] == d.points.size());
  CHECK(d.points[0] == cloud.first());
}

TEST_CASE("grid cloud matches its explicit expansion") {
  const Box omega{Point{-1.0, -1.0}, Point{1.0, 1.0}};
  const GridCloud grid(omega, 0.125, Point{0.0625, 0.0625});
  PointSet pts(2);
  for (double x : grid.axis_coords(0))
    for (double y : grid.axis_coords(1)) pts.push_back(Point{x, y});
  const ExplicitCloud ex(pts, grid.resolution());
  CHECK(grid.size() == ex.size());
  LatticeSpec s{2, 1, 2, 3};
  for (int k = 1; k <= 3; ++k) {
    const auto a = grid.occupied(k, s), b = ex.occupied(k, s);
    CHECK(a.keys == b.keys);
    REQUIRE(a.reps.size() == b.reps.size());
    for (std::size_t i = 0; i < a.reps.size(); ++i) CHECK(a.reps[i] == b.reps[i]);
  }
  CHECK(grid.has_point(Point{0.0625, -0.9375}));
  CHECK_FALSE(grid.has_point(Point{0.0, 0.0}));
  CHECK(grid.nearest(Point{0.01, 0.01}) == Point{0.0625, 0.0625});
}

TEST_CASE("resolution cap") {
  LatticeSpec s{2, 1, 2, 10};
  CHECK(resolution_cap(s, 0.01) == 5);
}

TEST_CASE("distribution csv") {
  LatticeSpec s{1, 1, 2, 2};
  PointSet pts(1);
  pts.push_back(Point{0.1});
  pts.push_back(Point{-0.6});
  const ExplicitCloud cloud(pts, 0.01);
  std::ostringstream os;
  write_distribution_csv(os, lambda_distribution(cloud, s));
  CHECK(os.str().find('\n') != std::string::npos);
}
