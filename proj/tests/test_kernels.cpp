#include <doctest.h>

#include <cstring>
#include <random>
#include <vector>

#include "superdensity/kernels.hpp"

namespace k = superdensity::kernels;

namespace {

struct Soa {
  std::vector<double> v[superdensity::kMaxDim];
};

std::vector<double> randoms(std::mt19937_64& g, std::size_t n, double a, double b) {
  std::uniform_real_distribution<double> u(a, b);
  std::vector<double> out(n);
  for (auto& x : out) x = u(g);
  return out;
}

}  // namespace

TEST_CASE("backend selection") {
  CHECK(k::backend_name(k::Backend::Scalar) == std::string("scalar"));
  if (!k::avx2_available()) CHECK_THROWS_AS(k::set_backend(k::Backend::Avx2), superdensity::InvalidArgument);
  const auto before = k::active_backend();
  k::set_backend(k::Backend::Scalar);
  CHECK(k::active_backend() == k::Backend::Scalar);
  k::set_backend(before);
}

TEST_CASE("avx2 kernels match the scalar reference bit for bit") {
  if (!k::avx2_available()) {
    MESSAGE("AVX2 unavailable; equivalence not exercised");
    return;
  }
  std::mt19937_64 g(7);
  for (int n = 1; n <= 4; ++n) {
    for (std::size_t count : {std::size_t{1}, std::size_t{3}, std::size_t{4}, std::size_t{17}, std::size_t{1000}}) {
      Soa lo;
      k::CellBatch cells;
      cells.dim = n;
      cells.count = count;
      for (int a = 0; a < n; ++a) {
        lo.v[a] = randoms(g, count, -1.0, 1.0);
        cells.lo[a] = lo.v[a].data();
        cells.size[a] = 0.01 * (a + 1) * (1 + static_cast<int>(count % 5));
      }
      const auto center = randoms(g, static_cast<std::size_t>(n), -0.5, 0.5);
      std::vector<std::uint8_t> s1(count), s2(count);
      for (double r2 : {0.0, 1e-6, 0.04, 0.3, 2.0}) {
        k::scalar::classify_cells_ball(cells, center.data(), r2, s1.data());
        k::avx2::classify_cells_ball(cells, center.data(), r2, s2.data());
        CHECK(s1 == s2);
      }

      Soa c;
      k::BallSpan balls;
      balls.dim = n;
      balls.count = count;
      for (int a = 0; a < n; ++a) {
        c.v[a] = randoms(g, count, -1.0, 1.0);
        balls.c[a] = c.v[a].data();
      }
      auto r = randoms(g, count, 0.0, 0.3);
      std::vector<double> r2(count);
      for (std::size_t i = 0; i < count; ++i) r2[i] = r[i] * r[i];
      balls.r = r.data();
      balls.r2 = r2.data();
      for (int q = 0; q < 50; ++q) {
        const auto x = randoms(g, static_cast<std::size_t>(n), -1.2, 1.2);
        CHECK(k::scalar::any_ball_contains(balls, x.data()) == k::avx2::any_ball_contains(balls, x.data()));
        auto blo = randoms(g, static_cast<std::size_t>(n), -1.0, 0.5), bhi = blo;
        for (auto& v : bhi) v += 0.3;
        std::vector<std::uint8_t> f1(count), f2(count);
        k::scalar::ball_box_relation(balls, blo.data(), bhi.data(), f1.data());
        k::avx2::ball_box_relation(balls, blo.data(), bhi.data(), f2.data());
        CHECK(f1 == f2);
      }
    }
  }
}

TEST_CASE("floor_scaled is exact and identical across backends") {
  std::mt19937_64 g(11);
  auto x = randoms(g, 4099, -3.0, 3.0);
  // values sitting exactly on cell boundaries
  for (int i = -40; i <= 40; ++i) x.push_back(i / 6.0);
  x.push_back(-0.0);
  x.push_back(1.0 / 3.0);
  for (double scale : {1.0, 6.0, 36.0, 1296.0, 4294967296.0}) {
    std::vector<std::int64_t> a(x.size()), b(x.size());
    k::scalar::floor_scaled(x.data(), x.size(), scale, a.data());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const long double exact = std::floor(static_cast<long double>(x[i]) * scale);
      REQUIRE(a[i] == static_cast<std::int64_t>(exact));
    }
    if (k::avx2_available()) {
      k::avx2::floor_scaled(x.data(), x.size(), scale, b.data());
      CHECK(a == b);
    }
  }
}
