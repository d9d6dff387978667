#include <algorithm>
#include <cmath>

#include "superdensity/kernels.hpp"

namespace superdensity::kernels::scalar {

void classify_cells_ball(const CellBatch& cells, const double* center, double r2, std::uint8_t* state) {
  for (std::size_t i = 0; i < cells.count; ++i) {
    double near = 0.0;
    double far = 0.0;
    for (int a = 0; a < cells.dim; ++a) {
      const double lo = cells.lo[a][i];
      const double hi = lo + cells.size[a];
      const double dl = center[a] - lo;
      const double dh = hi - center[a];
      const double dn = std::max(0.0, std::max(-dl, -dh));
      const double df = std::max(std::abs(dl), std::abs(dh));
      near = near + dn * dn;
      far = far + df * df;
    }
    if (far < r2)
      state[i] = kInside;
    else if (near >= r2)
      state[i] = kOutside;
    else
      state[i] = kMixed;
  }
}

bool any_ball_contains(const BallSpan& balls, const double* x) {
  for (std::size_t i = 0; i < balls.count; ++i) {
    double d2 = 0.0;
    for (int a = 0; a < balls.dim; ++a) {
      const double d = x[a] - balls.c[a][i];
      d2 = d2 + d * d;
    }
    if (d2 < balls.r2[i]) return true;
  }
  return false;
}

void ball_box_relation(const BallSpan& balls, const double* lo, const double* hi, std::uint8_t* flags) {
  for (std::size_t i = 0; i < balls.count; ++i) {
    double near = 0.0;
    double far = 0.0;
    bool inside = true;
    const double r = balls.r[i];
    for (int a = 0; a < balls.dim; ++a) {
      const double c = balls.c[a][i];
      const double dl = c - lo[a];
      const double dh = hi[a] - c;
      const double dn = std::max(0.0, std::max(-dl, -dh));
      const double df = std::max(std::abs(dl), std::abs(dh));
      near = near + dn * dn;
      far = far + df * df;
      inside = inside && (c - r >= lo[a]) && (c + r <= hi[a]);
    }
    std::uint8_t f = 0;
    if (near < balls.r2[i]) f |= kTouch;
    if (inside) f |= kBallInBox;
    if (far < balls.r2[i]) f |= kBoxInBall;
    flags[i] = f;
  }
}

void floor_scaled(const double* x, std::size_t count, double scale, std::int64_t* out) {
  for (std::size_t i = 0; i < count; ++i) {
    double f = std::floor(x[i] * scale);
    if (std::fma(x[i], scale, -f) < 0.0)
      f -= 1.0;
    else if (std::fma(x[i], scale, -(f + 1.0)) >= 0.0)
      f += 1.0;
    out[i] = static_cast<std::int64_t>(f);
  }
}

}  // namespace superdensity::kernels::scalar
