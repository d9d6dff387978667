#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "superdensity/kernels.hpp"

namespace superdensity::kernels::avx2 {
namespace {

inline __m256d vabs(__m256d v) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v); }

}  // namespace

void classify_cells_ball(const CellBatch& cells, const double* center, double r2, std::uint8_t* state) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d vr2 = _mm256_set1_pd(r2);
  std::size_t i = 0;
  for (; i + 4 <= cells.count; i += 4) {
    __m256d near = zero;
    __m256d far = zero;
    for (int a = 0; a < cells.dim; ++a) {
      const __m256d lo = _mm256_loadu_pd(cells.lo[a] + i);
      const __m256d hi = _mm256_add_pd(lo, _mm256_set1_pd(cells.size[a]));
      const __m256d c = _mm256_set1_pd(center[a]);
      const __m256d dl = _mm256_sub_pd(c, lo);
      const __m256d dh = _mm256_sub_pd(hi, c);
      const __m256d dn = _mm256_max_pd(zero, _mm256_max_pd(_mm256_sub_pd(zero, dl), _mm256_sub_pd(zero, dh)));
      const __m256d df = _mm256_max_pd(vabs(dl), vabs(dh));
      near = _mm256_add_pd(near, _mm256_mul_pd(dn, dn));
      far = _mm256_add_pd(far, _mm256_mul_pd(df, df));
    }
    const int in = _mm256_movemask_pd(_mm256_cmp_pd(far, vr2, _CMP_LT_OQ));
    const int out = _mm256_movemask_pd(_mm256_cmp_pd(near, vr2, _CMP_GE_OQ));
    for (int l = 0; l < 4; ++l) {
      if (in >> l & 1)
        state[i + l] = kInside;
      else if (out >> l & 1)
        state[i + l] = kOutside;
      else
        state[i + l] = kMixed;
    }
  }
  if (i < cells.count) {
    CellBatch tail = cells;
    tail.count = cells.count - i;
    for (int a = 0; a < cells.dim; ++a) tail.lo[a] = cells.lo[a] + i;
    scalar::classify_cells_ball(tail, center, r2, state + i);
  }
}

bool any_ball_contains(const BallSpan& balls, const double* x) {
  std::size_t i = 0;
  for (; i + 4 <= balls.count; i += 4) {
    __m256d d2 = _mm256_setzero_pd();
    for (int a = 0; a < balls.dim; ++a) {
      const __m256d d = _mm256_sub_pd(_mm256_set1_pd(x[a]), _mm256_loadu_pd(balls.c[a] + i));
      d2 = _mm256_add_pd(d2, _mm256_mul_pd(d, d));
    }
    if (_mm256_movemask_pd(_mm256_cmp_pd(d2, _mm256_loadu_pd(balls.r2 + i), _CMP_LT_OQ))) return true;
  }
  if (i < balls.count) {
    BallSpan tail = balls;
    tail.count = balls.count - i;
    for (int a = 0; a < balls.dim; ++a) tail.c[a] = balls.c[a] + i;
    tail.r = balls.r + i;
    tail.r2 = balls.r2 + i;
    return scalar::any_ball_contains(tail, x);
  }
  return false;
}

void ball_box_relation(const BallSpan& balls, const double* lo, const double* hi, std::uint8_t* flags) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= balls.count; i += 4) {
    __m256d near = zero;
    __m256d far = zero;
    __m256d inside = _mm256_castsi256_pd(_mm256_set1_epi64x(-1));
    const __m256d r = _mm256_loadu_pd(balls.r + i);
    for (int a = 0; a < balls.dim; ++a) {
      const __m256d c = _mm256_loadu_pd(balls.c[a] + i);
      const __m256d vlo = _mm256_set1_pd(lo[a]);
      const __m256d vhi = _mm256_set1_pd(hi[a]);
      const __m256d dl = _mm256_sub_pd(c, vlo);
      const __m256d dh = _mm256_sub_pd(vhi, c);
      const __m256d dn = _mm256_max_pd(zero, _mm256_max_pd(_mm256_sub_pd(zero, dl), _mm256_sub_pd(zero, dh)));
      const __m256d df = _mm256_max_pd(vabs(dl), vabs(dh));
      near = _mm256_add_pd(near, _mm256_mul_pd(dn, dn));
      far = _mm256_add_pd(far, _mm256_mul_pd(df, df));
      inside = _mm256_and_pd(inside, _mm256_cmp_pd(_mm256_sub_pd(c, r), vlo, _CMP_GE_OQ));
      inside = _mm256_and_pd(inside, _mm256_cmp_pd(_mm256_add_pd(c, r), vhi, _CMP_LE_OQ));
    }
    const __m256d r2 = _mm256_loadu_pd(balls.r2 + i);
    const int touch = _mm256_movemask_pd(_mm256_cmp_pd(near, r2, _CMP_LT_OQ));
    const int in = _mm256_movemask_pd(inside);
    const int cover = _mm256_movemask_pd(_mm256_cmp_pd(far, r2, _CMP_LT_OQ));
    for (int l = 0; l < 4; ++l)
      flags[i + l] = static_cast<std::uint8_t>(((touch >> l) & 1) * kTouch | ((in >> l) & 1) * kBallInBox |
                                               ((cover >> l) & 1) * kBoxInBall);
  }
  if (i < balls.count) {
    BallSpan tail = balls;
    tail.count = balls.count - i;
    for (int a = 0; a < balls.dim; ++a) tail.c[a] = balls.c[a] + i;
    tail.r = balls.r + i;
    tail.r2 = balls.r2 + i;
    scalar::ball_box_relation(tail, lo, hi, flags + i);
  }
}

void floor_scaled(const double* x, std::size_t count, double scale, std::int64_t* out) {
  const __m256d s = _mm256_set1_pd(scale);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  alignas(32) double buf[4];
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    __m256d f = _mm256_floor_pd(_mm256_mul_pd(v, s));
    const __m256d low = _mm256_cmp_pd(_mm256_fmsub_pd(v, s, f), zero, _CMP_LT_OQ);
    const __m256d f1 = _mm256_add_pd(f, one);
    const __m256d high = _mm256_cmp_pd(_mm256_fmsub_pd(v, s, f1), zero, _CMP_GE_OQ);
    f = _mm256_blendv_pd(f, _mm256_sub_pd(f, one), low);
    f = _mm256_blendv_pd(f, f1, _mm256_andnot_pd(low, high));
    _mm256_store_pd(buf, f);
    for (int l = 0; l < 4; ++l) out[i + l] = static_cast<std::int64_t>(buf[l]);
  }
  scalar::floor_scaled(x + i, count - i, scale, out + i);
}

}  // namespace superdensity::kernels::avx2
