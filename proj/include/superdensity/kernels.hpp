#pragma once

#include <cstddef>
#include <cstdint>

#include "superdensity/geometry.hpp"

// Hot inner loops. Every kernel has a scalar reference version and an AVX2
// version; both produce bit-identical outputs (no FMA contraction except in
// floor_scaled, where the fused residual is exact on both paths).
namespace superdensity::kernels {

enum class Backend { Scalar, Avx2 };

bool avx2_available();
Backend active_backend();
/// Throws InvalidArgument when the CPU lacks the requested instruction set.
void set_backend(Backend b);
const char* backend_name(Backend b);

/// Same-sized axis-aligned cells [lo_i, lo_i + size) stored as SoA.
struct CellBatch {
  int dim = 0;
  std::size_t count = 0;
  const double* lo[kMaxDim] = {};
  double size[kMaxDim] = {};
};

/// Balls stored as SoA; r2 = r*r precomputed.
struct BallSpan {
  int dim = 0;
  std::size_t count = 0;
  const double* c[kMaxDim] = {};
  const double* r = nullptr;
  const double* r2 = nullptr;
};

enum CellState : std::uint8_t { kOutside = 0, kInside = 1, kMixed = 2 };

/// State of each cell relative to the open ball B(center, sqrt(r2)).
void classify_cells_ball(const CellBatch& cells, const double* center, double r2, std::uint8_t* state);

/// True iff some ball strictly contains x.
bool any_ball_contains(const BallSpan& balls, const double* x);

enum BallBoxFlag : std::uint8_t { kTouch = 1, kBallInBox = 2, kBoxInBall = 4 };

/// Per-ball relation to the box [lo, hi]: bitwise OR of BallBoxFlag.
void ball_box_relation(const BallSpan& balls, const double* lo, const double* hi, std::uint8_t* flags);

/// out[i] = floor(x[i] * scale) computed exactly (scale must be an integer value).
void floor_scaled(const double* x, std::size_t count, double scale, std::int64_t* out);

namespace scalar {
void classify_cells_ball(const CellBatch& cells, const double* center, double r2, std::uint8_t* state);
bool any_ball_contains(const BallSpan& balls, const double* x);
void ball_box_relation(const BallSpan& balls, const double* lo, const double* hi, std::uint8_t* flags);
void floor_scaled(const double* x, std::size_t count, double scale, std::int64_t* out);
}  // namespace scalar

namespace avx2 {
void classify_cells_ball(const CellBatch& cells, const double* center, double r2, std::uint8_t* state);
bool any_ball_contains(const BallSpan& balls, const double* x);
void ball_box_relation(const BallSpan& balls, const double* lo, const double* hi, std::uint8_t* flags);
void floor_scaled(const double* x, std::size_t count, double scale, std::int64_t* out);
}  // namespace avx2

}  // namespace superdensity::kernels
