#include <atomic>
#include <cstdlib>
#include <cstring>

#include "superdensity/kernels.hpp"

namespace superdensity::kernels {
namespace {

Backend initial_backend() {
  const char* env = std::getenv("SUPERDENSITY_SIMD");
  if (env && std::strcmp(env, "scalar") == 0) return Backend::Scalar;
  return avx2_available() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> b{initial_backend()};
  return b;
}

}  // namespace

bool avx2_available() {
#if defined(SUPERDENSITY_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (b == Backend::Avx2 && !avx2_available()) throw InvalidArgument("AVX2 backend not available on this CPU");
  current().store(b, std::memory_order_relaxed);
}

const char* backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

#if defined(SUPERDENSITY_HAVE_AVX2)
#define SD_DISPATCH(fn, ...) \
  return active_backend() == Backend::Avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__)
#else
#define SD_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

void classify_cells_ball(const CellBatch& cells, const double* center, double r2, std::uint8_t* state) {
  SD_DISPATCH(classify_cells_ball, cells, center, r2, state);
}
bool any_ball_contains(const BallSpan& balls, const double* x) { SD_DISPATCH(any_ball_contains, balls, x); }
void ball_box_relation(const BallSpan& balls, const double* lo, const double* hi, std::uint8_t* flags) {
  SD_DISPATCH(ball_box_relation, balls, lo, hi, flags);
}
void floor_scaled(const double* x, std::size_t count, double scale, std::int64_t* out) {
  SD_DISPATCH(floor_scaled, x, count, scale, out);
}

}  // namespace superdensity::kernels
