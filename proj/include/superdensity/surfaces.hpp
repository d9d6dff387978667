#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "superdensity/chart.hpp"
#include "superdensity/density.hpp"
#include "superdensity/measures.hpp"

namespace superdensity {

/// Builtin charts:
///   diagonal  t -> (t, t)                     params: [g_lo, g_hi]             default (-1, 1)
///   circle    t -> (cos t, sin t)             params: [g_lo, g_hi]             default (-pi/2, pi/2)
///   parabola  t -> (t, t^2)                   params: [g_lo, g_hi]             default (-1, 1)
///   plane     (u,v) -> (u, v, a u + b v)      params: [a, b, g_lo, g_hi]       default a=b=0, (-1, 1)^2
std::shared_ptr<const SurfaceChart> builtin_chart(const std::string& name, const std::vector<double>& params = {});
std::vector<std::string> builtin_chart_names();

/// Smallest eigenvalue of a symmetric matrix; throws on asymmetry.
double min_eigenvalue(const Matrix& m, double sym_tol = 1e-10);

/// Problems found on a verification grid (empty when the chart looks valid).
std::vector<std::string> validate_chart(const SurfaceChart& chart, int per_axis = 32);

struct FrameConstants {
  double m00 = 0.0;
  double m1 = 0.0;   // grid maximum of ||D phi||_HS over G dilated by 1
  double r0 = 0.0;
  double j_min = 0.0, j_max = 0.0;
  double C1 = 0.0, C2 = 0.0;
  double r1 = 0.0;
  FrameBounds bounds;  // C = max(C1, C2), p = q = k
};

FrameConstants frame_constants(const SurfaceChart& chart, int per_axis = 64);

struct AuditResult {
  int checked = 0;
  int violations = 0;
  std::vector<std::string> details;
  bool ok() const { return violations == 0 && checked > 0; }
};

/// r^k / C <= mu(B_r(x)) <= C r^k at random x in phi(G), r <= rbar.
AuditResult two_sided_audit(const SurfaceChart& chart, const FrameConstants& fc, int count = 50,
                            std::uint64_t seed = 20240607, const QuadratureOptions& opts = {});
/// No grid z outside B_r(y) maps into B_{m00 r}(phi(y)), for sampled y and r <= r0.
AuditResult inclusion_audit(const SurfaceChart& chart, const FrameConstants& fc, int per_axis = 48, int samples = 25,
                            std::uint64_t seed = 20240607);

struct PullbackCheck {
  Point y, x;
  DensityProfile ambient_profile, parameter_profile;
  DegreeEstimate ambient, parameter;
  bool classes_agree = false;
  double degree_gap = 0.0;  // |slope difference| for finite degrees, else 0
  bool agree = false;
};

PullbackCheck pullback_degree_check(std::shared_ptr<const SurfaceChart> chart, const Region& E, const Point& y,
                                    const std::vector<double>& radii, const QuadratureOptions& opts = {},
                                    const DensityParams& params = {}, double match_tol = 0.25);

void write_pullback_csv(std::ostream& os, const std::string& scenario, const PullbackCheck& c, bool header);

}  // namespace superdensity
