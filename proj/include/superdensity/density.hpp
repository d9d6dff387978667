#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "superdensity/measures.hpp"

namespace superdensity {

/// Geometric radii r_i = r_max * gamma^i, i = 0..count-1.
struct RadiiSchedule {
  double r_max = 0.1;
  double gamma = 0.7;
  int count = 24;
  std::vector<double> radii() const;
};

struct DensityParams {
  int fit_points = 12;         // smallest usable radii used by the fit
  double theta_dense = 0.05;   // ratio level treated as "not small"
  double slope_cutoff = 0.1;   // below this a dense ratio counts as flat
  double interior_upper = 1e-12;
  double margin = 0.1;
  double ratio_floor = 0.05;   // smallest-radius ratio bound required for Pass
  double min_fit_r2 = 0.8;     // fit quality required for a Fail verdict
  double theta_b = 1e-6;
  double decade = 10.0;        // scale window of the limsup/liminf proxies
};

/// Ratios mu(B_r(x) \ E) / mu(B_r(x)) at decreasing radii.
struct DensityProfile {
  Point x;
  std::vector<double> radii;
  std::vector<MeasureInterval> ratio;
  std::vector<char> usable;  // false when the denominator interval touches 0
};

enum class DegreeClass { NotDensityPoint, FiniteDegree, LocallyInterior };
const char* to_string(DegreeClass c);

struct DegreeEstimate {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  DegreeClass classification = DegreeClass::FiniteDegree;
  int n = 2;
  double window_lo = 0.0;  // scale window that produced the verdict
  double window_hi = 0.0;
  int fit_count = 0;
  /// -n, +inf or the fitted slope, per the classification.
  double value() const;
};

struct BaseStatistic {
  Point x;
  double h = 0.0;
  std::vector<double> radii;
  std::vector<MeasureInterval> s;
  double threshold = 0.0;
  double window_lo = 0.0, window_hi = 0.0;
  enum class Verdict { Member, NonMember, Inconclusive } verdict = Verdict::Inconclusive;
};
const char* to_string(BaseStatistic::Verdict v);

enum class TestVerdict { Pass, Fail, Inconclusive };
const char* to_string(TestVerdict v);

enum class PointClass { Interior, Boundary, Exterior };
const char* to_string(PointClass c);

DensityProfile ratio_profile(const Measure& mu, const Region& E, const Point& x, const std::vector<double>& radii,
                             const QuadratureOptions& opts = {});
DegreeEstimate estimate_density_degree(const DensityProfile& profile, const DensityParams& params = {});
TestVerdict superdensity_test(const DensityProfile& profile, double h, const DensityParams& params = {});
TestVerdict superdensity_test(const DegreeEstimate& est, const DensityProfile& profile, double h,
                              const DensityParams& params = {});
BaseStatistic base_statistic(const Measure& mu, const Region& A, const Point& x, double h,
                             const std::vector<double>& radii, const QuadratureOptions& opts = {},
                             const DensityParams& params = {});
PointClass classify_point(const DegreeEstimate& est, double m, double margin = 0.1);

/// Least-squares line through (u_i, v_i): slope, intercept, r^2.
struct LineFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
};
LineFit fit_line(const std::vector<double>& u, const std::vector<double>& v);

void write_profile_csv(std::ostream& os, const DensityProfile& p, bool header = true);
void write_estimate_csv(std::ostream& os, const Point& x, const DegreeEstimate& e, bool header = true);

}  // namespace superdensity
