#include "superdensity/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "superdensity/format.hpp"

namespace superdensity {

std::vector<double> RadiiSchedule::radii() const {
  if (!(r_max > 0.0) || !(gamma > 0.0 && gamma < 1.0) || count < 1) throw InvalidArgument("bad radii schedule");
  std::vector<double> r(static_cast<std::size_t>(count));
  double v = r_max;
  for (auto& x : r) {
    x = v;
    v *= gamma;
  }
  return r;
}

const char* to_string(DegreeClass c) {
  switch (c) {
    case DegreeClass::NotDensityPoint: return "NotDensityPoint";
    case DegreeClass::FiniteDegree: return "FiniteDegree";
    case DegreeClass::LocallyInterior: return "LocallyInterior";
  }
  return "?";
}

const char* to_string(BaseStatistic::Verdict v) {
  switch (v) {
    case BaseStatistic::Verdict::Member: return "Member";
    case BaseStatistic::Verdict::NonMember: return "NonMember";
    case BaseStatistic::Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

const char* to_string(TestVerdict v) {
  switch (v) {
    case TestVerdict::Pass: return "Pass";
    case TestVerdict::Fail: return "Fail";
    case TestVerdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

const char* to_string(PointClass c) {
  switch (c) {
    case PointClass::Interior: return "Interior";
    case PointClass::Boundary: return "Boundary";
    case PointClass::Exterior: return "Exterior";
  }
  return "?";
}

double DegreeEstimate::value() const {
  switch (classification) {
    case DegreeClass::NotDensityPoint: return -static_cast<double>(n);
    case DegreeClass::LocallyInterior: return std::numeric_limits<double>::infinity();
    case DegreeClass::FiniteDegree: return slope;
  }
  return slope;
}

LineFit fit_line(const std::vector<double>& u, const std::vector<double>& v) {
  const std::size_t m = u.size();
  if (m < 2 || v.size() != m) throw InsufficientData("line fit needs at least two points");
  double su = 0.0, sv = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    su += u[i];
    sv += v[i];
  }
  const double mu = su / m, mv = sv / m;
  double suu = 0.0, suv = 0.0, svv = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    suu += (u[i] - mu) * (u[i] - mu);
    suv += (u[i] - mu) * (v[i] - mv);
    svv += (v[i] - mv) * (v[i] - mv);
  }
  LineFit f;
  if (suu <= 0.0) throw InsufficientData("line fit needs distinct abscissae");
  f.slope = suv / suu;
  f.intercept = mv - f.slope * mu;
  f.r2 = svv > 0.0 ? std::clamp(suv * suv / (suu * svv), 0.0, 1.0) : 1.0;
  return f;
}

DensityProfile ratio_profile(const Measure& mu, const Region& E, const Point& x, const std::vector<double>& radii,
                             const QuadratureOptions& opts) {
  require_dim(x, mu.dim());
  if (E->dim() != mu.dim()) throw DimensionMismatch(mu.dim(), E->dim());
  if (radii.empty()) throw InsufficientData("empty radii list");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw InvalidArgument("radii must be positive");
    if (i && !(radii[i] < radii[i - 1])) throw InvalidArgument("radii must be strictly decreasing");
  }
  DensityProfile p;
  p.x = x;
  p.radii = radii;
  const Region outside = complement(E);
  for (double r : radii) {
    const MeasureInterval den = ball_measure(mu, x, r, opts);
    if (!(den.upper > 0.0))
      throw SupportViolation("mu(B_r(x)) vanishes at r=" + fmt(r) + ", x=(" + fmt(x) + ")");
    const MeasureInterval num = restricted_ball_measure(mu, outside, x, r, opts);
    MeasureInterval q = divide(num, den);
    q.upper = std::min(q.upper, 1.0);
    q.lower = std::min(std::max(q.lower, 0.0), q.upper);
    q.estimate = std::clamp(q.estimate, q.lower, q.upper);
    p.ratio.push_back(q);
    p.usable.push_back(den.lower > 0.0 ? 1 : 0);
  }
  return p;
}

DegreeEstimate estimate_density_degree(const DensityProfile& profile, const DensityParams& params) {
  std::vector<std::size_t> use;
  for (std::size_t i = 0; i < profile.radii.size(); ++i)
    if (profile.usable[i]) use.push_back(i);
  if (use.size() < 4) throw InsufficientData("need at least 4 usable radii, have " + std::to_string(use.size()));
  const std::size_t take = std::min<std::size_t>(use.size(), static_cast<std::size_t>(std::max(4, params.fit_points)));
  std::vector<std::size_t> win(use.end() - static_cast<std::ptrdiff_t>(take), use.end());

  DegreeEstimate e;
  e.n = profile.x.dim();
  e.window_hi = profile.radii[win.front()];
  e.window_lo = profile.radii[win.back()];
  const std::size_t tail = 3;
  bool interior = true, dense = true;
  for (std::size_t j = win.size() - tail; j < win.size(); ++j) {
    const MeasureInterval& q = profile.ratio[win[j]];
    interior = interior && q.upper < params.interior_upper;
    dense = dense && q.estimate > params.theta_dense;
  }
  if (interior) {
    e.classification = DegreeClass::LocallyInterior;
    e.slope = std::numeric_limits<double>::infinity();
    e.r2 = 1.0;
    return e;
  }
  std::vector<double> u, v;
  for (std::size_t i : win) {
    if (profile.ratio[i].estimate > 0.0) {
      u.push_back(std::log(profile.radii[i]));
      v.push_back(std::log(profile.ratio[i].estimate));
    }
  }
  if (u.size() < 4) {
    bool zero_tail = true;
    for (std::size_t j = win.size() - tail; j < win.size(); ++j)
      zero_tail = zero_tail && profile.ratio[win[j]].estimate <= 0.0;
    if (!zero_tail) throw InsufficientData("fewer than 4 positive ratio estimates in the fit window");
    e.classification = DegreeClass::LocallyInterior;
    e.slope = std::numeric_limits<double>::infinity();
    return e;
  }
  const LineFit f = fit_line(u, v);
  e.slope = f.slope;
  e.intercept = f.intercept;
  e.r2 = f.r2;
  e.fit_count = static_cast<int>(u.size());
  e.classification = dense && f.slope < params.slope_cutoff ? DegreeClass::NotDensityPoint : DegreeClass::FiniteDegree;
  return e;
}

TestVerdict superdensity_test(const DegreeEstimate& e, const DensityProfile& profile, double h,
                              const DensityParams& params) {
  if (e.classification == DegreeClass::NotDensityPoint) return TestVerdict::Fail;
  double smallest_upper = 1.0;
  for (std::size_t i = profile.radii.size(); i-- > 0;)
    if (profile.usable[i]) {
      smallest_upper = profile.ratio[i].upper;
      break;
    }
  if (e.value() >= h + params.margin && smallest_upper <= params.ratio_floor) return TestVerdict::Pass;
  if (e.value() <= h - params.margin && e.r2 >= params.min_fit_r2) return TestVerdict::Fail;
  return TestVerdict::Inconclusive;
}

TestVerdict superdensity_test(const DensityProfile& profile, double h, const DensityParams& params) {
  return superdensity_test(estimate_density_degree(profile, params), profile, h, params);
}

BaseStatistic base_statistic(const Measure& mu, const Region& A, const Point& x, double h,
                             const std::vector<double>& radii, const QuadratureOptions& opts,
                             const DensityParams& params) {
  require_dim(x, mu.dim());
  if (radii.empty()) throw InsufficientData("empty radii list");
  BaseStatistic b;
  b.x = x;
  b.h = h;
  b.radii = radii;
  b.threshold = params.theta_b;
  for (double r : radii) {
    const MeasureInterval den = ball_measure(mu, x, r, opts);
    if (!(den.upper > 0.0)) throw SupportViolation("mu(B_r(x)) vanishes at r=" + fmt(r));
    const MeasureInterval num = restricted_ball_measure(mu, A, x, r, opts);
    MeasureInterval q = divide(num, den);
    const double scale = std::pow(r, h);
    q.lower /= scale;
    q.upper /= scale;
    q.estimate /= scale;
    b.s.push_back(q);
  }
  const double r_min = *std::min_element(radii.begin(), radii.end());
  b.window_lo = r_min;
  b.window_hi = r_min * params.decade;
  double max_lower = 0.0;
  bool all_small = true;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] > b.window_hi) continue;
    max_lower = std::max(max_lower, b.s[i].lower);
    all_small = all_small && b.s[i].upper < params.theta_b / 10.0;
  }
  if (max_lower >= params.theta_b)
    b.verdict = BaseStatistic::Verdict::Member;
  else if (all_small)
    b.verdict = BaseStatistic::Verdict::NonMember;
  else
    b.verdict = BaseStatistic::Verdict::Inconclusive;
  return b;
}

PointClass classify_point(const DegreeEstimate& e, double m, double margin) {
  const double d = e.value();
  if (d > m + margin) return PointClass::Interior;
  if (d < m - margin) return PointClass::Exterior;
  return PointClass::Boundary;
}

void write_profile_csv(std::ostream& os, const DensityProfile& p, bool header) {
  if (header) os << "x,r,ratio_lo,ratio_hi,ratio_est,flags\n";
  for (std::size_t i = 0; i < p.radii.size(); ++i)
    os << fmt(p.x) << ',' << fmt(p.radii[i]) << ',' << fmt(p.ratio[i].lower) << ',' << fmt(p.ratio[i].upper) << ','
       << fmt(p.ratio[i].estimate) << ',' << (p.ratio[i].flags | (p.usable[i] ? 0u : 0x100u)) << '\n';
}

void write_estimate_csv(std::ostream& os, const Point& x, const DegreeEstimate& e, bool header) {
  if (header) os << "x,slope,r2,class,value,window_lo,window_hi\n";
  os << fmt(x) << ',' << fmt(e.slope) << ',' << fmt(e.r2) << ',' << to_string(e.classification) << ','
     << fmt(e.value()) << ',' << fmt(e.window_lo) << ',' << fmt(e.window_hi) << '\n';
}

}  // namespace superdensity
