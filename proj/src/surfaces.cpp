#include "superdensity/surfaces.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "superdensity/format.hpp"
#include "superdensity/regions.hpp"

namespace superdensity {

namespace {

double unit_random(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Closed grid over a box: per_axis points per axis, endpoints included.
std::vector<Point> closed_grid(const Box& b, int per_axis) {
  const int k = b.dim();
  std::vector<Point> pts;
  std::vector<int> idx(static_cast<std::size_t>(k), 0);
  for (;;) {
    Point p(k);
    for (int a = 0; a < k; ++a)
      p[a] = b.lo[a] + b.side(a) * idx[static_cast<std::size_t>(a)] / static_cast<double>(per_axis - 1);
    pts.push_back(p);
    int a = k - 1;
    while (a >= 0 && ++idx[static_cast<std::size_t>(a)] >= per_axis) {
      idx[static_cast<std::size_t>(a)] = 0;
      --a;
    }
    if (a < 0) break;
  }
  return pts;
}

Box interval(double lo, double hi) { return Box{Point{lo}, Point{hi}}; }

}  // namespace

std::shared_ptr<const SurfaceChart> builtin_chart(const std::string& name, const std::vector<double>& params) {
  auto c = std::make_shared<SurfaceChart>();
  c->name = name;
  c->params = params;
  const auto range = [&](std::size_t at, double lo, double hi) {
    if (params.size() >= at + 2) {
      lo = params[at];
      hi = params[at + 1];
    }
    if (!(lo < hi)) throw InvalidArgument("chart parameter range must satisfy lo < hi");
    return std::pair{lo, hi};
  };
  if (name == "diagonal") {
    const auto [lo, hi] = range(0, -1.0, 1.0);
    c->k = 1;
    c->n = 2;
    c->g = interval(lo, hi);
    c->phi = [](const Point& y) { return Point{y[0], y[0]}; };
    c->jacobian = [](const Point&) { return Matrix(2, 1, {1.0, 1.0}); };
    c->jacobian_range = [](const Box&) { return std::pair{std::sqrt(2.0), std::sqrt(2.0)}; };
    c->lipschitz = std::sqrt(2.0);
  } else if (name == "circle") {
    const auto [lo, hi] = range(0, -std::numbers::pi / 2, std::numbers::pi / 2);
    c->k = 1;
    c->n = 2;
    c->g = interval(lo, hi);
    c->phi = [](const Point& y) { return Point{std::cos(y[0]), std::sin(y[0])}; };
    c->jacobian = [](const Point& y) { return Matrix(2, 1, {-std::sin(y[0]), std::cos(y[0])}); };
    c->jacobian_range = [](const Box&) { return std::pair{1.0, 1.0}; };
    c->lipschitz = 1.0;
  } else if (name == "parabola") {
    const auto [lo, hi] = range(0, -1.0, 1.0);
    c->k = 1;
    c->n = 2;
    c->g = interval(lo, hi);
    c->phi = [](const Point& y) { return Point{y[0], y[0] * y[0]}; };
    c->jacobian = [](const Point& y) { return Matrix(2, 1, {1.0, 2.0 * y[0]}); };
    // sqrt(1 + 4 t^2) is monotone in |t|
    c->jacobian_range = [](const Box& b) {
      const double a = b.lo[0], z = b.hi[0];
      const double near = (a <= 0.0 && z >= 0.0) ? 0.0 : std::min(std::abs(a), std::abs(z));
      const double far = std::max(std::abs(a), std::abs(z));
      return std::pair{std::sqrt(1.0 + 4.0 * near * near), std::sqrt(1.0 + 4.0 * far * far)};
    };
    const double t = std::max(std::abs(lo), std::abs(hi));
    c->lipschitz = std::sqrt(1.0 + 4.0 * t * t);
  } else if (name == "plane") {
    const double a = params.size() > 0 ? params[0] : 0.0;
    const double b = params.size() > 1 ? params[1] : 0.0;
    const auto [lo, hi] = range(2, -1.0, 1.0);
    c->k = 2;
    c->n = 3;
    c->g = Box{Point{lo, lo}, Point{hi, hi}};
    c->phi = [a, b](const Point& y) { return Point{y[0], y[1], a * y[0] + b * y[1]}; };
    c->jacobian = [a, b](const Point&) { return Matrix(3, 2, {1.0, 0.0, 0.0, 1.0, a, b}); };
    const double jf = std::sqrt(1.0 + a * a + b * b);
    c->jacobian_range = [jf](const Box&) { return std::pair{jf, jf}; };
    c->lipschitz = std::sqrt(1.0 + a * a + b * b);
  } else {
    throw InvalidArgument("unknown chart '" + name + "'");
  }
  return c;
}

std::vector<std::string> builtin_chart_names() { return {"diagonal", "circle", "parabola", "plane"}; }

double min_eigenvalue(const Matrix& m, double sym_tol) {
  if (m.rows() != m.cols() || m.rows() < 1) throw InvalidArgument("min_eigenvalue needs a square matrix");
  const int k = m.rows();
  Eigen::MatrixXd e(k, k);
  double scale = 0.0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      e(i, j) = m(i, j);
      scale = std::max(scale, std::abs(m(i, j)));
    }
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      if (std::abs(m(i, j) - m(j, i)) > sym_tol * std::max(1.0, scale))
        throw InvalidArgument("matrix is not symmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw InvalidArgument("eigensolver did not converge");
  return es.eigenvalues()(0);
}

std::vector<std::string> validate_chart(const SurfaceChart& chart, int per_axis) {
  std::vector<std::string> issues;
  const auto grid = closed_grid(chart.g, per_axis);
  std::vector<Point> img;
  for (const Point& y : grid) {
    try {
      jacobian_factor(chart, y);
    } catch (const Error&) {
      issues.push_back("degenerate Jacobian at y=(" + fmt(y) + ")");
    }
    img.push_back(chart.eval(y));
  }
  for (std::size_t i = 0; i < img.size(); ++i)
    for (std::size_t j = i + 1; j < img.size(); ++j)
      if (!(dist2(img[i], img[j]) > 0.0)) {
        issues.push_back("grid points (" + fmt(grid[i]) + ") and (" + fmt(grid[j]) + ") share an image");
        if (issues.size() > 16) return issues;
      }
  return issues;
}

FrameConstants frame_constants(const SurfaceChart& chart, int per_axis) {
  if (per_axis < 3) throw InvalidArgument("frame grid needs at least 3 points per axis");
  const int k = chart.k;
  FrameConstants fc;
  const auto grid = closed_grid(chart.g, per_axis);
  std::vector<Matrix> d;
  d.reserve(grid.size());
  fc.m00 = std::numeric_limits<double>::infinity();
  fc.j_min = std::numeric_limits<double>::infinity();
  for (const Point& y : grid) {
    d.push_back(chart.jac(y));
    const double lam = min_eigenvalue(d.back().transpose() * d.back());
    if (!(lam > 0.0)) throw InvalidArgument("chart '" + chart.name + "' is singular at y=(" + fmt(y) + ")");
    fc.m00 = std::min(fc.m00, 0.5 * std::sqrt(lam));
    const double j = jacobian_factor(chart, y);
    fc.j_min = std::min(fc.j_min, j);
    fc.j_max = std::max(fc.j_max, j);
  }

  Box dil = chart.g;
  for (int a = 0; a < k; ++a) {
    dil.lo[a] -= 1.0;
    dil.hi[a] += 1.0;
  }
  for (const Point& z : closed_grid(dil, per_axis)) fc.m1 = std::max(fc.m1, chart.jac(z).hs_norm());

  // r0: first dyadic fraction of diam(G) at which the local oscillation of
  // D phi over the grid stays below m00.
  double diam = 0.0, spacing = 0.0;
  for (int a = 0; a < k; ++a) {
    diam += chart.g.side(a) * chart.g.side(a);
    spacing = std::max(spacing, chart.g.side(a) / (per_axis - 1));
  }
  diam = std::sqrt(diam);
  for (int i = 1; i <= 40 && fc.r0 == 0.0; ++i) {
    const double r = diam * std::ldexp(1.0, -i);
    double sigma = 0.0;
    for (std::size_t p = 0; p < grid.size() && sigma <= fc.m00; ++p)
      for (std::size_t q = 0; q < grid.size(); ++q)
        if (dist2(grid[p], grid[q]) <= r * r) sigma = std::max(sigma, (d[q] - d[p]).hs_norm());
    if (sigma <= fc.m00) {
      if (r < 2.0 * spacing && sigma > 0.0)
        throw InvalidArgument("frame grid too coarse to certify r0 for chart '" + chart.name + "'");
      fc.r0 = r;
    }
  }
  if (fc.r0 == 0.0) throw InvalidArgument("could not certify r0 for chart '" + chart.name + "'");

  const double omega = unit_ball_volume(k);
  fc.C2 = fc.j_max * omega / std::pow(fc.m00, k);
  fc.C1 = std::pow(1.05 * fc.m1, k) / (fc.j_min * omega * std::ldexp(1.0, -k));
  fc.r1 = fc.m1 * chart.g.min_side();
  fc.bounds.C = std::max(fc.C1, fc.C2);
  fc.bounds.p = k;
  fc.bounds.q = k;
  fc.bounds.r_bar = std::min(fc.r1, fc.m00 * fc.r0);
  return fc;
}

AuditResult two_sided_audit(const SurfaceChart& chart, const FrameConstants& fc, int count, std::uint64_t seed,
                            const QuadratureOptions& opts) {
  AuditResult res;
  std::mt19937_64 rng(seed);
  auto sc = std::make_shared<SurfaceChart>(chart);
  const MeasurePtr mu = surface_measure(sc);
  const double C = fc.bounds.C;
  const int k = chart.k;
  for (int i = 0; i < count; ++i) {
    Point y(k);
    for (int a = 0; a < k; ++a) y[a] = chart.g.lo[a] + unit_random(rng) * chart.g.side(a);
    const double r = fc.bounds.r_bar * std::pow(10.0, -2.0 * unit_random(rng));
    const Point x = chart.eval(y);
    const MeasureInterval m = ball_measure(*mu, x, r, opts);
    ++res.checked;
    const double lo = std::pow(r, k) / C, hi = C * std::pow(r, k);
    if (m.upper < lo || m.lower > hi) {
      ++res.violations;
      res.details.push_back("x=(" + fmt(x) + ") r=" + fmt(r) + " mu in [" + fmt(m.lower) + "," + fmt(m.upper) +
                            "] outside [" + fmt(lo) + "," + fmt(hi) + "]");
    }
  }
  return res;
}

AuditResult inclusion_audit(const SurfaceChart& chart, const FrameConstants& fc, int per_axis, int samples,
                            std::uint64_t seed) {
  AuditResult res;
  std::mt19937_64 rng(seed);
  const auto grid = closed_grid(chart.g, per_axis);
  std::vector<Point> img;
  img.reserve(grid.size());
  for (const Point& z : grid) img.push_back(chart.eval(z));
  for (int s = 0; s < samples; ++s) {
    const std::size_t iy = static_cast<std::size_t>(rng() % grid.size());
    const double r = fc.r0 * (0.1 + 0.9 * unit_random(rng));
    const Point& y = grid[iy];
    const double mr2 = fc.m00 * r * fc.m00 * r;
    ++res.checked;
    for (std::size_t q = 0; q < grid.size(); ++q) {
      if (dist2(grid[q], y) < r * r) continue;
      if (dist2(img[q], img[iy]) < mr2) {
        ++res.violations;
        res.details.push_back("y=(" + fmt(y) + ") r=" + fmt(r) + " z=(" + fmt(grid[q]) + ")");
        break;
      }
    }
  }
  return res;
}

PullbackCheck pullback_degree_check(std::shared_ptr<const SurfaceChart> chart, const Region& E, const Point& y,
                                    const std::vector<double>& radii, const QuadratureOptions& opts,
                                    const DensityParams& params, double match_tol) {
  require_dim(y, chart->k);
  PullbackCheck c;
  c.y = y;
  c.x = chart->eval(y);
  const MeasurePtr amb = surface_measure(chart);
  const MeasurePtr par = lebesgue(chart->k);
  c.ambient_profile = ratio_profile(*amb, E, c.x, radii, opts);
  c.parameter_profile = ratio_profile(*par, pullback(chart, E), y, radii, opts);
  c.ambient = estimate_density_degree(c.ambient_profile, params);
  c.parameter = estimate_density_degree(c.parameter_profile, params);
  c.classes_agree = c.ambient.classification == c.parameter.classification;
  if (c.classes_agree && c.ambient.classification == DegreeClass::FiniteDegree)
    c.degree_gap = std::abs(c.ambient.slope - c.parameter.slope);
  c.agree = c.classes_agree && c.degree_gap <= match_tol;
  return c;
}

void write_pullback_csv(std::ostream& os, const std::string& scenario, const PullbackCheck& c, bool header) {
  if (header) os << "scenario,y,x,ambient_class,ambient_slope,parameter_class,parameter_slope,gap,agree\n";
  os << scenario << ',' << fmt(c.y) << ',' << fmt(c.x) << ',' << to_string(c.ambient.classification) << ','
     << fmt(c.ambient.slope) << ',' << to_string(c.parameter.classification) << ',' << fmt(c.parameter.slope) << ','
     << fmt(c.degree_gap) << ',' << (c.agree ? "true" : "false") << '\n';
}

}  // namespace superdensity
