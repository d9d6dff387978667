#include "superdensity/schwarz.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>

#include "superdensity/format.hpp"

namespace superdensity {

namespace {

double smoothstep(double t) { return t * t * t * (10.0 + t * (-15.0 + 6.0 * t)); }
double smoothstep_slope(double t) { return 30.0 * t * t * (1.0 - t) * (1.0 - t); }

// Shared by the bump, the plateau cutoff and eta: 1 below a, 0 above a + w.
double step_down(double s, double a, double w) {
  if (s <= a) return 1.0;
  if (s >= a + w) return 0.0;
  return smoothstep(1.0 - (s - a) / w);  // 1 - S(t) = S(1 - t), never negative
}
double step_down_slope(double s, double a, double w) {
  if (s <= a || s >= a + w) return 0.0;
  return -smoothstep_slope((s - a) / w) / w;
}

}  // namespace

double Bump::value(double u) const { return step_down(u, rho, 1.0 - rho); }
double Bump::slope(double u) const { return step_down_slope(u, rho, 1.0 - rho); }

double Bump::at(const Point& x, const Point& c, double r) const { return value(dist(x, c) / r); }

double Bump::partial(const Point& x, const Point& c, double r, int axis) const {
  const double d = dist(x, c);
  if (d == 0.0) return 0.0;
  return slope(d / r) * (x[axis] - c[axis]) / (d * r);
}

Bump bump(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw InvalidArgument("bump rho must lie in (0,1)");
  return Bump{rho};
}

TestFunction product_bump(const Point& center, const Point& half_widths) {
  const int n = center.dim();
  require_dim(half_widths, n);
  for (int a = 0; a < n; ++a)
    if (!(half_widths[a] > 0.0)) throw InvalidArgument("product bump half-widths must be positive");
  const auto factor = [](double u) {
    if (std::abs(u) >= 1.0) return 0.0;
    const double v = 1.0 - u * u;
    return v * v * v;
  };
  const auto factor_slope = [](double u) {
    if (std::abs(u) >= 1.0) return 0.0;
    const double v = 1.0 - u * u;
    return -6.0 * u * v * v;
  };
  TestFunction t;
  t.support = Box{center - half_widths, center + half_widths};
  t.f = [=](const Point& y) {
    double p = 1.0;
    for (int a = 0; a < n; ++a) p *= factor((y[a] - center[a]) / half_widths[a]);
    return p;
  };
  t.grad = [=](const Point& y, int i) {
    double p = 1.0;
    for (int a = 0; a < n; ++a) {
      const double u = (y[a] - center[a]) / half_widths[a];
      p *= a == i ? factor_slope(u) / half_widths[a] : factor(u);
    }
    return p;
  };
  return t;
}

TestFunction plateau(const Box& inner, double margin) {
  if (!(margin > 0.0)) throw InvalidArgument("plateau margin must be positive");
  const int n = inner.dim();
  const auto outside = [](const Box& b, const Point& y, int a) {
    return std::max({0.0, b.lo[a] - y[a], y[a] - b.hi[a]});
  };
  TestFunction t;
  t.support = Box::around(inner.center(), 0.0);
  for (int a = 0; a < n; ++a) {
    t.support.lo[a] = inner.lo[a] - margin;
    t.support.hi[a] = inner.hi[a] + margin;
  }
  t.f = [=](const Point& y) {
    double p = 1.0;
    for (int a = 0; a < n; ++a) p *= step_down(outside(inner, y, a), 0.0, margin);
    return p;
  };
  t.grad = [=](const Point& y, int i) {
    double p = 1.0;
    for (int a = 0; a < n; ++a) {
      const double d = outside(inner, y, a);
      if (a != i) {
        p *= step_down(d, 0.0, margin);
      } else {
        const double sgn = y[a] < inner.lo[a] ? -1.0 : 1.0;
        p *= sgn * step_down_slope(d, 0.0, margin);
      }
    }
    return p;
  };
  return t;
}

DerivativeMeasure density_form(int axis, Density density) {
  if (!density.grad) throw InvalidArgument("density form needs the gradient of the density");
  return {DensityForm{axis, std::move(density)}};
}

DerivativeMeasure disk_flux(int axis, const Point& center, double radius) {
  require_dim(center, 2);
  if (!(radius > 0.0)) throw InvalidArgument("disk radius must be positive");
  auto c = std::make_shared<SurfaceChart>();
  c->name = "disk_boundary";
  c->k = 1;
  c->n = 2;
  c->g = Box{Point{0.0}, Point{2.0 * std::numbers::pi}};
  c->phi = [=](const Point& y) { return Point{center[0] + radius * std::cos(y[0]), center[1] + radius * std::sin(y[0])}; };
  c->jacobian = [=](const Point& y) { return Matrix(2, 1, {-radius * std::sin(y[0]), radius * std::cos(y[0])}); };
  c->lipschitz = radius;
  c->params = {center[0], center[1], radius};
  BoundaryFlux f;
  f.axis = axis;
  f.boundary = c;
  f.normal = [=](const Point& x) { return (x - center) * (1.0 / radius); };
  return {f};
}

MeasureInterval derivative_pairing(const DerivativeMeasure& d, const TestFunction& test, int cells_per_axis) {
  if (const auto* df = std::get_if<DensityForm>(&d.v)) {
    const int i = df->axis;
    const auto& g = df->density.grad;
    return integrate_smooth([&](const Point& y) { return test.f(y) * g(y, i); }, test.support, cells_per_axis);
  }
  if (const auto* bf = std::get_if<BoundaryFlux>(&d.v)) {
    const auto& c = *bf->boundary;
    const int i = bf->axis;
    return integrate_smooth(
        [&](const Point& t) {
          const Point x = c.eval(t);
          return -test.f(x) * bf->normal(x)[i] * jacobian_factor(c, t);
        },
        c.g, cells_per_axis);
  }
  throw InvalidArgument("the diagonal singular derivative has no general pairing");
}

MeasureInterval parts_pairing(const DerivativeMeasure& d, const TestFunction& test, int cells_per_axis) {
  const auto* df = std::get_if<DensityForm>(&d.v);
  if (!df) throw InvalidArgument("integration by parts side is only available for density forms");
  const int i = df->axis;
  const auto& w = df->density.w;
  MeasureInterval v =
      integrate_smooth([&](const Point& y) { return test.grad(y, i) * w(y); }, test.support, cells_per_axis);
  return {-v.upper, -v.lower, -v.estimate, v.flags};
}

MeasureInterval derivative_total_variation(const DerivativeMeasure& d, const Point& x, double r,
                                           const QuadratureOptions& opts) {
  if (const auto* df = std::get_if<DensityForm>(&d.v)) {
    const int i = df->axis;
    const auto& g = df->density.grad;
    return measure_of(*lebesgue(x.dim()), ball(x, r), Box::around(x, r), opts,
                      [&](const Point& y) { return std::abs(g(y, i)); });
  }
  if (const auto* bf = std::get_if<BoundaryFlux>(&d.v)) {
    const int i = bf->axis;
    return measure_of(*surface_measure(bf->boundary), ball(x, r), Box::around(x, r), opts,
                      [&](const Point& y) { return std::abs(bf->normal(y)[i]); });
  }
  throw InvalidArgument("the diagonal singular derivative has no total variation table");
}

Field builtin_field(const std::string& name) {
  Field f;
  f.name = name;
  if (name == "sin_product") {
    f.G = [](const Point& x) { return std::cos(x[0]) * std::sin(x[1]); };
    f.H = [](const Point& x) { return std::sin(x[0]) * std::cos(x[1]); };
    f.gamma = [](const Point& x) {
      const double d1H = std::cos(x[0]) * std::cos(x[1]);
      const double d2G = std::cos(x[0]) * std::cos(x[1]);
      return d1H - d2G;
    };
  } else if (name == "curl") {
    f.G = [](const Point& x) { return -x[1]; };
    f.H = [](const Point& x) { return x[0]; };
    f.gamma = [](const Point&) { return 2.0; };
  } else if (name == "quadratic_curl") {
    f.G = [](const Point& x) { return -x[1] * x[0] * x[0]; };
    f.H = [](const Point& x) { return x[0] * x[0] * x[0] / 3.0; };
    f.gamma = [](const Point& x) { return 2.0 * x[0] * x[0]; };
  } else {
    throw InvalidArgument("unknown field '" + name + "'");
  }
  return f;
}

std::vector<std::string> builtin_field_names() { return {"sin_product", "curl", "quadratic_curl"}; }

EstimatorResult schwarz_estimator(const Measure& mu, const Field& field, int p, int q, const Point& x, double r,
                                  double rho, const QuadratureOptions& opts) {
  const int n = mu.dim();
  require_dim(x, n);
  if (p < 0 || p >= n || q < 0 || q >= n) throw InvalidArgument("estimator axes out of range");
  if (!(r > 0.0) || !(rho > 0.0 && rho < 1.0)) throw InvalidArgument("estimator needs r > 0 and rho in (0,1)");
  if (!field.G || !field.H) throw InvalidArgument("field components missing");

  const double s = 1e-5 * r;
  const auto shift = [](Point y, int a, double t) {
    y[a] += t;
    return y;
  };
  const auto central = [&](const std::function<double(const Point&)>& F, const Point& y, int a, double h) {
    return (F(shift(y, a, h)) - F(shift(y, a, -h))) / (2.0 * h);
  };
  const auto gamma_fd = [&](const Point& y, double h) { return central(field.H, y, p, h) - central(field.G, y, q, h); };
  // Truncation proxy |Gamma_s - Gamma_2s| plus a rounding bound for both quotients.
  const auto fd_error = [&](const Point& y) {
    const double mag = std::abs(field.H(shift(y, p, s))) + std::abs(field.H(shift(y, p, -s))) +
                       std::abs(field.G(shift(y, q, s))) + std::abs(field.G(shift(y, q, -s)));
    return std::abs(gamma_fd(y, s) - gamma_fd(y, 2.0 * s)) + 4.0 * DBL_EPSILON * mag / (2.0 * s);
  };

  const double rr = rho * r;
  const Region B = ball(x, rr);
  const Box root = Box::around(x, rr);
  MeasureInterval num = measure_of(mu, B, root, opts, [&](const Point& y) { return gamma_fd(y, s); });
  const MeasureInterval err = measure_of(mu, B, root, opts, fd_error);
  num.lower -= err.upper;
  num.upper += err.upper;
  const MeasureInterval den = ball_measure(mu, x, rr, opts);

  EstimatorResult res;
  res.gamma = divide(num, den);
  res.fd_step = s;
  if (field.gamma) {
    res.analytic = field.gamma(x);
    res.has_analytic = true;
  }
  return res;
}

std::vector<double> sigma_profile(const Measure& mu, const Point& x, const std::vector<double>& radii,
                                  const std::vector<double>& rho_grid, double decade, const QuadratureOptions& opts) {
  if (radii.empty()) throw InsufficientData("sigma needs radii");
  const double r_min = *std::min_element(radii.begin(), radii.end());
  std::vector<double> out;
  for (double rho : rho_grid) {
    double s = std::numeric_limits<double>::infinity();
    for (double r : radii)
      if (r <= r_min * decade)
        s = std::min(s, ball_measure(mu, x, r, opts).estimate / ball_measure(mu, x, rho * r, opts).estimate);
    out.push_back(s);
  }
  return out;
}

SchwarzReport hypothesis_report(const Measure& mu, const DerivativeMeasure& dp, const DerivativeMeasure& dq,
                                const Point& x, const std::vector<double>& radii, const std::vector<double>& rho_grid,
                                const Region& A, const QuadratureOptions& opts, const HypothesisOptions& hopts) {
  require_dim(x, mu.dim());
  if (radii.size() < 3) throw InsufficientData("hypothesis report needs at least three radii");
  if (!in_support(mu, x, radii, opts)) throw SupportViolation("report point is not in the support of mu");

  SchwarzReport rep;
  rep.x = x;
  rep.radii = radii;
  rep.rho_grid = rho_grid;
  std::sort(rep.rho_grid.begin(), rep.rho_grid.end());
  for (double rho : rep.rho_grid)
    if (!(rho > 0.0 && rho < 1.0)) throw InvalidArgument("rho grid values must lie in (0,1)");

  rep.sigma = sigma_profile(mu, x, radii, rep.rho_grid, hopts.decade, opts);
  const auto sigma_at = [&](double r, double rho) {
    return ball_measure(mu, x, r, opts).estimate / ball_measure(mu, x, rho * r, opts).estimate;
  };
  rep.sigma_monotone = true;
  for (std::size_t i = 1; i < rep.sigma.size(); ++i)
    if (rep.sigma[i] > rep.sigma[i - 1] * (1.0 + 1e-9)) rep.sigma_monotone = false;
  rep.sigma_trend = rep.sigma.size() >= 2 && rep.sigma_monotone &&
                    rep.sigma.back() - 1.0 <= 0.5 * (rep.sigma.front() - 1.0);

  std::vector<double> tvp, tvq;
  for (double r : radii) {
    const MeasureInterval m = ball_measure(mu, x, r, opts);
    const MeasureInterval scaled{m.lower * r, m.upper * r, m.estimate * r, m.flags};
    const MeasureInterval a = derivative_total_variation(dp, x, r, opts);
    const MeasureInterval b = derivative_total_variation(dq, x, r, opts);
    tvp.push_back(a.estimate);
    tvq.push_back(b.estimate);
    rep.ratio_p.push_back(divide(a, scaled));
    rep.ratio_q.push_back(divide(b, scaled));
  }
  // A ratio decays when its log-log slope against r reaches the threshold;
  // an identically zero ratio decays trivially.
  const auto slope_of = [&](const std::vector<MeasureInterval>& ratio) {
    std::vector<double> u, v;
    for (std::size_t i = 0; i < radii.size(); ++i)
      if (ratio[i].estimate > 0.0) {
        u.push_back(std::log(radii[i]));
        v.push_back(std::log(ratio[i].estimate));
      }
    if (u.empty()) return std::numeric_limits<double>::infinity();
    if (u.size() < 2) return 0.0;
    return fit_line(u, v).slope;
  };
  rep.slope_p = slope_of(rep.ratio_p);
  rep.slope_q = slope_of(rep.ratio_q);
  rep.decay_p = rep.slope_p >= hopts.decay_slope;
  rep.decay_q = rep.slope_q >= hopts.decay_slope;

  const DensityProfile prof = ratio_profile(mu, A, x, radii, opts);
  rep.tangency = estimate_density_degree(prof, hopts.density);
  rep.tangency_test = superdensity_test(rep.tangency, prof, 1.0, hopts.density);

  rep.plausible = rep.sigma_trend && rep.decay_p && rep.decay_q && rep.tangency_test == TestVerdict::Pass;

  for (std::size_t i = 0; i < radii.size(); ++i) {
    SchwarzRow row;
    row.r = radii[i];
    row.rho = hopts.row_rho;
    row.sigma = sigma_at(radii[i], hopts.row_rho);
    row.ratio_p = rep.ratio_p[i].estimate;
    row.ratio_q = rep.ratio_q[i].estimate;
    row.tv_p = tvp[i];
    row.tv_q = tvq[i];
    row.outside_A = measure_of(mu, intersect({ball(x, radii[i]), complement(A)}), Box::around(x, radii[i]), opts)
                        .estimate;
    row.sigma_term = row.sigma - 1.0;
    rep.rows.push_back(row);
  }
  return rep;
}

void attach_estimates(SchwarzReport& report, const Measure& mu, const Field& field, int p, int q,
                      const QuadratureOptions& opts) {
  for (auto& row : report.rows) row.gamma = schwarz_estimator(mu, field, p, q, report.x, row.r, row.rho, opts).gamma;
}

double counterexample_eta(double s) { return step_down(s, 2.0 * std::numbers::pi * std::numbers::pi, 1.0); }
double counterexample_eta_prime(double s) {
  return step_down_slope(s, 2.0 * std::numbers::pi * std::numbers::pi, 1.0);
}

namespace {

// (D_1 phi_j)(t, t) for phi_j(x) = eta(|x|^2) cos(j x1) sin(j x2).
double diagonal_derivative(double t, void* params) {
  const double j = *static_cast<const double*>(params);
  const double s = 2.0 * t * t;
  const double c = std::cos(j * t), sn = std::sin(j * t);
  return 2.0 * t * counterexample_eta_prime(s) * c * sn - j * counterexample_eta(s) * sn * sn;
}

}  // namespace

CounterexampleValue diagonal_counterexample(int j, double tol) {
  if (j < 1) throw InvalidArgument("counterexample index must be positive");
  if (!(tol > 0.0)) throw InvalidArgument("quadrature tolerance must be positive");
  constexpr double pi = std::numbers::pi;
  const double T = std::sqrt(pi * pi + 0.5);
  double pts[5] = {-T, -pi, 0.0, pi, T};
  double jd = j;
  gsl_function F{&diagonal_derivative, &jd};
  constexpr std::size_t limit = 2000;
  gsl_integration_workspace* ws = gsl_integration_workspace_alloc(limit);
  double result = 0.0, abserr = 0.0;
  static std::once_flag quiet;
  std::call_once(quiet, [] { gsl_set_error_handler_off(); });
  const int status = gsl_integration_qagp(&F, pts, 5, tol, 0.0, limit, ws, &result, &abserr);
  gsl_integration_workspace_free(ws);
  if (status != GSL_SUCCESS) throw ConstructionFailure(std::string("counterexample quadrature: ") + gsl_strerror(status));

  CounterexampleValue v;
  v.j = j;
  v.value = -std::sqrt(2.0) * result;
  v.abserr = std::sqrt(2.0) * abserr;
  v.bound = j * pi * std::sqrt(2.0) - std::sqrt(2.0);
  return v;
}

void write_counterexample_csv(std::ostream& os, const std::vector<CounterexampleValue>& v) {
  os << "j,value,bound\n";
  for (const auto& c : v) os << c.j << ',' << fmt(c.value) << ',' << fmt(c.bound) << '\n';
}

void write_schwarz_csv(std::ostream& os, const SchwarzReport& r) {
  os << "r,rho,gamma_lo,gamma_hi,sigma,ratio_p,ratio_q\n";
  for (const auto& row : r.rows)
    os << fmt(row.r) << ',' << fmt(row.rho) << ',' << fmt(row.gamma.lower) << ',' << fmt(row.gamma.upper) << ','
       << fmt(row.sigma) << ',' << fmt(row.ratio_p) << ',' << fmt(row.ratio_q) << '\n';
}

}  // namespace superdensity
