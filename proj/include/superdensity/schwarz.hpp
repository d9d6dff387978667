#pragma once

#include <cmath>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "superdensity/chart.hpp"
#include "superdensity/density.hpp"
#include "superdensity/measures.hpp"

namespace superdensity {

/// Radial bump: 1 on [0, rho], quintic smoothstep down to 0 on [rho, 1].
struct Bump {
  double rho = 0.5;
  double value(double u) const;
  double slope(double u) const;  // dg/du
  /// g_r(x) = g(|x - c| / r) and its partial derivatives.
  double at(const Point& x, const Point& c, double r) const;
  double partial(const Point& x, const Point& c, double r, int axis) const;
  double slope_bound() const { return 2.0 / (1.0 - rho); }
};
Bump bump(double rho);

/// Compactly supported C^1 test function with analytic gradient.
struct TestFunction {
  std::function<double(const Point&)> f;
  std::function<double(const Point&, int)> grad;
  Box support;
};
/// prod_a (1 - u_a^2)^3 with u_a = (y_a - c_a) / s_a on |u_a| < 1.
TestFunction product_bump(const Point& center, const Point& half_widths);
/// 1 on the box, C^2 cutoff to 0 within `margin` outside it.
TestFunction plateau(const Box& inner, double margin);

struct DensityForm {
  int axis = 0;
  Density density;
};
struct BoundaryFlux {
  int axis = 0;
  std::shared_ptr<const SurfaceChart> boundary;
  std::function<Point(const Point&)> normal;  // outward unit normal at an ambient point
};
struct DiagonalSingular {};

struct DerivativeMeasure {
  std::variant<DensityForm, BoundaryFlux, DiagonalSingular> v;
};

DerivativeMeasure density_form(int axis, Density density);
/// D_i of L^2 restricted to the disk B_R(c): -nu_i H^1 on the circle.
DerivativeMeasure disk_flux(int axis, const Point& center, double radius);

/// Interval for the integral of the test against D_i mu.
MeasureInterval derivative_pairing(const DerivativeMeasure& d, const TestFunction& test, int cells_per_axis = 32);
/// -integral of (D_i test) d mu for the DensityForm variant (integration by parts side).
MeasureInterval parts_pairing(const DerivativeMeasure& d, const TestFunction& test, int cells_per_axis = 32);

/// |D_i mu|(B_r(x)).
MeasureInterval derivative_total_variation(const DerivativeMeasure& d, const Point& x, double r,
                                           const QuadratureOptions& opts = {});

/// Planar field (G, H); Gamma = D_p H - D_q G.
struct Field {
  std::string name;
  std::function<double(const Point&)> G, H;
  std::function<double(const Point&)> gamma;  // analytic Gamma, when known
};
/// sin_product: G = d1 f, H = d2 f with f = sin x1 sin x2 (Gamma = 0)
/// curl:         G = -x2, H = x1 (Gamma = 2)
/// quadratic_curl: G = -x2 x1^2, H = x1^3 / 3 (Gamma = 2 x1^2)
Field builtin_field(const std::string& name);
std::vector<std::string> builtin_field_names();

struct EstimatorResult {
  MeasureInterval gamma;  // mean of Gamma over B_{rho r}(x), finite-difference Gamma
  double analytic = 0.0;  // Gamma(x) when known
  bool has_analytic = false;
  double fd_step = 0.0;
};

EstimatorResult schwarz_estimator(const Measure& mu, const Field& field, int p, int q, const Point& x, double r,
                                  double rho = 0.5, const QuadratureOptions& opts = {});

struct SchwarzRow {
  double r = 0.0;
  double rho = 0.0;
  MeasureInterval gamma;
  double sigma = 0.0;
  double ratio_p = 0.0, ratio_q = 0.0;
  double tv_p = 0.0, tv_q = 0.0;       // |D_i mu|(B_r)
  double outside_A = 0.0;              // mu(B_r \ A)
  double sigma_term = 0.0;             // C (sigma(rho) - 1) with C = 1
};

struct SchwarzReport {
  Point x;
  std::vector<double> rho_grid;
  std::vector<double> sigma;
  std::vector<double> radii;
  std::vector<MeasureInterval> ratio_p, ratio_q;
  double slope_p = 0.0, slope_q = 0.0;
  bool decay_p = false, decay_q = false;
  bool sigma_monotone = false;
  bool sigma_trend = false;
  DegreeEstimate tangency;
  TestVerdict tangency_test = TestVerdict::Inconclusive;
  bool plausible = false;
  std::vector<SchwarzRow> rows;
};

struct HypothesisOptions {
  double decade = 10.0;
  double decay_slope = 0.5;
  double row_rho = 0.5;  // rho used for the per-radius rows
  DensityParams density;
};

/// sigma(rho) for each rho: minimum of mu(B_r)/mu(B_{rho r}) over the radii
/// within `decade` of the smallest one.
std::vector<double> sigma_profile(const Measure& mu, const Point& x, const std::vector<double>& radii,
                                  const std::vector<double>& rho_grid, double decade = 10.0,
                                  const QuadratureOptions& opts = {});

SchwarzReport hypothesis_report(const Measure& mu, const DerivativeMeasure& dp, const DerivativeMeasure& dq,
                                const Point& x, const std::vector<double>& radii, const std::vector<double>& rho_grid,
                                const Region& A, const QuadratureOptions& opts = {},
                                const HypothesisOptions& hopts = {});

/// Fills the gamma column of every row with the estimator at that radius.
void attach_estimates(SchwarzReport& report, const Measure& mu, const Field& field, int p, int q,
                      const QuadratureOptions& opts = {});

struct CounterexampleValue {
  int j = 0;
  double value = 0.0;
  double abserr = 0.0;
  double bound = 0.0;
  bool ok() const { return std::abs(value) >= bound - 1e-3; }
};

/// eta: 1 on [0, 2 pi^2], quintic transition to 0 on [2 pi^2, 2 pi^2 + 1].
double counterexample_eta(double s);
double counterexample_eta_prime(double s);
CounterexampleValue diagonal_counterexample(int j, double tol = 1e-6);

void write_counterexample_csv(std::ostream& os, const std::vector<CounterexampleValue>& v);
void write_schwarz_csv(std::ostream& os, const SchwarzReport& r);

}  // namespace superdensity
