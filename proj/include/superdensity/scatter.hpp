#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "superdensity/density.hpp"
#include "superdensity/lattice.hpp"
#include "superdensity/measures.hpp"
#include "superdensity/regions.hpp"

namespace superdensity {

struct ScatterParams {
  FrameBounds frame;
  int n = 2;
  double epsilon = 0.1;
  double h = 1.0;
  double m = 0.0;  // (h+q)q/p
  int R = 1;
  int beta = 2;
  double lower_bound_constant = 0.0;
  /// The three quantities beta must strictly exceed.
  double beta_terms[3] = {0.0, 0.0, 0.0};

  /// rho_k = (eps / (C beta^{k m}))^{1/q}
  double rho(int k) const;
  /// 2^n R^n eps / (beta^{m-n} - 1)
  double frame_chain_limit() const;
  double m_bar() const { return n * frame.p / frame.q - frame.q; }
};

/// Derives m, beta and the lower-bound constant; throws HypothesisViolation.
ScatterParams scatter_parameters(const FrameBounds& frame, int n, int R, double epsilon, double h);
/// Exact re-check of every parameter inequality; returns the violated ones.
std::vector<std::string> check_parameters(const ScatterParams& p);

struct ScatterLevel {
  int k = 0;
  double rho = 0.0;
  std::size_t gamma_count = 0;  // #Gamma_k
  MeasureInterval ball;         // mu(B_rho(P)) for unit Lebesgue (translation invariant)
  double measure_upper = 0.0;   // sum over Gamma_k of ball uppers
  double frame_bound = 0.0;     // #Gamma_k * C rho^q
};

struct ScatteredSet {
  ScatterParams params;
  int K_max = 0;
  bool structured = false;
  LambdaDistribution distribution;  // empty in the structured path
  std::vector<ScatterLevel> levels;
  std::shared_ptr<const BallUnionIndex> index;                 // materialized path
  std::shared_ptr<const std::vector<ProductBallLevel>> product;  // structured path
  double measure_upper_bound = 0.0;
  double frame_chain = 0.0;
  double truncation_scale = 0.0;  // beta^{-K_max+1}

  bool empty() const;
  std::size_t ball_count() const;
  /// Union of the balls of levels 1..k.
  Region region(int k = INT32_MAX) const;
};

/// Materialized construction: Lambda-distribution of the cloud, then balls
/// B_{rho_k}(P_j) inside omega for j <= N_k.
ScatteredSet construct_scattered_set(const Measure& mu, const ScatterParams& params, const Region& omega,
                                     const PointCloud& cloud, int K_max, const QuadratureOptions& opts = {});

/// Same set for a grid cloud and a box omega, kept in product form so that
/// levels with billions of balls stay implicit.
ScatteredSet construct_scattered_set_structured(const Measure& mu, const ScatterParams& params, const Box& omega,
                                                const GridCloud& cloud, int K_max,
                                                const QuadratureOptions& opts = {});

/// Every ball of the set lies inside omega (exact check per ball; the
/// structured form is checked per axis).
bool balls_inside(const ScatteredSet& s, const Region& omega);

struct LevelStatistic {
  int k = 0;
  double r = 0.0;  // beta^{-k+1}
  MeasureInterval stat;
  bool pass = false;
};

struct SampleReport {
  Point x;
  int K_x = 0;
  bool skipped = false;
  std::string reason;
  std::vector<LevelStatistic> levels;
  bool pass = false;
};

struct VerifyReport {
  double epsilon = 0.0;
  double lower_bound_constant = 0.0;
  double truncation_scale = 0.0;
  double measure_upper_bound = 0.0;  // sum of ball uppers
  MeasureInterval measured;          // quadrature of omega cap A
  bool measured_done = false;
  bool budget_ok = false;
  std::vector<SampleReport> samples;
  bool statistic_ok = false;
  bool pass() const { return budget_ok && statistic_ok; }
};

struct VerifyOptions {
  bool measure_A = true;
  std::size_t measure_budget = 2'000'000;
};

VerifyReport verify_scattered_set(const Measure& mu, const ScatteredSet& s, const Region& omega,
                                  const std::vector<Point>& samples, const QuadratureOptions& opts = {},
                                  const VerifyOptions& vopts = {});

/// Low-discrepancy points in a box (Halton, bases 2, 3, 5, ...), index from `skip`.
std::vector<Point> halton_points(const Box& box, std::size_t count, std::size_t skip = 1);
/// Halton points inside omega snapped to the cloud, deduplicated, in order.
std::vector<Point> sample_cloud_points(const Region& omega, const Box& bounds, const PointCloud& cloud,
                                       std::size_t count);

/// {y : B_delta(y) inside omega} for boxes, balls, half-spaces and their
/// intersections; other regions fall back to a sampled predicate.
Region shrink(const Region& omega, double delta);
/// Points of the boundary of omega used to probe the boundary hypothesis.
std::vector<Point> boundary_samples(const Region& omega);

struct Collar {
  double delta = 0.0;
  bool skipped = false;
  std::string note;
  int iterations = 0;
  double budget = 0.0;
  MeasureInterval band;   // mu(A' \ K), both sides of the boundary
  MeasureInterval inner;  // mu(A' cap omega)
  Region region;          // A' cap omega
};

struct AugmentedSet {
  ScatteredSet base;
  Collar collar;
  Region region;                  // A'' = A u (A' cap omega)
  double measure_upper_bound = 0.0;
  double committed = 0.0;         // measure already used before the collar
  std::vector<Point> boundary_points;
  std::vector<BaseStatistic> boundary_checks;
};

struct AugmentOptions {
  int max_iterations = 60;
  double committed = -1.0;  // default: base.measure_upper_bound
  double rel_gap = 1e-3;
  bool check_boundary = true;
  RadiiSchedule boundary_radii{0.05, 0.5, 8};
};

AugmentedSet augment_boundary(const Measure& mu, ScatteredSet base, const Region& omega,
                              const QuadratureOptions& opts = {}, const AugmentOptions& aopts = {});

struct ThinComponent {
  int j = 0;
  double h = 0.0;
  double epsilon = 0.0;
  int levels = 0;          // constructed levels (resolution cap)
  double tail_bound = 0.0; // frame bound of the levels beyond the cap
  AugmentedSet set;
  double measure_upper = 0.0;
};

struct ThinSetOptions {
  double grid_spacing = 2e-6;
  int level_cap = 4;
  std::size_t samples = 20;
  double window_lo = 0.0;  // 0: derived from the finest constructed spacing
  double window_hi = 0.0;
  int radii_count = 12;
  double slope_margin = 0.2;
  DensityParams density;
};

struct ThinSetResult {
  Region omega, omega_prime;
  double H = 0.0;
  double m_bar = 0.0;
  std::vector<ThinComponent> parts;
  Region F;
  MeasureInterval omega_measure;
  double removed_upper = 0.0;
  double measure_lower_bound = 0.0;
  double truncation_scale = 0.0;
  double window_lo = 0.0, window_hi = 0.0;
  std::vector<Point> samples;
  std::vector<DensityProfile> profiles;
  std::vector<DegreeEstimate> degrees;
  bool measure_ok = false;
  bool degree_ok = false;
};

/// omega and omega_prime must be boxes; the cloud is a grid on omega_prime.
ThinSetResult thin_closed_subset(const Measure& mu, const FrameBounds& frame, const Box& omega, const Box& omega_prime,
                                 int R, double H, int J_max, const ThinSetOptions& topts = {},
                                 const QuadratureOptions& opts = {});

void write_levels_csv(std::ostream& os, const ScatteredSet& s);
void write_statistics_csv(std::ostream& os, const VerifyReport& r);
void write_thin_csv(std::ostream& os, const ThinSetResult& t);

}  // namespace superdensity
