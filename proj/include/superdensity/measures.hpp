#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "superdensity/chart.hpp"
#include "superdensity/geometry.hpp"
#include "superdensity/regions.hpp"

namespace superdensity {

enum MeasureFlag : unsigned {
  kBudgetExceeded = 1u,
  kProbabilistic = 2u,
  kUncertified = 4u,        // some cell was classified by sampling
  kResolutionLimited = 8u,  // irreducible width above tolerance
  kMidpoint = 16u,          // integrand taken at cell midpoints; its variation inside a cell is not enclosed
};

/// Certified enclosure [lower, upper] of a measure value plus a point estimate.
struct MeasureInterval {
  double lower = 0.0;
  double upper = 0.0;
  double estimate = 0.0;
  unsigned flags = 0;

  double width() const { return upper - lower; }
  bool contains(double v) const { return lower <= v && v <= upper; }
  static MeasureInterval exact(double v) { return {v, v, v, 0}; }
};

MeasureInterval operator+(const MeasureInterval& a, const MeasureInterval& b);
/// Outer quotient a / b for nonnegative a, b. Returns nullopt-like {0, inf}
/// with kResolutionLimited when b.lower <= 0.
MeasureInterval divide(const MeasureInterval& a, const MeasureInterval& b);
bool overlaps(const MeasureInterval& a, const MeasureInterval& b, double slack = 0.0);

struct QuadratureOptions {
  double tol = 1e-4;  // relative width target
  int max_depth = 16;
  std::size_t cell_budget = 4'000'000;
  std::uint64_t seed = 20240607;
  std::size_t mc_samples = 1u << 16;
};

/// Nonnegative density w with optional analytic partial derivatives.
struct Density {
  std::string name = "one";
  std::function<double(const Point&)> w;
  std::function<double(const Point&, int)> grad;
  /// Exact min and max of w over a box. Without it, cell bounds are sampled
  /// and results carry kUncertified.
  std::function<std::pair<double, double>(const Box&)> range;
  int poly_degree = -1;  // total degree when w is a polynomial, else -1
  bool unit = true;      // w == 1: enables translation-invariant caching
};

Density builtin_density(const std::string& name);
std::vector<std::string> builtin_density_names();

struct FrameBounds {
  double C = 1.0;
  double p = 1.0;
  double q = 1.0;
  double r_bar = 1.0;
};

struct Measure;
using MeasurePtr = std::shared_ptr<const Measure>;

struct WeightedLebesgue {
  int dim = 2;
  Density density;
  Box box;  // w is taken as zero outside
};
struct SurfaceMeasure {
  std::shared_ptr<const SurfaceChart> chart;
};
struct Restriction {
  MeasurePtr base;
  Region region;
};
struct Dirac {
  Point atom;
};
struct SumMeasure {
  std::vector<MeasurePtr> parts;
};

struct Measure {
  std::variant<WeightedLebesgue, SurfaceMeasure, Restriction, Dirac, SumMeasure> v;
  int dim() const;
};

MeasurePtr lebesgue(int n, Density density = {}, double half_extent = 1.0e3);
MeasurePtr lebesgue_on(int n, Density density, Box box);
MeasurePtr surface_measure(std::shared_ptr<const SurfaceChart> chart);
MeasurePtr restrict_to(MeasurePtr base, Region region);
MeasurePtr dirac(Point atom);
MeasurePtr sum(std::vector<MeasurePtr> parts);

/// True when mu is w*L^n with w == 1 (translation invariant).
bool is_unit_lebesgue(const Measure& mu);

/// Optional signed integrand f: the result encloses the integral of f over the set.
using Integrand = std::function<double(const Point&)>;

/// mu(set) for a set contained in `root` (a box in ambient coordinates).
/// With an integrand the bounds cover the set's coverage only (kMidpoint).
MeasureInterval measure_of(const Measure& mu, const Region& set, const Box& root, const QuadratureOptions& opts,
                           const Integrand& f = {});

MeasureInterval ball_measure(const Measure& mu, const Point& x, double r, const QuadratureOptions& opts = {});
MeasureInterval restricted_ball_measure(const Measure& mu, const Region& E, const Point& x, double r,
                                        const QuadratureOptions& opts = {});
/// One-sided proxy for x in spt mu: every probed ball has positive upper bound.
bool in_support(const Measure& mu, const Point& x, const std::vector<double>& radii,
                const QuadratureOptions& opts = {});

/// Lower-level engine: hierarchical refinement of `root`. `cover` receives
/// batches of same-sized cells; `weight` returns the signed weight of each
/// cell (integrand times measure of the full cell).
struct CellEngine {
  int dim = 2;
  Box root;
  std::function<void(const kernels::CellBatch&, Cover*)> cover;
  std::function<void(const kernels::CellBatch&, double*)> weight;
  int max_depth = 16;
  int min_depth = 0;  // cells above this depth are always split
  /// Optional bounds of the (nonnegative) weight over each cell. When set, a
  /// partially covered cell contributes [cover.lo * lo, cover.hi * hi] and a
  /// fully covered one [lo, hi], or exactly `weight` if `weight_exact`.
  std::function<void(const kernels::CellBatch&, double* lo, double* hi)> weight_range;
  bool weight_exact = false;
};
MeasureInterval integrate_cells(const CellEngine& engine, const QuadratureOptions& opts);

/// Smooth integrand over a box by tensor Gauss-Legendre on a uniform grid; the
/// interval is the fine result widened by the coarse/fine difference.
MeasureInterval integrate_smooth(const std::function<double(const Point&)>& f, const Box& box, int cells_per_axis = 32);

/// Samples w on a grid over its box; false if any sample is negative.
bool density_nonnegative(const WeightedLebesgue& m, int per_axis = 16);

}  // namespace superdensity
