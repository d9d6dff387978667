#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "superdensity/geometry.hpp"

namespace superdensity {

/// Lattices beta^{-k} Z^n inside [-R, R)^n for k = 1..K.
struct LatticeSpec {
  int n = 2;
  int R = 1;
  int beta = 2;
  int K = 1;
  void validate() const;
  /// beta^k as an exact double; throws when it exceeds 2^53.
  double scale(int k) const;
  /// Cells per axis at level k: 2 R beta^k.
  std::int64_t per_axis(int k) const;
};

struct CellId {
  int level = 0;
  int dim = 0;
  std::int64_t index[kMaxDim] = {};
  Box box(const LatticeSpec& spec) const;
  friend bool operator==(const CellId& a, const CellId& b);
};

/// floor(x * s), exact for integer-valued s.
std::int64_t floor_scaled(double x, double s);

CellId cell_of(const Point& x, int k, const LatticeSpec& spec);
/// Mixed-radix key of a cell at level k; keys sort like index vectors.
std::uint64_t cell_key(const CellId& c, const LatticeSpec& spec);
CellId cell_from_key(std::uint64_t key, int k, const LatticeSpec& spec);

/// Occupied cells of a level with their representative (lexicographically
/// smallest) cloud point, sorted by key.
struct OccupiedCells {
  std::vector<std::uint64_t> keys;
  PointSet reps;
};

/// Finite stand-in for a subset of spt(mu): every support point of interest
/// lies within `resolution()` of the cloud.
class PointCloud {
 public:
  virtual ~PointCloud() = default;
  virtual int dim() const = 0;
  virtual std::size_t size() const = 0;
  virtual double resolution() const = 0;
  virtual OccupiedCells occupied(int k, const LatticeSpec& spec) const = 0;
  /// Lexicographically smallest point; throws on an empty cloud.
  virtual Point first() const = 0;
  virtual bool has_point(const Point& p) const = 0;
  /// A cloud point closest to x (ties broken toward the smaller coordinate).
  virtual Point nearest(const Point& x) const = 0;
};

class ExplicitCloud final : public PointCloud {
 public:
  ExplicitCloud(PointSet points, double resolution);
  int dim() const override { return points_.dim(); }
  std::size_t size() const override { return points_.size(); }
  double resolution() const override { return resolution_; }
  OccupiedCells occupied(int k, const LatticeSpec& spec) const override;
  Point first() const override;
  bool has_point(const Point& p) const override;
  Point nearest(const Point& x) const override;
  const PointSet& points() const { return points_; }

 private:
  PointSet points_;   // lexicographically sorted
  double resolution_;
};

/// Implicit product grid {origin + spacing * i} restricted to an open box.
class GridCloud final : public PointCloud {
 public:
  GridCloud(Box open_box, double spacing, Point origin);
  GridCloud(Box open_box, double spacing) : GridCloud(open_box, spacing, Point(open_box.dim())) {}
  int dim() const override { return box_.dim(); }
  std::size_t size() const override;
  double resolution() const override;
  OccupiedCells occupied(int k, const LatticeSpec& spec) const override;
  Point first() const override;
  bool has_point(const Point& p) const override;
  Point nearest(const Point& x) const override;
  /// Per-axis occupied cell indices and the smallest grid coordinate in each.
  void axis_occupancy(int axis, int k, const LatticeSpec& spec, std::vector<std::int64_t>& idx,
                      std::vector<double>& rep) const;
  const std::vector<double>& axis_coords(int a) const { return coords_[static_cast<std::size_t>(a)]; }
  const Box& box() const { return box_; }
  double spacing() const { return spacing_; }

 private:
  Box box_;
  double spacing_;
  std::vector<std::vector<double>> coords_;
};

struct LambdaDistribution {
  LatticeSpec spec;
  PointSet points;                 // P_1, P_2, ...
  std::vector<std::size_t> counts; // N_1..N_K
  std::vector<int> first_level;    // level at which P_j was introduced
};

LambdaDistribution lambda_distribution(const PointCloud& cloud, const LatticeSpec& spec);

/// Exhaustive check of the exactly-one property for every level; on failure
/// returns false and describes the first offending cell.
bool verify_exactly_one(const LambdaDistribution& d, const PointCloud& cloud, std::string* why = nullptr);

/// Deepest level whose cells stay wider than twice the cloud resolution.
int resolution_cap(const LatticeSpec& spec, double resolution);

void write_distribution_csv(std::ostream& os, const LambdaDistribution& d);

}  // namespace superdensity
