#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "superdensity/geometry.hpp"
#include "superdensity/kernels.hpp"

namespace superdensity {

/// Fraction of a cell covered by a region: certified bounds plus a point
/// estimate. `refinable` says whether subdividing the cell can narrow the
/// bounds; `certified` is false when the bounds come from sampling.
struct Cover {
  double lo = 0.0;
  double hi = 1.0;
  double est = 0.0;
  bool refinable = true;
  bool certified = true;

  static Cover exact(double f, bool refinable = false) { return {f, f, f, refinable, true}; }
  static Cover unknown(double est) { return {0.0, 1.0, est, true, true}; }
};

enum class RegionKind {
  HalfSpace,
  Ball,
  Box,
  BallUnion,
  ProductBallUnion,
  Predicate,
  Pullback,
  Union,
  Intersection,
  Complement
};

/// Immutable set description on R^n. Primitive regions are open.
class RegionNode {
 public:
  virtual ~RegionNode() = default;
  virtual RegionKind kind() const = 0;
  virtual int dim() const = 0;
  /// Exact membership; callers must pass a point of the right dimension.
  virtual bool contains(const Point& x) const = 0;
  /// Coverage of every cell in the batch.
  virtual void cover(const kernels::CellBatch& cells, Cover* out) const = 0;
  /// True only if B_r(c) is certainly a subset of the region.
  virtual bool contains_ball(const Point& c, double r) const;
  /// Bounding box, when the region is bounded.
  virtual std::optional<Box> bounds() const { return std::nullopt; }
};

using Region = std::shared_ptr<const RegionNode>;

/// Checked membership: throws DimensionMismatch.
bool contains(const Region& region, const Point& x);
/// Coverage of a single cell.
Cover cover_box(const RegionNode& region, const Box& box);

class HalfSpaceRegion final : public RegionNode {
 public:
  /// {x : normal . x < offset}; the normal is normalized on construction.
  HalfSpaceRegion(Point normal, double offset);
  RegionKind kind() const override { return RegionKind::HalfSpace; }
  int dim() const override { return normal_.dim(); }
  bool contains(const Point& x) const override { return dot(normal_, x) < offset_; }
  void cover(const kernels::CellBatch& cells, Cover* out) const override;
  bool contains_ball(const Point& c, double r) const override { return dot(normal_, c) + r <= offset_; }
  const Point& normal() const { return normal_; }
  double offset() const { return offset_; }

 private:
  Point normal_;
  double offset_;
};

class BallRegion final : public RegionNode {
 public:
  BallRegion(Point center, double radius);
  RegionKind kind() const override { return RegionKind::Ball; }
  int dim() const override { return center_.dim(); }
  bool contains(const Point& x) const override { return dist2(x, center_) < r2_; }
  void cover(const kernels::CellBatch& cells, Cover* out) const override;
  bool contains_ball(const Point& c, double r) const override { return dist(c, center_) + r <= radius_; }
  std::optional<Box> bounds() const override { return Box::around(center_, radius_); }
  const Point& center() const { return center_; }
  double radius() const { return radius_; }

 private:
  Point center_;
  double radius_;
  double r2_;
};

class BoxRegion final : public RegionNode {
 public:
  BoxRegion(Point lo, Point hi);
  RegionKind kind() const override { return RegionKind::Box; }
  int dim() const override { return box_.dim(); }
  bool contains(const Point& x) const override;
  void cover(const kernels::CellBatch& cells, Cover* out) const override;
  bool contains_ball(const Point& c, double r) const override;
  std::optional<Box> bounds() const override { return box_; }
  const Box& box() const { return box_; }

 private:
  Box box_;
};

/// Grid-hashed union of open balls, one uniform grid per radius class.
class BallUnionIndex {
 public:
  struct Ball {
    Point center;
    double radius;
    int cls;  // radius class, e.g. the construction level
  };

  /// Balls with equal `cls` share a grid. Radii must be positive.
  explicit BallUnionIndex(int dim, std::vector<Ball> balls);
  /// Convenience: every ball in its own class by radius equality.
  static BallUnionIndex from_balls(int dim, const std::vector<std::pair<Point, double>>& balls);

  int dim() const { return dim_; }
  std::size_t size() const { return total_; }
  int class_count() const { return static_cast<int>(classes_.size()); }
  int class_label(int i) const { return classes_[i].label; }
  std::size_t class_size(int i) const { return classes_[i].count; }
  double class_cell_size(int i) const { return classes_[i].h; }

  /// Membership restricted to classes with label <= max_label.
  bool query(const Point& x, int max_label = INT32_MAX) const;
  bool query_linear(const Point& x, int max_label = INT32_MAX) const;
  Cover cover(const Box& box, int max_label = INT32_MAX) const;
  /// Grid cells of class i holding ball id b (test hook for the registration invariant).
  bool registered_in(int cls_index, std::size_t ball, const Point& cell_probe) const;
  bool class_disjoint(int i) const { return classes_[i].disjoint; }
  std::size_t ball_count_in_class(int i) const { return classes_[i].count; }
  Point ball_center(int cls_index, std::size_t ball) const;
  double ball_radius(int cls_index, std::size_t ball) const { return classes_[cls_index].r[ball]; }

 private:
  struct Class {
    int label = 0;
    std::size_t count = 0;
    double h = 1.0;           // grid cell size
    double max_r = 0.0;
    double ball_volume_sum = 0.0;
    bool disjoint = true;
    Point origin;
    std::int64_t extent[kMaxDim] = {};  // grid cells per axis
    // Ball data in id order.
    std::vector<double> c[kMaxDim];
    std::vector<double> r, r2;
    // CSR: sorted cell keys, offsets into entries; entries hold SoA copies.
    std::vector<std::uint64_t> keys;
    std::vector<std::uint32_t> offsets;
    std::vector<std::uint32_t> ids;
    std::vector<double> ec[kMaxDim];
    std::vector<double> er, er2;
  };

  std::int64_t cell_coord(const Class& cl, int axis, double x) const;
  std::uint64_t key_of(const Class& cl, const std::int64_t* idx) const;
  kernels::BallSpan entries(const Class& cl, std::size_t pos) const;

  int dim_;
  std::size_t total_ = 0;
  std::vector<Class> classes_;
};

class BallUnionRegion final : public RegionNode {
 public:
  explicit BallUnionRegion(std::shared_ptr<const BallUnionIndex> index, int max_label = INT32_MAX)
      : index_(std::move(index)), max_label_(max_label) {}
  RegionKind kind() const override { return RegionKind::BallUnion; }
  int dim() const override { return index_->dim(); }
  bool contains(const Point& x) const override { return index_->query(x, max_label_); }
  void cover(const kernels::CellBatch& cells, Cover* out) const override;
  const BallUnionIndex& index() const { return *index_; }
  std::shared_ptr<const BallUnionIndex> index_ptr() const { return index_; }
  int max_label() const { return max_label_; }

 private:
  std::shared_ptr<const BallUnionIndex> index_;
  int max_label_;
};

/// Union of congruent balls centered on a product set: per level, centers are
/// all combinations of the per-axis coordinate lists.
struct ProductBallLevel {
  int label = 0;
  double radius = 0.0;
  std::vector<std::vector<double>> axis;  // sorted, one list per axis
  std::size_t count() const;
};

class ProductBallUnion final : public RegionNode {
 public:
  ProductBallUnion(int dim, std::vector<ProductBallLevel> levels, int max_label = INT32_MAX);
  RegionKind kind() const override { return RegionKind::ProductBallUnion; }
  int dim() const override { return dim_; }
  bool contains(const Point& x) const override;
  void cover(const kernels::CellBatch& cells, Cover* out) const override;
  const std::vector<ProductBallLevel>& levels() const { return *levels_; }
  int max_label() const { return max_label_; }
  std::shared_ptr<const std::vector<ProductBallLevel>> levels_ptr() const { return levels_; }
  ProductBallUnion(int dim, std::shared_ptr<const std::vector<ProductBallLevel>> levels, int max_label);

 private:
  Cover cover_one(const Box& b) const;
  int dim_;
  std::shared_ptr<const std::vector<ProductBallLevel>> levels_;
  int max_label_;
};

/// Named membership callback. `exact_cover` (optional) returns the exact
/// covered fraction of a box; `interval_cover` (optional) returns certified
/// bounds. Without either, coverage is decided by corner sampling and
/// reported as uncertified.
struct PredicateSpec {
  std::string name;
  int dim = 2;
  std::function<bool(const Point&)> member;
  std::function<double(const Box&)> exact_cover;
  std::function<Cover(const Box&)> interval_cover;
  std::optional<Box> bounds;
  bool lipschitz_boundary = true;
  std::vector<double> params;
};

class PredicateRegion final : public RegionNode {
 public:
  explicit PredicateRegion(PredicateSpec spec);
  RegionKind kind() const override { return RegionKind::Predicate; }
  int dim() const override { return spec_.dim; }
  bool contains(const Point& x) const override { return spec_.member(x); }
  void cover(const kernels::CellBatch& cells, Cover* out) const override;
  std::optional<Box> bounds() const override { return spec_.bounds; }
  const PredicateSpec& spec() const { return spec_; }

 private:
  PredicateSpec spec_;
};

/// Builtin predicates by name:
///   cusp(alpha)           {t >= 0, 0 <= s <= t^alpha} on coordinates 0, 1
///   parabola_band()       {a >= 0, |b - a^2| <= a^4}
PredicateSpec builtin_predicate(const std::string& name, int dim, const std::vector<double>& params);
std::vector<std::string> builtin_predicate_names();
/// Exact area of {t >= 0, 0 <= s <= t^alpha} inside [a0,a1] x [b0,b1].
double cusp_area(double alpha, double a0, double a1, double b0, double b1);

struct SurfaceChart;

/// phi^{-1}(E) in parameter space.
class PullbackRegion final : public RegionNode {
 public:
  PullbackRegion(std::shared_ptr<const SurfaceChart> chart, Region ambient);
  RegionKind kind() const override { return RegionKind::Pullback; }
  int dim() const override;
  bool contains(const Point& y) const override;
  void cover(const kernels::CellBatch& cells, Cover* out) const override;
  const SurfaceChart& chart() const { return *chart_; }
  std::shared_ptr<const SurfaceChart> chart_ptr() const { return chart_; }
  const Region& ambient() const { return ambient_; }

 private:
  std::shared_ptr<const SurfaceChart> chart_;
  Region ambient_;
};

class UnionRegion final : public RegionNode {
 public:
  /// `dim` is required when `parts` is empty.
  explicit UnionRegion(std::vector<Region> parts, int dim = -1);
  RegionKind kind() const override { return RegionKind::Union; }
  int dim() const override { return dim_; }
  bool contains(const Point& x) const override;
  void cover(const kernels::CellBatch& cells, Cover* out) const override;
  bool contains_ball(const Point& c, double r) const override;
  std::optional<Box> bounds() const override;
  const std::vector<Region>& parts() const { return parts_; }

 private:
  std::vector<Region> parts_;
  int dim_;
};

class IntersectionRegion final : public RegionNode {
 public:
  explicit IntersectionRegion(std::vector<Region> parts);
  RegionKind kind() const override { return RegionKind::Intersection; }
  int dim() const override { return dim_; }
  bool contains(const Point& x) const override;
  void cover(const kernels::CellBatch& cells, Cover* out) const override;
  bool contains_ball(const Point& c, double r) const override;
  std::optional<Box> bounds() const override;
  const std::vector<Region>& parts() const { return parts_; }

 private:
  std::vector<Region> parts_;
  int dim_;
};

class ComplementRegion final : public RegionNode {
 public:
  explicit ComplementRegion(Region inner);
  RegionKind kind() const override { return RegionKind::Complement; }
  int dim() const override { return inner_->dim(); }
  bool contains(const Point& x) const override { return !inner_->contains(x); }
  void cover(const kernels::CellBatch& cells, Cover* out) const override;
  const Region& inner() const { return inner_; }

 private:
  Region inner_;
};

// Factories.
Region half_space(Point normal, double offset);
Region ball(Point center, double radius);
Region box(Point lo, Point hi);
Region ball_union(std::shared_ptr<const BallUnionIndex> index, int max_label = INT32_MAX);
Region predicate(PredicateSpec spec);
Region pullback(std::shared_ptr<const SurfaceChart> chart, Region ambient);
Region unite(std::vector<Region> parts);
Region intersect(std::vector<Region> parts);
Region complement(Region inner);
/// Region containing nothing / everything in dimension n.
Region empty_region(int n);
Region whole_space(int n);

/// Coverage combinators shared by the boolean nodes.
Cover cover_union(const Cover* parts, std::size_t k);
Cover cover_intersection(const Cover* parts, std::size_t k);
inline Cover cover_complement(const Cover& c) { return {1.0 - c.hi, 1.0 - c.lo, 1.0 - c.est, c.refinable, c.certified}; }

}  // namespace superdensity
