#include "superdensity/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "superdensity/format.hpp"
#include "superdensity/kernels.hpp"

namespace superdensity {

void LatticeSpec::validate() const {
  if (n < 1 || n > kMaxDim) throw InvalidArgument("lattice dimension out of range");
  if (R < 1) throw InvalidArgument("lattice R must be a positive integer");
  if (beta < 2) throw InvalidArgument("lattice beta must be an integer >= 2");
  if (K < 1) throw InvalidArgument("lattice depth K must be >= 1");
}

double LatticeSpec::scale(int k) const {
  double s = 1.0;
  for (int i = 0; i < k; ++i) s *= beta;
  if (s * 2.0 * R > 9007199254740992.0) throw InvalidArgument("lattice level " + std::to_string(k) + " too fine");
  return s;
}

std::int64_t LatticeSpec::per_axis(int k) const { return static_cast<std::int64_t>(2.0 * R * scale(k)); }

Box CellId::box(const LatticeSpec& spec) const {
  const double w = 1.0 / spec.scale(level);
  Box b{Point(dim), Point(dim)};
  for (int a = 0; a < dim; ++a) {
    b.lo[a] = static_cast<double>(index[a]) * w;
    b.hi[a] = static_cast<double>(index[a] + 1) * w;
  }
  return b;
}

bool operator==(const CellId& a, const CellId& b) {
  if (a.level != b.level || a.dim != b.dim) return false;
  for (int i = 0; i < a.dim; ++i)
    if (a.index[i] != b.index[i]) return false;
  return true;
}

std::int64_t floor_scaled(double x, double s) {
  std::int64_t out = 0;
  kernels::scalar::floor_scaled(&x, 1, s, &out);
  return out;
}

CellId cell_of(const Point& x, int k, const LatticeSpec& spec) {
  spec.validate();
  require_dim(x, spec.n);
  if (k < 0) throw InvalidArgument("negative lattice level");
  CellId c;
  c.level = k;
  c.dim = spec.n;
  const double s = spec.scale(k);
  for (int a = 0; a < spec.n; ++a) {
    if (!(x[a] >= -spec.R && x[a] < spec.R))
      throw InvalidArgument("point outside [-R,R)^n: coordinate " + std::to_string(a) + " = " + fmt(x[a]));
    c.index[a] = floor_scaled(x[a], s);
  }
  return c;
}

std::uint64_t cell_key(const CellId& c, const LatticeSpec& spec) {
  const std::int64_t p = spec.per_axis(c.level);
  const std::int64_t off = p / 2;
  long double total = 1.0L;
  for (int a = 0; a < spec.n; ++a) total *= static_cast<long double>(p);
  if (total > 1.8e19L) throw InvalidArgument("lattice level too fine for 64-bit cell keys");
  std::uint64_t key = 0;
  for (int a = 0; a < spec.n; ++a) key = key * static_cast<std::uint64_t>(p) + static_cast<std::uint64_t>(c.index[a] + off);
  return key;
}

CellId cell_from_key(std::uint64_t key, int k, const LatticeSpec& spec) {
  const std::int64_t p = spec.per_axis(k);
  CellId c;
  c.level = k;
  c.dim = spec.n;
  for (int a = spec.n - 1; a >= 0; --a) {
    c.index[a] = static_cast<std::int64_t>(key % static_cast<std::uint64_t>(p)) - p / 2;
    key /= static_cast<std::uint64_t>(p);
  }
  return c;
}

namespace {

std::vector<std::uint64_t> keys_of(const PointSet& pts, std::size_t count, int k, const LatticeSpec& spec) {
  const int n = spec.n;
  const double s = spec.scale(k);
  const std::int64_t p = spec.per_axis(k);
  std::vector<std::uint64_t> keys(count, 0);
  std::vector<double> col(count);
  std::vector<std::int64_t> idx(count);
  for (int a = 0; a < n; ++a) {
    for (std::size_t i = 0; i < count; ++i) {
      col[i] = pts.coord(i, a);
      if (!(col[i] >= -spec.R && col[i] < spec.R)) throw InvalidArgument("cloud point outside [-R,R)^n");
    }
    kernels::floor_scaled(col.data(), count, s, idx.data());
    for (std::size_t i = 0; i < count; ++i)
      keys[i] = keys[i] * static_cast<std::uint64_t>(p) + static_cast<std::uint64_t>(idx[i] + p / 2);
  }
  return keys;
}

}  // namespace

ExplicitCloud::ExplicitCloud(PointSet points, double resolution) : points_(points.dim()), resolution_(resolution) {
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lex_less(points[a], points[b]); });
  points_.reserve(points.size());
  for (std::size_t i : order) points_.push_back(points[i]);
}

OccupiedCells ExplicitCloud::occupied(int k, const LatticeSpec& spec) const {
  require_dim(Point(spec.n), dim());
  const auto keys = keys_of(points_, points_.size(), k, spec);
  std::vector<std::size_t> order(keys.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  OccupiedCells out;
  out.reps = PointSet(dim());
  for (std::size_t j = 0; j < order.size(); ++j) {
    const std::size_t i = order[j];
    if (!out.keys.empty() && out.keys.back() == keys[i]) continue;
    out.keys.push_back(keys[i]);
    out.reps.push_back(points_[i]);  // stable sort keeps the lexicographic minimum first
  }
  return out;
}

Point ExplicitCloud::first() const {
  if (points_.empty()) throw InvalidArgument("empty point cloud");
  return points_[0];
}

bool ExplicitCloud::has_point(const Point& p) const {
  std::size_t lo = 0, hi = points_.size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (lex_less(points_[mid], p))
      lo = mid + 1;
    else
      hi = mid;
  }
  return lo < points_.size() && points_[lo] == p;
}

Point ExplicitCloud::nearest(const Point& x) const {
  require_dim(x, dim());
  if (points_.empty()) throw InvalidArgument("empty point cloud");
  std::size_t best = 0;
  double bd = dist2(points_[0], x);
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const double d = dist2(points_[i], x);
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return points_[best];
}

GridCloud::GridCloud(Box open_box, double spacing, Point origin)
    : box_(std::move(open_box)), spacing_(spacing), coords_(static_cast<std::size_t>(box_.dim())) {
  if (!(spacing > 0.0)) throw InvalidArgument("grid spacing must be positive");
  require_dim(origin, box_.dim());
  for (int a = 0; a < box_.dim(); ++a) {
    auto& c = coords_[static_cast<std::size_t>(a)];
    const double first = std::floor((box_.lo[a] - origin[a]) / spacing) - 1.0;
    const double last = std::ceil((box_.hi[a] - origin[a]) / spacing) + 1.0;
    if (last - first > 5.0e8) throw InvalidArgument("grid cloud too fine");
    for (double i = first; i <= last; i += 1.0) {
      const double v = origin[a] + spacing * i;
      if (v > box_.lo[a] && v < box_.hi[a]) c.push_back(v);
    }
  }
}

std::size_t GridCloud::size() const {
  std::size_t s = 1;
  for (const auto& c : coords_) s *= c.size();
  return s;
}

double GridCloud::resolution() const { return spacing_ * std::sqrt(static_cast<double>(dim())); }

void GridCloud::axis_occupancy(int axis, int k, const LatticeSpec& spec, std::vector<std::int64_t>& idx,
                               std::vector<double>& rep) const {
  const auto& c = coords_[static_cast<std::size_t>(axis)];
  for (double v : c)
    if (!(v >= -spec.R && v < spec.R)) throw InvalidArgument("grid cloud leaves [-R,R)^n");
  std::vector<std::int64_t> all(c.size());
  kernels::floor_scaled(c.data(), c.size(), spec.scale(k), all.data());
  idx.clear();
  rep.clear();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!idx.empty() && idx.back() == all[i]) continue;
    idx.push_back(all[i]);
    rep.push_back(c[i]);
  }
}

OccupiedCells GridCloud::occupied(int k, const LatticeSpec& spec) const {
  const int n = dim();
  std::vector<std::vector<std::int64_t>> idx(static_cast<std::size_t>(n));
  std::vector<std::vector<double>> rep(static_cast<std::size_t>(n));
  std::size_t total = 1;
  for (int a = 0; a < n; ++a) {
    axis_occupancy(a, k, spec, idx[static_cast<std::size_t>(a)], rep[static_cast<std::size_t>(a)]);
    total *= idx[static_cast<std::size_t>(a)].size();
  }
  OccupiedCells out;
  out.reps = PointSet(n);
  if (total == 0) return out;
  out.keys.reserve(total);
  out.reps.reserve(total);
  const std::int64_t p = spec.per_axis(k);
  std::vector<std::size_t> j(static_cast<std::size_t>(n), 0);
  Point pt(n);
  for (;;) {
    std::uint64_t key = 0;
    for (int a = 0; a < n; ++a) {
      const std::size_t ja = j[static_cast<std::size_t>(a)];
      key = key * static_cast<std::uint64_t>(p) + static_cast<std::uint64_t>(idx[static_cast<std::size_t>(a)][ja] + p / 2);
      pt[a] = rep[static_cast<std::size_t>(a)][ja];
    }
    out.keys.push_back(key);
    out.reps.push_back(pt);
    int a = n - 1;
    while (a >= 0 && ++j[static_cast<std::size_t>(a)] >= idx[static_cast<std::size_t>(a)].size()) {
      j[static_cast<std::size_t>(a)] = 0;
      --a;
    }
    if (a < 0) break;
  }
  return out;
}

Point GridCloud::first() const {
  Point p(dim());
  for (int a = 0; a < dim(); ++a) {
    if (coords_[static_cast<std::size_t>(a)].empty()) throw InvalidArgument("empty point cloud");
    p[a] = coords_[static_cast<std::size_t>(a)].front();
  }
  return p;
}

bool GridCloud::has_point(const Point& p) const {
  for (int a = 0; a < dim(); ++a) {
    const auto& c = coords_[static_cast<std::size_t>(a)];
    if (!std::binary_search(c.begin(), c.end(), p[a])) return false;
  }
  return true;
}

Point GridCloud::nearest(const Point& x) const {
  require_dim(x, dim());
  Point p(dim());
  for (int a = 0; a < dim(); ++a) {
    const auto& c = coords_[static_cast<std::size_t>(a)];
    if (c.empty()) throw InvalidArgument("empty point cloud");
    auto it = std::lower_bound(c.begin(), c.end(), x[a]);
    if (it == c.end()) {
      p[a] = c.back();
    } else if (it == c.begin()) {
      p[a] = c.front();
    } else {
      p[a] = x[a] - *(it - 1) <= *it - x[a] ? *(it - 1) : *it;
    }
  }
  return p;
}

LambdaDistribution lambda_distribution(const PointCloud& cloud, const LatticeSpec& spec) {
  spec.validate();
  if (cloud.dim() != spec.n) throw DimensionMismatch(spec.n, cloud.dim());
  if (cloud.size() == 0) throw InvalidArgument("lambda distribution of an empty cloud");
  LambdaDistribution d;
  d.spec = spec;
  d.points = PointSet(spec.n);
  for (int k = 1; k <= spec.K; ++k) {
    const OccupiedCells occ = cloud.occupied(k, spec);
    auto have = keys_of(d.points, d.points.size(), k, spec);
    std::sort(have.begin(), have.end());
    for (std::size_t i = 0; i < occ.keys.size(); ++i) {
      if (std::binary_search(have.begin(), have.end(), occ.keys[i])) continue;
      d.points.push_back(occ.reps[i]);
      d.first_level.push_back(k);
    }
    d.counts.push_back(d.points.size());
  }
  return d;
}

bool verify_exactly_one(const LambdaDistribution& d, const PointCloud& cloud, std::string* why) {
  const auto fail = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  for (std::size_t j = 0; j < d.points.size(); ++j)
    if (!cloud.has_point(d.points[j])) return fail("P_" + std::to_string(j + 1) + " is not a cloud point");
  for (int k = 1; k <= d.spec.K; ++k) {
    const std::size_t nk = d.counts[static_cast<std::size_t>(k - 1)];
    if (k > 1 && nk < d.counts[static_cast<std::size_t>(k - 2)]) return fail("N_k decreases at level " + std::to_string(k));
    const OccupiedCells occ = cloud.occupied(k, d.spec);
    auto have = keys_of(d.points, nk, k, d.spec);
    std::sort(have.begin(), have.end());
    for (std::size_t i = 1; i < have.size(); ++i)
      if (have[i] == have[i - 1])
        return fail("level " + std::to_string(k) + ": two points share cell key " + std::to_string(have[i]));
    if (have != occ.keys) {
      return fail("level " + std::to_string(k) + ": " + std::to_string(have.size()) + " represented cells vs " +
                  std::to_string(occ.keys.size()) + " occupied cells");
    }
  }
  return true;
}

int resolution_cap(const LatticeSpec& spec, double resolution) {
  int k = 0;
  double w = 1.0;
  while (k < 62) {
    w /= spec.beta;
    if (!(w > 2.0 * resolution)) break;
    ++k;
  }
  return k;
}

void write_distribution_csv(std::ostream& os, const LambdaDistribution& d) {
  os << "j,point,first_level\n";
  for (std::size_t j = 0; j < d.points.size(); ++j)
    os << j + 1 << ',' << fmt(d.points[j]) << ',' << d.first_level[j] << '\n';
}

}  // namespace superdensity
