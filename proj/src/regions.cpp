#include "superdensity/regions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "superdensity/chart.hpp"

namespace superdensity {
namespace {

constexpr std::size_t kMaxGridCellsPerQuery = 4096;
constexpr std::size_t kExactEnumerationLimit = 64;

Box cell_box(const kernels::CellBatch& cells, std::size_t i) {
  Box b{Point(cells.dim), Point(cells.dim)};
  for (int a = 0; a < cells.dim; ++a) {
    b.lo[a] = cells.lo[a][i];
    b.hi[a] = cells.lo[a][i] + cells.size[a];
  }
  return b;
}

// Single-cell batch view over a Box; storage lives in the caller.
struct OneCell {
  double lo[kMaxDim];
  kernels::CellBatch batch;
  explicit OneCell(const Box& b) {
    batch.dim = b.dim();
    batch.count = 1;
    for (int a = 0; a < b.dim(); ++a) {
      lo[a] = b.lo[a];
      batch.lo[a] = &lo[a];
      batch.size[a] = b.side(a);
    }
  }
};

int common_dim(const std::vector<Region>& parts) {
  if (parts.empty()) throw InvalidArgument("boolean region needs at least one part");
  const int d = parts.front()->dim();
  for (const auto& p : parts)
    if (p->dim() != d) throw DimensionMismatch(d, p->dim());
  return d;
}

}  // namespace

bool RegionNode::contains_ball(const Point& c, double r) const {
  const Cover cv = cover_box(*this, Box::around(c, r));
  return cv.certified && cv.lo >= 1.0;
}

bool contains(const Region& region, const Point& x) {
  require_dim(x, region->dim());
  return region->contains(x);
}

Cover cover_box(const RegionNode& region, const Box& box) {
  require_dim(box.lo, region.dim());
  OneCell one(box);
  Cover c;
  region.cover(one.batch, &c);
  return c;
}

Cover cover_union(const Cover* parts, std::size_t k) {
  Cover out{0.0, 0.0, 0.0, false, true};
  double miss = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    const Cover& c = parts[i];
    out.lo = std::max(out.lo, c.lo);
    out.hi += c.hi;
    miss *= 1.0 - c.est;
    out.certified = out.certified && c.certified;
    if (c.hi > c.lo && c.refinable) out.refinable = true;
  }
  out.hi = std::min(1.0, out.hi);
  out.est = std::clamp(1.0 - miss, out.lo, out.hi);
  if (out.lo >= out.hi) out.refinable = false;
  return out;
}

Cover cover_intersection(const Cover* parts, std::size_t k) {
  Cover out{0.0, 1.0, 1.0, false, true};
  double lo_sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const Cover& c = parts[i];
    lo_sum += c.lo;
    out.hi = std::min(out.hi, c.hi);
    out.est *= c.est;
    out.certified = out.certified && c.certified;
    if (c.hi > c.lo && c.refinable) out.refinable = true;
  }
  out.lo = std::max(0.0, lo_sum - static_cast<double>(k - 1));
  out.est = std::clamp(out.est, out.lo, out.hi);
  if (out.lo >= out.hi) out.refinable = false;
  return out;
}

// ---- primitives -------------------------------------------------------------

HalfSpaceRegion::HalfSpaceRegion(Point normal, double offset) : normal_(std::move(normal)), offset_(offset) {
  const double len = norm(normal_);
  if (!(len > 0.0) || !std::isfinite(len)) throw InvalidArgument("half-space normal must be nonzero");
  normal_ *= 1.0 / len;
  offset_ /= len;
}

void HalfSpaceRegion::cover(const kernels::CellBatch& cells, Cover* out) const {
  for (std::size_t i = 0; i < cells.count; ++i) {
    double lo = 0.0, hi = 0.0, mid = 0.0;
    for (int a = 0; a < cells.dim; ++a) {
      const double v0 = normal_[a] * cells.lo[a][i];
      const double v1 = normal_[a] * (cells.lo[a][i] + cells.size[a]);
      lo += std::min(v0, v1);
      hi += std::max(v0, v1);
      mid += 0.5 * (v0 + v1);
    }
    if (hi < offset_)
      out[i] = Cover::exact(1.0);
    else if (lo >= offset_)
      out[i] = Cover::exact(0.0);
    else
      out[i] = Cover::unknown(mid < offset_ ? 1.0 : 0.0);
  }
}

BallRegion::BallRegion(Point center, double radius) : center_(std::move(center)), radius_(radius), r2_(radius * radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidArgument("ball radius must be positive");
}

void BallRegion::cover(const kernels::CellBatch& cells, Cover* out) const {
  std::vector<std::uint8_t> state(cells.count);
  kernels::classify_cells_ball(cells, center_.data(), r2_, state.data());
  for (std::size_t i = 0; i < cells.count; ++i) {
    if (state[i] == kernels::kInside) {
      out[i] = Cover::exact(1.0);
    } else if (state[i] == kernels::kOutside) {
      out[i] = Cover::exact(0.0);
    } else {
      double d2 = 0.0;
      for (int a = 0; a < cells.dim; ++a) {
        const double d = cells.lo[a][i] + 0.5 * cells.size[a] - center_[a];
        d2 += d * d;
      }
      out[i] = Cover::unknown(d2 < r2_ ? 1.0 : 0.0);
    }
  }
}

BoxRegion::BoxRegion(Point lo, Point hi) : box_{std::move(lo), std::move(hi)} {
  if (box_.lo.dim() != box_.hi.dim()) throw DimensionMismatch(box_.lo.dim(), box_.hi.dim());
  for (int a = 0; a < box_.dim(); ++a)
    if (!(box_.lo[a] <= box_.hi[a])) throw InvalidArgument("box requires lo <= hi componentwise");
}

bool BoxRegion::contains(const Point& x) const {
  for (int a = 0; a < box_.dim(); ++a)
    if (!(x[a] > box_.lo[a] && x[a] < box_.hi[a])) return false;
  return true;
}

bool BoxRegion::contains_ball(const Point& c, double r) const {
  for (int a = 0; a < box_.dim(); ++a)
    if (!(c[a] - r >= box_.lo[a] && c[a] + r <= box_.hi[a])) return false;
  return true;
}

void BoxRegion::cover(const kernels::CellBatch& cells, Cover* out) const {
  for (std::size_t i = 0; i < cells.count; ++i) {
    double f = 1.0;
    for (int a = 0; a < cells.dim && f > 0.0; ++a) {
      const double lo = cells.lo[a][i];
      const double s = cells.size[a];
      const double overlap = std::min(lo + s, box_.hi[a]) - std::max(lo, box_.lo[a]);
      f *= overlap <= 0.0 ? 0.0 : std::min(1.0, overlap / s);
    }
    out[i] = Cover::exact(f, f > 0.0 && f < 1.0);
  }
}

// ---- ball union index -------------------------------------------------------

BallUnionIndex::BallUnionIndex(int dim, std::vector<Ball> balls) : dim_(dim), total_(balls.size()) {
  if (dim < 1 || dim > kMaxDim) throw InvalidArgument("ball union dimension out of range");
  for (const auto& b : balls) {
    require_dim(b.center, dim);
    if (!(b.radius > 0.0) || !std::isfinite(b.radius)) throw InvalidArgument("ball radius must be positive");
  }
  std::stable_sort(balls.begin(), balls.end(), [](const Ball& a, const Ball& b) { return a.cls < b.cls; });
  std::size_t start = 0;
  while (start < balls.size()) {
    std::size_t end = start;
    while (end < balls.size() && balls[end].cls == balls[start].cls) ++end;
    Class cl;
    cl.label = balls[start].cls;
    cl.count = end - start;
    if (cl.count > std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("too many balls in one class");

    std::vector<double> radii;
    radii.reserve(cl.count);
    Box bb{balls[start].center, balls[start].center};
    for (std::size_t i = start; i < end; ++i) {
      radii.push_back(balls[i].radius);
      cl.max_r = std::max(cl.max_r, balls[i].radius);
      for (int a = 0; a < dim; ++a) {
        bb.lo[a] = std::min(bb.lo[a], balls[i].center[a]);
        bb.hi[a] = std::max(bb.hi[a], balls[i].center[a]);
      }
    }
    std::nth_element(radii.begin(), radii.begin() + radii.size() / 2, radii.end());
    const double median = radii[radii.size() / 2];
    double vol = 1.0;
    for (int a = 0; a < dim; ++a) vol *= std::max(bb.side(a), 2.0 * median);
    const double spacing = std::pow(vol / static_cast<double>(cl.count), 1.0 / dim);
    cl.h = std::max(2.0 * median, spacing);

    // Grow h until the packed key fits in 64 bits.
    for (;;) {
      cl.origin = Point(dim);
      long double cells = 1.0L;
      for (int a = 0; a < dim; ++a) {
        cl.origin[a] = bb.lo[a] - cl.max_r - cl.h;
        cl.extent[a] = static_cast<std::int64_t>(std::floor((bb.hi[a] + cl.max_r - cl.origin[a]) / cl.h)) + 2;
        cells *= static_cast<long double>(cl.extent[a]);
      }
      if (cells < 1.0e18L) break;
      cl.h *= 2.0;
    }

    const double unit = unit_ball_volume(dim);
    for (int a = 0; a < dim; ++a) cl.c[a].resize(cl.count);
    cl.r.resize(cl.count);
    cl.r2.resize(cl.count);
    for (std::size_t i = 0; i < cl.count; ++i) {
      const Ball& b = balls[start + i];
      for (int a = 0; a < dim; ++a) cl.c[a][i] = b.center[a];
      cl.r[i] = b.radius;
      cl.r2[i] = b.radius * b.radius;
      cl.ball_volume_sum += unit * std::pow(b.radius, dim);
    }

    // Register each ball in every grid cell its bounding box meets.
    std::vector<std::pair<std::uint64_t, std::uint32_t>> pairs;
    pairs.reserve(cl.count);
    std::int64_t lo[kMaxDim], hi[kMaxDim], idx[kMaxDim];
    for (std::size_t i = 0; i < cl.count; ++i) {
      for (int a = 0; a < dim; ++a) {
        lo[a] = cell_coord(cl, a, cl.c[a][i] - cl.r[i]);
        hi[a] = cell_coord(cl, a, cl.c[a][i] + cl.r[i]);
        idx[a] = lo[a];
      }
      for (;;) {
        pairs.emplace_back(key_of(cl, idx), static_cast<std::uint32_t>(i));
        int a = dim - 1;
        while (a >= 0 && ++idx[a] > hi[a]) {
          idx[a] = lo[a];
          --a;
        }
        if (a < 0) break;
      }
    }
    std::sort(pairs.begin(), pairs.end());
    for (int a = 0; a < dim; ++a) cl.ec[a].resize(pairs.size());
    cl.er.resize(pairs.size());
    cl.er2.resize(pairs.size());
    cl.ids.resize(pairs.size());
    for (std::size_t e = 0; e < pairs.size(); ++e) {
      const std::uint32_t id = pairs[e].second;
      if (cl.keys.empty() || cl.keys.back() != pairs[e].first) {
        cl.keys.push_back(pairs[e].first);
        cl.offsets.push_back(static_cast<std::uint32_t>(e));
      }
      cl.ids[e] = id;
      for (int a = 0; a < dim; ++a) cl.ec[a][e] = cl.c[a][id];
      cl.er[e] = cl.r[id];
      cl.er2[e] = cl.r2[id];
    }
    cl.offsets.push_back(static_cast<std::uint32_t>(pairs.size()));

    // Two overlapping balls share at least one registered cell.
    for (std::size_t g = 0; g + 1 < cl.offsets.size() && cl.disjoint; ++g) {
      for (std::uint32_t e = cl.offsets[g]; e < cl.offsets[g + 1] && cl.disjoint; ++e)
        for (std::uint32_t f = e + 1; f < cl.offsets[g + 1]; ++f) {
          double d2 = 0.0;
          for (int a = 0; a < dim; ++a) {
            const double d = cl.ec[a][e] - cl.ec[a][f];
            d2 += d * d;
          }
          const double rs = cl.er[e] + cl.er[f];
          if (d2 < rs * rs) {
            cl.disjoint = false;
            break;
          }
        }
    }
    classes_.push_back(std::move(cl));
    start = end;
  }
}

BallUnionIndex BallUnionIndex::from_balls(int dim, const std::vector<std::pair<Point, double>>& balls) {
  std::vector<double> radii;
  for (const auto& b : balls) radii.push_back(b.second);
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  std::vector<Ball> out;
  out.reserve(balls.size());
  for (const auto& b : balls) {
    // Classes by binary order of magnitude keep grids well matched to radii.
    int e = 0;
    std::frexp(b.second, &e);
    out.push_back({b.first, b.second, e});
  }
  return BallUnionIndex(dim, std::move(out));
}

std::int64_t BallUnionIndex::cell_coord(const Class& cl, int axis, double x) const {
  const double t = std::floor((x - cl.origin[axis]) / cl.h);
  if (t < 0.0) return 0;
  if (t >= static_cast<double>(cl.extent[axis])) return cl.extent[axis] - 1;
  return static_cast<std::int64_t>(t);
}

std::uint64_t BallUnionIndex::key_of(const Class& cl, const std::int64_t* idx) const {
  std::uint64_t k = 0;
  for (int a = 0; a < dim_; ++a) k = k * static_cast<std::uint64_t>(cl.extent[a]) + static_cast<std::uint64_t>(idx[a]);
  return k;
}

kernels::BallSpan BallUnionIndex::entries(const Class& cl, std::size_t pos) const {
  kernels::BallSpan s;
  s.dim = dim_;
  const std::size_t b = cl.offsets[pos];
  s.count = cl.offsets[pos + 1] - b;
  for (int a = 0; a < dim_; ++a) s.c[a] = cl.ec[a].data() + b;
  s.r = cl.er.data() + b;
  s.r2 = cl.er2.data() + b;
  return s;
}

bool BallUnionIndex::query(const Point& x, int max_label) const {
  require_dim(x, dim_);
  for (const Class& cl : classes_) {
    if (cl.label > max_label) continue;
    std::int64_t idx[kMaxDim];
    bool in_grid = true;
    for (int a = 0; a < dim_; ++a) {
      const double t = std::floor((x[a] - cl.origin[a]) / cl.h);
      if (t < 0.0 || t >= static_cast<double>(cl.extent[a])) {
        in_grid = false;
        break;
      }
      idx[a] = static_cast<std::int64_t>(t);
    }
    if (!in_grid) continue;
    const std::uint64_t key = key_of(cl, idx);
    auto it = std::lower_bound(cl.keys.begin(), cl.keys.end(), key);
    if (it == cl.keys.end() || *it != key) continue;
    if (kernels::any_ball_contains(entries(cl, static_cast<std::size_t>(it - cl.keys.begin())), x.data()))
      return true;
  }
  return false;
}

bool BallUnionIndex::query_linear(const Point& x, int max_label) const {
  require_dim(x, dim_);
  for (const Class& cl : classes_) {
    if (cl.label > max_label) continue;
    for (std::size_t i = 0; i < cl.count; ++i) {
      double d2 = 0.0;
      for (int a = 0; a < dim_; ++a) {
        const double d = x[a] - cl.c[a][i];
        d2 += d * d;
      }
      if (d2 < cl.r2[i]) return true;
    }
  }
  return false;
}

bool BallUnionIndex::registered_in(int cls_index, std::size_t ball, const Point& probe) const {
  const Class& cl = classes_[static_cast<std::size_t>(cls_index)];
  std::int64_t idx[kMaxDim];
  for (int a = 0; a < dim_; ++a) idx[a] = cell_coord(cl, a, probe[a]);
  const std::uint64_t key = key_of(cl, idx);
  auto it = std::lower_bound(cl.keys.begin(), cl.keys.end(), key);
  if (it == cl.keys.end() || *it != key) return false;
  const std::size_t pos = static_cast<std::size_t>(it - cl.keys.begin());
  for (std::uint32_t e = cl.offsets[pos]; e < cl.offsets[pos + 1]; ++e)
    if (cl.ids[e] == ball) return true;
  return false;
}

Point BallUnionIndex::ball_center(int cls_index, std::size_t ball) const {
  const Class& cl = classes_[static_cast<std::size_t>(cls_index)];
  Point p(dim_);
  for (int a = 0; a < dim_; ++a) p[a] = cl.c[a][ball];
  return p;
}

Cover BallUnionIndex::cover(const Box& box, int max_label) const {
  const double vol = box.volume();
  const double unit = unit_ball_volume(dim_);
  const double max_side = box.max_side();
  std::vector<Cover> per_class;
  std::vector<std::uint8_t> flags;
  bool full = false;
  for (const Class& cl : classes_) {
    if (cl.label > max_label) continue;
    std::int64_t lo[kMaxDim], hi[kMaxDim];
    std::size_t ncells = 1;
    bool outside = false;
    for (int a = 0; a < dim_; ++a) {
      const double l = std::floor((box.lo[a] - cl.origin[a]) / cl.h);
      const double h = std::floor((box.hi[a] - cl.origin[a]) / cl.h);
      if (h < 0.0 || l >= static_cast<double>(cl.extent[a])) {
        outside = true;
        break;
      }
      lo[a] = std::max<std::int64_t>(0, static_cast<std::int64_t>(l));
      hi[a] = std::min<std::int64_t>(cl.extent[a] - 1, static_cast<std::int64_t>(h));
      const double span = static_cast<double>(hi[a] - lo[a] + 1);
      ncells = static_cast<double>(ncells) * span > 1e18 ? static_cast<std::size_t>(-1) : ncells * static_cast<std::size_t>(span);
    }
    if (outside) continue;
    if (ncells > kMaxGridCellsPerQuery) {
      per_class.push_back(Cover{0.0, 1.0, std::min(1.0, cl.ball_volume_sum / vol), true, true});
      continue;
    }
    double in_vol = 0.0, in_max = 0.0, touch_vol = 0.0, est_vol = 0.0;
    bool refine = false;
    // Walk rows along the last axis; keys in a row are contiguous.
    std::int64_t idx[kMaxDim];
    for (int a = 0; a < dim_; ++a) idx[a] = lo[a];
    const int last = dim_ - 1;
    for (;;) {
      idx[last] = lo[last];
      const std::uint64_t k0 = key_of(cl, idx);
      const std::uint64_t k1 = k0 + static_cast<std::uint64_t>(hi[last] - lo[last]);
      auto it = std::lower_bound(cl.keys.begin(), cl.keys.end(), k0);
      for (; it != cl.keys.end() && *it <= k1; ++it) {
        const std::size_t pos = static_cast<std::size_t>(it - cl.keys.begin());
        const std::int64_t cur_last = lo[last] + static_cast<std::int64_t>(*it - k0);
        const kernels::BallSpan span = entries(cl, pos);
        flags.resize(span.count);
        kernels::ball_box_relation(span, box.lo.data(), box.hi.data(), flags.data());
        for (std::size_t e = 0; e < span.count; ++e) {
          if (!(flags[e] & kernels::kTouch)) continue;
          // Count a ball once: in the first queried cell it is registered in.
          bool first = true;
          for (int a = 0; a < dim_ && first; ++a) {
            const std::int64_t own = cell_coord(cl, a, span.c[a][e] - span.r[e]);
            const std::int64_t here = a == last ? cur_last : idx[a];
            first = std::max(own, lo[a]) == here;
          }
          if (!first) continue;
          const double bv = unit * std::pow(span.r[e], dim_);
          if (flags[e] & kernels::kBoxInBall) full = true;
          touch_vol += bv;
          if (flags[e] & kernels::kBallInBox) {
            in_vol += bv;
            in_max = std::max(in_max, bv);
          } else if (span.r[e] * 8.0 >= max_side) {
            refine = true;
          }
          bool center_in = true;
          for (int a = 0; a < dim_; ++a) center_in = center_in && span.c[a][e] >= box.lo[a] && span.c[a][e] < box.hi[a];
          if (center_in) est_vol += bv;
        }
      }
      int a = last - 1;
      while (a >= 0 && ++idx[a] > hi[a]) {
        idx[a] = lo[a];
        --a;
      }
      if (a < 0) break;
    }
    Cover c;
    c.lo = std::min(1.0, (cl.disjoint ? in_vol : in_max) / vol);
    c.hi = std::min(1.0, touch_vol / vol);
    c.est = std::clamp(est_vol / vol, c.lo, c.hi);
    c.refinable = refine && c.hi > c.lo;
    per_class.push_back(c);
  }
  if (full) return Cover::exact(1.0);
  if (per_class.empty()) return Cover::exact(0.0);
  return cover_union(per_class.data(), per_class.size());
}

void BallUnionRegion::cover(const kernels::CellBatch& cells, Cover* out) const {
  for (std::size_t i = 0; i < cells.count; ++i) out[i] = index_->cover(cell_box(cells, i), max_label_);
}

// ---- product ball union -----------------------------------------------------

std::size_t ProductBallLevel::count() const {
  std::size_t c = 1;
  for (const auto& a : axis) c *= a.size();
  return axis.empty() ? 0 : c;
}

ProductBallUnion::ProductBallUnion(int dim, std::vector<ProductBallLevel> levels, int max_label)
    : ProductBallUnion(dim, std::make_shared<const std::vector<ProductBallLevel>>(std::move(levels)), max_label) {}

ProductBallUnion::ProductBallUnion(int dim, std::shared_ptr<const std::vector<ProductBallLevel>> levels, int max_label)
    : dim_(dim), levels_(std::move(levels)), max_label_(max_label) {
  for (const auto& lv : *levels_) {
    if (static_cast<int>(lv.axis.size()) != dim) throw DimensionMismatch(dim, static_cast<int>(lv.axis.size()));
    if (!(lv.radius > 0.0)) throw InvalidArgument("product ball radius must be positive");
    for (const auto& ax : lv.axis)
      if (!std::is_sorted(ax.begin(), ax.end())) throw InvalidArgument("product ball axis must be sorted");
  }
}

bool ProductBallUnion::contains(const Point& x) const {
  for (const auto& lv : *levels_) {
    if (lv.label > max_label_) continue;
    const double r = lv.radius;
    std::size_t b[kMaxDim], e[kMaxDim], idx[kMaxDim];
    bool any = true;
    for (int a = 0; a < dim_ && any; ++a) {
      const auto& ax = lv.axis[a];
      b[a] = static_cast<std::size_t>(std::upper_bound(ax.begin(), ax.end(), x[a] - r) - ax.begin());
      e[a] = static_cast<std::size_t>(std::lower_bound(ax.begin(), ax.end(), x[a] + r) - ax.begin());
      any = b[a] < e[a];
      idx[a] = b[a];
    }
    if (!any) continue;
    for (;;) {
      double d2 = 0.0;
      for (int a = 0; a < dim_; ++a) {
        const double d = x[a] - lv.axis[a][idx[a]];
        d2 += d * d;
      }
      if (d2 < r * r) return true;
      int a = dim_ - 1;
      while (a >= 0 && ++idx[a] >= e[a]) {
        idx[a] = b[a];
        --a;
      }
      if (a < 0) break;
    }
  }
  return false;
}

Cover ProductBallUnion::cover_one(const Box& box) const {
  const double vol = box.volume();
  const double unit = unit_ball_volume(dim_);
  const double max_side = box.max_side();
  std::vector<Cover> parts;
  for (const auto& lv : *levels_) {
    if (lv.label > max_label_) continue;
    const double r = lv.radius;
    const double bv = unit * std::pow(r, dim_);
    double n_in = 1.0, n_touch = 1.0, n_center = 1.0;
    std::size_t tb[kMaxDim], te[kMaxDim];
    double min_gap = std::numeric_limits<double>::infinity();
    for (int a = 0; a < dim_; ++a) {
      const auto& ax = lv.axis[a];
      const auto cnt = [&](double l, double h, bool closed_hi) {
        auto i0 = std::lower_bound(ax.begin(), ax.end(), l);
        auto i1 = closed_hi ? std::upper_bound(ax.begin(), ax.end(), h) : std::lower_bound(ax.begin(), ax.end(), h);
        return i1 > i0 ? static_cast<double>(i1 - i0) : 0.0;
      };
      n_in *= box.hi[a] - box.lo[a] >= 2.0 * r ? cnt(box.lo[a] + r, box.hi[a] - r, true) : 0.0;
      n_center *= cnt(box.lo[a], box.hi[a], false);
      tb[a] = static_cast<std::size_t>(std::upper_bound(ax.begin(), ax.end(), box.lo[a] - r) - ax.begin());
      te[a] = static_cast<std::size_t>(std::lower_bound(ax.begin(), ax.end(), box.hi[a] + r) - ax.begin());
      n_touch *= te[a] > tb[a] ? static_cast<double>(te[a] - tb[a]) : 0.0;
      if (ax.size() > 1) {
        for (std::size_t j = tb[a] > 0 ? tb[a] - 1 : 0; j + 1 < ax.size() && j <= te[a]; ++j)
          min_gap = std::min(min_gap, ax[j + 1] - ax[j]);
      }
    }
    if (n_touch == 0.0) continue;
    const bool disjoint = min_gap >= 2.0 * r;
    if (n_touch <= static_cast<double>(kExactEnumerationLimit)) {
      double in_vol = 0.0, touch_vol = 0.0, est_vol = 0.0;
      bool refine = false;
      std::size_t idx[kMaxDim];
      for (int a = 0; a < dim_; ++a) idx[a] = tb[a];
      for (;;) {
        double near = 0.0, far = 0.0;
        bool inside = true, center_in = true;
        for (int a = 0; a < dim_; ++a) {
          const double c = lv.axis[a][idx[a]];
          const double dl = c - box.lo[a], dh = box.hi[a] - c;
          const double dn = std::max(0.0, std::max(-dl, -dh));
          const double df = std::max(std::abs(dl), std::abs(dh));
          near += dn * dn;
          far += df * df;
          inside = inside && c - r >= box.lo[a] && c + r <= box.hi[a];
          center_in = center_in && c >= box.lo[a] && c < box.hi[a];
        }
        if (far < r * r) return Cover::exact(1.0);
        if (near < r * r) {
          touch_vol += bv;
          if (inside)
            in_vol += bv;
          else if (r * 8.0 >= max_side)
            refine = true;
          if (center_in) est_vol += bv;
        }
        int a = dim_ - 1;
        while (a >= 0 && ++idx[a] >= te[a]) {
          idx[a] = tb[a];
          --a;
        }
        if (a < 0) break;
      }
      Cover c;
      c.lo = std::min(1.0, (disjoint ? in_vol : (in_vol > 0.0 ? bv : 0.0)) / vol);
      c.hi = std::min(1.0, touch_vol / vol);
      c.est = std::clamp(est_vol / vol, c.lo, c.hi);
      c.refinable = refine && c.hi > c.lo;
      parts.push_back(c);
    } else {
      Cover c;
      c.lo = std::min(1.0, (disjoint ? n_in * bv : (n_in > 0.0 ? bv : 0.0)) / vol);
      c.hi = std::min(1.0, n_touch * bv / vol);
      c.est = std::clamp(n_center * bv / vol, c.lo, c.hi);
      c.refinable = r * 8.0 >= max_side && c.hi > c.lo;
      parts.push_back(c);
    }
  }
  if (parts.empty()) return Cover::exact(0.0);
  return cover_union(parts.data(), parts.size());
}

void ProductBallUnion::cover(const kernels::CellBatch& cells, Cover* out) const {
  for (std::size_t i = 0; i < cells.count; ++i) out[i] = cover_one(cell_box(cells, i));
}

// ---- predicates ---------------------------------------------------------------

PredicateRegion::PredicateRegion(PredicateSpec spec) : spec_(std::move(spec)) {
  if (!spec_.member) throw InvalidArgument("predicate '" + spec_.name + "' has no membership callback");
}

void PredicateRegion::cover(const kernels::CellBatch& cells, Cover* out) const {
  for (std::size_t i = 0; i < cells.count; ++i) {
    const Box b = cell_box(cells, i);
    if (spec_.exact_cover) {
      const double f = std::clamp(spec_.exact_cover(b), 0.0, 1.0);
      out[i] = Cover::exact(f, f > 0.0 && f < 1.0);
      continue;
    }
    if (spec_.interval_cover) {
      out[i] = spec_.interval_cover(b);
      continue;
    }
    const bool mid = spec_.member(b.center());
    bool same = true;
    Point corner(b.dim());
    for (unsigned m = 0; m < (1u << b.dim()) && same; ++m) {
      for (int a = 0; a < b.dim(); ++a) corner[a] = (m >> a & 1u) ? b.hi[a] : b.lo[a];
      same = spec_.member(corner) == mid;
    }
    if (same)
      out[i] = Cover{mid ? 1.0 : 0.0, mid ? 1.0 : 0.0, mid ? 1.0 : 0.0, false, false};
    else
      out[i] = Cover{0.0, 1.0, mid ? 1.0 : 0.0, true, false};
  }
}

double cusp_area(double alpha, double a0, double a1, double b0, double b1) {
  const double A = std::max(a0, 0.0);
  const double B = a1;
  if (!(B > A)) return 0.0;
  const double c0 = std::max(b0, 0.0);
  const double d = b1;
  if (!(d > c0)) return 0.0;
  const double t1 = std::pow(c0, 1.0 / alpha);
  const double t2 = std::pow(d, 1.0 / alpha);
  double area = 0.0;
  const double l = std::max(A, t1), u = std::min(B, t2);
  if (u > l) area += (std::pow(u, alpha + 1.0) - std::pow(l, alpha + 1.0)) / (alpha + 1.0) - c0 * (u - l);
  const double l3 = std::max(A, t2);
  if (B > l3) area += (d - c0) * (B - l3);
  return std::max(0.0, area);
}

PredicateSpec builtin_predicate(const std::string& name, int dim, const std::vector<double>& params) {
  if (dim < 2) throw InvalidArgument("predicate '" + name + "' needs dimension >= 2");
  PredicateSpec s;
  s.name = name;
  s.dim = dim;
  s.params = params;
  if (name == "cusp") {
    if (params.size() != 1 || !(params[0] > 0.0)) throw InvalidArgument("cusp needs one positive parameter alpha");
    const double alpha = params[0];
    s.member = [alpha](const Point& x) { return x[0] >= 0.0 && x[1] >= 0.0 && x[1] <= std::pow(x[0], alpha); };
    s.exact_cover = [alpha](const Box& b) {
      const double cell = b.side(0) * b.side(1);
      return cell > 0.0 ? cusp_area(alpha, b.lo[0], b.hi[0], b.lo[1], b.hi[1]) / cell : 0.0;
    };
    return s;
  }
  if (name == "parabola_band") {
    if (!params.empty()) throw InvalidArgument("parabola_band takes no parameters");
    s.member = [](const Point& x) {
      const double a = x[0];
      return a >= 0.0 && std::abs(x[1] - a * a) <= a * a * a * a;
    };
    s.interval_cover = [](const Box& b) {
      const bool mid = [&] {
        const double a = 0.5 * (b.lo[0] + b.hi[0]), v = 0.5 * (b.lo[1] + b.hi[1]);
        return a >= 0.0 && std::abs(v - a * a) <= a * a * a * a;
      }();
      if (b.hi[0] < 0.0) return Cover::exact(0.0);
      const double a0 = std::max(b.lo[0], 0.0), a1 = b.hi[0];
      const double gl = b.lo[1] - a1 * a1, gh = b.hi[1] - a0 * a0;
      const double ql = a0 * a0 * a0 * a0, qh = a1 * a1 * a1 * a1;
      if (b.lo[0] >= 0.0 && gh <= ql && gl >= -ql) return Cover::exact(1.0);
      if (gl > qh || gh < -qh) return Cover::exact(0.0);
      return Cover::unknown(mid ? 1.0 : 0.0);
    };
    return s;
  }
  throw InvalidArgument("unknown predicate '" + name + "'");
}

std::vector<std::string> builtin_predicate_names() { return {"cusp", "parabola_band"}; }

// ---- pullback -----------------------------------------------------------------

PullbackRegion::PullbackRegion(std::shared_ptr<const SurfaceChart> chart, Region ambient)
    : chart_(std::move(chart)), ambient_(std::move(ambient)) {
  if (ambient_->dim() != chart_->n) throw DimensionMismatch(chart_->n, ambient_->dim());
}

int PullbackRegion::dim() const { return chart_->k; }

bool PullbackRegion::contains(const Point& y) const { return ambient_->contains(chart_->eval(y)); }

void PullbackRegion::cover(const kernels::CellBatch& cells, Cover* out) const {
  const int n = chart_->n;
  double half = 0.0;
  for (int a = 0; a < cells.dim; ++a) half += 0.25 * cells.size[a] * cells.size[a];
  half = chart_->lipschitz * std::sqrt(half);
  std::vector<double> lo[kMaxDim];
  std::vector<Point> images(cells.count);
  for (int a = 0; a < n; ++a) lo[a].resize(cells.count);
  Point c(cells.dim);
  for (std::size_t i = 0; i < cells.count; ++i) {
    for (int a = 0; a < cells.dim; ++a) c[a] = cells.lo[a][i] + 0.5 * cells.size[a];
    images[i] = chart_->eval(c);
    for (int a = 0; a < n; ++a) lo[a][i] = images[i][a] - half;
  }
  kernels::CellBatch img;
  img.dim = n;
  img.count = cells.count;
  for (int a = 0; a < n; ++a) {
    img.lo[a] = lo[a].data();
    img.size[a] = 2.0 * half;
  }
  std::vector<Cover> amb(cells.count);
  ambient_->cover(img, amb.data());
  for (std::size_t i = 0; i < cells.count; ++i) {
    const bool mid = ambient_->contains(images[i]);
    if (amb[i].lo >= 1.0)
      out[i] = Cover{1.0, 1.0, 1.0, false, amb[i].certified};
    else if (amb[i].hi <= 0.0)
      out[i] = Cover{0.0, 0.0, 0.0, false, amb[i].certified};
    else
      out[i] = Cover{0.0, 1.0, mid ? 1.0 : 0.0, true, amb[i].certified};
  }
}

// ---- boolean combinators ----------------------------------------------------------

UnionRegion::UnionRegion(std::vector<Region> parts, int dim) : parts_(std::move(parts)) {
  dim_ = parts_.empty() ? dim : common_dim(parts_);
  if (dim_ < 1) throw InvalidArgument("empty union needs a dimension");
  if (dim >= 0 && dim != dim_) throw DimensionMismatch(dim, dim_);
}

bool UnionRegion::contains(const Point& x) const {
  for (const auto& p : parts_)
    if (p->contains(x)) return true;
  return false;
}

bool UnionRegion::contains_ball(const Point& c, double r) const {
  for (const auto& p : parts_)
    if (p->contains_ball(c, r)) return true;
  return RegionNode::contains_ball(c, r);
}

std::optional<Box> UnionRegion::bounds() const {
  std::optional<Box> out;
  for (const auto& p : parts_) {
    auto b = p->bounds();
    if (!b) return std::nullopt;
    if (!out) {
      out = b;
      continue;
    }
    for (int a = 0; a < dim_; ++a) {
      out->lo[a] = std::min(out->lo[a], b->lo[a]);
      out->hi[a] = std::max(out->hi[a], b->hi[a]);
    }
  }
  if (!out) return Box{Point(dim_), Point(dim_)};
  return out;
}

void UnionRegion::cover(const kernels::CellBatch& cells, Cover* out) const {
  if (parts_.empty()) {
    for (std::size_t i = 0; i < cells.count; ++i) out[i] = Cover::exact(0.0);
    return;
  }
  const std::size_t k = parts_.size();
  std::vector<Cover> all(cells.count * k);
  std::vector<Cover> tmp(cells.count);
  for (std::size_t p = 0; p < k; ++p) {
    parts_[p]->cover(cells, tmp.data());
    for (std::size_t i = 0; i < cells.count; ++i) all[i * k + p] = tmp[i];
  }
  for (std::size_t i = 0; i < cells.count; ++i) out[i] = cover_union(&all[i * k], k);
}

IntersectionRegion::IntersectionRegion(std::vector<Region> parts) : parts_(std::move(parts)), dim_(common_dim(parts_)) {}

bool IntersectionRegion::contains(const Point& x) const {
  for (const auto& p : parts_)
    if (!p->contains(x)) return false;
  return true;
}

bool IntersectionRegion::contains_ball(const Point& c, double r) const {
  for (const auto& p : parts_)
    if (!p->contains_ball(c, r)) return false;
  return true;
}

std::optional<Box> IntersectionRegion::bounds() const {
  std::optional<Box> out;
  for (const auto& p : parts_) {
    auto b = p->bounds();
    if (!b) continue;
    if (!out) {
      out = b;
      continue;
    }
    for (int a = 0; a < dim_; ++a) {
      out->lo[a] = std::max(out->lo[a], b->lo[a]);
      out->hi[a] = std::max(out->lo[a], std::min(out->hi[a], b->hi[a]));
    }
  }
  return out;
}

void IntersectionRegion::cover(const kernels::CellBatch& cells, Cover* out) const {
  const std::size_t k = parts_.size();
  std::vector<Cover> all(cells.count * k);
  std::vector<Cover> tmp(cells.count);
  for (std::size_t p = 0; p < k; ++p) {
    parts_[p]->cover(cells, tmp.data());
    for (std::size_t i = 0; i < cells.count; ++i) all[i * k + p] = tmp[i];
  }
  for (std::size_t i = 0; i < cells.count; ++i) out[i] = cover_intersection(&all[i * k], k);
}

ComplementRegion::ComplementRegion(Region inner) : inner_(std::move(inner)) {
  if (!inner_) throw InvalidArgument("complement of null region");
}

void ComplementRegion::cover(const kernels::CellBatch& cells, Cover* out) const {
  inner_->cover(cells, out);
  for (std::size_t i = 0; i < cells.count; ++i) out[i] = cover_complement(out[i]);
}

// ---- factories ------------------------------------------------------------------

Region half_space(Point normal, double offset) { return std::make_shared<HalfSpaceRegion>(std::move(normal), offset); }
Region ball(Point center, double radius) { return std::make_shared<BallRegion>(std::move(center), radius); }
Region box(Point lo, Point hi) { return std::make_shared<BoxRegion>(std::move(lo), std::move(hi)); }
Region ball_union(std::shared_ptr<const BallUnionIndex> index, int max_label) {
  return std::make_shared<BallUnionRegion>(std::move(index), max_label);
}
Region predicate(PredicateSpec spec) { return std::make_shared<PredicateRegion>(std::move(spec)); }
Region pullback(std::shared_ptr<const SurfaceChart> chart, Region ambient) {
  return std::make_shared<PullbackRegion>(std::move(chart), std::move(ambient));
}
Region unite(std::vector<Region> parts) { return std::make_shared<UnionRegion>(std::move(parts)); }
Region intersect(std::vector<Region> parts) { return std::make_shared<IntersectionRegion>(std::move(parts)); }
Region complement(Region inner) { return std::make_shared<ComplementRegion>(std::move(inner)); }
Region empty_region(int n) { return std::make_shared<UnionRegion>(std::vector<Region>{}, n); }
Region whole_space(int n) { return complement(empty_region(n)); }

}  // namespace superdensity
