#include "superdensity/measures.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <tuple>

namespace superdensity {
namespace {

std::optional<Box> intersect_boxes(const Box& a, const Box& b) {
  Box out = a;
  for (int i = 0; i < a.dim(); ++i) {
    out.lo[i] = std::max(a.lo[i], b.lo[i]);
    out.hi[i] = std::min(a.hi[i], b.hi[i]);
    if (!(out.lo[i] < out.hi[i])) return std::nullopt;
  }
  return out;
}

Point cell_mid(const kernels::CellBatch& cells, std::size_t i) {
  Point p(cells.dim);
  for (int a = 0; a < cells.dim; ++a) p[a] = cells.lo[a][i] + 0.5 * cells.size[a];
  return p;
}

Box cell_box(const kernels::CellBatch& cells, std::size_t i) {
  Box b{Point(cells.dim), Point(cells.dim)};
  for (int a = 0; a < cells.dim; ++a) {
    b.lo[a] = cells.lo[a][i];
    b.hi[a] = cells.lo[a][i] + cells.size[a];
  }
  return b;
}

// Mean of g over the cell by 3-point Gauss-Legendre per axis (exact through degree 5).
double gauss3_mean(const std::function<double(const Point&)>& g, const kernels::CellBatch& cells, std::size_t i) {
  static const double node[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static const double wt[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  const int n = cells.dim;
  int idx[kMaxDim] = {};
  double acc = 0.0;
  Point x(n);
  for (;;) {
    double w = 1.0;
    for (int a = 0; a < n; ++a) {
      x[a] = cells.lo[a][i] + 0.5 * cells.size[a] * (1.0 + node[idx[a]]);
      w *= wt[idx[a]];
    }
    acc += w * g(x);
    int a = 0;
    while (a < n && ++idx[a] == 3) idx[a++] = 0;
    if (a == n) break;
  }
  return acc;
}

// Sampled min/max of g at the corners and the midpoint of a cell.
std::pair<double, double> sampled_range(const std::function<double(const Point&)>& g, const Box& b) {
  const int n = b.dim();
  double lo = g(b.center()), hi = lo;
  for (unsigned m = 0; m < (1u << n); ++m) {
    Point x(n);
    for (int a = 0; a < n; ++a) x[a] = (m >> a) & 1u ? b.hi[a] : b.lo[a];
    const double v = g(x);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

double cell_volume(const kernels::CellBatch& cells) {
  double v = 1.0;
  for (int a = 0; a < cells.dim; ++a) v *= cells.size[a];
  return v;
}

MeasureInterval monte_carlo(const WeightedLebesgue& m, const Region& set, const Box& root, const QuadratureOptions& opts,
                            const Integrand& f) {
  const int n = m.dim;
  const int per_axis = n <= 6 ? 3 : 2;
  std::size_t strata = 1;
  for (int a = 0; a < n; ++a) strata *= static_cast<std::size_t>(per_axis);
  const std::size_t per = std::max<std::size_t>(2, opts.mc_samples / strata);
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Point side(n);
  for (int a = 0; a < n; ++a) side[a] = root.side(a) / per_axis;
  double svol = 1.0;
  for (int a = 0; a < n; ++a) svol *= side[a];
  CompensatedSum total;
  double var = 0.0;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  Point x(n);
  for (std::size_t s = 0; s < strata; ++s) {
    double mean = 0.0, m2 = 0.0;
    for (std::size_t j = 0; j < per; ++j) {
      for (int a = 0; a < n; ++a) x[a] = root.lo[a] + (idx[static_cast<std::size_t>(a)] + u(rng)) * side[a];
      double g = 0.0;
      if (set->contains(x)) g = m.density.w(x) * (f ? f(x) : 1.0);
      const double d = g - mean;
      mean += d / static_cast<double>(j + 1);
      m2 += d * (g - mean);
    }
    total.add(svol * mean);
    var += svol * svol * (m2 / static_cast<double>(per - 1)) / static_cast<double>(per);
    for (int a = 0; a < n; ++a) {
      if (++idx[static_cast<std::size_t>(a)] < per_axis) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
  }
  const double est = total.value();
  const double se = std::sqrt(var);
  MeasureInterval out{est - 3.0 * se, est + 3.0 * se, est, kProbabilistic};
  if (!f) out.lower = std::max(0.0, out.lower);
  return out;
}

int surface_extra_depth(const SurfaceChart& chart, const Region& set) {
  const auto b = set->bounds();
  if (!b) return 0;
  const double scale = 0.5 * b->min_side();
  if (!(scale > 0.0)) return 0;
  double diam = 0.0;
  for (int a = 0; a < chart.k; ++a) diam = std::max(diam, chart.g.side(a));
  const double ratio = chart.lipschitz * diam / (2.0 * scale);
  if (ratio <= 1.0) return 0;
  return std::min(30, static_cast<int>(std::ceil(std::log2(ratio))));
}

struct CacheKey {
  int n;
  double r, tol;
  int depth;
  std::size_t budget;
  auto tie() const { return std::tie(n, r, tol, depth, budget); }
  bool operator<(const CacheKey& o) const { return tie() < o.tie(); }
};

std::mutex& cache_mutex() {
  static std::mutex m;
  return m;
}
std::map<CacheKey, MeasureInterval>& unit_ball_cache() {
  static std::map<CacheKey, MeasureInterval> c;
  return c;
}

}  // namespace

MeasureInterval operator+(const MeasureInterval& a, const MeasureInterval& b) {
  return {a.lower + b.lower, a.upper + b.upper, a.estimate + b.estimate, a.flags | b.flags};
}

MeasureInterval divide(const MeasureInterval& a, const MeasureInterval& b) {
  if (!(b.lower > 0.0))
    return {0.0, std::numeric_limits<double>::infinity(), b.estimate > 0.0 ? a.estimate / b.estimate : 0.0,
            a.flags | b.flags | kResolutionLimited};
  const double c[4] = {a.lower / b.lower, a.lower / b.upper, a.upper / b.lower, a.upper / b.upper};
  MeasureInterval q;
  q.lower = *std::min_element(c, c + 4);
  q.upper = *std::max_element(c, c + 4);
  q.estimate = b.estimate > 0.0 ? std::clamp(a.estimate / b.estimate, q.lower, q.upper) : q.lower;
  q.flags = a.flags | b.flags;
  return q;
}

bool overlaps(const MeasureInterval& a, const MeasureInterval& b, double slack) {
  return a.lower <= b.upper + slack && b.lower <= a.upper + slack;
}

Density builtin_density(const std::string& name) {
  Density d;
  d.name = name;
  // min and max of |y1| over a box
  const auto abs_y1 = [](const Box& b) {
    const double a = b.lo[0], z = b.hi[0];
    return std::pair{(a <= 0.0 && z >= 0.0) ? 0.0 : std::min(std::abs(a), std::abs(z)),
                     std::max(std::abs(a), std::abs(z))};
  };
  if (name == "one") {
    d.w = [](const Point&) { return 1.0; };
    d.grad = [](const Point&, int) { return 0.0; };
    d.range = [](const Box&) { return std::pair{1.0, 1.0}; };
    d.poly_degree = 0;
    d.unit = true;
  } else if (name == "r2") {
    d.w = [](const Point& x) { return norm2(x); };
    d.grad = [](const Point& x, int i) { return 2.0 * x[i]; };
    d.range = [](const Box& b) { return std::pair{box_dist2(b, Point(b.dim())), box_far2(b, Point(b.dim()))}; };
    d.poly_degree = 2;
    d.unit = false;
  } else if (name == "one_plus_y1sq") {
    d.w = [](const Point& x) { return 1.0 + x[0] * x[0]; };
    d.grad = [](const Point& x, int i) { return i == 0 ? 2.0 * x[0] : 0.0; };
    d.range = [abs_y1](const Box& b) {
      const auto [a, z] = abs_y1(b);
      return std::pair{1.0 + a * a, 1.0 + z * z};
    };
    d.poly_degree = 2;
    d.unit = false;
  } else if (name == "one_plus_y1_4") {
    d.w = [](const Point& x) { return 1.0 + x[0] * x[0] * x[0] * x[0]; };
    d.grad = [](const Point& x, int i) { return i == 0 ? 4.0 * x[0] * x[0] * x[0] : 0.0; };
    d.range = [abs_y1](const Box& b) {
      const auto [a, z] = abs_y1(b);
      return std::pair{1.0 + a * a * a * a, 1.0 + z * z * z * z};
    };
    d.poly_degree = 4;
    d.unit = false;
  } else {
    throw InvalidArgument("unknown density '" + name + "'");
  }
  return d;
}

std::vector<std::string> builtin_density_names() { return {"one", "r2", "one_plus_y1sq", "one_plus_y1_4"}; }

int Measure::dim() const {
  return std::visit(
      [](const auto& m) -> int {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, WeightedLebesgue>)
          return m.dim;
        else if constexpr (std::is_same_v<T, SurfaceMeasure>)
          return m.chart->n;
        else if constexpr (std::is_same_v<T, Restriction>)
          return m.base->dim();
        else if constexpr (std::is_same_v<T, Dirac>)
          return m.atom.dim();
        else
          return m.parts.empty() ? 0 : m.parts.front()->dim();
      },
      v);
}

MeasurePtr lebesgue(int n, Density density, double half_extent) {
  return lebesgue_on(n, std::move(density), Box{Point::filled(n, -half_extent), Point::filled(n, half_extent)});
}

MeasurePtr lebesgue_on(int n, Density density, Box box) {
  if (n < 1 || n > kMaxDim) throw InvalidArgument("Lebesgue dimension out of range");
  require_dim(box.lo, n);
  if (!density.w) density = builtin_density("one");
  return std::make_shared<const Measure>(Measure{WeightedLebesgue{n, std::move(density), std::move(box)}});
}

MeasurePtr surface_measure(std::shared_ptr<const SurfaceChart> chart) {
  return std::make_shared<const Measure>(Measure{SurfaceMeasure{std::move(chart)}});
}

MeasurePtr restrict_to(MeasurePtr base, Region region) {
  if (base->dim() != region->dim()) throw DimensionMismatch(base->dim(), region->dim());
  return std::make_shared<const Measure>(Measure{Restriction{std::move(base), std::move(region)}});
}

MeasurePtr dirac(Point atom) { return std::make_shared<const Measure>(Measure{Dirac{std::move(atom)}}); }

MeasurePtr sum(std::vector<MeasurePtr> parts) {
  if (parts.empty()) throw InvalidArgument("sum of no measures");
  for (const auto& p : parts)
    if (p->dim() != parts.front()->dim()) throw DimensionMismatch(parts.front()->dim(), p->dim());
  return std::make_shared<const Measure>(Measure{SumMeasure{std::move(parts)}});
}

bool is_unit_lebesgue(const Measure& mu) {
  const auto* m = std::get_if<WeightedLebesgue>(&mu.v);
  return m && m->density.unit;
}

namespace {
// Integrands are weighted at cell midpoints; a floor on the depth keeps a
// vanishing midpoint value from ending the refinement at the root.
int integrand_min_depth(int k) { return k <= 1 ? 8 : k == 2 ? 6 : 4; }
}  // namespace

MeasureInterval integrate_cells(const CellEngine& engine, const QuadratureOptions& opts) {
  const int n = engine.dim;
  std::vector<double> lo[kMaxDim];
  for (int a = 0; a < n; ++a) lo[a].push_back(engine.root.lo[a]);
  double size[kMaxDim];
  for (int a = 0; a < n; ++a) size[a] = engine.root.side(a);

  CompensatedSum fin_lo, fin_hi, fin_est, fin_abs;
  double nonref_width = 0.0;
  unsigned flags = 0;
  std::size_t processed = 0;
  std::vector<Cover> covers;
  std::vector<double> weights, wlo, whi;
  struct Cand {
    std::size_t i;
    double lo, hi, est, width;
  };
  std::vector<Cand> cand;

  for (int depth = 0;; ++depth) {
    kernels::CellBatch batch;
    batch.dim = n;
    batch.count = lo[0].size();
    for (int a = 0; a < n; ++a) {
      batch.lo[a] = lo[a].data();
      batch.size[a] = size[a];
    }
    if (batch.count == 0) break;
    covers.assign(batch.count, Cover{});
    weights.assign(batch.count, 0.0);
    engine.cover(batch, covers.data());
    engine.weight(batch, weights.data());
    const bool ranged = static_cast<bool>(engine.weight_range);
    if (ranged) {
      wlo.assign(batch.count, 0.0);
      whi.assign(batch.count, 0.0);
      engine.weight_range(batch, wlo.data(), whi.data());
    }
    processed += batch.count;

    cand.clear();
    CompensatedSum cand_abs;
    double cand_width = 0.0;
    for (std::size_t i = 0; i < batch.count; ++i) {
      const Cover& c = covers[i];
      const double w = weights[i];
      if (!c.certified) flags |= kUncertified;
      const bool forced = depth < engine.min_depth;
      if (c.hi <= 0.0 || (w == 0.0 && !forced)) continue;
      double vlo, vhi;
      bool varies = false;
      if (ranged && c.lo >= 1.0 && engine.weight_exact) {
        vlo = vhi = w;
      } else if (ranged) {
        vlo = c.lo * wlo[i];
        vhi = c.hi * whi[i];
        varies = whi[i] > wlo[i];
      } else {
        const double a = w * c.lo, b = w * c.hi;
        vlo = std::min(a, b);
        vhi = std::max(a, b);
      }
      const double width = vhi - vlo;
      if (forced || (width > 0.0 && (c.refinable || varies) && depth < engine.max_depth)) {
        cand.push_back({i, vlo, vhi, w * c.est, width});
        cand_abs.add(std::abs(w) * c.hi);
        cand_width += width;
      } else {
        fin_lo.add(vlo);
        fin_hi.add(vhi);
        fin_est.add(w * c.est);
        fin_abs.add(std::abs(w) * c.hi);
        if (width > 0.0) nonref_width += width;
      }
    }
    const double total_abs = fin_abs.value() + cand_abs.value();
    const double target = opts.tol * total_abs;
    const std::size_t children = std::size_t{1} << n;
    const auto finalize_all = [&] {
      for (const Cand& c : cand) {
        fin_lo.add(c.lo);
        fin_hi.add(c.hi);
        fin_est.add(c.est);
        fin_abs.add(std::max(std::abs(c.lo), std::abs(c.hi)));
      }
      cand.clear();
    };
    if (cand.empty()) break;
    if (depth >= engine.min_depth && cand_width <= target) {
      finalize_all();
      break;
    }
    // Freeze the narrowest candidates while their total stays small.
    std::vector<std::size_t> order(cand.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return cand[x].width < cand[y].width; });
    std::vector<char> freeze(cand.size(), 0);
    double frozen = 0.0;
    for (std::size_t o : order) {
      if (depth < engine.min_depth) break;
      if (frozen + cand[o].width > 0.25 * target) break;
      frozen += cand[o].width;
      freeze[o] = 1;
    }
    std::size_t refine_count = 0;
    for (std::size_t j = 0; j < cand.size(); ++j) refine_count += freeze[j] ? 0 : 1;
    if (processed + refine_count * children > opts.cell_budget) {
      flags |= kBudgetExceeded;
      finalize_all();
      break;
    }
    std::vector<double> next[kMaxDim];
    for (int a = 0; a < n; ++a) next[a].reserve(refine_count * children);
    for (std::size_t j = 0; j < cand.size(); ++j) {
      const Cand& c = cand[j];
      if (freeze[j]) {
        fin_lo.add(c.lo);
        fin_hi.add(c.hi);
        fin_est.add(c.est);
        fin_abs.add(std::max(std::abs(c.lo), std::abs(c.hi)));
        continue;
      }
      for (std::size_t m = 0; m < children; ++m)
        for (int a = 0; a < n; ++a) next[a].push_back(lo[a][c.i] + ((m >> a) & 1u ? 0.5 * size[a] : 0.0));
    }
    for (int a = 0; a < n; ++a) {
      lo[a].swap(next[a]);
      size[a] *= 0.5;
    }
  }
  MeasureInterval out{fin_lo.value(), fin_hi.value(), fin_est.value(), flags};
  if (out.lower > out.upper) std::swap(out.lower, out.upper);
  out.estimate = std::clamp(out.estimate, out.lower, out.upper);
  if (nonref_width > opts.tol * fin_abs.value()) out.flags |= kResolutionLimited;
  return out;
}

MeasureInterval measure_of(const Measure& mu, const Region& set, const Box& root, const QuadratureOptions& opts,
                           const Integrand& f) {
  if (set->dim() != mu.dim()) throw DimensionMismatch(mu.dim(), set->dim());
  require_dim(root.lo, mu.dim());
  return std::visit(
      [&](const auto& m) -> MeasureInterval {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, WeightedLebesgue>) {
          const auto r = intersect_boxes(root, m.box);
          if (!r) return MeasureInterval::exact(0.0);
          if (m.dim >= 4) return monte_carlo(m, set, *r, opts, f);
          CellEngine e;
          e.dim = m.dim;
          e.root = *r;
          e.max_depth = opts.max_depth;
          if (f) e.min_depth = integrand_min_depth(m.dim);
          e.cover = [&set](const kernels::CellBatch& c, Cover* out) { set->cover(c, out); };
          const Density& dens = m.density;
          const bool ranged = !f && !dens.unit;
          e.weight = [&dens, &f, ranged](const kernels::CellBatch& c, double* out) {
            const double vol = cell_volume(c);
            for (std::size_t i = 0; i < c.count; ++i) {
              if (dens.unit && !f) {
                out[i] = vol;
              } else if (ranged) {
                out[i] = vol * gauss3_mean(dens.w, c, i);
              } else {
                const Point mid = cell_mid(c, i);
                out[i] = vol * dens.w(mid) * (f ? f(mid) : 1.0);
              }
            }
          };
          if (ranged) {
            e.weight_exact = dens.poly_degree >= 0 && dens.poly_degree <= 5;
            e.weight_range = [&dens](const kernels::CellBatch& c, double* lo, double* hi) {
              const double vol = cell_volume(c);
              for (std::size_t i = 0; i < c.count; ++i) {
                const Box b = cell_box(c, i);
                const auto [a, z] = dens.range ? dens.range(b) : sampled_range(dens.w, b);
                lo[i] = vol * a;
                hi[i] = vol * z;
              }
            };
          }
          MeasureInterval out = integrate_cells(e, opts);
          if (ranged && !dens.range) out.flags |= kUncertified;
          if (f) out.flags |= kMidpoint;
          if (!f) out.lower = std::max(0.0, out.lower);
          return out;
        } else if constexpr (std::is_same_v<T, SurfaceMeasure>) {
          const SurfaceChart& chart = *m.chart;
          const PullbackRegion pre(m.chart, set);
          CellEngine e;
          e.dim = chart.k;
          e.root = chart.g;
          e.max_depth = opts.max_depth + surface_extra_depth(chart, set);
          if (f) e.min_depth = integrand_min_depth(chart.k);
          e.cover = [&pre, &root, &chart](const kernels::CellBatch& c, Cover* out) {
            pre.cover(c, out);
            // Cells whose image enclosure misses the root box carry nothing.
            double half = 0.0;
            for (int a = 0; a < c.dim; ++a) half += 0.25 * c.size[a] * c.size[a];
            half = chart.lipschitz * std::sqrt(half);
            for (std::size_t i = 0; i < c.count; ++i) {
              if (out[i].hi <= 0.0) continue;
              const Point img = chart.eval(cell_mid(c, i));
              if (box_dist2(root, img) >= half * half && !root.contains_closed(img)) out[i] = Cover::exact(0.0);
            }
          };
          e.weight = [&chart, &f](const kernels::CellBatch& c, double* out) {
            const double vol = cell_volume(c);
            for (std::size_t i = 0; i < c.count; ++i) {
              const Point y = cell_mid(c, i);
              out[i] = vol * jacobian_factor(chart, y) * (f ? f(chart.eval(y)) : 1.0);
            }
          };
          if (!f) {
            const auto jf = [&chart](const Point& y) { return jacobian_factor(chart, y); };
            e.weight_range = [&chart, jf](const kernels::CellBatch& c, double* lo, double* hi) {
              const double vol = cell_volume(c);
              for (std::size_t i = 0; i < c.count; ++i) {
                const Box b = cell_box(c, i);
                const auto [a, z] = chart.jacobian_range ? chart.jacobian_range(b) : sampled_range(jf, b);
                lo[i] = vol * a;
                hi[i] = vol * z;
              }
            };
          }
          MeasureInterval out = integrate_cells(e, opts);
          if (!f && !chart.jacobian_range) out.flags |= kUncertified;
          if (f) out.flags |= kMidpoint;
          if (!f) out.lower = std::max(0.0, out.lower);
          return out;
        } else if constexpr (std::is_same_v<T, Restriction>) {
          return measure_of(*m.base, intersect({set, m.region}), root, opts, f);
        } else if constexpr (std::is_same_v<T, Dirac>) {
          if (!set->contains(m.atom) || !root.contains_closed(m.atom)) return MeasureInterval::exact(0.0);
          return MeasureInterval::exact(f ? f(m.atom) : 1.0);
        } else {
          MeasureInterval acc = MeasureInterval::exact(0.0);
          for (const auto& p : m.parts) acc = acc + measure_of(*p, set, root, opts, f);
          return acc;
        }
      },
      mu.v);
}

MeasureInterval ball_measure(const Measure& mu, const Point& x, double r, const QuadratureOptions& opts) {
  require_dim(x, mu.dim());
  if (!(r > 0.0)) throw InvalidArgument("ball radius must be positive");
  if (is_unit_lebesgue(mu)) {
    const auto& m = std::get<WeightedLebesgue>(mu.v);
    const Box bb = Box::around(x, r);
    bool interior = true;
    for (int a = 0; a < m.dim; ++a) interior = interior && bb.lo[a] >= m.box.lo[a] && bb.hi[a] <= m.box.hi[a];
    if (interior && m.dim <= 3) {
      const CacheKey key{m.dim, r, opts.tol, opts.max_depth, opts.cell_budget};
      {
        std::lock_guard<std::mutex> lock(cache_mutex());
        auto it = unit_ball_cache().find(key);
        if (it != unit_ball_cache().end()) return it->second;
      }
      const MeasureInterval v = measure_of(mu, ball(Point(m.dim), r), Box::around(Point(m.dim), r), opts);
      std::lock_guard<std::mutex> lock(cache_mutex());
      unit_ball_cache().emplace(key, v);
      return v;
    }
  }
  return measure_of(mu, ball(x, r), Box::around(x, r), opts);
}

MeasureInterval restricted_ball_measure(const Measure& mu, const Region& E, const Point& x, double r,
                                        const QuadratureOptions& opts) {
  require_dim(x, mu.dim());
  if (!(r > 0.0)) throw InvalidArgument("ball radius must be positive");
  return measure_of(mu, intersect({ball(x, r), E}), Box::around(x, r), opts);
}

bool in_support(const Measure& mu, const Point& x, const std::vector<double>& radii, const QuadratureOptions& opts) {
  for (double r : radii)
    if (!(ball_measure(mu, x, r, opts).upper > 0.0)) return false;
  return !radii.empty();
}

MeasureInterval integrate_smooth(const std::function<double(const Point&)>& f, const Box& box, int cells_per_axis) {
  static constexpr std::array<double, 5> xg = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                               0.9061798459386640};
  static constexpr std::array<double, 5> wg = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                               0.4786286704993665, 0.2369268850561891};
  const int n = box.dim();
  if (n < 1 || n > 3) throw InvalidArgument("integrate_smooth supports dimensions 1..3");
  const auto rule = [&](int m) {
    CompensatedSum s;
    Point h(n);
    for (int a = 0; a < n; ++a) h[a] = box.side(a) / m;
    std::array<int, 3> cell{0, 0, 0};
    std::array<int, 3> node{0, 0, 0};
    const int total_cells = m * (n > 1 ? m : 1) * (n > 2 ? m : 1);
    const int total_nodes = 5 * (n > 1 ? 5 : 1) * (n > 2 ? 5 : 1);
    Point x(n);
    for (int ci = 0; ci < total_cells; ++ci) {
      int t = ci;
      for (int a = 0; a < n; ++a) {
        cell[a] = t % m;
        t /= m;
      }
      for (int ni = 0; ni < total_nodes; ++ni) {
        int u = ni;
        double w = 1.0;
        for (int a = 0; a < n; ++a) {
          node[a] = u % 5;
          u /= 5;
          x[a] = box.lo[a] + (cell[a] + 0.5 + 0.5 * xg[node[a]]) * h[a];
          w *= 0.5 * wg[node[a]] * h[a];
        }
        s.add(w * f(x));
      }
    }
    return s.value();
  };
  const double fine = rule(cells_per_axis);
  const double coarse = rule(std::max(1, cells_per_axis / 2));
  const double err = std::abs(fine - coarse) + 1e-13 * (std::abs(fine) + box.volume());
  return {fine - err, fine + err, fine, 0};
}

bool density_nonnegative(const WeightedLebesgue& m, int per_axis) {
  const int n = m.dim;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  Point x(n);
  for (;;) {
    for (int a = 0; a < n; ++a) {
      // Sample a bounded window even for the huge default box.
      const double lo = std::max(m.box.lo[a], -10.0), hi = std::min(m.box.hi[a], 10.0);
      x[a] = lo + (hi - lo) * (idx[static_cast<std::size_t>(a)] + 0.5) / per_axis;
    }
    if (m.density.w(x) < 0.0) return false;
    int a = 0;
    while (a < n && ++idx[static_cast<std::size_t>(a)] >= per_axis) idx[static_cast<std::size_t>(a++)] = 0;
    if (a == n) break;
  }
  return true;
}

}  // namespace superdensity
