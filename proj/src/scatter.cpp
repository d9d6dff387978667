#include "superdensity/scatter.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include "superdensity/format.hpp"

namespace superdensity {

namespace {

using ld = long double;

// Strict comparison with a relative guard: ties and near-ties count as failures.
bool strictly_greater(ld a, ld b) { return a > b * (1.0L + 1e-12L) && a > b; }

int smallest_integer_above(double t) {
  double f = std::floor(t) + 1.0;
  if (f < 2.0) f = 2.0;
  if (f > 2.0e9) throw HypothesisViolation("beta exceeds the integer range (" + fmt(t) + ")");
  return static_cast<int>(f);
}

// Which of the three beta inequalities fail for this beta (empty when all hold).
std::vector<std::string> beta_failures(const ScatterParams& p, int beta) {
  std::vector<std::string> out;
  const ld b = beta;
  const ld n = p.n;
  const ld lhs1 = std::pow(b, static_cast<ld>(p.m) - n);
  const ld rhs1 = std::pow(2.0L * p.R, n) + 1.0L;
  if (!strictly_greater(lhs1, rhs1)) out.push_back("beta^(m-n) > 2^n R^n + 1");
  const ld t2 = std::pow(static_cast<ld>(p.epsilon) / p.frame.C, 1.0L / p.frame.q) + std::sqrt(n);
  if (!strictly_greater(b, t2)) out.push_back("beta > (eps/C)^(1/q) + sqrt(n)");
  const ld lhs3 = std::pow(b, static_cast<ld>(p.m));
  const ld rhs3 = static_cast<ld>(p.epsilon) / (p.frame.C * std::pow(static_cast<ld>(p.frame.r_bar), p.frame.q));
  if (!strictly_greater(lhs3, rhs3)) out.push_back("beta^m > eps / (C rbar^q)");
  return out;
}

Box bounds_or(const Region& r, int n, double R) {
  if (auto b = r->bounds()) return *b;
  return Box{Point::filled(n, -R), Point::filled(n, R)};
}

double pow_int(double b, int k) {
  double v = 1.0;
  for (int i = 0; i < k; ++i) v *= b;
  return v;
}

void fill_level_measures(const Measure& mu, ScatteredSet& s, const std::vector<std::vector<Point>>* centers,
                         const QuadratureOptions& opts) {
  CompensatedSum total, chain;
  const auto& fr = s.params.frame;
  for (auto& lv : s.levels) {
    lv.frame_bound = static_cast<double>(lv.gamma_count) * fr.C * std::pow(lv.rho, fr.q);
    chain.add(lv.frame_bound);
    if (lv.gamma_count == 0) continue;
    if (is_unit_lebesgue(mu) || !centers) {
      if (!is_unit_lebesgue(mu))
        throw InvalidArgument("product-form construction needs a translation-invariant measure");
      lv.ball = ball_measure(mu, Point(s.params.n), lv.rho, opts);
      lv.measure_upper = static_cast<double>(lv.gamma_count) * lv.ball.upper;
    } else {
      CompensatedSum acc;
      for (const Point& c : (*centers)[static_cast<std::size_t>(lv.k - 1)]) acc.add(ball_measure(mu, c, lv.rho, opts).upper);
      lv.measure_upper = acc.value();
      lv.ball = MeasureInterval::exact(lv.measure_upper / static_cast<double>(lv.gamma_count));
    }
    total.add(lv.measure_upper);
  }
  s.measure_upper_bound = total.value();
  s.frame_chain = chain.value();
}

}  // namespace

double ScatterParams::rho(int k) const {
  return std::pow(epsilon / (frame.C * std::pow(static_cast<double>(beta), k * m)), 1.0 / frame.q);
}

double ScatterParams::frame_chain_limit() const {
  return std::pow(2.0 * R, n) * epsilon / (std::pow(static_cast<double>(beta), m - n) - 1.0);
}

ScatterParams scatter_parameters(const FrameBounds& frame, int n, int R, double epsilon, double h) {
  if (n < 1 || n > kMaxDim) throw InvalidArgument("dimension out of range");
  if (R < 1) throw InvalidArgument("R must be a positive integer");
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (!(frame.C > 0.0 && frame.p > 0.0 && frame.q > 0.0 && frame.r_bar > 0.0))
    throw InvalidArgument("frame constants C, p, q, rbar must be positive");
  if (frame.q > std::min<double>(n, frame.p))
    throw HypothesisViolation("q <= min(n, p) violated: q=" + fmt(frame.q) + ", n=" + std::to_string(n) +
                              ", p=" + fmt(frame.p));
  ScatterParams p;
  p.frame = frame;
  p.n = n;
  p.R = R;
  p.epsilon = epsilon;
  p.h = h;
  const double mbar = p.m_bar();
  if (!(h > mbar))
    throw HypothesisViolation("h must exceed np/q - q = " + fmt(mbar) + " strictly (h=" + fmt(h) + ")");
  p.m = (h + frame.q) * frame.q / frame.p;
  if (!(p.m > n)) throw HypothesisViolation("m = (h+q)q/p must exceed n (m=" + fmt(p.m) + ")");
  p.beta_terms[0] = std::pow(std::pow(2.0 * R, n) + 1.0, 1.0 / (p.m - n));
  p.beta_terms[1] = std::pow(epsilon / frame.C, 1.0 / frame.q) + std::sqrt(static_cast<double>(n));
  p.beta_terms[2] = std::pow(epsilon / (frame.C * std::pow(frame.r_bar, frame.q)), 1.0 / p.m);
  const double t = std::max({p.beta_terms[0], p.beta_terms[1], p.beta_terms[2]});
  if (!std::isfinite(t)) throw HypothesisViolation("beta bound is not finite (m - n too small)");
  p.beta = smallest_integer_above(t);
  while (!beta_failures(p, p.beta).empty()) {
    if (p.beta >= 2000000000) throw HypothesisViolation("no admissible integer beta");
    ++p.beta;
  }
  p.lower_bound_constant = std::pow(epsilon, frame.p / frame.q) /
                           (std::pow(frame.C, 2.0 + frame.p / frame.q) * std::pow(static_cast<double>(p.beta), frame.q + h));
  return p;
}

std::vector<std::string> check_parameters(const ScatterParams& p) {
  std::vector<std::string> out;
  if (p.frame.q > std::min<double>(p.n, p.frame.p)) out.push_back("q <= min(n, p)");
  if (!(p.h > p.m_bar())) out.push_back("h > np/q - q");
  if (std::abs(p.m - (p.h + p.frame.q) * p.frame.q / p.frame.p) > 1e-12 * p.m) out.push_back("m = (h+q)q/p");
  if (!(p.m > p.n)) out.push_back("m > n");
  for (auto& f : beta_failures(p, p.beta)) out.push_back(f);
  if (!(p.rho(1) < p.frame.r_bar)) out.push_back("rho_k < rbar");
  if (!(p.frame_chain_limit() < p.epsilon)) out.push_back("2^n R^n eps / (beta^(m-n) - 1) < eps");
  const double c = std::pow(p.epsilon, p.frame.p / p.frame.q) /
                   (std::pow(p.frame.C, 2.0 + p.frame.p / p.frame.q) * std::pow(static_cast<double>(p.beta), p.frame.q + p.h));
  if (std::abs(c - p.lower_bound_constant) > 1e-12 * c) out.push_back("lower-bound constant");
  return out;
}

bool ScatteredSet::empty() const { return ball_count() == 0; }

std::size_t ScatteredSet::ball_count() const {
  std::size_t c = 0;
  for (const auto& lv : levels) c += lv.gamma_count;
  return c;
}

Region ScatteredSet::region(int k) const {
  if (empty()) return empty_region(params.n);
  if (structured) return std::make_shared<ProductBallUnion>(params.n, product, k);
  return ball_union(index, k);
}

ScatteredSet construct_scattered_set(const Measure& mu, const ScatterParams& params, const Region& omega,
                                     const PointCloud& cloud, int K_max, const QuadratureOptions& opts) {
  if (cloud.dim() != params.n) throw DimensionMismatch(params.n, cloud.dim());
  if (omega->dim() != params.n) throw DimensionMismatch(params.n, omega->dim());
  const LatticeSpec spec{params.n, params.R, params.beta, K_max};
  spec.validate();
  const int cap = resolution_cap(spec, cloud.resolution());
  if (K_max > cap)
    throw InvalidArgument("K_max=" + std::to_string(K_max) + " exceeds the resolution cap " + std::to_string(cap) +
                          " of the cloud");
  ScatteredSet s;
  s.params = params;
  s.K_max = K_max;
  s.truncation_scale = 1.0 / pow_int(params.beta, K_max - 1);
  s.distribution = lambda_distribution(cloud, spec);

  std::vector<BallUnionIndex::Ball> balls;
  std::vector<std::vector<Point>> centers(static_cast<std::size_t>(K_max));
  const bool keep_centers = !is_unit_lebesgue(mu);
  for (int k = 1; k <= K_max; ++k) {
    ScatterLevel lv;
    lv.k = k;
    lv.rho = params.rho(k);
    const std::size_t nk = s.distribution.counts[static_cast<std::size_t>(k - 1)];
    for (std::size_t j = 0; j < nk; ++j) {
      const Point c = s.distribution.points[j];
      if (!omega->contains_ball(c, lv.rho)) continue;
      balls.push_back({c, lv.rho, k});
      if (keep_centers) centers[static_cast<std::size_t>(k - 1)].push_back(c);
      ++lv.gamma_count;
    }
    s.levels.push_back(lv);
  }
  if (!balls.empty()) s.index = std::make_shared<const BallUnionIndex>(params.n, std::move(balls));
  fill_level_measures(mu, s, keep_centers ? &centers : nullptr, opts);
  return s;
}

ScatteredSet construct_scattered_set_structured(const Measure& mu, const ScatterParams& params, const Box& omega,
                                                const GridCloud& cloud, int K_max, const QuadratureOptions& opts) {
  if (cloud.dim() != params.n) throw DimensionMismatch(params.n, cloud.dim());
  require_dim(omega.lo, params.n);
  const LatticeSpec spec{params.n, params.R, params.beta, K_max};
  spec.validate();
  const int cap = resolution_cap(spec, cloud.resolution());
  if (K_max > cap)
    throw InvalidArgument("K_max=" + std::to_string(K_max) + " exceeds the resolution cap " + std::to_string(cap) +
                          " of the cloud");
  ScatteredSet s;
  s.params = params;
  s.K_max = K_max;
  s.structured = true;
  s.truncation_scale = 1.0 / pow_int(params.beta, K_max - 1);
  auto levels = std::make_shared<std::vector<ProductBallLevel>>();
  std::vector<std::int64_t> idx;
  std::vector<double> rep;
  for (int k = 1; k <= K_max; ++k) {
    ScatterLevel lv;
    lv.k = k;
    lv.rho = params.rho(k);
    ProductBallLevel pl;
    pl.label = k;
    pl.radius = lv.rho;
    pl.axis.resize(static_cast<std::size_t>(params.n));
    std::size_t count = 1;
    for (int a = 0; a < params.n; ++a) {
      // Level-k representatives of a product grid are products of per-axis ones.
      cloud.axis_occupancy(a, k, spec, idx, rep);
      auto& ax = pl.axis[static_cast<std::size_t>(a)];
      for (double c : rep)
        if (c - lv.rho >= omega.lo[a] && c + lv.rho <= omega.hi[a]) ax.push_back(c);
      count *= ax.size();
    }
    lv.gamma_count = count;
    if (count > 0) levels->push_back(std::move(pl));
    s.levels.push_back(lv);
  }
  s.product = levels;
  fill_level_measures(mu, s, nullptr, opts);
  return s;
}

bool balls_inside(const ScatteredSet& s, const Region& omega) {
  if (s.empty()) return true;
  if (s.structured) {
    for (const auto& pl : *s.product) {
      // Per-axis extremes suffice for a box; otherwise check every ball.
      if (const auto* b = dynamic_cast<const BoxRegion*>(omega.get())) {
        for (int a = 0; a < s.params.n; ++a) {
          const auto& ax = pl.axis[static_cast<std::size_t>(a)];
          if (ax.front() - pl.radius < b->box().lo[a] || ax.back() + pl.radius > b->box().hi[a]) return false;
        }
        continue;
      }
      if (pl.count() > 10'000'000) throw InvalidArgument("too many balls for an exhaustive inside check");
      std::vector<std::size_t> j(static_cast<std::size_t>(s.params.n), 0);
      Point c(s.params.n);
      for (;;) {
        for (int a = 0; a < s.params.n; ++a) c[a] = pl.axis[static_cast<std::size_t>(a)][j[static_cast<std::size_t>(a)]];
        if (!omega->contains_ball(c, pl.radius)) return false;
        int a = s.params.n - 1;
        while (a >= 0 && ++j[static_cast<std::size_t>(a)] >= pl.axis[static_cast<std::size_t>(a)].size()) {
          j[static_cast<std::size_t>(a)] = 0;
          --a;
        }
        if (a < 0) break;
      }
    }
    return true;
  }
  const BallUnionIndex& idx = *s.index;
  for (int i = 0; i < idx.class_count(); ++i)
    for (std::size_t b = 0; b < idx.ball_count_in_class(i); ++b)
      if (!omega->contains_ball(idx.ball_center(i, b), idx.ball_radius(i, b))) return false;
  return true;
}

VerifyReport verify_scattered_set(const Measure& mu, const ScatteredSet& s, const Region& omega,
                                  const std::vector<Point>& samples, const QuadratureOptions& opts,
                                  const VerifyOptions& vopts) {
  VerifyReport rep;
  const auto& p = s.params;
  rep.epsilon = p.epsilon;
  rep.lower_bound_constant = p.lower_bound_constant;
  rep.truncation_scale = s.truncation_scale;
  rep.measure_upper_bound = s.measure_upper_bound;
  rep.budget_ok = s.measure_upper_bound < p.epsilon;
  if (vopts.measure_A) {
    QuadratureOptions q = opts;
    q.cell_budget = vopts.measure_budget;
    if (s.empty()) {
      rep.measured = MeasureInterval::exact(0.0);
    } else {
      rep.measured = measure_of(mu, intersect({omega, s.region()}), bounds_or(omega, p.n, p.R), q);
    }
    rep.measured_done = true;
    rep.budget_ok = rep.budget_ok && rep.measured.upper < p.epsilon;
  }
  bool any = false, all = true;
  for (const Point& x : samples) {
    require_dim(x, p.n);
    SampleReport sr;
    sr.x = x;
    sr.K_x = -1;
    for (int k = 0; k <= s.K_max; ++k)
      if (omega->contains_ball(x, 1.0 / pow_int(p.beta, k))) {
        sr.K_x = k;
        break;
      }
    const int first = std::max(1, sr.K_x + 1);
    if (sr.K_x < 0 || first > s.K_max) {
      sr.skipped = true;
      sr.reason = "no usable level up to K_max=" + std::to_string(s.K_max) + " (too close to the boundary)";
      rep.samples.push_back(std::move(sr));
      continue;
    }
    sr.pass = true;
    for (int k = first; k <= s.K_max; ++k) {
      LevelStatistic ls;
      ls.k = k;
      ls.r = 1.0 / pow_int(p.beta, k - 1);
      const MeasureInterval den = ball_measure(mu, x, ls.r, opts);
      const MeasureInterval num = restricted_ball_measure(mu, s.region(k), x, ls.r, opts);
      MeasureInterval q = divide(num, den);
      const double scale = std::pow(ls.r, p.h);
      q.lower /= scale;
      q.upper /= scale;
      q.estimate /= scale;
      ls.stat = q;
      ls.pass = q.lower >= p.lower_bound_constant;
      sr.pass = sr.pass && ls.pass;
      sr.levels.push_back(ls);
    }
    any = true;
    all = all && sr.pass;
    rep.samples.push_back(std::move(sr));
  }
  rep.statistic_ok = any && all;
  return rep;
}

std::vector<Point> halton_points(const Box& box, std::size_t count, std::size_t skip) {
  static const int primes[kMaxDim] = {2, 3, 5, 7, 11, 13, 17, 19};
  const int n = box.dim();
  std::vector<Point> out;
  out.reserve(count);
  for (std::size_t i = skip; i < skip + count; ++i) {
    Point p(n);
    for (int a = 0; a < n; ++a) {
      double f = 1.0, v = 0.0;
      for (std::size_t m = i; m > 0; m /= static_cast<std::size_t>(primes[a])) {
        f /= primes[a];
        v += f * static_cast<double>(m % static_cast<std::size_t>(primes[a]));
      }
      p[a] = box.lo[a] + v * box.side(a);
    }
    out.push_back(p);
  }
  return out;
}

std::vector<Point> sample_cloud_points(const Region& omega, const Box& bounds, const PointCloud& cloud,
                                       std::size_t count) {
  std::vector<Point> out;
  std::set<std::vector<double>> seen;
  std::size_t i = 1;
  const std::size_t limit = 1000 * std::max<std::size_t>(count, 1);
  while (out.size() < count && i < limit) {
    const Point h = halton_points(bounds, 1, i++)[0];
    if (!omega->contains(h)) continue;
    const Point c = cloud.nearest(h);
    if (!omega->contains(c)) continue;
    std::vector<double> key(c.coords().begin(), c.coords().end());
    if (!seen.insert(key).second) continue;
    out.push_back(c);
  }
  return out;
}

Region shrink(const Region& omega, double delta) {
  const int n = omega->dim();
  if (delta <= 0.0) return omega;
  if (const auto* b = dynamic_cast<const BoxRegion*>(omega.get())) {
    Point lo = b->box().lo, hi = b->box().hi;
    for (int a = 0; a < n; ++a) {
      lo[a] += delta;
      hi[a] -= delta;
      if (!(lo[a] < hi[a])) return empty_region(n);
    }
    return box(lo, hi);
  }
  if (const auto* b = dynamic_cast<const BallRegion*>(omega.get())) {
    if (b->radius() <= delta) return empty_region(n);
    return ball(b->center(), b->radius() - delta);
  }
  if (const auto* h = dynamic_cast<const HalfSpaceRegion*>(omega.get())) return half_space(h->normal(), h->offset() - delta);
  if (const auto* in = dynamic_cast<const IntersectionRegion*>(omega.get())) {
    std::vector<Region> parts;
    for (const auto& p : in->parts()) parts.push_back(shrink(p, delta));
    return intersect(parts);
  }
  PredicateSpec spec;
  spec.name = "shrunk";
  spec.dim = n;
  spec.member = [omega, delta](const Point& y) { return omega->contains_ball(y, delta); };
  spec.bounds = omega->bounds();
  return predicate(spec);
}

std::vector<Point> boundary_samples(const Region& omega) {
  std::vector<Point> out;
  const int n = omega->dim();
  if (const auto* b = dynamic_cast<const BoxRegion*>(omega.get())) {
    const Point c = b->box().center();
    for (int a = 0; a < n; ++a)
      for (double side : {b->box().lo[a], b->box().hi[a]}) {
        Point p = c;
        p[a] = side;
        out.push_back(p);
      }
  } else if (const auto* b = dynamic_cast<const BallRegion*>(omega.get())) {
    for (int a = 0; a < n; ++a)
      for (double s : {-1.0, 1.0}) {
        Point p = b->center();
        p[a] += s * b->radius();
        out.push_back(p);
      }
  }
  return out;
}

AugmentedSet augment_boundary(const Measure& mu, ScatteredSet base, const Region& omega, const QuadratureOptions& opts,
                              const AugmentOptions& aopts) {
  const auto& p = base.params;
  const int n = p.n;
  AugmentedSet out;
  out.committed = aopts.committed >= 0.0 ? aopts.committed : base.measure_upper_bound;
  out.boundary_points = boundary_samples(omega);
  Collar& col = out.collar;
  col.budget = p.epsilon - out.committed;

  if (aopts.check_boundary) {
    const auto radii = aopts.boundary_radii.radii();
    for (const Point& x : out.boundary_points)
      out.boundary_checks.push_back(base_statistic(mu, omega, x, p.h, radii, opts));
  }

  bool touches = out.boundary_points.empty();
  const Box ob = bounds_or(omega, n, p.R);
  const double probe = 1e-3 * ob.max_side();
  for (const Point& x : out.boundary_points)
    touches = touches || ball_measure(mu, x, probe, opts).upper > 0.0;
  if (!touches) {
    col.skipped = true;
    col.note = "boundary misses the support; no collar needed";
    col.region = empty_region(n);
    col.band = col.inner = MeasureInterval::exact(0.0);
    out.region = base.region();
    out.measure_upper_bound = out.committed;
    out.base = std::move(base);
    return out;
  }
  if (!(col.budget > 0.0))
    throw ConstructionFailure("no measure budget left for the boundary collar (committed " + fmt(out.committed) +
                              " >= eps " + fmt(p.epsilon) + ")");

  const Box outer_box{Point::filled(n, -p.R), Point::filled(n, p.R)};
  const auto inner_of = [&](double d) { return intersect({omega, complement(shrink(omega, d))}); };
  const auto band_of = [&](double d, MeasureInterval* inner) {
    *inner = measure_of(mu, inner_of(d), ob, opts);
    const Region shell = intersect({box(Point::filled(n, -p.R - d), Point::filled(n, p.R + d)),
                                    complement(box(outer_box.lo, outer_box.hi))});
    const MeasureInterval sh = measure_of(mu, shell, Box{Point::filled(n, -p.R - d), Point::filled(n, p.R + d)}, opts);
    return *inner + sh;
  };

  double lo = 0.0, hi = std::min<double>(p.R, 0.5 * ob.min_side());
  MeasureInterval in_lo{}, band_lo{};
  {
    MeasureInterval in_hi;
    const MeasureInterval b = band_of(hi, &in_hi);
    ++col.iterations;
    if (b.upper < col.budget) {
      lo = hi;
      in_lo = in_hi;
      band_lo = b;
    }
  }
  while (lo < hi && col.iterations < aopts.max_iterations) {
    if (lo > 0.0 && hi - lo <= aopts.rel_gap * lo) break;
    const double mid = 0.5 * (lo + hi);
    MeasureInterval in_mid;
    const MeasureInterval b = band_of(mid, &in_mid);
    ++col.iterations;
    if (b.upper < col.budget) {
      lo = mid;
      in_lo = in_mid;
      band_lo = b;
    } else {
      hi = mid;
    }
  }
  if (!(lo > 0.0))
    throw ConstructionFailure("collar bisection found no admissible delta in " + std::to_string(col.iterations) +
                              " steps");
  col.delta = lo;
  col.band = band_lo;
  col.inner = in_lo;
  col.region = inner_of(lo);
  out.region = unite({base.region(), col.region});
  out.measure_upper_bound = out.committed + col.inner.upper;
  out.base = std::move(base);
  return out;
}

namespace {

// Frame bound of levels K+1, K+2, ... of the untruncated construction: every
// k-cell meeting the bounding box may carry one ball of measure <= C rho_k^q.
double frame_tail(const ScatterParams& p, const Box& bb, int K) {
  ld total = 0.0L;
  for (int k = K + 1; k < K + 400; ++k) {
    const ld s = std::pow(static_cast<ld>(p.beta), static_cast<ld>(k));
    ld cells = 1.0L;
    for (int a = 0; a < p.n; ++a) cells *= std::floor(bb.hi[a] * s) - std::floor(bb.lo[a] * s) + 1.0L;
    const ld ball = static_cast<ld>(p.epsilon) / std::pow(static_cast<ld>(p.beta), k * static_cast<ld>(p.m));
    const ld term = cells * ball;
    total += term;
    if (term < 1e-30L * std::max(total, 1e-300L)) break;
  }
  return static_cast<double>(total);
}

}  // namespace

ThinSetResult thin_closed_subset(const Measure& mu, const FrameBounds& frame, const Box& omega, const Box& omega_prime,
                                 int R, double H, int J_max, const ThinSetOptions& topts,
                                 const QuadratureOptions& opts) {
  const int n = mu.dim();
  require_dim(omega.lo, n);
  require_dim(omega_prime.lo, n);
  for (int a = 0; a < n; ++a) {
    if (!(omega_prime.lo[a] <= omega.lo[a] && omega.hi[a] <= omega_prime.hi[a]))
      throw InvalidArgument("omega must lie inside omega'");
    if (!(-R <= omega_prime.lo[a] && omega_prime.hi[a] <= R)) throw InvalidArgument("omega' must lie in [-R,R]^n");
  }
  if (J_max < 1) throw InvalidArgument("J_max must be >= 1");
  ThinSetResult t;
  t.omega = box(omega.lo, omega.hi);
  t.omega_prime = box(omega_prime.lo, omega_prime.hi);
  t.H = H;
  t.m_bar = n * frame.p / frame.q - frame.q;
  t.omega_measure = measure_of(mu, t.omega, omega, opts);
  if (!(H > 0.0 && H < t.omega_measure.lower))
    throw InvalidArgument("H must lie in (0, mu(closure of omega)) = (0, " + fmt(t.omega_measure.lower) + ")");

  const GridCloud cloud(omega_prime, topts.grid_spacing);
  std::vector<Region> removed;
  CompensatedSum removed_upper;
  for (int j = 1; j <= J_max; ++j) {
    ThinComponent c;
    c.j = j;
    c.h = t.m_bar + 1.0 / j;
    c.epsilon = (t.omega_measure.lower - H) / std::pow(2.0, j);
    try {
      const ScatterParams p = scatter_parameters(frame, n, R, c.epsilon, c.h);
      const LatticeSpec spec{n, R, p.beta, 1};
      c.levels = std::min(topts.level_cap, resolution_cap(spec, cloud.resolution()));
      if (c.levels < 1)
        throw ConstructionFailure("grid spacing " + fmt(topts.grid_spacing) + " cannot resolve level 1 at beta=" +
                                  std::to_string(p.beta));
      ScatteredSet s = construct_scattered_set_structured(mu, p, omega_prime, cloud, c.levels, opts);
      c.tail_bound = frame_tail(p, omega_prime, c.levels);
      AugmentOptions ao;
      ao.committed = s.measure_upper_bound + c.tail_bound;
      c.set = augment_boundary(mu, std::move(s), t.omega_prime, opts, ao);
    } catch (const Error& e) {
      throw ConstructionFailure("j=" + std::to_string(j) + ": " + e.what());
    }
    c.measure_upper = c.set.measure_upper_bound;
    removed_upper.add(c.measure_upper);
    removed.push_back(c.set.region);
    t.truncation_scale = std::max(t.truncation_scale, 1.0 / pow_int(c.set.base.params.beta, c.levels));
    t.parts.push_back(std::move(c));
  }
  t.removed_upper = removed_upper.value();
  t.measure_lower_bound = t.omega_measure.lower - t.removed_upper;
  t.measure_ok = t.measure_lower_bound > H;
  t.F = intersect({t.omega, complement(unite(removed))});

  t.window_lo = topts.window_lo > 0.0 ? topts.window_lo : 4.0 * t.truncation_scale;
  t.window_hi = topts.window_hi > 0.0 ? topts.window_hi : 10.0 * t.window_lo;
  if (!(t.window_hi > t.window_lo)) throw InvalidArgument("empty scale window");
  RadiiSchedule sched;
  sched.r_max = t.window_hi;
  sched.count = std::max(4, topts.radii_count);
  sched.gamma = std::pow(t.window_lo / t.window_hi, 1.0 / (sched.count - 1));
  const auto radii = sched.radii();

  for (std::size_t i = 1; t.samples.size() < topts.samples && i < 100000; ++i) {
    const Point x = halton_points(omega, 1, i)[0];
    if (!t.omega->contains_ball(x, t.window_hi) || !t.F->contains(x)) continue;
    t.samples.push_back(x);
  }
  DensityParams dp = topts.density;
  dp.fit_points = sched.count;
  t.degree_ok = !t.samples.empty();
  for (const Point& x : t.samples) {
    DensityProfile prof = ratio_profile(mu, t.F, x, radii, opts);
    const DegreeEstimate e = estimate_density_degree(prof, dp);
    t.degree_ok = t.degree_ok && e.value() <= t.m_bar + topts.slope_margin;
    t.profiles.push_back(std::move(prof));
    t.degrees.push_back(e);
  }
  return t;
}

void write_levels_csv(std::ostream& os, const ScatteredSet& s) {
  os << "level,gamma_count,rho,measure_upper,frame_bound\n";
  for (const auto& lv : s.levels)
    os << lv.k << ',' << lv.gamma_count << ',' << fmt(lv.rho) << ',' << fmt(lv.measure_upper) << ','
       << fmt(lv.frame_bound) << '\n';
}

void write_statistics_csv(std::ostream& os, const VerifyReport& r) {
  os << "x,k,r,statistic_lo,constant,verdict\n";
  for (const auto& s : r.samples) {
    if (s.skipped) {
      os << fmt(s.x) << ",,,," << fmt(r.lower_bound_constant) << ",SKIP\n";
      continue;
    }
    for (const auto& l : s.levels)
      os << fmt(s.x) << ',' << l.k << ',' << fmt(l.r) << ',' << fmt(l.stat.lower) << ',' << fmt(r.lower_bound_constant)
         << ',' << (l.pass ? "PASS" : "FAIL") << '\n';
  }
}

void write_thin_csv(std::ostream& os, const ThinSetResult& t) {
  os << "j,h,epsilon,beta,levels,balls,tail_bound,delta,measure_upper\n";
  for (const auto& c : t.parts)
    os << c.j << ',' << fmt(c.h) << ',' << fmt(c.epsilon) << ',' << c.set.base.params.beta << ',' << c.levels << ','
       << c.set.base.ball_count() << ',' << fmt(c.tail_bound) << ',' << fmt(c.set.collar.delta) << ','
       << fmt(c.measure_upper) << '\n';
}

}  // namespace superdensity
