#pragma once
// Randomized property checks shared by test_properties and the acceptance run.
// Each check draws `instances` random cases from a fixed seed and counts failures.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "superdensity/density.hpp"
#include "superdensity/format.hpp"
#include "superdensity/lattice.hpp"
#include "superdensity/measures.hpp"
#include "superdensity/regions.hpp"
#include "superdensity/scatter.hpp"
#include "superdensity/schwarz.hpp"

namespace props {

using namespace superdensity;

inline constexpr std::uint64_t kSeed = 0x5eed2024;

struct Outcome {
  std::string name;
  int instances = 0;
  int failures = 0;
  std::string first;
  bool ok() const { return instances > 0 && failures == 0; }
  void fail(const std::string& why) {
    if (failures++ == 0) first = why;
  }
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(g_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(g_); }
  Point point(int n, double a, double b) {
    Point p(n);
    for (int i = 0; i < n; ++i) p[i] = uniform(a, b);
    return p;
  }
  std::mt19937_64& engine() { return g_; }

 private:
  std::mt19937_64 g_;
};

inline Region random_primitive(Rng& rng, int n) {
  switch (rng.integer(0, 2)) {
    case 0: return ball(rng.point(n, -0.5, 0.5), rng.uniform(0.1, 0.8));
    case 1: {
      Point lo = rng.point(n, -0.9, 0.1), hi = lo;
      for (int i = 0; i < n; ++i) hi[i] += rng.uniform(0.1, 0.9);
      return box(lo, hi);
    }
    default: {
      Point nrm = rng.point(n, -1.0, 1.0);
      if (norm(nrm) < 1e-3) nrm[0] = 1.0;
      return half_space(nrm, rng.uniform(-0.4, 0.4));
    }
  }
}

inline QuadratureOptions fast_opts() {
  QuadratureOptions q;
  q.tol = 1e-3;
  q.max_depth = 12;
  return q;
}

// Intersection / union membership and De Morgan at sampled points.
inline Outcome region_identities(int instances, std::uint64_t seed = kSeed) {
  Outcome o{"region boolean identities"};
  Rng rng(seed);
  for (int t = 0; t < instances; ++t) {
    ++o.instances;
    const int n = rng.integer(2, 3);
    const Region E = random_primitive(rng, n), F = random_primitive(rng, n);
    const Region I = intersect({E, F}), U = unite({E, F});
    const Region dm = intersect({complement(E), complement(F)}), cu = complement(U);
    for (int k = 0; k < 50; ++k) {
      const Point x = rng.point(n, -1.2, 1.2);
      const bool e = E->contains(x), f = F->contains(x);
      if (I->contains(x) != (e && f) || U->contains(x) != (e || f) || cu->contains(x) != dm->contains(x)) {
        o.fail("instance " + std::to_string(t) + " at " + fmt(x));
        break;
      }
    }
  }
  return o;
}

// Grid-hashed ball-union queries against the linear scan.
inline Outcome ball_union_queries(int instances, std::uint64_t seed = kSeed + 1) {
  Outcome o{"ball union index vs brute force"};
  Rng rng(seed);
  for (int t = 0; t < instances; ++t) {
    ++o.instances;
    const int n = rng.integer(2, 3);
    std::vector<BallUnionIndex::Ball> balls;
    const int count = rng.integer(1, 200);
    for (int i = 0; i < count; ++i) balls.push_back({rng.point(n, -1, 1), rng.uniform(0.005, 0.2), rng.integer(1, 3)});
    const BallUnionIndex idx(n, balls);
    for (int k = 0; k < 1000; ++k) {
      const Point x = rng.point(n, -1.2, 1.2);
      const int label = rng.integer(1, 3);
      if (idx.query(x, label) != idx.query_linear(x, label)) {
        o.fail("instance " + std::to_string(t) + " at " + fmt(x));
        break;
      }
    }
  }
  return o;
}

inline MeasurePtr random_measure(Rng& rng, int n) {
  static const char* names[] = {"one", "r2", "one_plus_y1sq", "one_plus_y1_4"};
  return lebesgue(n, builtin_density(names[rng.integer(0, 3)]));
}

// mu(B cap E) + mu(B \ E) overlaps mu(B).
inline Outcome interval_additivity(int instances, std::uint64_t seed = kSeed + 2) {
  Outcome o{"interval additivity"};
  Rng rng(seed);
  const auto q = fast_opts();
  for (int t = 0; t < instances; ++t) {
    ++o.instances;
    const int n = 2;
    const MeasurePtr mu = random_measure(rng, n);
    const Region E = random_primitive(rng, n);
    const Point x = rng.point(n, -0.5, 0.5);
    const double r = rng.uniform(0.05, 0.6);
    const auto in = restricted_ball_measure(*mu, E, x, r, q);
    const auto out = restricted_ball_measure(*mu, complement(E), x, r, q);
    const auto all = ball_measure(*mu, x, r, q);
    if (!overlaps(in + out, all)) o.fail("instance " + std::to_string(t) + " r=" + fmt(r));
  }
  return o;
}

// r1 <= r2 implies lower(r1) <= upper(r2).
inline Outcome interval_monotonicity(int instances, std::uint64_t seed = kSeed + 3) {
  Outcome o{"interval monotonicity in r"};
  Rng rng(seed);
  const auto q = fast_opts();
  for (int t = 0; t < instances; ++t) {
    ++o.instances;
    const int n = rng.integer(2, 3);
    const MeasurePtr mu = n == 2 ? random_measure(rng, n) : lebesgue(n);
    const Point x = rng.point(n, -0.5, 0.5);
    const double r2 = rng.uniform(0.05, 0.5), r1 = r2 * rng.uniform(0.5, 1.0);
    if (ball_measure(*mu, x, r1, q).lower > ball_measure(*mu, x, r2, q).upper)
      o.fail("instance " + std::to_string(t));
  }
  return o;
}

// Lebesgue ball intervals contain omega_n r^n.
inline Outcome lebesgue_frame(int instances, std::uint64_t seed = kSeed + 4) {
  Outcome o{"Lebesgue frame values"};
  Rng rng(seed);
  for (int t = 0; t < instances; ++t) {
    ++o.instances;
    const int n = rng.integer(1, 3);
    const MeasurePtr mu = lebesgue(n);
    const double r = rng.uniform(0.01, 2.0);
    const double exact = unit_ball_volume(n) * std::pow(r, n);
    const auto m = ball_measure(*mu, rng.point(n, -5, 5), r);
    if (!m.contains(exact)) o.fail("n=" + std::to_string(n) + " r=" + fmt(r));
  }
  return o;
}

// max(s_A, s_B) <= s_{A u B} <= s_A + s_B per radius, within interval widths.
inline Outcome base_sandwich(int instances, std::uint64_t seed = kSeed + 5) {
  Outcome o{"base-operator sandwich"};
  Rng rng(seed);
  const auto q = fast_opts();
  for (int t = 0; t < instances; ++t) {
    ++o.instances;
    const MeasurePtr mu = random_measure(rng, 2);
    const Region A = random_primitive(rng, 2), B = random_primitive(rng, 2);
    const Point x = rng.point(2, -0.5, 0.5);
    const double h = rng.uniform(0.0, 2.0);
    const std::vector<double> radii = {0.4, 0.2, 0.1, 0.05};
    const auto sa = base_statistic(*mu, A, x, h, radii, q), sb = base_statistic(*mu, B, x, h, radii, q);
    const auto su = base_statistic(*mu, unite({A, B}), x, h, radii, q);
    for (std::size_t i = 0; i < radii.size(); ++i) {
      const bool low = std::max(sa.s[i].lower, sb.s[i].lower) <= su.s[i].upper;
      const bool high = su.s[i].lower <= sa.s[i].upper + sb.s[i].upper;
      if (!low || !high) {
        o.fail("instance " + std::to_string(t) + " r=" + fmt(radii[i]));
        break;
      }
    }
  }
  return o;
}

// max(ratio_E, ratio_F) <= ratio_{E cap F} <= ratio_E + ratio_F, within widths.
inline Outcome intersection_ratio(int instances, std::uint64_t seed = kSeed + 6) {
  Outcome o{"intersection ratio bound"};
  Rng rng(seed);
  const auto q = fast_opts();
  for (int t = 0; t < instances; ++t) {
    ++o.instances;
    const MeasurePtr mu = random_measure(rng, 2);
    const Region E = random_primitive(rng, 2), F = random_primitive(rng, 2);
    const Point x = rng.point(2, -0.5, 0.5);
    const std::vector<double> radii = {0.4, 0.2, 0.1, 0.05};
    const auto pe = ratio_profile(*mu, E, x, radii, q), pf = ratio_profile(*mu, F, x, radii, q);
    const auto pi = ratio_profile(*mu, intersect({E, F}), x, radii, q);
    for (std::size_t i = 0; i < radii.size(); ++i) {
      const bool low = std::max(pe.ratio[i].lower, pf.ratio[i].lower) <= pi.ratio[i].upper;
      const bool high = pi.ratio[i].lower <= pe.ratio[i].upper + pf.ratio[i].upper;
      if (!low || !high) {
        o.fail("instance " + std::to_string(t) + " r=" + fmt(radii[i]));
        break;
      }
    }
  }
  return o;
}

// A pass at h2 implies a pass at every h1 <= h2 on the same profile.
inline Outcome h_monotonicity(int instances, std::uint64_t seed = kSeed + 7) {
  Outcome o{"h-monotonicity of the superdensity test"};
  Rng rng(seed);
  const auto q = fast_opts();
  const auto radii = RadiiSchedule{0.3, 0.7, 12}.radii();
  const MeasurePtr mu = lebesgue(2);
  for (int t = 0; t < instances; ++t) {
    ++o.instances;
    Region E;
    Point x{0.0, 0.0};
    switch (t % 3) {
      case 0: E = complement(predicate(builtin_predicate("cusp", 2, {rng.uniform(1.2, 4.0)}))); break;
      case 1: E = half_space(rng.point(2, -1, 1), rng.uniform(-0.05, 0.05)); break;
      default: E = ball(rng.point(2, -0.3, 0.3), rng.uniform(0.05, 0.5)); break;
    }
    const auto prof = ratio_profile(*mu, E, x, radii, q);
    DegreeEstimate est;
    try {
      est = estimate_density_degree(prof);
    } catch (const InsufficientData&) {
      continue;
    }
    bool passed = false;
    for (double h = 4.0; h >= -0.001; h -= 0.125) {
      const bool p = superdensity_test(est, prof, h) == TestVerdict::Pass;
      if (passed && !p) {
        o.fail("instance " + std::to_string(t) + " fails at h=" + fmt(h) + " after passing above");
        break;
      }
      passed = passed || p;
    }
  }
  return o;
}

// Exactly-one, nesting, count bounds and determinism of Lambda-distributions.
inline Outcome lambda_properties(int instances, std::uint64_t seed = kSeed + 8) {
  Outcome o{"Lambda-distribution exactly-one"};
  Rng rng(seed);
  for (int t = 0; t < instances; ++t) {
    ++o.instances;
    const int n = rng.integer(1, 3);
    const LatticeSpec spec{n, rng.integer(1, 2), rng.integer(2, 4), 3};
    PointSet pts(n);
    const int count = rng.integer(1, 400);
    for (int i = 0; i < count; ++i) pts.push_back(rng.point(n, -spec.R + 1e-9, spec.R - 1e-9));
    const ExplicitCloud cloud(pts, 0.0);
    const auto d = lambda_distribution(cloud, spec);
    std::string why;
    if (!verify_exactly_one(d, cloud, &why)) {
      o.fail("instance " + std::to_string(t) + ": " + why);
      continue;
    }
    bool ok = true;
    for (std::size_t k = 1; k < d.counts.size(); ++k) ok = ok && d.counts[k] >= d.counts[k - 1];
    const double LK = std::pow(2.0 * spec.R * std::pow(spec.beta, spec.K), n);
    ok = ok && static_cast<double>(d.counts.back()) <= std::min<double>(static_cast<double>(cloud.size()), LK);
    // nesting: the k-cell of every (k+1)-cell is the floor of its index over beta
    for (std::size_t j = 0; j < d.points.size() && ok; ++j)
      for (int k = 1; k < spec.K; ++k) {
        const CellId a = cell_of(d.points[j], k, spec), b = cell_of(d.points[j], k + 1, spec);
        for (int i = 0; i < n; ++i) {
          const std::int64_t up = b.index[i] >= 0 ? b.index[i] / spec.beta : -((-b.index[i] + spec.beta - 1) / spec.beta);
          ok = ok && up == a.index[i];
        }
      }
    const auto d2 = lambda_distribution(cloud, spec);
    ok = ok && d2.points.size() == d.points.size();
    for (std::size_t j = 0; j < d.points.size() && ok; ++j) ok = ok && d.points[j] == d2.points[j];
    if (!ok) o.fail("instance " + std::to_string(t) + ": nesting, count or determinism");
  }
  return o;
}

// beta strictly above the three terms, minimal, and the derived chain holds.
inline Outcome beta_rechecks(int instances, std::uint64_t seed = kSeed + 9) {
  Outcome o{"beta inequality re-checks"};
  Rng rng(seed);
  for (int t = 0; t < instances; ++t) {
    ++o.instances;
    const int n = rng.integer(1, 3);
    const double q = rng.uniform(0.5, n), p = q + rng.uniform(0.0, 1.5);
    const FrameBounds fr{rng.uniform(1.0, 10.0), p, q, rng.uniform(0.2, 1.0)};
    const double mbar = n * p / q - q;
    const double h = std::max(mbar, 0.0) + rng.uniform(0.05, 2.0);
    const int R = rng.integer(1, 2);
    const double eps = rng.uniform(0.01, 0.9);
    ScatterParams sp;
    try {
      sp = scatter_parameters(fr, n, R, eps, h);
    } catch (const HypothesisViolation& e) {
      // legitimate rejections: m <= n, or the smallest admissible beta is past the integer range
      const long double mm = (static_cast<long double>(h) + q) * q / p;
      const bool huge = mm > n && std::pow(std::pow(2.0L * R, n) + 1.0L, 1.0L / (mm - n)) >= 2.0e9L;
      if (mm > n && !huge) o.fail("instance " + std::to_string(t) + ": " + e.what());
      continue;
    }
    const long double m = (static_cast<long double>(h) + q) * q / p;
    const long double terms[3] = {
        std::pow(std::pow(2.0L * R, n) + 1.0L, 1.0L / (m - n)),
        std::pow(static_cast<long double>(eps) / fr.C, 1.0L / q) + std::sqrt(static_cast<long double>(n)),
        std::pow(static_cast<long double>(eps) / (fr.C * std::pow(static_cast<long double>(fr.r_bar), q)), 1.0L / m)};
    bool ok = check_parameters(sp).empty();
    for (const auto& v : terms) ok = ok && static_cast<long double>(sp.beta) > v;
    ScatterParams lower = sp;
    lower.beta = sp.beta - 1;
    ok = ok && (lower.beta < 2 || !check_parameters(lower).empty());
    for (int k = 1; k <= 4; ++k) ok = ok && sp.rho(k) < fr.r_bar;
    ok = ok && sp.frame_chain_limit() < eps;
    if (!ok) o.fail("instance " + std::to_string(t) + " beta=" + std::to_string(sp.beta));
  }
  return o;
}

// sigma(rho) is nonincreasing in rho.
inline Outcome sigma_monotonicity(int instances, std::uint64_t seed = kSeed + 10) {
  Outcome o{"sigma monotonicity"};
  Rng rng(seed);
  const auto q = fast_opts();
  const MeasurePtr disk = restrict_to(lebesgue(2), ball(Point{0.0, 0.0}, 1.0));
  for (int t = 0; t < instances; ++t) {
    ++o.instances;
    MeasurePtr mu;
    Point x;
    if (t % 2 == 0) {
      mu = random_measure(rng, 2);
      x = rng.point(2, -0.5, 0.5);
    } else {
      mu = disk;
      const double a = rng.uniform(0.0, 2.0 * std::numbers::pi), s = rng.uniform(0.5, 1.0);
      x = Point{s * std::cos(a), s * std::sin(a)};
    }
    std::vector<double> rho;
    double v = rng.uniform(0.2, 0.4);
    while (v < 0.97) {
      rho.push_back(v);
      v += rng.uniform(0.03, 0.2);
    }
    const auto radii = RadiiSchedule{rng.uniform(0.05, 0.3), 0.7, 6}.radii();
    const auto s = sigma_profile(*mu, x, radii, rho, 10.0, q);
    for (std::size_t i = 1; i < s.size(); ++i)
      if (s[i] > s[i - 1] * (1.0 + 1e-9)) {
        o.fail("instance " + std::to_string(t) + " rho=" + fmt(rho[i]));
        break;
      }
  }
  return o;
}

// |D_i g_r| <= 2/(r(1-rho)) at 10^4 points, plus plateau and support.
inline Outcome bump_gradient(int instances, std::uint64_t seed = kSeed + 11) {
  Outcome o{"bump gradient bound"};
  Rng rng(seed);
  for (int t = 0; t < instances; ++t) {
    ++o.instances;
    const Bump g = bump(rng.uniform(0.02, 0.98));
    const double r = rng.uniform(0.01, 2.0);
    const Point c = rng.point(2, -1, 1);
    const double bound = 2.0 / (r * (1.0 - g.rho));
    for (int k = 0; k < 10000; ++k) {
      const Point x = c + rng.point(2, -1.1 * r, 1.1 * r);
      const double u = dist(x, c) / r;
      const double v = g.at(x, c, r);
      bool ok = v >= 0.0 && v <= 1.0 && (u >= g.rho || v == 1.0) && (u < 1.0 || v == 0.0);
      for (int i = 0; i < 2; ++i) ok = ok && std::abs(g.partial(x, c, r, i)) <= bound;
      if (!ok) {
        o.fail("instance " + std::to_string(t) + " rho=" + fmt(g.rho) + " u=" + fmt(u));
        break;
      }
    }
  }
  return o;
}

// Pairing with D_i mu against -int D_i phi d mu for density forms.
inline Outcome parts_audit(int instances, std::uint64_t seed = kSeed + 12) {
  Outcome o{"integration-by-parts audit"};
  Rng rng(seed);
  static const char* names[] = {"one", "r2", "one_plus_y1sq", "one_plus_y1_4"};
  for (int t = 0; t < instances; ++t) {
    ++o.instances;
    const auto d = density_form(rng.integer(0, 1), builtin_density(names[rng.integer(0, 3)]));
    const auto test = product_bump(rng.point(2, -1, 1), rng.point(2, 0.05, 0.8));
    const auto a = derivative_pairing(d, test), b = parts_pairing(d, test);
    const double slack = 1e-12 * (1.0 + std::abs(a.estimate));
    if (!overlaps(a, b, slack)) o.fail("instance " + std::to_string(t) + ": " + fmt(a.estimate) + " vs " + fmt(b.estimate));
  }
  return o;
}

struct Suite {
  const char* name;
  std::function<Outcome(int)> run;
};

inline std::vector<Suite> all_suites() {
  return {
      {"regions", [](int n) { return region_identities(n); }},
      {"ball_union", [](int n) { return ball_union_queries(n); }},
      {"additivity", [](int n) { return interval_additivity(n); }},
      {"monotonicity", [](int n) { return interval_monotonicity(n); }},
      {"lebesgue_frame", [](int n) { return lebesgue_frame(n); }},
      {"base_sandwich", [](int n) { return base_sandwich(n); }},
      {"intersection_ratio", [](int n) { return intersection_ratio(n); }},
      {"h_monotonicity", [](int n) { return h_monotonicity(n); }},
      {"lambda", [](int n) { return lambda_properties(n); }},
      {"beta", [](int n) { return beta_rechecks(n); }},
      {"sigma", [](int n) { return sigma_monotonicity(n); }},
      {"bump", [](int n) { return bump_gradient(n); }},
      {"parts", [](int n) { return parts_audit(n); }},
  };
}

}  // namespace props
