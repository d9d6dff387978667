// Acceptance run: one PASS/FAIL line per criterion.
//   acceptance                 all criteria
//   acceptance --criterion N   just N (exit status 0 iff it passed)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "properties.hpp"
#include "superdensity/format.hpp"
#include "superdensity/measures.hpp"
#include "superdensity/scatter.hpp"
#include "superdensity/scenario.hpp"
#include "superdensity/schwarz.hpp"
#include "superdensity/surfaces.hpp"

using namespace superdensity;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Check {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [miss]");
    pass = pass && ok;
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

fs::path work_dir() {
  if (const char* e = std::getenv("SUPERDENSITY_ACCEPTANCE_DIR")) return e;
  return fs::temp_directory_path() / "superdensity-acceptance";
}

fs::path scenario_path(const std::string& name) { return fs::path(SD_SOURCE_DIR) / "scenarios" / (name + ".json"); }

RunSummary run_bundled(const std::string& name, const fs::path& out) {
  RunOptions o;
  o.quiet = true;
  o.out = out;
  return run_scenario(load_scenario(scenario_path(name)), o);
}

const TaskResult& task(const RunSummary& s, const std::string& id) {
  for (const auto& t : s.tasks)
    if (t.id == id) return t;
  throw Error("task " + id + " missing from " + s.scenario);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

QuadratureOptions quad(double tol) {
  QuadratureOptions q;
  q.tol = tol;
  return q;
}

Check criterion1() {
  Check c;
  const auto t0 = Clock::now();
  const auto m = ball_measure(*lebesgue(2), Point{0.0, 0.0}, 1.0, quad(1e-4));
  const double s = seconds_since(t0);
  c.require(m.contains(std::numbers::pi), "[" + fmt(m.lower) + ", " + fmt(m.upper) + "] contains pi");
  c.require(m.width() <= 1e-3, "width " + fmt(m.width()) + " <= 1e-3");
  c.require(s <= 5.0, "runtime " + fmt(s) + " s <= 5");
  return c;
}

Check criterion2() {
  Check c;
  const auto mu = surface_measure(builtin_chart("diagonal"));
  for (const Point& x : {Point{0.0, 0.0}, Point{0.2, 0.2}, Point{-0.3, -0.3}}) {
    for (double r : {0.5, 0.25, 0.1}) {
      const auto m = ball_measure(*mu, x, r, quad(1e-4));
      const bool ok = m.lower >= 2 * r * 0.98 && m.upper <= 2 * r * 1.02 && m.contains(2 * r);
      if (!ok) c.require(false, "x=" + fmt(x) + " r=" + fmt(r) + " [" + fmt(m.lower) + ", " + fmt(m.upper) + "]");
    }
  }
  if (c.pass) c.require(true, "all 9 enclosures contain 2r within 2% (x in {0, 0.2, -0.3} on the diagonal)");
  return c;
}

Check criterion3() {
  Check c;
  const auto t0 = Clock::now();
  double worst = INFINITY;
  for (int j = 1; j <= 10; ++j) {
    const auto v = diagonal_counterexample(j, 1e-6);
    worst = std::min(worst, std::abs(v.value) - v.bound);
    if (!v.ok()) c.require(false, "j=" + std::to_string(j) + " |value| " + fmt(std::abs(v.value)) + " < " + fmt(v.bound));
  }
  const double s = seconds_since(t0);
  c.require(worst >= -1e-3, "min over j=1..10 of |value| - bound = " + fmt(worst));
  c.require(s <= 30.0, "runtime " + fmt(s) + " s <= 30");
  return c;
}

Check criterion4() {
  Check c;
  const auto p = scatter_parameters(FrameBounds{std::numbers::pi, 2, 2, 1}, 2, 1, 0.1, 1.0);
  c.require(p.m == 3.0 && p.beta == 6, "m=" + fmt(p.m) + " beta=" + std::to_string(p.beta));
  c.require(std::abs(p.lower_bound_constant - 1.49e-5) <= 0.01e-5, "constant " + fmt(p.lower_bound_constant));
  const auto t0 = Clock::now();
  const auto s = run_bundled("scatter-lebesgue", work_dir() / "c4");
  const double sec = seconds_since(t0);
  const auto& t = task(s, "scatter");
  c.require(t.verdict == Verdict::Pass, t.message + " (" + std::to_string(t.numbers.value("samples", 0)) + " samples)");
  c.require(sec <= 300.0, "runtime " + fmt(sec) + " s <= 300");
  return c;
}

Check criterion5() {
  Check c;
  const auto s = run_bundled("thin-lebesgue", work_dir() / "c5");
  const auto& t = task(s, "thin");
  c.require(t.verdict == Verdict::Pass, t.message);
  return c;
}

Check criterion6() {
  Check c;
  const auto s = run_bundled("density-cusp", work_dir() / "c6");
  for (const char* id : {"alpha2", "alpha3", "alpha4"}) {
    const auto& t = task(s, id);
    c.require(t.verdict == Verdict::Pass, std::string(id) + " " + t.message);
  }
  return c;
}

Check criterion7() {
  Check c;
  const auto s = run_bundled("pullback-charts", work_dir() / "c7");
  for (const auto& t : s.tasks) c.require(t.verdict == Verdict::Pass, t.id + " " + t.message);
  return c;
}

Check criterion8() {
  Check c;
  const auto mu = lebesgue(2);
  const auto q = quad(1e-6);
  const auto cl = schwarz_estimator(*mu, builtin_field("sin_product"), 0, 1, Point{0.5, 0.5}, 0.05, 0.5, q);
  c.require(cl.gamma.contains(0.0) && cl.gamma.width() <= 1e-3,
            "classical [" + fmt(cl.gamma.lower) + ", " + fmt(cl.gamma.upper) + "]");
  const auto cu = schwarz_estimator(*mu, builtin_field("curl"), 0, 1, Point{0.3, -0.4}, 0.05, 0.5, q);
  c.require(cu.gamma.contains(2.0) && cu.gamma.lower >= 2.0 - 1e-3 && cu.gamma.upper <= 2.0 + 1e-3,
            "curl [" + fmt(cu.gamma.lower) + ", " + fmt(cu.gamma.upper) + "]");
  const auto s = run_bundled("schwarz-check", work_dir() / "c8");
  const auto& d = task(s, "disk-boundary");
  const bool reported = d.verdict == Verdict::Pass && d.message.find("(iv) FAIL") != std::string::npos;
  c.require(reported, "disk at (1,0): " + d.message);
  return c;
}

Check criterion9() {
  Check c;
  const auto t0 = Clock::now();
  for (const auto& suite : props::all_suites()) {
    const auto o = suite.run(100);
    c.require(o.ok() && o.instances == 100,
              std::string(suite.name) + " " + std::to_string(o.instances - o.failures) + "/" +
                  std::to_string(o.instances) + (o.first.empty() ? "" : " (" + o.first + ")"));
  }
  const double s = seconds_since(t0);
  c.require(s <= 600.0, "runtime " + fmt(s) + " s <= 600");
  return c;
}

Check criterion10() {
  Check c;
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(fs::path(SD_SOURCE_DIR) / "scenarios"))
    if (e.path().extension() == ".json") names.push_back(e.path().stem().string());
  std::sort(names.begin(), names.end());
  std::size_t files = 0;
  for (const auto& n : names) {
    const auto a = run_bundled(n, work_dir() / "c10a" / n);
    const auto b = run_bundled(n, work_dir() / "c10b" / n);
    for (std::size_t i = 0; i < a.tasks.size(); ++i) {
      for (const auto& f : a.tasks[i].files) {
        ++files;
        if (slurp(a.out_dir / f) != slurp(b.out_dir / f)) c.require(false, n + "/" + f + " differs");
      }
    }
  }
  c.require(files > 0, std::to_string(names.size()) + " scenarios, " + std::to_string(files) + " CSV files byte-identical");
  return c;
}

const std::map<int, std::function<Check()>> kCriteria = {
    {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},  {5, criterion5},
    {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10},
};

bool run_one(int n) {
  const auto t0 = Clock::now();
  Check c;
  try {
    c = kCriteria.at(n)();
  } catch (const std::exception& e) {
    c.pass = false;
    c.detail = std::string("error: ") + e.what();
  }
  std::printf("criterion %d: %s (%.1f s) %s\n", n, c.pass ? "PASS" : "FAIL", seconds_since(t0), c.detail.c_str());
  std::fflush(stdout);
  return c.pass;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      which.push_back(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion N]...\n");
      return 2;
    }
  }
  if (which.empty())
    for (const auto& [n, f] : kCriteria) which.push_back(n);
  int failed = 0;
  for (int n : which) {
    if (!kCriteria.count(n)) {
      std::fprintf(stderr, "no criterion %d\n", n);
      return 2;
    }
    failed += run_one(n) ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
