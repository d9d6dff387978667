#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "superdensity/scenario.hpp"

using namespace superdensity;
namespace fs = std::filesystem;

namespace {
const char* kSmall = R"({
  "schema_version": 1,
  "seed": 7,
  "measures": {"L2": {"kind": "lebesgue", "dim": 2}},
  "regions": {"cusp": {"kind": "predicate", "name": "cusp", "dim": 2, "params": [2]},
              "E": {"kind": "complement", "of": "cusp"}},
  "tasks": [
    {"id": "disk", "kind": "ball_measure", "measure": "L2", "center": [0, 0], "radii": [1, 0.5],
     "expect": [3.141592653589793, 0.7853981633974483], "max_width": 1e-3},
    {"id": "cusp", "kind": "density_degree", "measure": "L2", "region": "E", "point": [0, 0],
     "radii": {"r_max": 0.5, "gamma": 0.7, "count": 12}, "expect_degree": 1.0, "degree_tol": 0.15}
  ]
})";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

bool mentions(const std::vector<std::string>& v, const std::string& what) {
  for (const auto& s : v)
    if (s.find(what) != std::string::npos) return true;
  return false;
}
}  // namespace

TEST_CASE("bundled scenarios validate") {
  for (const auto& e : fs::directory_iterator(fs::path(SD_SOURCE_DIR) / "scenarios")) {
    if (e.path().extension() != ".json") continue;
    INFO(e.path().string());
    CHECK_NOTHROW(load_scenario(e.path()));
  }
}

TEST_CASE("schema errors") {
  auto doc = nlohmann::json::parse(kSmall);
  CHECK(validate_scenario(doc).empty());

  auto v = doc;
  v["schema_version"] = 2;
  CHECK(mentions(validate_scenario(v), "schema_version"));

  auto u = doc;
  u["tasks"][0]["colour"] = "red";
  const auto pu = validate_scenario(u);
  CHECK(mentions(pu, "unknown field"));
  CHECK(mentions(pu, "disk"));

  auto m = doc;
  m["tasks"][0]["measure"] = "L3";
  CHECK_FALSE(validate_scenario(m).empty());

  auto c = doc;
  c["measures"]["S"] = {{"kind", "surface"}, {"chart", "unregistered"}};
  CHECK_FALSE(validate_scenario(c).empty());

  auto d = doc;
  d["tasks"][0]["center"] = {0, 0, 0};
  CHECK_FALSE(validate_scenario(d).empty());

  auto cyc = doc;
  cyc["regions"]["a"] = {{"kind", "complement"}, {"of", "b"}};
  cyc["regions"]["b"] = {{"kind", "complement"}, {"of", "a"}};
  CHECK(mentions(validate_scenario(cyc), "cycle"));

  CHECK_THROWS_AS(parse_scenario("{not json"), SchemaError);
  CHECK_THROWS_AS(load_scenario("/nonexistent/x.json"), IoError);
}

TEST_CASE("output directory precedence") {
  auto s = parse_scenario(kSmall, "small");
  RunOptions o;
  ::unsetenv(kOutputEnv);
  CHECK(resolve_output_dir(s, o) == fs::path("out") / "small");
  s.doc["output_dir"] = "custom";
  CHECK(resolve_output_dir(s, o) == fs::path("custom"));
  ::setenv(kOutputEnv, "from-env", 1);
  CHECK(resolve_output_dir(s, o) == fs::path("from-env"));
  o.out = "flag";
  CHECK(resolve_output_dir(s, o) == fs::path("flag"));
  ::unsetenv(kOutputEnv);
}

TEST_CASE("small run is deterministic") {
  const auto s = parse_scenario(kSmall, "small");
  const fs::path base = fs::temp_directory_path() / "superdensity-test-scenario";
  fs::remove_all(base);
  RunOptions o;
  o.quiet = true;
  o.out = base / "a";
  const auto a = run_scenario(s, o);
  o.out = base / "b";
  const auto b = run_scenario(s, o);
  CHECK(a.all_pass());
  CHECK(a.exit_code() == 0);
  REQUIRE(a.tasks.size() == 2);
  for (std::size_t i = 0; i < a.tasks.size(); ++i) {
    INFO(a.tasks[i].id << ": " << a.tasks[i].message);
    CHECK(a.tasks[i].verdict == Verdict::Pass);
    for (const auto& f : a.tasks[i].files) CHECK(slurp(base / "a" / f) == slurp(base / "b" / f));
  }
  CHECK(fs::exists(base / "a" / "summary.json"));
  const auto js = summary_json(a);
  CHECK(js.contains("tasks"));
  fs::remove_all(base);
}

TEST_CASE("kind filter and fail-fast") {
  auto doc = nlohmann::json::parse(kSmall);
  doc["tasks"][0]["expect"] = {1.0, 0.7853981633974483};
  const auto s = parse_scenario(doc.dump(), "broken");
  const fs::path base = fs::temp_directory_path() / "superdensity-test-ff";
  RunOptions o;
  o.quiet = true;
  o.out = base;
  o.fail_fast = true;
  const auto r = run_scenario(s, o);
  CHECK(r.exit_code() == 1);
  CHECK(r.tasks[0].verdict == Verdict::Fail);
  CHECK(r.tasks[1].verdict == Verdict::Skipped);
  o.fail_fast = false;
  o.kinds = {"density_degree"};
  const auto k = run_scenario(s, o);
  REQUIRE(k.tasks.size() == 1);
  CHECK(k.tasks[0].id == "cusp");
  CHECK(k.tasks[0].verdict == Verdict::Pass);
  fs::remove_all(base);
}
