#include "superdensity/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "superdensity/density.hpp"
#include "superdensity/format.hpp"
#include "superdensity/lattice.hpp"
#include "superdensity/regions.hpp"
#include "superdensity/scatter.hpp"
#include "superdensity/schwarz.hpp"
#include "superdensity/surfaces.hpp"

namespace superdensity {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
  return s;
}

}  // namespace

SchemaError::SchemaError(std::vector<std::string> problems)
    : Error("scenario schema error: " + join(problems, "; ")), problems_(std::move(problems)) {}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Error: return "error";
    case Verdict::Info: return "info";
    case Verdict::Skipped: return "skipped";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Schema

namespace {

enum class T { Num, Int, Str, Bool, NumArr, Obj, Arr, Map };

struct F {
  const char* name;
  T type;
  bool required;
  const char* sub = nullptr;  // nested spec for Obj / element spec for Arr
};

using Spec = std::vector<F>;

const std::map<std::string, Spec>& nested_specs() {
  static const std::map<std::string, Spec> s = {
      {"box", {{"lo", T::NumArr, true}, {"hi", T::NumArr, true}}},
      {"radii", {{"r_max", T::Num, true}, {"gamma", T::Num, true}, {"count", T::Int, true}}},
      {"frame", {{"C", T::Num, true}, {"p", T::Num, true}, {"q", T::Num, true}, {"r_bar", T::Num, true}}},
      {"cloud", {{"spacing", T::Num, true}, {"origin", T::NumArr, false}}},
      {"tolerances",
       {{"tol", T::Num, false}, {"max_depth", T::Int, false}, {"cell_budget", T::Int, false},
        {"mc_samples", T::Int, false}}},
      {"gamma_check", {{"r", T::Num, true}, {"max_width", T::Num, true}}},
      {"derivative",
       {{"kind", T::Str, true}, {"axis", T::Int, true}, {"density", T::Str, false}, {"center", T::NumArr, false},
        {"radius", T::Num, false}}},
      {"chart", {{"builtin", T::Str, true}, {"params", T::NumArr, false}}},
  };
  return s;
}

const std::map<std::string, Spec>& measure_specs() {
  static const std::map<std::string, Spec> s = {
      {"lebesgue", {{"dim", T::Int, true}, {"density", T::Str, false}, {"box", T::Obj, false, "box"}}},
      {"surface", {{"chart", T::Str, true}}},
      {"restrict", {{"base", T::Str, true}, {"region", T::Str, true}}},
      {"dirac", {{"atom", T::NumArr, true}}},
      {"sum", {{"of", T::Arr, true}}},
  };
  return s;
}

const std::map<std::string, Spec>& region_specs() {
  static const std::map<std::string, Spec> s = {
      {"box", {{"lo", T::NumArr, true}, {"hi", T::NumArr, true}}},
      {"ball", {{"center", T::NumArr, true}, {"radius", T::Num, true}}},
      {"half_space", {{"normal", T::NumArr, true}, {"offset", T::Num, true}}},
      {"predicate", {{"name", T::Str, true}, {"dim", T::Int, true}, {"params", T::NumArr, false}}},
      {"complement", {{"of", T::Str, true}}},
      {"union", {{"of", T::Arr, true}}},
      {"intersection", {{"of", T::Arr, true}}},
      {"whole", {{"dim", T::Int, true}}},
      {"empty", {{"dim", T::Int, true}}},
      {"pullback", {{"chart", T::Str, true}, {"of", T::Str, true}}},
  };
  return s;
}

const std::map<std::string, Spec>& task_specs() {
  static const std::map<std::string, Spec> s = {
      {"ball_measure",
       {{"measure", T::Str, true}, {"center", T::NumArr, true}, {"radii", T::NumArr, true},
        {"expect", T::NumArr, false}, {"rel_tol", T::Num, false}, {"max_width", T::Num, false}}},
      {"density_degree",
       {{"measure", T::Str, true}, {"region", T::Str, true}, {"point", T::NumArr, true},
        {"radii", T::Obj, true, "radii"}, {"expect_degree", T::Num, false}, {"degree_tol", T::Num, false},
        {"expect_class", T::Str, false}, {"h", T::Num, false}}},
      {"scatter",
       {{"measure", T::Str, true}, {"omega", T::Obj, true, "box"}, {"frame", T::Obj, true, "frame"},
        {"epsilon", T::Num, true}, {"h", T::Num, true}, {"R", T::Int, true}, {"k_max", T::Int, true},
        {"cloud", T::Obj, true, "cloud"}, {"samples", T::Int, true}, {"structured", T::Bool, false},
        {"measure_budget", T::Int, false}}},
      {"thin_set",
       {{"measure", T::Str, true}, {"frame", T::Obj, true, "frame"}, {"omega", T::Obj, true, "box"},
        {"omega_prime", T::Obj, true, "box"}, {"R", T::Int, true}, {"H", T::Num, true}, {"j_max", T::Int, true},
        {"grid_spacing", T::Num, false}, {"level_cap", T::Int, false}, {"samples", T::Int, false},
        {"radii_count", T::Int, false}, {"slope_margin", T::Num, false}, {"window_lo", T::Num, false},
        {"window_hi", T::Num, false}}},
      {"pullback",
       {{"chart", T::Str, true}, {"region", T::Str, true}, {"y", T::NumArr, true}, {"radii", T::Obj, true, "radii"},
        {"match_tol", T::Num, false}}},
      {"chart_frame", {{"chart", T::Str, true}, {"per_axis", T::Int, false}, {"audit_count", T::Int, false}}},
      {"schwarz_check",
       {{"measure", T::Str, true}, {"derivatives", T::Arr, true, "derivative"}, {"point", T::NumArr, true},
        {"radii", T::Obj, true, "radii"}, {"rho_grid", T::NumArr, true}, {"region", T::Str, false},
        {"field", T::Str, false}, {"p", T::Int, false}, {"q", T::Int, false}, {"row_rho", T::Num, false},
        {"expect_plausible", T::Bool, false}, {"expect_hypothesis_iv", T::Bool, false},
        {"gamma_check", T::Obj, false, "gamma_check"}}},
      {"counterexample", {{"jmax", T::Int, true}, {"tol", T::Num, false}}},
  };
  return s;
}

const Spec& top_spec() {
  static const Spec s = {
      {"schema_version", T::Int, true}, {"description", T::Str, false}, {"seed", T::Int, false},
      {"tolerances", T::Obj, false, "tolerances"}, {"output_dir", T::Str, false}, {"measures", T::Map, false},
      {"regions", T::Map, false}, {"charts", T::Map, false}, {"tasks", T::Arr, true},
  };
  return s;
}

const char* type_name(T t) {
  switch (t) {
    case T::Num: return "a number";
    case T::Int: return "an integer";
    case T::Str: return "a string";
    case T::Bool: return "a boolean";
    case T::NumArr: return "an array of numbers";
    case T::Obj: return "an object";
    case T::Arr: return "an array";
    case T::Map: return "an object";
  }
  return "?";
}

bool type_ok(const json& v, T t) {
  switch (t) {
    case T::Num: return v.is_number();
    case T::Int: return v.is_number_integer();
    case T::Str: return v.is_string();
    case T::Bool: return v.is_boolean();
    case T::NumArr:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); });
    case T::Obj:
    case T::Map: return v.is_object();
    case T::Arr: return v.is_array();
  }
  return false;
}

// Checks the keys of one object against a spec; `extra` names keys handled by the caller.
void check_object(const json& obj, const Spec& spec, const std::string& where, std::vector<std::string>& out,
                  const std::vector<std::string>& extra = {}) {
  if (!obj.is_object()) {
    out.push_back(where + ": must be an object");
    return;
  }
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool known = std::any_of(spec.begin(), spec.end(), [&](const F& f) { return it.key() == f.name; }) ||
                       std::find(extra.begin(), extra.end(), it.key()) != extra.end();
    if (!known) out.push_back(where + ": unknown field '" + it.key() + "'");
  }
  for (const F& f : spec) {
    const auto it = obj.find(f.name);
    if (it == obj.end()) {
      if (f.required) out.push_back(where + ": missing required field '" + f.name + "'");
      continue;
    }
    if (!type_ok(*it, f.type)) {
      out.push_back(where + ": field '" + f.name + "' must be " + type_name(f.type));
      continue;
    }
    if (f.sub && f.type == T::Obj) check_object(*it, nested_specs().at(f.sub), where + "." + f.name, out);
    if (f.sub && f.type == T::Arr)
      for (std::size_t i = 0; i < it->size(); ++i)
        check_object((*it)[i], nested_specs().at(f.sub), where + "." + f.name + "[" + std::to_string(i) + "]", out);
  }
}

std::vector<double> nums(const json& v) { return v.get<std::vector<double>>(); }
Point point_of(const json& v) {
  const auto c = nums(v);
  if (c.empty() || c.size() > static_cast<std::size_t>(kMaxDim)) throw InvalidArgument("point has bad dimension");
  return Point(std::span<const double>(c));
}
Box box_of(const json& v) {
  const Point lo = point_of(v.at("lo")), hi = point_of(v.at("hi"));
  if (lo.dim() != hi.dim()) throw InvalidArgument("box corners differ in dimension");
  for (int i = 0; i < lo.dim(); ++i)
    if (!(lo[i] < hi[i])) throw InvalidArgument("box needs lo < hi on every axis");
  return {lo, hi};
}
RadiiSchedule radii_of(const json& v) {
  RadiiSchedule r{v.at("r_max").get<double>(), v.at("gamma").get<double>(), v.at("count").get<int>()};
  if (!(r.r_max > 0.0) || !(r.gamma > 0.0 && r.gamma < 1.0) || r.count < 3)
    throw InvalidArgument("radii need r_max > 0, gamma in (0,1) and count >= 3");
  return r;
}
FrameBounds frame_of(const json& v) {
  return {v.at("C").get<double>(), v.at("p").get<double>(), v.at("q").get<double>(), v.at("r_bar").get<double>()};
}
template <class V>
V get_or(const json& obj, const char* key, V fallback) {
  const auto it = obj.find(key);
  return it == obj.end() ? fallback : it->get<V>();
}

// Lazily built objects named in the scenario; also the reference checker.
class Registry {
 public:
  explicit Registry(const json& doc) : doc_(doc) {}

  std::shared_ptr<const SurfaceChart> chart(const std::string& name) {
    if (auto it = charts_.find(name); it != charts_.end()) return it->second;
    const json& c = entry("charts", name, "chart");
    auto ch = builtin_chart(c.at("builtin").get<std::string>(), get_or(c, "params", std::vector<double>{}));
    charts_[name] = ch;
    return ch;
  }

  MeasurePtr measure(const std::string& name) {
    if (auto it = measures_.find(name); it != measures_.end()) return it->second;
    Guard g(this, "measure", name);
    const json& m = entry("measures", name, "measure");
    const std::string kind = m.at("kind");
    MeasurePtr out;
    if (kind == "lebesgue") {
      const int n = m.at("dim");
      if (n < 1 || n > kMaxDim) throw InvalidArgument("lebesgue dimension out of range");
      Density d = builtin_density(get_or<std::string>(m, "density", "one"));
      out = m.contains("box") ? lebesgue_on(n, std::move(d), box_of(m.at("box"))) : lebesgue(n, std::move(d));
    } else if (kind == "surface") {
      out = surface_measure(chart(m.at("chart")));
    } else if (kind == "restrict") {
      out = restrict_to(measure(m.at("base")), region(m.at("region")));
    } else if (kind == "dirac") {
      out = dirac(point_of(m.at("atom")));
    } else {
      std::vector<MeasurePtr> parts;
      for (const auto& p : m.at("of")) parts.push_back(measure(p.get<std::string>()));
      out = sum(std::move(parts));
    }
    measures_[name] = out;
    return out;
  }

  Region region(const std::string& name) {
    if (auto it = regions_.find(name); it != regions_.end()) return it->second;
    Guard g(this, "region", name);
    const json& r = entry("regions", name, "region");
    const std::string kind = r.at("kind");
    Region out;
    if (kind == "box") {
      const Box b = box_of(r);
      out = box(b.lo, b.hi);
    } else if (kind == "ball") {
      const double rad = r.at("radius");
      if (!(rad > 0.0)) throw InvalidArgument("ball radius must be positive");
      out = ball(point_of(r.at("center")), rad);
    } else if (kind == "half_space") {
      out = half_space(point_of(r.at("normal")), r.at("offset").get<double>());
    } else if (kind == "predicate") {
      out = predicate(
          builtin_predicate(r.at("name"), r.at("dim").get<int>(), get_or(r, "params", std::vector<double>{})));
    } else if (kind == "complement") {
      out = complement(region(r.at("of")));
    } else if (kind == "union" || kind == "intersection") {
      std::vector<Region> parts;
      for (const auto& p : r.at("of")) parts.push_back(region(p.get<std::string>()));
      if (parts.empty()) throw InvalidArgument("empty region list");
      for (const auto& p : parts)
        if (p->dim() != parts.front()->dim()) throw DimensionMismatch(parts.front()->dim(), p->dim());
      out = kind == "union" ? unite(std::move(parts)) : intersect(std::move(parts));
    } else if (kind == "whole") {
      out = whole_space(r.at("dim").get<int>());
    } else if (kind == "empty") {
      out = empty_region(r.at("dim").get<int>());
    } else {
      out = pullback(chart(r.at("chart")), region(r.at("of")));
    }
    regions_[name] = out;
    return out;
  }

 private:
  const json& entry(const char* section, const std::string& name, const char* what) {
    const auto s = doc_.find(section);
    if (s == doc_.end() || !s->contains(name))
      throw InvalidArgument(std::string("unregistered ") + what + " '" + name + "'");
    return (*s)[name];
  }

  struct Guard {
    Registry* r;
    std::string key;
    Guard(Registry* reg, const char* what, const std::string& name) : r(reg), key(std::string(what) + ":" + name) {
      if (!r->active_.insert(key).second) throw InvalidArgument("reference cycle through " + std::string(what) + " '" + name + "'");
    }
    ~Guard() { r->active_.erase(key); }
  };

  const json& doc_;
  std::map<std::string, MeasurePtr> measures_;
  std::map<std::string, Region> regions_;
  std::map<std::string, std::shared_ptr<const SurfaceChart>> charts_;
  std::set<std::string> active_;
};

bool in_list(const std::string& s, const std::vector<std::string>& names) {
  return std::find(names.begin(), names.end(), s) != names.end();
}

// Reference and value checks of one task that need the built objects.
void check_task_semantics(const json& t, Registry& reg, std::vector<std::string>& out, const std::string& where) {
  const std::string kind = t.at("kind");
  const auto fail = [&](const std::string& field, const std::string& msg) {
    out.push_back(where + ": field '" + field + "': " + msg);
  };
  const auto try_field = [&](const std::string& field, const std::function<void()>& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      fail(field, e.what());
    }
  };
  int mdim = -1;
  if (t.contains("measure")) try_field("measure", [&] { mdim = reg.measure(t.at("measure"))->dim(); });
  const auto dim_check = [&](const char* field, int want) {
    if (want < 0 || !t.contains(field)) return;
    const auto n = t.at(field).size();
    if (static_cast<int>(n) != want)
      fail(field, "has dimension " + std::to_string(n) + ", expected " + std::to_string(want));
  };
  if (t.contains("region")) {
    try_field("region", [&] {
      const Region r = reg.region(t.at("region"));
      if (mdim >= 0 && r->dim() != mdim) throw DimensionMismatch(mdim, r->dim());
    });
  }
  if (t.contains("chart")) try_field("chart", [&] { reg.chart(t.at("chart")); });
  if (t.contains("radii") && t.at("radii").is_object()) try_field("radii", [&] { radii_of(t.at("radii")); });
  for (const char* b : {"omega", "omega_prime"})
    if (t.contains(b)) try_field(b, [&] {
        const Box bx = box_of(t.at(b));
        if (mdim >= 0 && bx.dim() != mdim) throw DimensionMismatch(mdim, bx.dim());
      });
  dim_check("center", mdim);
  dim_check("point", mdim);

  if (kind == "ball_measure") {
    if (t.contains("expect") && t.at("expect").size() != t.at("radii").size())
      fail("expect", "must have one value per radius");
    for (double r : nums(t.at("radii")))
      if (!(r > 0.0)) fail("radii", "radii must be positive");
  } else if (kind == "density_degree") {
    if (t.contains("expect_class")) {
      const std::string c = t.at("expect_class");
      if (!in_list(c, {"NotDensityPoint", "FiniteDegree", "LocallyInterior"})) fail("expect_class", "unknown class '" + c + "'");
    }
  } else if (kind == "scatter") {
    if (t.at("k_max").get<int>() < 1) fail("k_max", "must be at least 1");
    if (t.at("samples").get<int>() < 1) fail("samples", "must be at least 1");
    if (!(t.at("cloud").at("spacing").get<double>() > 0.0)) fail("cloud", "spacing must be positive");
  } else if (kind == "thin_set") {
    if (t.at("j_max").get<int>() < 1) fail("j_max", "must be at least 1");
  } else if (kind == "pullback") {
    try_field("y", [&] {
      const auto c = reg.chart(t.at("chart"));
      if (static_cast<int>(t.at("y").size()) != c->k) throw DimensionMismatch(c->k, static_cast<int>(t.at("y").size()));
      const Region r = reg.region(t.at("region"));
      if (r->dim() != c->n) throw DimensionMismatch(c->n, r->dim());
    });
  } else if (kind == "schwarz_check") {
    const auto& d = t.at("derivatives");
    if (d.size() != 2) fail("derivatives", "needs exactly two entries (D_p mu, D_q mu)");
    for (std::size_t i = 0; i < d.size(); ++i) {
      const json& e = d[i];
      if (!e.is_object() || !e.contains("kind") || !e.at("kind").is_string()) continue;
      const std::string dk = e.at("kind");
      const std::string f = "derivatives[" + std::to_string(i) + "]";
      if (dk == "density_form") {
        if (!e.contains("density")) fail(f, "density_form needs 'density'");
        else if (!in_list(e.at("density"), builtin_density_names())) fail(f, "unknown density '" + e.at("density").get<std::string>() + "'");
      } else if (dk == "disk_flux") {
        if (!e.contains("center") || !e.contains("radius")) fail(f, "disk_flux needs 'center' and 'radius'");
      } else {
        fail(f, "unknown derivative kind '" + dk + "'");
      }
    }
    if (t.contains("field") && !in_list(t.at("field"), builtin_field_names()))
      fail("field", "unknown field '" + t.at("field").get<std::string>() + "'");
    if (t.contains("gamma_check") && !t.contains("field")) fail("gamma_check", "requires 'field'");
    if (mdim != 2 && mdim >= 0) fail("measure", "schwarz checks are planar");
    for (double r : nums(t.at("rho_grid")))
      if (!(r > 0.0 && r < 1.0)) fail("rho_grid", "values must lie in (0,1)");
  } else if (kind == "counterexample") {
    if (t.at("jmax").get<int>() < 1) fail("jmax", "must be at least 1");
  }
}

}  // namespace

std::vector<std::string> validate_scenario(const json& doc) {
  std::vector<std::string> out;
  if (!doc.is_object()) return {"scenario: top level must be an object"};
  if (doc.contains("schema_version") && doc.at("schema_version").is_number_integer() &&
      doc.at("schema_version").get<int>() != kSchemaVersion)
    return {"scenario: unsupported schema_version " + doc.at("schema_version").dump() + " (this build reads version " +
            std::to_string(kSchemaVersion) + ")"};
  check_object(doc, top_spec(), "scenario", out);

  const auto section = [&](const char* name, const std::map<std::string, Spec>* kinds, bool chart) {
    const auto it = doc.find(name);
    if (it == doc.end() || !it->is_object()) return;
    for (auto e = it->begin(); e != it->end(); ++e) {
      const std::string where = std::string(name) + "." + e.key();
      if (chart) {
        check_object(*e, nested_specs().at("chart"), where, out);
        if (e->is_object() && e->contains("builtin") && e->at("builtin").is_string() &&
            !in_list(e->at("builtin"), builtin_chart_names()))
          out.push_back(where + ": unknown builtin chart '" + e->at("builtin").get<std::string>() + "'");
        continue;
      }
      if (!e->is_object() || !e->contains("kind") || !e->at("kind").is_string()) {
        out.push_back(where + ": missing string field 'kind'");
        continue;
      }
      const std::string kind = e->at("kind");
      const auto k = kinds->find(kind);
      if (k == kinds->end()) {
        out.push_back(where + ": unknown kind '" + kind + "'");
        continue;
      }
      check_object(*e, k->second, where, out, {"kind"});
    }
  };
  section("measures", &measure_specs(), false);
  section("regions", &region_specs(), false);
  section("charts", nullptr, true);
  if (!out.empty()) return out;

  Registry reg(doc);
  for (const char* sec : {"measures", "regions", "charts"}) {
    const auto it = doc.find(sec);
    if (it == doc.end()) continue;
    for (auto e = it->begin(); e != it->end(); ++e) {
      try {
        if (std::string(sec) == "measures") reg.measure(e.key());
        else if (std::string(sec) == "regions") reg.region(e.key());
        else reg.chart(e.key());
      } catch (const std::exception& ex) {
        out.push_back(std::string(sec) + "." + e.key() + ": " + ex.what());
      }
    }
  }

  const auto tasks = doc.find("tasks");
  if (tasks == doc.end() || !tasks->is_array()) return out;
  if (tasks->empty()) out.push_back("scenario: 'tasks' is empty");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < tasks->size(); ++i) {
    const json& t = (*tasks)[i];
    std::string where = "tasks[" + std::to_string(i) + "]";
    if (!t.is_object() || !t.contains("id") || !t.at("id").is_string() || !t.contains("kind") ||
        !t.at("kind").is_string()) {
      out.push_back(where + ": needs string fields 'id' and 'kind'");
      continue;
    }
    const std::string id = t.at("id");
    where += " (id '" + id + "')";
    if (id.empty() || id.find_first_of("/\\ ") != std::string::npos) out.push_back(where + ": id must be a plain file name");
    if (!ids.insert(id).second) out.push_back(where + ": duplicate task id");
    const auto k = task_specs().find(t.at("kind"));
    if (k == task_specs().end()) {
      out.push_back(where + ": unknown task kind '" + t.at("kind").get<std::string>() + "'");
      continue;
    }
    const std::size_t before = out.size();
    check_object(t, k->second, where, out, {"id", "kind", "description"});
    if (out.size() == before) check_task_semantics(t, reg, out, where);
  }
  return out;
}

Scenario parse_scenario(const std::string& text, const std::string& name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError({std::string("scenario: invalid JSON: ") + e.what()});
  }
  auto problems = validate_scenario(doc);
  if (!problems.empty()) throw SchemaError(std::move(problems));
  return {fs::path(), name, std::move(doc)};
}

Scenario load_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read scenario '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read error on '" + path.string() + "'");
  Scenario s = parse_scenario(ss.str(), path.stem().string());
  s.source = path;
  return s;
}

fs::path resolve_output_dir(const Scenario& s, const RunOptions& opts) {
  if (opts.out) return *opts.out;
  if (const char* env = std::getenv(kOutputEnv); env && *env) return fs::path(env);
  if (s.doc.contains("output_dir")) return fs::path(s.doc.at("output_dir").get<std::string>());
  return fs::path("out") / s.name;
}

bool RunSummary::all_pass() const {
  return std::all_of(tasks.begin(), tasks.end(),
                     [](const TaskResult& t) { return t.verdict == Verdict::Pass || t.verdict == Verdict::Info; });
}

// ---------------------------------------------------------------------------
// Task runners

namespace {

struct Ctx {
  Registry& reg;
  const json& task;
  QuadratureOptions q;
  std::uint64_t seed;
  fs::path dir;
  const RunOptions& ro;
  TaskResult& res;
  std::mutex& reg_mutex;

  std::ofstream open(const std::string& suffix) {
    const std::string file = res.id + (suffix.empty() ? "" : "_" + suffix) + ".csv";
    std::ofstream os(dir / file);
    if (!os) throw IoError("cannot write '" + (dir / file).string() + "'");
    res.files.push_back(file);
    return os;
  }
  MeasurePtr measure(const char* key = "measure") {
    std::lock_guard<std::mutex> lock(reg_mutex);
    return reg.measure(task.at(key));
  }
  Region region(const char* key = "region") {
    std::lock_guard<std::mutex> lock(reg_mutex);
    return reg.region(task.at(key));
  }
  std::shared_ptr<const SurfaceChart> chart() {
    std::lock_guard<std::mutex> lock(reg_mutex);
    return reg.chart(task.at("chart"));
  }
  void verdict(bool ok, const std::string& msg) {
    res.verdict = ok ? Verdict::Pass : Verdict::Fail;
    res.message = msg;
  }
};

json interval_json(const MeasureInterval& m) {
  return {{"lower", m.lower}, {"upper", m.upper}, {"estimate", m.estimate}, {"flags", m.flags}};
}

json density_params_json(const DensityParams& p) {
  return {{"fit_points", p.fit_points}, {"theta_dense", p.theta_dense}, {"slope_cutoff", p.slope_cutoff},
          {"interior_upper", p.interior_upper}, {"margin", p.margin}, {"ratio_floor", p.ratio_floor},
          {"min_fit_r2", p.min_fit_r2}, {"decade", p.decade}};
}

void run_ball_measure(Ctx& c) {
  const MeasurePtr mu = c.measure();
  const Point x = point_of(c.task.at("center"));
  const auto radii = nums(c.task.at("radii"));
  const bool has_expect = c.task.contains("expect");
  const auto expect = has_expect ? nums(c.task.at("expect")) : std::vector<double>{};
  const double rel = get_or(c.task, "rel_tol", 0.0);
  const double max_width = get_or(c.task, "max_width", std::numeric_limits<double>::infinity());
  auto os = c.open("");
  os << "center,r,lower,upper,estimate,flags" << (has_expect ? ",expect,ok" : "") << '\n';
  bool ok = true;
  json rows = json::array();
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const MeasureInterval m = ball_measure(*mu, x, radii[i], c.q);
    os << fmt(x) << ',' << fmt(radii[i]) << ',' << fmt(m.lower) << ',' << fmt(m.upper) << ',' << fmt(m.estimate) << ','
       << m.flags;
    bool row_ok = m.width() <= max_width;
    if (has_expect) {
      const double slack = rel * std::abs(expect[i]);
      row_ok = row_ok && m.lower - slack <= expect[i] && expect[i] <= m.upper + slack;
      os << ',' << fmt(expect[i]) << ',' << (row_ok ? 1 : 0);
    }
    os << '\n';
    ok = ok && row_ok;
    rows.push_back({{"r", radii[i]}, {"interval", interval_json(m)}});
  }
  c.res.numbers["rows"] = rows;
  c.res.thresholds = {{"rel_tol", rel}, {"max_width", max_width}, {"tol", c.q.tol}};
  if (has_expect || c.task.contains("max_width"))
    c.verdict(ok, ok ? "every interval meets its target" : "an interval misses its target");
  else
    c.res.message = "measured " + std::to_string(radii.size()) + " radii";
}

void run_density_degree(Ctx& c) {
  const MeasurePtr mu = c.measure();
  const Region E = c.region();
  const Point x = point_of(c.task.at("point"));
  const RadiiSchedule rs = radii_of(c.task.at("radii"));
  const DensityParams params;
  const DensityProfile prof = ratio_profile(*mu, E, x, rs.radii(), c.q);
  const DegreeEstimate est = estimate_density_degree(prof, params);
  {
    auto os = c.open("profile");
    write_profile_csv(os, prof);
  }
  {
    auto os = c.open("estimate");
    write_estimate_csv(os, x, est);
  }
  c.res.numbers = {{"class", to_string(est.classification)}, {"slope", est.slope}, {"r2", est.r2},
                   {"value", est.value()}, {"fit_count", est.fit_count}};
  c.res.thresholds = density_params_json(params);
  c.res.thresholds["window"] = {est.window_lo, est.window_hi};
  bool verdict_bearing = false, ok = true;
  std::string msg = std::string(to_string(est.classification)) + " slope " + fmt(est.slope);
  if (c.task.contains("expect_class")) {
    verdict_bearing = true;
    ok = ok && c.task.at("expect_class").get<std::string>() == to_string(est.classification);
  }
  if (c.task.contains("expect_degree")) {
    verdict_bearing = true;
    const double tol = get_or(c.task, "degree_tol", 0.15);
    c.res.thresholds["degree_tol"] = tol;
    ok = ok && est.classification == DegreeClass::FiniteDegree &&
         std::abs(est.slope - c.task.at("expect_degree").get<double>()) <= tol;
  }
  if (c.task.contains("h")) {
    const double h = c.task.at("h");
    const TestVerdict tv = superdensity_test(est, prof, h, params);
    c.res.numbers["superdensity_test"] = to_string(tv);
    c.res.thresholds["h"] = h;
    msg += ", h-test " + std::string(to_string(tv));
  }
  if (verdict_bearing) c.verdict(ok, msg);
  else c.res.message = msg;
}

void run_scatter(Ctx& c) {
  const MeasurePtr mu = c.measure();
  const Box omega = box_of(c.task.at("omega"));
  const int n = omega.dim();
  const ScatterParams p = scatter_parameters(frame_of(c.task.at("frame")), n, c.task.at("R").get<int>(),
                                             c.task.at("epsilon").get<double>(), c.task.at("h").get<double>());
  const auto violated = check_parameters(p);
  if (!violated.empty()) throw HypothesisViolation(join(violated, "; "));
  const int K = c.task.at("k_max");
  const json& cl = c.task.at("cloud");
  const double spacing = cl.at("spacing");
  const Point origin = cl.contains("origin") ? point_of(cl.at("origin")) : Point(n);
  const GridCloud cloud(omega, spacing, origin);
  const Region om = box(omega.lo, omega.hi);
  const bool structured = get_or(c.task, "structured", true);
  const ScatteredSet s = structured ? construct_scattered_set_structured(*mu, p, omega, cloud, K, c.q)
                                    : construct_scattered_set(*mu, p, om, cloud, K, c.q);
  {
    auto os = c.open("levels");
    write_levels_csv(os, s);
  }
  if (!structured) {
    auto os = c.open("distribution");
    write_distribution_csv(os, s.distribution);
  }
  c.res.numbers = {{"m", p.m},
                   {"beta", p.beta},
                   {"lower_bound_constant", p.lower_bound_constant},
                   {"beta_terms", {p.beta_terms[0], p.beta_terms[1], p.beta_terms[2]}},
                   {"balls", s.ball_count()},
                   {"measure_upper_bound", s.measure_upper_bound},
                   {"frame_chain", s.frame_chain},
                   {"truncation_scale", s.truncation_scale}};
  c.res.thresholds = {{"epsilon", p.epsilon}, {"h", p.h}, {"k_max", K}, {"cloud_spacing", spacing}};
  if (!c.ro.scatter_verify) {
    const bool ok = s.measure_upper_bound < p.epsilon;
    c.verdict(ok, "built " + std::to_string(s.ball_count()) + " balls, measure bound " + fmt(s.measure_upper_bound));
    return;
  }
  VerifyOptions vo;
  vo.measure_budget = get_or<std::size_t>(c.task, "measure_budget", vo.measure_budget);
  const auto samples = sample_cloud_points(om, omega, cloud, c.task.at("samples").get<std::size_t>());
  const VerifyReport r = verify_scattered_set(*mu, s, om, samples, c.q, vo);
  {
    auto os = c.open("statistics");
    write_statistics_csv(os, r);
  }
  c.res.numbers["measured"] = r.measured_done ? interval_json(r.measured) : json(nullptr);
  c.res.numbers["samples"] = r.samples.size();
  c.res.numbers["budget_ok"] = r.budget_ok;
  c.res.numbers["statistic_ok"] = r.statistic_ok;
  c.res.thresholds["lower_bound_constant"] = r.lower_bound_constant;
  c.res.thresholds["window"] = {r.truncation_scale, 1.0};
  c.verdict(r.pass(), "measure bound " + fmt(r.measure_upper_bound) + " vs epsilon " + fmt(r.epsilon) +
                          (r.statistic_ok ? ", statistic holds at every usable level"
                                          : ", statistic below the constant somewhere"));
}

void run_thin_set(Ctx& c) {
  const MeasurePtr mu = c.measure();
  ThinSetOptions to;
  to.grid_spacing = get_or(c.task, "grid_spacing", to.grid_spacing);
  to.level_cap = get_or(c.task, "level_cap", to.level_cap);
  to.samples = get_or<std::size_t>(c.task, "samples", to.samples);
  to.radii_count = get_or(c.task, "radii_count", to.radii_count);
  to.slope_margin = get_or(c.task, "slope_margin", to.slope_margin);
  to.window_lo = get_or(c.task, "window_lo", to.window_lo);
  to.window_hi = get_or(c.task, "window_hi", to.window_hi);
  const ThinSetResult t =
      thin_closed_subset(*mu, frame_of(c.task.at("frame")), box_of(c.task.at("omega")), box_of(c.task.at("omega_prime")),
                         c.task.at("R").get<int>(), c.task.at("H").get<double>(), c.task.at("j_max").get<int>(), to, c.q);
  {
    auto os = c.open("");
    write_thin_csv(os, t);
  }
  {
    auto os = c.open("degrees");
    os << "x,class,slope,r2,window_lo,window_hi,slope_bound\n";
    for (std::size_t i = 0; i < t.degrees.size(); ++i) {
      const auto& e = t.degrees[i];
      os << fmt(t.samples[i]) << ',' << to_string(e.classification) << ',' << fmt(e.slope) << ',' << fmt(e.r2) << ','
         << fmt(t.window_lo) << ',' << fmt(t.window_hi) << ',' << fmt(t.m_bar + to.slope_margin) << '\n';
    }
  }
  int over = 0;
  for (const auto& e : t.degrees)
    if (e.classification == DegreeClass::FiniteDegree && e.slope > t.m_bar + to.slope_margin) ++over;
  c.res.numbers = {{"omega_measure", interval_json(t.omega_measure)},
                   {"removed_upper", t.removed_upper},
                   {"measure_lower_bound", t.measure_lower_bound},
                   {"m_bar", t.m_bar},
                   {"samples", t.samples.size()},
                   {"slopes_over_bound", over},
                   {"measure_ok", t.measure_ok},
                   {"degree_ok", t.degree_ok}};
  c.res.thresholds = {{"H", t.H}, {"slope_bound", t.m_bar + to.slope_margin}, {"window", {t.window_lo, t.window_hi}},
                      {"truncation_scale", t.truncation_scale}};
  c.verdict(t.measure_ok && t.degree_ok, "measure lower bound " + fmt(t.measure_lower_bound) + " vs H " + fmt(t.H) +
                                             ", " + std::to_string(over) + " of " + std::to_string(t.samples.size()) +
                                             " slopes above the bound");
}

void run_pullback(Ctx& c) {
  const auto ch = c.chart();
  const Region E = c.region();
  const Point y = point_of(c.task.at("y"));
  const RadiiSchedule rs = radii_of(c.task.at("radii"));
  const double match = get_or(c.task, "match_tol", 0.25);
  const DensityParams params;
  const PullbackCheck pc = pullback_degree_check(ch, E, y, rs.radii(), c.q, params, match);
  {
    auto os = c.open("");
    write_pullback_csv(os, c.res.id, pc, true);
  }
  c.res.numbers = {{"ambient_class", to_string(pc.ambient.classification)},
                   {"ambient_slope", pc.ambient.slope},
                   {"parameter_class", to_string(pc.parameter.classification)},
                   {"parameter_slope", pc.parameter.slope},
                   {"degree_gap", pc.degree_gap}};
  c.res.thresholds = density_params_json(params);
  c.res.thresholds["match_tol"] = match;
  c.res.thresholds["ambient_window"] = {pc.ambient.window_lo, pc.ambient.window_hi};
  c.res.thresholds["parameter_window"] = {pc.parameter.window_lo, pc.parameter.window_hi};
  c.verdict(pc.agree, std::string(to_string(pc.ambient.classification)) + " / " +
                          to_string(pc.parameter.classification) + ", gap " + fmt(pc.degree_gap));
}

void run_chart_frame(Ctx& c) {
  const auto ch = c.chart();
  const FrameConstants fc = frame_constants(*ch, get_or(c.task, "per_axis", 64));
  const AuditResult a = two_sided_audit(*ch, fc, get_or(c.task, "audit_count", 50), c.seed, c.q);
  const AuditResult b = inclusion_audit(*ch, fc, 48, 25, c.seed);
  {
    auto os = c.open("");
    os << "chart,m00,m1,r0,j_min,j_max,C1,C2,C,p,q,r_bar,two_sided_checked,two_sided_violations,inclusion_checked,"
          "inclusion_violations\n";
    os << ch->name << ',' << fmt(fc.m00) << ',' << fmt(fc.m1) << ',' << fmt(fc.r0) << ',' << fmt(fc.j_min) << ','
       << fmt(fc.j_max) << ',' << fmt(fc.C1) << ',' << fmt(fc.C2) << ',' << fmt(fc.bounds.C) << ',' << fmt(fc.bounds.p)
       << ',' << fmt(fc.bounds.q) << ',' << fmt(fc.bounds.r_bar) << ',' << a.checked << ',' << a.violations << ','
       << b.checked << ',' << b.violations << '\n';
  }
  c.res.numbers = {{"C", fc.bounds.C}, {"r_bar", fc.bounds.r_bar}, {"m00", fc.m00}, {"m1", fc.m1}, {"r0", fc.r0}};
  c.res.thresholds = {{"p", fc.bounds.p}, {"q", fc.bounds.q}};
  std::string msg = "C " + fmt(fc.bounds.C) + ", audits " + std::to_string(a.violations) + "/" +
                    std::to_string(a.checked) + " and " + std::to_string(b.violations) + "/" + std::to_string(b.checked);
  if (!a.details.empty()) msg += ": " + a.details.front();
  if (!b.details.empty()) msg += ": " + b.details.front();
  c.verdict(a.ok() && b.ok(), msg);
}

DerivativeMeasure derivative_of(const json& d) {
  const std::string kind = d.at("kind");
  const int axis = d.at("axis");
  if (axis < 0 || axis > 1) throw InvalidArgument("derivative axis must be 0 or 1");
  if (kind == "density_form") return density_form(axis, builtin_density(d.at("density")));
  return disk_flux(axis, point_of(d.at("center")), d.at("radius").get<double>());
}

void run_schwarz_check(Ctx& c) {
  const MeasurePtr mu = c.measure();
  const auto& ds = c.task.at("derivatives");
  const DerivativeMeasure dp = derivative_of(ds[0]), dq = derivative_of(ds[1]);
  const Point x = point_of(c.task.at("point"));
  const RadiiSchedule rs = radii_of(c.task.at("radii"));
  const Region A = c.task.contains("region") ? c.region() : whole_space(2);
  HypothesisOptions ho;
  ho.row_rho = get_or(c.task, "row_rho", ho.row_rho);
  const int p = get_or(c.task, "p", 0), q = get_or(c.task, "q", 1);
  SchwarzReport rep = hypothesis_report(*mu, dp, dq, x, rs.radii(), nums(c.task.at("rho_grid")), A, c.q, ho);
  const bool has_field = c.task.contains("field");
  Field field;
  if (has_field) {
    field = builtin_field(c.task.at("field"));
    attach_estimates(rep, *mu, field, p, q, c.q);
  }
  {
    auto os = c.open("");
    write_schwarz_csv(os, rep);
  }
  {
    auto os = c.open("sigma");
    os << "rho,sigma\n";
    for (std::size_t i = 0; i < rep.rho_grid.size(); ++i) os << fmt(rep.rho_grid[i]) << ',' << fmt(rep.sigma[i]) << '\n';
  }
  c.res.numbers = {{"slope_p", rep.slope_p},
                   {"slope_q", rep.slope_q},
                   {"decay_p", rep.decay_p},
                   {"decay_q", rep.decay_q},
                   {"sigma_monotone", rep.sigma_monotone},
                   {"sigma_trend", rep.sigma_trend},
                   {"tangency_class", to_string(rep.tangency.classification)},
                   {"tangency_test", to_string(rep.tangency_test)},
                   {"plausible", rep.plausible}};
  c.res.thresholds = {{"decay_slope", ho.decay_slope}, {"sigma_decade", ho.decade}, {"row_rho", ho.row_rho},
                      {"window", {rs.radii().back(), rs.r_max}}};
  const bool hyp_iv = rep.decay_p && rep.decay_q;
  std::string msg = std::string("hypotheses ") + (rep.plausible ? "plausible" : "not supported") + ", (iv) " +
                    (hyp_iv ? "holds" : "FAIL") + " (ratio slopes " + fmt(rep.slope_p) + ", " + fmt(rep.slope_q) + ")";
  bool ok = true;
  ok = ok && rep.plausible == get_or(c.task, "expect_plausible", true);
  if (c.task.contains("expect_hypothesis_iv")) ok = ok && hyp_iv == c.task.at("expect_hypothesis_iv").get<bool>();
  if (c.task.contains("gamma_check")) {
    const json& g = c.task.at("gamma_check");
    const double r = g.at("r"), w = g.at("max_width");
    const EstimatorResult e = schwarz_estimator(*mu, field, p, q, x, r, ho.row_rho, c.q);
    const bool gok = e.has_analytic && e.gamma.contains(e.analytic) && e.gamma.width() <= w;
    c.res.numbers["gamma_check"] = {{"r", r}, {"interval", interval_json(e.gamma)}, {"analytic", e.analytic},
                                    {"fd_step", e.fd_step}};
    c.res.thresholds["gamma_max_width"] = w;
    msg += ", Gamma in [" + fmt(e.gamma.lower) + ", " + fmt(e.gamma.upper) + "] vs " + fmt(e.analytic);
    ok = ok && gok;
  }
  c.verdict(ok, msg);
}

void run_counterexample(Ctx& c) {
  const int jmax = c.task.at("jmax");
  const double tol = get_or(c.task, "tol", 1e-6);
  std::vector<CounterexampleValue> v;
  bool ok = true;
  for (int j = 1; j <= jmax; ++j) {
    v.push_back(diagonal_counterexample(j, tol));
    ok = ok && v.back().ok();
  }
  {
    auto os = c.open("");
    write_counterexample_csv(os, v);
  }
  c.res.numbers = {{"rows", v.size()}, {"min_margin", [&] {
                                          double m = std::numeric_limits<double>::infinity();
                                          for (const auto& e : v) m = std::min(m, std::abs(e.value) - e.bound);
                                          return m;
                                        }()}};
  c.res.thresholds = {{"quadrature_tol", tol}, {"slack", 1e-3}};
  c.verdict(ok, ok ? "every |value| meets j pi sqrt2 - sqrt2" : "a value falls below the bound");
}

const std::map<std::string, std::function<void(Ctx&)>>& runners() {
  static const std::map<std::string, std::function<void(Ctx&)>> r = {
      {"ball_measure", run_ball_measure},   {"density_degree", run_density_degree}, {"scatter", run_scatter},
      {"thin_set", run_thin_set},           {"pullback", run_pullback},             {"chart_frame", run_chart_frame},
      {"schwarz_check", run_schwarz_check}, {"counterexample", run_counterexample},
  };
  return r;
}

}  // namespace

json summary_json(const RunSummary& r) {
  json tasks = json::array();
  for (const auto& t : r.tasks)
    tasks.push_back({{"id", t.id},
                     {"kind", t.kind},
                     {"verdict", to_string(t.verdict)},
                     {"message", t.message},
                     {"numbers", t.numbers},
                     {"thresholds", t.thresholds},
                     {"files", t.files},
                     {"seconds", t.seconds}});
  return {{"scenario", r.scenario},
          {"pass", r.all_pass()},
          {"exit_code", r.exit_code()},
          {"provenance",
           {{"seed", r.seed},
            {"version", kVersion},
            {"schema_version", kSchemaVersion},
            {"kernels", kernels::backend_name(kernels::active_backend())},
            {"tolerances",
             {{"tol", r.quadrature.tol},
              {"max_depth", r.quadrature.max_depth},
              {"cell_budget", r.quadrature.cell_budget},
              {"mc_samples", r.quadrature.mc_samples}}}}},
          {"tasks", tasks}};
}

RunSummary run_scenario(const Scenario& s, const RunOptions& ro) {
  RunSummary sum;
  sum.scenario = s.name;
  QuadratureOptions q;
  if (s.doc.contains("tolerances")) {
    const json& t = s.doc.at("tolerances");
    q.tol = get_or(t, "tol", q.tol);
    q.max_depth = get_or(t, "max_depth", q.max_depth);
    q.cell_budget = get_or<std::size_t>(t, "cell_budget", q.cell_budget);
    q.mc_samples = get_or<std::size_t>(t, "mc_samples", q.mc_samples);
  }
  if (ro.tol) q.tol = *ro.tol;
  if (ro.max_depth) q.max_depth = *ro.max_depth;
  std::uint64_t seed = get_or<std::uint64_t>(s.doc, "seed", q.seed);
  if (ro.seed) seed = *ro.seed;
  q.seed = seed;
  sum.quadrature = q;
  sum.seed = seed;
  sum.out_dir = resolve_output_dir(s, ro);
  std::error_code ec;
  fs::create_directories(sum.out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + sum.out_dir.string() + "': " + ec.message());

  std::vector<std::size_t> selected;
  const json& tasks = s.doc.at("tasks");
  for (std::size_t i = 0; i < tasks.size(); ++i)
    if (ro.kinds.empty() || ro.kinds.count(tasks[i].at("kind").get<std::string>())) selected.push_back(i);
  sum.tasks.resize(selected.size());

  Registry reg(s.doc);
  std::mutex reg_mutex, log_mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};

  const auto work = [&] {
    for (;;) {
      const std::size_t slot = next.fetch_add(1);
      if (slot >= selected.size()) return;
      const json& t = tasks[selected[slot]];
      TaskResult& res = sum.tasks[slot];
      res.id = t.at("id");
      res.kind = t.at("kind");
      if (stop) {
        res.verdict = Verdict::Skipped;
        res.message = "skipped after an earlier failure (--fail-fast)";
        continue;
      }
      const auto t0 = std::chrono::steady_clock::now();
      Ctx ctx{reg, t, q, seed, sum.out_dir, ro, res, reg_mutex};
      try {
        runners().at(res.kind)(ctx);
      } catch (const HypothesisViolation& e) {
        res.verdict = Verdict::Fail;
        res.message = std::string("hypothesis violated: ") + e.what();
      } catch (const IoError&) {
        throw;
      } catch (const std::exception& e) {
        res.verdict = Verdict::Error;
        res.message = e.what();
      }
      res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (ro.fail_fast && (res.verdict == Verdict::Fail || res.verdict == Verdict::Error)) stop = true;
      if (!ro.quiet) {
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cerr << '[' << to_string(res.verdict) << "] " << res.id << " (" << res.kind << ", "
                  << static_cast<int>(res.seconds * 10.0) / 10.0 << " s): " << res.message << '\n';
      }
    }
  };

  const int jobs = std::max(1, std::min<int>(ro.jobs, static_cast<int>(selected.size())));
  if (jobs == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr io_failure;
    std::mutex ex_mutex;
    for (int i = 0; i < jobs; ++i)
      pool.emplace_back([&] {
        try {
          work();
        } catch (...) {
          std::lock_guard<std::mutex> lock(ex_mutex);
          if (!io_failure) io_failure = std::current_exception();
          stop = true;
        }
      });
    for (auto& th : pool) th.join();
    if (io_failure) std::rethrow_exception(io_failure);
  }

  std::ofstream js(sum.out_dir / "summary.json");
  if (!js) throw IoError("cannot write summary.json in '" + sum.out_dir.string() + "'");
  js << summary_json(sum).dump(2) << '\n';
  return sum;
}

}  // namespace superdensity
