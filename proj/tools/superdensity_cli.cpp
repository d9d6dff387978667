// Scenario runner. Exit codes: 0 pass, 1 verdict failure, 2 schema error, 3 I/O.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "superdensity/format.hpp"
#include "superdensity/scenario.hpp"
#include "superdensity/schwarz.hpp"

namespace sd = superdensity;
namespace fs = std::filesystem;

namespace {

enum Exit { kPass = 0, kVerdictFail = 1, kSchema = 2, kIo = 3 };

struct Flags {
  std::optional<double> tol;
  std::optional<int> max_depth;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool fail_fast = false;
  int jobs = 1;
  bool quiet = false;
};

void add_run_flags(CLI::App* app, Flags& f) {
  app->add_option("--tol", f.tol, "Relative quadrature tolerance")->check(CLI::PositiveNumber);
  app->add_option("--max-depth", f.max_depth, "Maximum refinement depth")->check(CLI::Range(1, 40));
  app->add_option("--seed", f.seed, "Seed for sampled components");
  app->add_option("--out", f.out, "Output directory (overrides SUPERDENSITY_OUT and the scenario)");
  app->add_flag("--fail-fast", f.fail_fast, "Stop after the first failing task");
  app->add_option("--jobs", f.jobs, "Tasks run in parallel")->check(CLI::Range(1, 256));
  app->add_flag("-q,--quiet", f.quiet, "No per-task progress lines");
}

sd::RunOptions run_options(const Flags& f) {
  sd::RunOptions o;
  o.tol = f.tol;
  o.max_depth = f.max_depth;
  o.seed = f.seed;
  if (f.out) o.out = fs::path(*f.out);
  o.fail_fast = f.fail_fast;
  o.jobs = f.jobs;
  o.quiet = f.quiet;
  return o;
}

int report_schema(const sd::SchemaError& e) {
  for (const auto& p : e.problems()) std::cerr << "error: " << p << '\n';
  return kSchema;
}

int run(const std::string& path, sd::RunOptions opts) {
  try {
    const sd::Scenario s = sd::load_scenario(path);
    const sd::RunSummary r = sd::run_scenario(s, opts);
    if (r.tasks.empty()) {
      std::cerr << "error: scenario has no tasks of the requested kind\n";
      return kSchema;
    }
    int pass = 0;
    for (const auto& t : r.tasks) pass += t.verdict == sd::Verdict::Pass ? 1 : 0;
    std::cout << s.name << ": " << pass << '/' << r.tasks.size() << " tasks passed, report in " << r.out_dir.string()
              << '\n';
    return r.exit_code();
  } catch (const sd::SchemaError& e) {
    return report_schema(e);
  } catch (const sd::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superdensity toolkit: measures, density degrees, scattered sets and Schwarz-type checks"};
  app.set_version_flag("--version", sd::kVersion);
  app.require_subcommand(1);

  std::string path;
  Flags flags;

  auto* validate = app.add_subcommand("validate", "Check a scenario against the schema");
  validate->add_option("scenario", path, "Scenario JSON")->required();

  auto* runc = app.add_subcommand("run", "Run every task of a scenario");
  runc->add_option("scenario", path, "Scenario JSON")->required();
  add_run_flags(runc, flags);

  auto* scatter = app.add_subcommand("scatter", "Scattered-set tasks");
  scatter->require_subcommand(1);
  auto* s_build = scatter->add_subcommand("build", "Construct the sets and report level sizes");
  auto* s_verify = scatter->add_subcommand("verify", "Construct and verify the sets");
  auto* s_thin = scatter->add_subcommand("thin", "Run the thin closed subset tasks");
  for (auto* c : {s_build, s_verify, s_thin}) {
    c->add_option("scenario", path, "Scenario JSON")->required();
    add_run_flags(c, flags);
  }

  auto* schwarz = app.add_subcommand("schwarz", "Schwarz-type checks");
  schwarz->require_subcommand(1);
  auto* w_check = schwarz->add_subcommand("check", "Run the schwarz_check tasks of a scenario");
  w_check->add_option("scenario", path, "Scenario JSON")->required();
  add_run_flags(w_check, flags);
  auto* w_ce = schwarz->add_subcommand("counterexample", "Diagonal-measure counterexample table");
  int jmax = 10;
  double ce_tol = 1e-6;
  std::string ce_out;
  w_ce->add_option("--jmax", jmax, "Largest j")->check(CLI::Range(1, 100000));
  w_ce->add_option("--tol", ce_tol, "1-D quadrature tolerance")->check(CLI::PositiveNumber);
  w_ce->add_option("--out", ce_out, "CSV file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kSchema;
  }

  if (validate->parsed()) {
    try {
      sd::load_scenario(path);
      std::cout << "OK\n";
      return kPass;
    } catch (const sd::SchemaError& e) {
      return report_schema(e);
    } catch (const sd::IoError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kIo;
    }
  }
  if (runc->parsed()) return run(path, run_options(flags));
  if (s_build->parsed() || s_verify->parsed()) {
    auto o = run_options(flags);
    o.kinds = {"scatter"};
    o.scatter_verify = s_verify->parsed();
    return run(path, o);
  }
  if (s_thin->parsed()) {
    auto o = run_options(flags);
    o.kinds = {"thin_set"};
    return run(path, o);
  }
  if (w_check->parsed()) {
    auto o = run_options(flags);
    o.kinds = {"schwarz_check"};
    return run(path, o);
  }
  if (w_ce->parsed()) {
    std::vector<sd::CounterexampleValue> v;
    bool ok = true;
    try {
      for (int j = 1; j <= jmax; ++j) {
        v.push_back(sd::diagonal_counterexample(j, ce_tol));
        ok = ok && v.back().ok();
      }
    } catch (const sd::Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kVerdictFail;
    }
    if (ce_out.empty()) {
      sd::write_counterexample_csv(std::cout, v);
    } else {
      std::ofstream os(ce_out);
      if (!os) {
        std::cerr << "error: cannot write '" << ce_out << "'\n";
        return kIo;
      }
      sd::write_counterexample_csv(os, v);
    }
    return ok ? kPass : kVerdictFail;
  }
  return kSchema;
}
