#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "superdensity/error.hpp"
#include "superdensity/measures.hpp"

namespace superdensity {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kVersion = "0.1.0";
/// Environment variable that overrides the scenario's output directory.
inline constexpr const char* kOutputEnv = "SUPERDENSITY_OUT";

class SchemaError : public Error {
 public:
  explicit SchemaError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Every schema problem of a parsed document; empty when valid. Messages
/// carry a JSON path, and for tasks the task id.
std::vector<std::string> validate_scenario(const nlohmann::json& doc);

struct Scenario {
  std::filesystem::path source;
  std::string name;  // file stem
  nlohmann::json doc;
};

/// Reads and validates; throws IoError or SchemaError.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& text, const std::string& name = "inline");

struct RunOptions {
  std::optional<double> tol;
  std::optional<int> max_depth;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  bool fail_fast = false;
  int jobs = 1;
  std::set<std::string> kinds;  // empty: every task
  bool scatter_verify = true;
  bool quiet = false;
};

enum class Verdict { Pass, Fail, Error, Info, Skipped };
const char* to_string(Verdict v);

struct TaskResult {
  std::string id;
  std::string kind;
  Verdict verdict = Verdict::Info;
  std::string message;
  nlohmann::json numbers = nlohmann::json::object();     // key results
  nlohmann::json thresholds = nlohmann::json::object();  // thresholds and scale windows used
  std::vector<std::string> files;
  double seconds = 0.0;
};

struct RunSummary {
  std::string scenario;
  std::filesystem::path out_dir;
  std::vector<TaskResult> tasks;
  QuadratureOptions quadrature;
  std::uint64_t seed = 0;
  bool all_pass() const;
  int exit_code() const { return all_pass() ? 0 : 1; }
};

/// Executes the selected tasks (declared order; up to `jobs` at once) and
/// writes per-task CSVs plus summary.json into the output directory.
RunSummary run_scenario(const Scenario& s, const RunOptions& opts = {});

/// Output directory precedence: --out, then the environment, then the scenario.
std::filesystem::path resolve_output_dir(const Scenario& s, const RunOptions& opts);

nlohmann::json summary_json(const RunSummary& r);

}  // namespace superdensity
