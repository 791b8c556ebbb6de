#pragma once

#include "phlab/config.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace phlab {

enum class ParamType { Count, Real, Text };

struct ParamSpec {
  std::string name;
  ParamType type;
  std::string default_value;
  std::string help;
};

struct ExperimentInfo {
  std::string name;
  std::string description;
  std::vector<ParamSpec> params;
};

/// The ten experiments, in a fixed order.
const std::vector<ExperimentInfo>& experiment_registry();
const ExperimentInfo& find_experiment(const std::string& name);  // ConfigError if unknown

/// [parameters] checked against an experiment's schema: unknown keys,
/// malformed numbers and non-positive counts throw ConfigError.
class Params {
 public:
  Params(const ExperimentInfo& info, const std::map<std::string, std::string>& raw);
  std::size_t count(const std::string& key) const;
  double real(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  /// Every resolved value, schema order, canonical text.
  nlohmann::ordered_json to_json() const;

 private:
  const ParamSpec& spec(const std::string& key) const;
  const ExperimentInfo& info_;
  std::map<std::string, std::string> values_;
};

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunOptions {
  int workers = 0;  // resolved through resolve_workers
  std::filesystem::path out_dir = "out";
  /// Raw config bytes for the manifest hash; serialize(config) when empty.
  std::string config_text;
};

struct RunResult {
  std::string experiment;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  std::vector<Check> checks;
  std::vector<std::string> flags;
  std::vector<std::string> files;  // relative to out_dir
  nlohmann::ordered_json manifest;
  bool passed() const;
  /// 0 when every check passes, 1 otherwise.
  int exit_code() const { return passed() ? 0 : 1; }
};

/// Builds the map, runs the experiment, writes its CSV files and
/// manifest.json into out_dir. ConfigError and ValidationError propagate.
RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options);

/// SHA-1 of "blob <size>\0<bytes>", as git hash-object prints it.
std::string git_blob_hash(std::string_view bytes);

/// RFC 4180 field quoting.
std::string csv_field(std::string_view s);

}  // namespace phlab
