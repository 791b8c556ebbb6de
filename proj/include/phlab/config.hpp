#pragma once

#include "phlab/models.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace phlab {

/// Malformed or unknown configuration content. The CLI maps it to exit 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class MapVariant { Anosov, Mane };

struct MapConfig {
  MapVariant variant = MapVariant::Anosov;
  IntMat3 matrix = default_matrix();
  double rho_u = 0.05;          // Mañé only
  std::optional<double> delta;  // Mañé only; empty means 1 - 1/k2
  int grid_n = 64;              // validation grid for the Mañé variant
};

struct ExperimentConfig {
  MapConfig map;
  std::string experiment;
  std::uint64_t rng_seed = 1;
  int workers = 0;     // 0: environment or OpenMP default
  std::string output;  // empty: the CLI --out or ./out
  /// Raw values of [parameters]; typed by the experiment schema.
  std::map<std::string, std::string> parameters;
};

/// INI text with sections [map], [experiment] and [parameters]. Comment
/// lines start with '#' or ';'. Unknown sections or keys, duplicates and bad
/// values throw ConfigError.
///
///   [map]
///   variant = mane
///   row1 = 0, 0, 1
///   row2 = 1, 0, -6
///   row3 = 0, 1, 5
///   rho_u = 0.05
///   delta = 0.357
///   grid_n = 64
///
///   [experiment]
///   name = measures
///   rng_seed = 1
///   workers = 0
///   output = out/measures
///
///   [parameters]
///   n_avg = 100000
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text: fixed section and key order, shortest round-trip numbers.
std::string serialize(const ExperimentConfig& config);

/// Builds and validates the map. Throws ValidationError (exit 3) for a bad
/// matrix or a Mañé spec that fails validate_mane_spec.
MapSpec build_map(const MapConfig& config);

std::string format_double(double v);
std::string variant_name(MapVariant v);

}  // namespace phlab
