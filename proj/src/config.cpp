#include "phlab/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace phlab {
namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_value(const std::string& section, const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  if (text.empty() || r.ec != std::errc() || r.ptr != end) {
    throw ConfigError("[" + section + "] " + key + ": cannot parse '" + text + "'");
  }
  return v;
}

std::array<std::int64_t, 3> parse_row(const std::string& key, const std::string& text) {
  std::string normalized = text;
  for (char& c : normalized) {
    if (c == ',') c = ' ';
  }
  std::istringstream is(normalized);
  std::array<std::int64_t, 3> row{};
  std::string token;
  int count = 0;
  while (is >> token) {
    if (count == 3) throw ConfigError("[map] " + key + ": expected 3 integers");
    row[count++] = parse_value<std::int64_t>("map", key, token);
  }
  if (count != 3) throw ConfigError("[map] " + key + ": expected 3 integers");
  return row;
}

void check_keys(const std::string& section, const pt::ptree& tree,
                const std::set<std::string>& allowed) {
  for (const auto& [key, child] : tree) {
    if (!child.empty()) throw ConfigError("[" + section + "] " + key + ": nested value");
    if (!allowed.count(key)) throw ConfigError("[" + section + "] unknown key '" + key + "'");
  }
}

MapConfig parse_map(const pt::ptree& tree) {
  check_keys("map", tree, {"variant", "row1", "row2", "row3", "rho_u", "delta", "grid_n"});
  MapConfig m;
  for (const auto& [key, child] : tree) {
    const std::string value = trim(child.data());
    if (key == "variant") {
      if (value == "anosov") {
        m.variant = MapVariant::Anosov;
      } else if (value == "mane") {
        m.variant = MapVariant::Mane;
      } else {
        throw ConfigError("[map] variant must be anosov or mane, got '" + value + "'");
      }
    } else if (key == "row1" || key == "row2" || key == "row3") {
      const int r = key[3] - '1';
      const auto row = parse_row(key, value);
      for (int c = 0; c < 3; ++c) m.matrix(r, c) = row[c];
    } else if (key == "rho_u") {
      m.rho_u = parse_value<double>("map", key, value);
    } else if (key == "delta") {
      m.delta = parse_value<double>("map", key, value);
    } else if (key == "grid_n") {
      m.grid_n = parse_value<int>("map", key, value);
      if (m.grid_n < 64) throw ConfigError("[map] grid_n must be >= 64");
    }
  }
  return m;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string variant_name(MapVariant v) { return v == MapVariant::Mane ? "mane" : "anosov"; }

ExperimentConfig parse_config(std::string_view text) {
  pt::ptree tree;
  std::istringstream is{std::string(text)};
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  bool have_experiment = false;
  for (const auto& [name, section] : tree) {
    if (section.empty() && !section.data().empty()) {
      throw ConfigError("config: key '" + name + "' outside of a section");
    }
    if (name == "map") {
      cfg.map = parse_map(section);
    } else if (name == "experiment") {
      have_experiment = true;
      check_keys(name, section, {"name", "rng_seed", "workers", "output"});
      for (const auto& [key, child] : section) {
        const std::string value = trim(child.data());
        if (key == "name") {
          cfg.experiment = value;
        } else if (key == "rng_seed") {
          cfg.rng_seed = parse_value<std::uint64_t>(name, key, value);
        } else if (key == "workers") {
          cfg.workers = parse_value<int>(name, key, value);
          if (cfg.workers < 0) throw ConfigError("[experiment] workers must be >= 0");
        } else if (key == "output") {
          cfg.output = value;
        }
      }
    } else if (name == "parameters") {
      for (const auto& [key, child] : section) {
        if (!child.empty()) throw ConfigError("[parameters] " + key + ": nested value");
        cfg.parameters[key] = trim(child.data());
      }
    } else {
      throw ConfigError("config: unknown section [" + name + "]");
    }
  }
  if (!have_experiment || cfg.experiment.empty()) {
    throw ConfigError("config: [experiment] name is required");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "[map]\n";
  os << "variant = " << variant_name(c.map.variant) << '\n';
  for (int r = 0; r < 3; ++r) {
    os << "row" << r + 1 << " = " << c.map.matrix(r, 0) << ", " << c.map.matrix(r, 1) << ", "
       << c.map.matrix(r, 2) << '\n';
  }
  os << "rho_u = " << format_double(c.map.rho_u) << '\n';
  if (c.map.delta) os << "delta = " << format_double(*c.map.delta) << '\n';
  os << "grid_n = " << c.map.grid_n << '\n';
  os << "\n[experiment]\n";
  os << "name = " << c.experiment << '\n';
  os << "rng_seed = " << c.rng_seed << '\n';
  os << "workers = " << c.workers << '\n';
  if (!c.output.empty()) os << "output = " << c.output << '\n';
  if (!c.parameters.empty()) {
    os << "\n[parameters]\n";
    for (const auto& [k, v] : c.parameters) os << k << " = " << v << '\n';
  }
  return os.str();
}

MapSpec build_map(const MapConfig& config) {
  const AnosovSpec base = make_anosov(config.matrix);
  if (config.variant == MapVariant::Anosov) return MapSpec(base);
  const ManeDASpec spec = make_mane(base, config.rho_u, config.delta);
  const ManeValidation v = validate_mane_spec(spec, config.grid_n);
  if (!v.pass) {
    std::string msg = "Mañé spec failed validation:";
    for (const auto& f : v.failures) msg += " " + f + ";";
    throw ValidationError(msg);
  }
  return MapSpec(spec);
}

}  // namespace phlab
