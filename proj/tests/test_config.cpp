#include "phlab/config.hpp"
#include "phlab/experiments.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace phlab;
namespace fs = std::filesystem;

namespace {

const char* kMane = R"([map]
variant = mane
row1 = 0 0 1
row2 = 1, 0, -6
row3 = 0, 1, 5
rho_u = 0.05
; strength left to the default

[experiment]
name = measures
rng_seed = 7
workers = 2

[parameters]
seeds = 10
n_avg = 20000
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("phlab_test_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("parse and canonical form") {
    const auto c = parse_config(kMane);
    CHECK(c.map.variant == MapVariant::Mane);
    CHECK(c.map.matrix == default_matrix());
    CHECK(c.map.rho_u == 0.05);
    CHECK_FALSE(c.map.delta.has_value());
    CHECK(c.experiment == "measures");
    CHECK(c.rng_seed == 7);
    CHECK(c.workers == 2);
    CHECK(c.parameters.at("n_avg") == "20000");
    const std::string once = serialize(c);
    CHECK(serialize(parse_config(once)) == once);
  }

  TEST_CASE("malformed configs") {
    CHECK_THROWS_AS(parse_config("[map]\nvariant = anosov\nsize = 3\n[experiment]\nname = periodic\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config("[experiment]\nname = periodic\nname = lyapunov\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[experiment]\nname = periodic\n[extra]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[map]\nvariant = anosov\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[map]\nvariant = skew\n[experiment]\nname = periodic\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config("[map]\nrow1 = 0, 1\n[experiment]\nname = periodic\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[map]\ngrid_n = 16\n[experiment]\nname = periodic\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[experiment]\nname = periodic\nworkers = -1\n"), ConfigError);
  }

  TEST_CASE("map validation") {
    auto c = parse_config("[map]\nrow1 = 2, 0, 0\nrow2 = 0, 1, 0\nrow3 = 0, 0, 1\n"
                          "[experiment]\nname = periodic\n");
    CHECK_THROWS_WITH_AS(build_map(c.map), doctest::Contains("det"), ValidationError);
    c.map = MapConfig{};
    c.map.variant = MapVariant::Mane;
    CHECK(build_map(c.map).is_mane());
    c.map.rho_u = 0.4;
    CHECK_THROWS_AS(build_map(c.map), ValidationError);
  }

  TEST_CASE("parameters are checked against the schema") {
    const auto& info = find_experiment("lyapunov");
    CHECK(Params(info, {}).count("n") == 10000);
    CHECK(Params(info, {{"disk_points", "0"}}).count("disk_points") == 0);
    CHECK_THROWS_AS(Params(info, {{"seeds", "0"}}), ConfigError);
    CHECK_THROWS_AS(Params(info, {{"seeds", "2.5"}}), ConfigError);
    CHECK_THROWS_AS(Params(info, {{"disk_radius", "abc"}}), ConfigError);
    CHECK_THROWS_AS(Params(info, {{"iterations", "10"}}), ConfigError);
    CHECK_THROWS_WITH_AS(find_experiment("entropy"), doctest::Contains("lyapunov"), ConfigError);
    CHECK(experiment_registry().size() == 10);
  }

  TEST_CASE("hashes and csv quoting") {
    CHECK(git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
    CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"x\"") == "\"say \"\"x\"\"\"");
    CHECK(csv_field("cos:1,0,0") == "\"cos:1,0,0\"");
  }
}

TEST_SUITE("experiments") {
  TEST_CASE("outputs do not depend on the worker count") {
    const auto c = parse_config(kMane);
    const fs::path a = scratch("w1"), b = scratch("w8");
    const auto r1 = run_experiment(c, RunOptions{1, a, {}});
    const auto r8 = run_experiment(c, RunOptions{8, b, {}});
    REQUIRE(r1.files == r8.files);
    REQUIRE_FALSE(r1.files.empty());
    for (const auto& f : r1.files) {
      if (f == "manifest.json") continue;
      CHECK(slurp(a / f) == slurp(b / f));
    }
    CHECK(r1.manifest["config_hash"] == r8.manifest["config_hash"]);
    CHECK(r1.manifest["workers"] == 1);
    CHECK(r8.manifest["workers"] == 8);
    CHECK(fs::exists(a / "manifest.json"));
    fs::remove_all(a);
    fs::remove_all(b);
  }

  TEST_CASE("linear Lyapunov run passes its checks") {
    const auto c = parse_config("[experiment]\nname = lyapunov\n[parameters]\nseeds = 10\nn = 2000\n");
    const fs::path dir = scratch("lyap");
    const auto r = run_experiment(c, RunOptions{2, dir, {}});
    CHECK(r.passed());
    CHECK(r.exit_code() == 0);
    for (const auto& ch : r.checks) CHECK_MESSAGE(ch.pass, ch.name << ": " << ch.detail);
    fs::remove_all(dir);
  }

  TEST_CASE("a parameter error wins over a bad map") {
    auto c = parse_config("[map]\nrow1 = 2, 0, 0\nrow2 = 0, 1, 0\nrow3 = 0, 0, 1\n"
                          "[experiment]\nname = periodic\n[parameters]\nperiod = 3\n");
    const fs::path dir = scratch("err");
    CHECK_THROWS_AS(run_experiment(c, RunOptions{1, dir, {}}), ConfigError);
    c.parameters.clear();
    CHECK_THROWS_AS(run_experiment(c, RunOptions{1, dir, {}}), ValidationError);
    fs::remove_all(dir);
  }
}
