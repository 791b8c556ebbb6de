// phlab: run experiments on toral maps from INI configs.
//
// Exit codes: 0 all checks passed, 1 a check failed or the run aborted,
// 2 bad command line or config, 3 the map failed validation.

#include "phlab/experiments.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

int list_experiments() {
  std::size_t width = 0;
  for (const auto& e : phlab::experiment_registry()) width = std::max(width, e.name.size());
  for (const auto& e : phlab::experiment_registry()) {
    std::cout << e.name << std::string(width + 2 - e.name.size(), ' ') << e.description << '\n';
    for (const auto& p : e.params) {
      std::cout << "    " << p.name << " = " << p.default_value << "  # " << p.help << '\n';
    }
  }
  return 0;
}

int run(const std::string& config_path, int workers, const std::string& out) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) {
    std::cerr << "phlab: cannot read " << config_path << '\n';
    return 2;
  }
  std::ostringstream text;
  text << in.rdbuf();
  try {
    const phlab::ExperimentConfig cfg = phlab::parse_config(text.str());
    phlab::RunOptions opts;
    opts.workers = workers > 0 ? workers : cfg.workers;
    opts.out_dir = !out.empty() ? out : (!cfg.output.empty() ? cfg.output : "out");
    opts.config_text = text.str();
    const phlab::RunResult r = phlab::run_experiment(cfg, opts);
    for (const auto& c : r.checks) {
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    }
    for (const auto& f : r.flags) std::cout << "flag: " << f << '\n';
    std::cout << "manifest: " << (opts.out_dir / "manifest.json").string() << '\n';
    return r.exit_code();
  } catch (const phlab::ConfigError& e) {
    std::cerr << "phlab: " << e.what() << '\n';
    return 2;
  } catch (const phlab::ValidationError& e) {
    std::cerr << "phlab: validation failed: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "phlab: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments on partially hyperbolic torus maps"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "List experiments");

  std::string config_path, out;
  int workers = 0;
  auto* run_cmd = app.add_subcommand("run", "Run the experiment named in a config");
  run_cmd->add_option("config", config_path, "INI config")->required();
  run_cmd->add_option("--workers", workers, "Worker threads (default: PHLAB_WORKERS or all cores)")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", out, "Output directory (default: config output or ./out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (list->parsed()) return list_experiments();
  return run(config_path, workers, out);
}
