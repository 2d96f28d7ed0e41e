// nlfp — scenario runner for the nonlinear Fokker–Planck toolkit.
//
//   nlfp run <config.json> [--output-dir DIR] [--jobs N]
//   nlfp validate <config.json>
//   nlfp presets
//
// Exit codes: 0 success, 1 experiment failure, 2 configuration error,
// 3 runtime/solver error.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nlfp/coefficients.hpp"
#include "nlfp/error.hpp"
#include "nlfp/scenario.hpp"

namespace {

int cmd_run(const std::string& path, const std::string& output_dir, int jobs) {
  nlfp::ScenarioConfig cfg;
  try {
    cfg = nlfp::load_config(path);
  } catch (const nlfp::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    // Without a parsed config only an explicit --output-dir says where to report.
    if (!output_dir.empty()) {
      nlfp::RunSummary s;
      s.scenario = path;
      s.error = std::string("configuration error: ") + e.what();
      try {
        nlfp::write_summary(s, output_dir);
      } catch (const std::exception&) {
      }
    }
    return 2;
  }
  nlfp::RunOptions opts;
  if (!output_dir.empty()) opts.output_dir = output_dir;
  opts.jobs = jobs;
  nlfp::RunSummary summary;
  const int code = nlfp::run_and_report(cfg, opts, &summary);
  std::cout << nlfp::format_summary(summary);
  if (!summary.error.empty()) std::cerr << summary.error << "\n";
  return code;
}

int cmd_validate(const std::string& path) {
  try {
    const nlfp::ScenarioConfig cfg = nlfp::load_config(path);
    // Resolving the coefficients catches unknown presets and bad custom specs.
    (void)cfg.coefficient_set();
    (void)cfg.make_mesh();
    std::cout << nlfp::serialize_config(cfg) << "\n";
    return 0;
  } catch (const nlfp::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const nlfp::Error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  }
}

int cmd_presets() {
  for (const auto& name : nlfp::preset_names()) {
    const nlfp::CoefficientSet c = nlfp::preset(name);
    const nlfp::ValidationReport r = nlfp::validate_conditions(c, {-5.0, 5.0}, 2000, 1);
    std::printf("%-12s gamma0=%g  sup|E|=%g  sup|b|=%g  conditions=%s\n", name.c_str(),
                c.beta.gamma0, c.E.sup_bound, c.b.sup_bound, r.all_passed() ? "ok" : "FAIL");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear Fokker-Planck solver, particle simulator and verification runner"};
  app.require_subcommand(1);

  std::string config_path, output_dir;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "Solve, simulate and run the configured experiments");
  run->add_option("config", config_path, "Scenario JSON")->required();
  run->add_option("--output-dir", output_dir, "Override output_dir from the config");
  run->add_option("--jobs", jobs, "Experiments to run concurrently")->check(CLI::PositiveNumber);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Parse a config and print it with defaults filled in");
  validate->add_option("config", validate_path, "Scenario JSON")->required();

  auto* presets = app.add_subcommand("presets", "List coefficient presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(config_path, output_dir, jobs);
    if (*validate) return cmd_validate(validate_path);
    if (*presets) return cmd_presets();
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
