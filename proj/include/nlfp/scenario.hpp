#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "nlfp/coefficients.hpp"
#include "nlfp/fpke.hpp"
#include "nlfp/grid.hpp"
#include "nlfp/particles.hpp"
#include "nlfp/verify.hpp"

namespace nlfp {

struct CoefficientChoice {
  std::optional<std::string> preset;
  std::optional<CustomCoefficientSpec> custom;

  bool operator==(const CoefficientChoice&) const = default;
};

struct InitialSpec {
  std::string kind = "gaussian";  // gaussian | indicator
  double mean = 0.0;
  double sd = 0.5;
  double lo = 0.0;
  double hi = 1.0;

  bool operator==(const InitialSpec&) const = default;
};

struct MeshSpec {
  double x_min = -8.0;
  double x_max = 8.0;
  int n_cells = 400;

  bool operator==(const MeshSpec&) const = default;
};

struct SolverSpec {
  double dt = 1e-3;
  double T = 0.5;
  double newton_tol = 1e-12;
  int newton_max_iter = 30;
  std::optional<std::vector<double>> checkpoint_times;
  double checkpoint_interval = 0.05;  // used when checkpoint_times is absent
  double boundary_mass_tol = 1e-8;
  std::string transport = "muscl";    // muscl | upwind

  bool operator==(const SolverSpec&) const = default;
};

struct ParticlesSpec {
  std::size_t n = 10000;
  std::uint64_t seed = 1;
  std::string mode = "decoupled";  // decoupled | self_consistent
  std::optional<double> dt;        // defaults to solver.dt
  KdeConfig kde;

  bool operator==(const ParticlesSpec&) const = default;
};

struct SuperpositionExperiment {
  double tolerance = 0.05;
  bool operator==(const SuperpositionExperiment&) const = default;
};

struct CouplingExperiment {
  std::vector<double> dt_levels{1e-2, 5e-3, 2.5e-3};
  std::size_t n = 1000;
  std::uint64_t seed = 7;
  std::string expect = "decreasing";  // decreasing | zero
  bool operator==(const CouplingExperiment&) const = default;
};

struct LipschitzExperiment {
  double R = 3.0;
  double p = INFINITY;
  double q = INFINITY;
  double p_dual = 1.0;
  double q_dual = 1.0;
  std::size_t n_pairs = 10000;
  std::uint64_t seed = 11;
  double max_violation_rate = 0.0;
  bool operator==(const LipschitzExperiment&) const = default;
};

struct WeakFormExperiment {
  double center = 0.0;
  double radius = 2.0;
  std::optional<double> t;  // defaults to solver.T
  double tolerance = 1e-2;
  bool operator==(const WeakFormExperiment&) const = default;
};

using Experiment = std::variant<SuperpositionExperiment, CouplingExperiment, LipschitzExperiment,
                                WeakFormExperiment>;

std::string experiment_type(const Experiment& e);

struct ScenarioConfig {
  std::string name = "scenario";
  CoefficientChoice coefficients;
  InitialSpec initial;
  MeshSpec mesh;
  SolverSpec solver;
  std::optional<ParticlesSpec> particles;
  std::vector<Experiment> experiments;
  std::string output_dir = "out";

  bool operator==(const ScenarioConfig&) const = default;

  CoefficientSet coefficient_set() const;
  Mesh make_mesh() const;
  SolverConfig solver_config() const;
  GridFunction initial_density() const;
};

// Strict JSON parsing: unknown keys, missing required keys, wrong types and
// constraint violations raise ConfigError naming the field; malformed JSON
// raises ConfigError with the byte offset.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

// Canonical JSON with every default filled in; parse_config round-trips it.
std::string serialize_config(const ScenarioConfig& cfg);

struct ExperimentOutcome {
  std::string type;
  bool passed = false;
  double metric = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct RunSummary {
  std::string scenario;
  double wall_time = 0.0;
  std::vector<ExperimentOutcome> checks;       // solver invariants
  std::vector<ExperimentOutcome> experiments;  // one per requested experiment
  // Reported without a tolerance: sum dt sum |D_h u|^2 dx and sup over frames of u.
  std::vector<std::pair<std::string, double>> diagnostics;
  std::vector<std::string> files;
  std::string error;                           // set when the run aborted

  bool passed() const;
};

struct RunOptions {
  std::optional<std::string> output_dir;
  int jobs = 1;
};

// Solve, simulate, run the requested experiments and write every artifact
// into the output directory. Errors propagate with the scenario name.
RunSummary run_scenario(const ScenarioConfig& cfg, const RunOptions& opts = {});

// CLI semantics around run_scenario: always writes summary.txt, returns
// 0 (pass), 1 (experiment failure), 2 (configuration error) or 3 (runtime
// error).
int run_and_report(const ScenarioConfig& cfg, const RunOptions& opts, RunSummary* out = nullptr);

std::string format_summary(const RunSummary& s);

// Atomically writes format_summary(s) to dir/summary.txt, creating dir.
void write_summary(const RunSummary& s, const std::string& dir);

}  // namespace nlfp
