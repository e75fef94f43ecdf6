#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cheapctl/rhc_vi.hpp"
#include "cheapctl/systems.hpp"

namespace cheapctl {

/// Flat key-value scenario: one experiment grid over (epsilon, T, x0).
struct Scenario {
  std::string system = "linear_nmp";
  FlexibleLinkParams link_params;

  std::vector<double> epsilon_list;
  std::vector<double> T_list;
  double dt = 0.1;
  std::vector<Eigen::VectorXd> x0_list;

  double sim_time = 20.0;
  double diverge_radius = 0.0;  // 0: derive 1e3 * max(1, |x0|)
  double settle_radius = 0.0;   // 0: derive 1e-2 * max(1, |x0|)

  double ctrl_dt = 0.01;
  int n_int = 10;
  double tol_grad = 1e-7;
  int max_iters = 500;
  std::uint64_t seed = 0;
};

Scenario parse_scenario_text(const std::string& text);
Scenario parse_scenario_file(const std::string& path);

/// Field-path errors, e.g. "epsilon_list: must be nonempty".
void validate_scenario(const Scenario& scenario);

std::shared_ptr<const ControlAffineSystem> scenario_system(const Scenario& scenario);
RHCConfig scenario_rhc_config(const Scenario& scenario, double epsilon, double T);

struct SweepRow {
  double epsilon = 0.0;
  double T = 0.0;
  double dt = 0.0;
  int x0_id = 0;
  StabilityKind verdict = StabilityKind::Inconclusive;
  bool failed = false;  // cell aborted (solver failure); verdict field unused
  double decay_rate = 0.0;
  double escape_time = 0.0;
  double overshoot = 0.0;
  double accumulated_cost = 0.0;
  int steps = 0;
  long total_iterations = 0;
  double max_grad_norm = 0.0;
};

struct SweepResult {
  Scenario scenario;
  std::vector<SweepRow> rows;  // lexicographic over (epsilon, T, x0)
};

/// Runs the grid, parallel across cells, merging rows in grid order.
/// A failing cell is recorded (failed = true) without aborting the sweep.
/// workers = 0 consults CHEAPCTL_WORKERS, then hardware concurrency.
SweepResult run_sweep(const Scenario& scenario, int workers = 0);

/// Writes <out_dir>/sweep_long.csv (one row per cell) and
/// <out_dir>/phase_matrix.csv (verdict codes, rows epsilon x columns T,
/// one block per x0). Codes: 1 stabilized, -1 diverged, 0 otherwise.
void emit_phase_diagram(const SweepResult& result, const std::string& out_dir);

std::vector<SweepRow> parse_sweep_long_csv(const std::string& path);

struct PhaseMatrixBlock {
  int x0_id = 0;
  std::vector<double> epsilons;
  std::vector<double> horizons;
  std::vector<std::vector<int>> codes;  // [epsilon][T]
};

std::vector<PhaseMatrixBlock> parse_phase_matrix_csv(const std::string& path);

int verdict_code(StabilityKind kind);

/// Shortest representation that round-trips a double through strtod.
std::string format_double(double value);

int resolve_workers(int requested);

/// CLI entry point shared by the `cheapctl` binary and tests.
/// Subcommands: simulate, sweep, bound, vi-compare, verify.
/// Exit codes: 0 success, 1 failed check, 2 configuration error.
int run_cli(const std::vector<std::string>& args);

}  // namespace cheapctl
