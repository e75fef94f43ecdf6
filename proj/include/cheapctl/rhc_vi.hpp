#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cheapctl/ocp.hpp"
#include "cheapctl/systems.hpp"

namespace cheapctl {

/// Sampled-data receding-horizon loop configuration.
struct RHCConfig {
  double T = 1.0;        // prediction horizon
  double dt = 0.1;       // sampling interval
  double epsilon = 1.0;  // control weight
  double sim_time = 20.0;

  // Thresholds; values <= 0 derive the defaults 1e3 * max(1, |x0|) and
  // 1e-2 * max(1, |x0|) at run time.
  double diverge_radius = 0.0;
  double settle_radius = 0.0;

  double ctrl_dt_target = 0.01;  // target control interval inside a horizon
  int n_int = 10;
  SolveOptions solver;

  void validate() const;
  HorizonSpec horizon_spec() const;
  double resolved_diverge_radius(const Eigen::VectorXd& x0) const;
  double resolved_settle_radius(const Eigen::VectorXd& x0) const;
};

struct ClosedLoopTrace {
  std::vector<double> sample_times;
  std::vector<Eigen::VectorXd> sample_states;
  std::vector<double> dense_times;
  std::vector<Eigen::VectorXd> dense_states;
  std::vector<Eigen::VectorXd> dense_controls;
  std::vector<double> dense_running_cost;  // accumulated cost integral at each node
  std::vector<SolveReport> per_step_reports;
  double accumulated_cost = 0.0;
  bool diverged_early = false;  // loop stopped before sim_time on radius crossing
};

enum class StabilityKind { Stabilized, Diverged, Inconclusive };

std::string to_string(StabilityKind kind);

struct StabilityVerdict {
  StabilityKind kind = StabilityKind::Inconclusive;
  double overshoot = 0.0;    // max |x(t)| / max(1e-30, |x0|), 0 for the zero trace
  double decay_rate = 0.0;   // fitted lambda, capped at 1e6
  double escape_time = 0.0;  // first diverge-radius crossing
};

/// Runs the receding-horizon loop: at each t_k = k dt solve the horizon-T
/// problem from x(t_k), apply the first dt of the minimizer, repeat. Exits
/// early once the diverge radius is crossed. Solver failures are rethrown as
/// SolverFailure tagged with the step index.
ClosedLoopTrace run_rhc(const ControlAffineSystem& system, const RHCConfig& config,
                        const Eigen::VectorXd& x0);

/// Threshold classification plus a least-squares decay fit on log |x(t_k)|
/// over the decaying tail of the sample states.
StabilityVerdict classify_stability(const ClosedLoopTrace& trace, const RHCConfig& config);

/// Value-iteration iterate V^k(x0) realized through the horizon identity:
/// V^1 = 0 and V^(k+1) equals the finite-horizon value with T = k dt, so the
/// k-th iterate is solved as a horizon-(k-1) dt problem.
double vi_value(const ControlAffineSystem& system, double epsilon, const Eigen::VectorXd& x0,
                int k, double dt, const SolveOptions& opts = {});

/// Quadratic-form value iteration for linear plants: k Bellman steps of
/// length dt starting from P_1 = 0, each realized as a dt-horizon LQ problem
/// with the previous iterate as terminal weight. Returns P_(k+1).
/// n_sub = 0 picks the step count automatically.
Eigen::MatrixXd vi_recursion_linear(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                    const Eigen::MatrixXd& C, double epsilon, double dt, int k,
                                    int n_sub = 0);

/// Gain schedule on [0, dt] of the Bellman step with terminal weight P_k
/// (used for the VI/RHC first-segment correspondence checks).
RiccatiSolution vi_greedy_gain_schedule(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                        const Eigen::MatrixXd& C, double epsilon, double dt,
                                        const Eigen::MatrixXd& P_terminal, int n_sub = 0);

/// Trace export: t, x_1..x_n, u_1..u_q, running_cost, solver grad norm of the
/// owning step.
void write_trace_csv(const ClosedLoopTrace& trace, const RHCConfig& config,
                     const std::string& path);

}  // namespace cheapctl
