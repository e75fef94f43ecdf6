#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "cheapctl/errors.hpp"
#include "cheapctl/systems.hpp"

namespace cheapctl {

/// Discretization of a finite-horizon problem: piecewise-constant controls on
/// n_ctrl intervals, RK4 with n_int substeps per interval.
struct HorizonSpec {
  double T = 1.0;
  int n_ctrl = 20;
  int n_int = 10;

  static HorizonSpec with_defaults(double T);

  double dt_ctrl() const { return T / n_ctrl; }
  void validate() const;
};

struct ControlTrajectory {
  std::vector<Eigen::VectorXd> values;  // one q-vector per control interval
  HorizonSpec horizon;

  static ControlTrajectory zeros(const HorizonSpec& horizon, int q);
  Eigen::VectorXd flat() const;
  static ControlTrajectory from_flat(const Eigen::VectorXd& u, const HorizonSpec& horizon, int q);
};

struct SolveReport {
  double cost = 0.0;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
  std::vector<double> times;            // integration grid
  std::vector<Eigen::VectorXd> states;  // dense states on the grid
};

struct SolveOptions {
  double tol_grad = 1e-7;
  int max_iters = 500;
  int lbfgs_memory = 20;
  std::optional<ControlTrajectory> warm_start;
};

/// Discretized cost of a fixed control signal: RK4 state propagation with the
/// running cost accumulated by the matching Simpson-weight quadrature. This is
/// bit-for-bit the objective minimized by solve_finite_horizon.
double evaluate_cost(const ControlAffineSystem& system, double epsilon, const Eigen::VectorXd& x0,
                     const ControlTrajectory& ctrl);

/// Objective value at the stacked control vector; fills the exact discrete
/// adjoint gradient when grad != nullptr.
double objective_and_gradient(const ControlAffineSystem& system, double epsilon,
                              const Eigen::VectorXd& x0, const HorizonSpec& horizon,
                              const Eigen::VectorXd& u_flat, Eigen::VectorXd* grad);

/// Locally optimal piecewise-constant control for the finite-horizon problem,
/// by L-BFGS over the stacked controls with adjoint gradients and a
/// backtracking line search. Deterministic: zero-initialized unless a warm
/// start is supplied.
std::pair<ControlTrajectory, SolveReport> solve_finite_horizon(const ControlAffineSystem& system,
                                                               double epsilon,
                                                               const Eigen::VectorXd& x0,
                                                               const HorizonSpec& horizon,
                                                               const SolveOptions& opts = {});

/// Forward simulation of a fixed control, keeping the dense grid.
SolveReport simulate_control(const ControlAffineSystem& system, double epsilon,
                             const Eigen::VectorXd& x0, const ControlTrajectory& ctrl);

/// Long-horizon helper: solves a chain of doubling horizons, warm-starting
/// each stage from the previous (zero-padded) solution. Much more reliable
/// than a cold solve on multimodal landscapes; still deterministic.
std::pair<ControlTrajectory, SolveReport> solve_with_continuation(
    const ControlAffineSystem& system, double epsilon, const Eigen::VectorXd& x0,
    const HorizonSpec& horizon, const SolveOptions& opts = {}, int n_stages = 4);

// ---------------------------------------------------------------------------
// Linear-plant oracles

/// Solves A^T X + X A + M = 0 for X (Kronecker linear solve).
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M);

/// True iff (A, B) is stabilizable (PBH test on the closed right half-plane).
bool is_stabilizable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double tol = 1e-9);

struct RiccatiSolution {
  Eigen::MatrixXd P0;  // quadratic form of the horizon-T value at time 0
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> gains;  // K(t) = (1/epsilon) B^T P(t)
};

/// Integrates the differential Riccati equation
///   -P_dot = A^T P + P A - (1/epsilon) P B B^T P + C^T C,  P(T) = 0
/// backward with RK4. Halves the step and retries (up to 3 times) if entries
/// become non-finite, then throws StepTooLarge.
RiccatiSolution solve_riccati_finite(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                     const Eigen::MatrixXd& C, double epsilon, double T,
                                     int n_steps, bool keep_gains = true);

/// Step count heuristic resolving the fast Riccati transient at weight epsilon.
int riccati_steps_for(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                      const Eigen::MatrixXd& C, double epsilon, double T);

/// Stabilizing solution of A^T P + P A - (1/epsilon) P B B^T P + C^T C = 0 by
/// Newton-Kleinman iteration, seeded from a converged finite-horizon integral.
Eigen::MatrixXd solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& C, double epsilon);

double care_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& C,
                     double epsilon, const Eigen::MatrixXd& P);

/// Minimum output energy needed to stabilize linear zero dynamics
/// eta_dot = A0 eta + B0 xi_1: value function, quadratic form, and the
/// stabilizing output feedback xi_1 = feedback_gain * eta.
struct MinEnergySolution {
  Eigen::MatrixXd P0;
  double value = 0.0;
  Eigen::MatrixXd feedback_gain;
};

MinEnergySolution min_energy_value(const Eigen::MatrixXd& A0, const Eigen::MatrixXd& B0,
                                   const Eigen::VectorXd& eta0);

}  // namespace cheapctl
