#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cheapctl/ocp.hpp"
#include "cheapctl/rhc_vi.hpp"
#include "cheapctl/systems.hpp"
#include "cheapctl/transforms.hpp"

namespace cheapctl {

/// Quadratic detectability certificate W(xi_tilde, eta) =
/// alpha * (epsilon_tilde * xi_tilde^T P xi_tilde + eta^T Q eta) with
/// sandwich constants and decrement rate certified against sigma(z) = |z|^2.
struct DetectabilityCertificate {
  std::shared_ptr<const NormalFormModel> model;
  double epsilon_tilde = 1.0;
  double alpha = 1.0;

  Eigen::MatrixXd M;  // output injection making F + M C Hurwitz
  Eigen::MatrixXd P;  // (F + M C)^T P + P (F + M C) = -2 I
  Eigen::MatrixXd Q;  // A0^T Q + Q A0 = -I on the linearized zeros

  double alpha_w_lo = 0.0;
  double alpha_w_hi = 0.0;
  double k_w = 0.0;
  double sample_margin = 0.0;

  double evaluate(const Eigen::VectorXd& xi_tilde, const Eigen::VectorXd& eta) const;

  /// W at a plant state, through the normal form and the scaling.
  double evaluate_state(const Eigen::VectorXd& x) const;
};

struct HorizonBound {
  double alpha_v = 0.0;
  double alpha_w_hi = 0.0;
  double alpha_w_lo = 0.0;
  double k_w = 0.0;
  double dt = 0.0;
  double m_dt = 0.0;    // sampled-contraction factor, in (0, 1)
  double t_star = 0.0;  // certified horizon threshold
};

/// Closed-form horizon threshold
///   M(dt) = exp(-k_w * alpha_w_lo * dt / (alpha_v + alpha_w_hi))
///   T*    = alpha_v (alpha_v + alpha_w_hi) / (k_w alpha_w_lo (1 - M(dt))).
HorizonBound horizon_bound(double alpha_v, double alpha_w_hi, double alpha_w_lo, double k_w,
                           double dt);

struct AlphaVOptions {
  double T_proxy = 20.0;
  std::optional<HorizonSpec> horizon;  // override for the direct solver
  SolveOptions solver;
};

/// Sampled estimate of the value-growth constant: max over the states of
/// V_Tproxy(x) / |x|^2, via the Riccati oracle on linear plants and the
/// direct solver otherwise. A finite-horizon proxy, therefore a lower bound
/// on the true constant.
double estimate_alpha_v(const ControlAffineSystem& system, double epsilon,
                        const std::vector<Eigen::VectorXd>& sample_states,
                        const AlphaVOptions& opts = {});

/// Builds the certificate for an exponentially minimum-phase (or full-state
/// linearizable) model at the given weight: output-injection poles at
/// -1,...,-dim_xi, Lyapunov solves for P and Q, then a deterministic search
/// for the scaling alpha and rate k_w making the decrement inequality
///   W_dot <= -k_w |(xi_tilde, eta)|^2 + |xi_tilde_1|^2 + |u_tilde|^2
/// hold on n_samples points in [-1, 1]^(n+q). Throws NotMinimumPhase or
/// DecrementViolated (weight too large).
DetectabilityCertificate build_w_linear(std::shared_ptr<const NormalFormModel> model,
                                        double epsilon_tilde, int n_samples = 1000,
                                        std::uint64_t seed = 2024);

struct CompositeDecayReport {
  std::vector<double> y_values;  // Y_T = W + V_T at the sample instants
  std::vector<double> ratios;    // Y_(k+1) / Y_k
  double max_ratio = 0.0;
  bool passed = false;
};

/// Runs the receding-horizon loop and checks the per-step contraction of the
/// composite function Y_T = W + V_T at the sample states (V_T taken from the
/// per-step solves). Trivially passes from the origin.
CompositeDecayReport check_composite_decay(const ControlAffineSystem& system,
                                           const RHCConfig& config,
                                           const DetectabilityCertificate& certificate,
                                           const Eigen::VectorXd& x0);

struct ScalingMode {
  bool infinite = true;
  double T = 1.0;
  static ScalingMode Infinite() { return {true, 0.0}; }
  static ScalingMode Finite(double T) { return {false, T}; }
};

struct ScalingOptions {
  double T_proxy = 20.0;               // horizon proxy for V_inf on nonlinear plants
  std::optional<HorizonSpec> horizon;  // direct-solver override
  SolveOptions solver;
};

struct ScalingSample {
  double epsilon_tilde = 0.0;
  int state_id = 0;
  double value = 0.0;
  double xi_tilde_norm2 = 0.0;
  double eta_norm2 = 0.0;
};

struct ScalingFit {
  double slope_xi = std::numeric_limits<double>::quiet_NaN();   // expected near 1
  double slope_eta = std::numeric_limits<double>::quiet_NaN();  // expected near 2r
  double k_hat = 0.0;  // smallest K with V <= K (et |xi|^2 + et^(2r) |eta|^2)
  std::vector<ScalingSample> samples;
};

/// Sweeps the weight grid and fits log V against log epsilon_tilde for
/// pure-output and pure-eta initial states given in scaled normal
/// coordinates. Values are computed in original coordinates (the costs agree
/// by the scaling identity).
ScalingFit verify_performance_scaling(const ControlAffineSystem& system,
                                      const NormalFormModel& model,
                                      const std::vector<double>& epsilon_tilde_grid,
                                      const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& states,
                                      const ScalingMode& mode, const ScalingOptions& opts = {});

std::string certificate_to_json(const DetectabilityCertificate& certificate);
std::string scaling_fit_to_json(const ScalingFit& fit);

/// Jacobian of the zero dynamics at the origin (central differences).
Eigen::MatrixXd zero_dynamics_jacobian(const NormalFormModel& model);

}  // namespace cheapctl
