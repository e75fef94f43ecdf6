#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cheapctl/errors.hpp"

namespace cheapctl {

/// Linear realization (A, B, C) of a plant, when one exists.
struct LinearStateSpace {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
};

/// Control-affine plant  xdot = f(x) + g(x) u  with output y = h(x).
///
/// Square by construction (input dimension equals output dimension) and
/// anchored at the origin: f(0) = 0 and h(0) = 0.
class ControlAffineSystem {
 public:
  virtual ~ControlAffineSystem() = default;

  int state_dim() const { return n_; }
  int input_dim() const { return q_; }
  int output_dim() const { return q_; }

  virtual std::string name() const = 0;

  virtual void drift(const Eigen::VectorXd& x, Eigen::VectorXd& out) const = 0;
  virtual void input_matrix(const Eigen::VectorXd& x, Eigen::MatrixXd& out) const = 0;
  virtual void output(const Eigen::VectorXd& x, Eigen::VectorXd& out) const = 0;

  /// d/dx [f(x) + g(x) u]. Default: central finite differences.
  virtual void dynamics_jacobian_x(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                   Eigen::MatrixXd& jac) const;

  /// dh/dx. Default: central finite differences.
  virtual void output_jacobian(const Eigen::VectorXd& x, Eigen::MatrixXd& jac) const;

  /// Exact (A, B, C) when the plant is linear.
  virtual std::optional<LinearStateSpace> linear() const { return std::nullopt; }

  /// Hand-derived strict-feedback normal form, available on builtins.
  virtual std::shared_ptr<const struct NormalFormModel> normal_form() const { return nullptr; }

  // Allocating conveniences.
  Eigen::VectorXd drift(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd input_matrix(const Eigen::VectorXd& x) const;
  Eigen::VectorXd output(const Eigen::VectorXd& x) const;

  /// f(x) + g(x) u, in-place. Dimensions are the caller's responsibility.
  void dynamics(const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::VectorXd& out) const;

 protected:
  ControlAffineSystem(int n, int q) : n_(n), q_(q) {}
  int n_;
  int q_;
};

/// f(x) + g(x) u with dimension checks.
Eigen::VectorXd eval_dynamics(const ControlAffineSystem& system, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u);

/// Strict-feedback normal form
///   xi_dot  = F xi + G [ b_bar(xi, eta) + A_bar(xi, eta) u ]
///   eta_dot = f0(eta) + g0(eta) xi_1
///   y       = xi_1 = C xi
/// supplied analytically per builtin plant.
struct NormalFormModel {
  int q = 1;        // output (= input) dimension
  int r = 1;        // uniform relative degree
  int dim_xi = 1;   // q * r
  int dim_eta = 0;  // n - q * r

  /// Certified lower bound on the smallest singular value of A_bar.
  double a_bar_sigma_min = 1.0;

  Eigen::MatrixXd F;  // block shift-up
  Eigen::MatrixXd G;  // bottom-block injector
  Eigen::MatrixXd C;  // top-block selector

  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> b_bar;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> a_bar;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> f0;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> g0;

  std::function<std::pair<Eigen::VectorXd, Eigen::VectorXd>(const Eigen::VectorXd&)> to_normal;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> from_normal;

  /// xi_1 block of a xi vector.
  Eigen::VectorXd output_block(const Eigen::VectorXd& xi) const { return xi.head(q); }
};

/// Shift/injector/selector blocks of the normal form for given (r, q).
void make_normal_form_matrices(int r, int q, Eigen::MatrixXd& F, Eigen::MatrixXd& G,
                               Eigen::MatrixXd& C);

enum class PhaseKind { ExpMinimumPhase, ExpNonMinimumPhase, Marginal };

std::string to_string(PhaseKind kind);

/// Local phase classification of the zero dynamics at the origin.
struct PhaseVerdict {
  PhaseKind kind = PhaseKind::Marginal;
  std::vector<std::complex<double>> zero_eigenvalues;
  double margin = 0.0;  // |spectral abscissa| of the zero-dynamics Jacobian
};

/// Classifies the zero dynamics from the Jacobian of f0 at eta = 0
/// (central differences, step 1e-6). Full-state linearizable plants
/// (dim_eta = 0) are minimum-phase by convention.
PhaseVerdict classify_phase(const NormalFormModel& model, double tol = 1e-8);

struct ConsistencyReport {
  double max_residual = 0.0;
  bool passed = false;
  Eigen::VectorXd worst_x;
  Eigen::VectorXd worst_u;
};

/// Cross-checks the supplied normal form against the plant: the time
/// derivative of to_normal(x) along the flow must match the strict-feedback
/// right-hand side. Samples (x, u) uniformly in [-2, 2]^(n+q).
ConsistencyReport check_normal_form_consistency(const ControlAffineSystem& system,
                                                const NormalFormModel& model, int n_samples,
                                                std::uint64_t seed, double threshold = 1e-4);

/// Same check, throwing InconsistentNormalForm on failure.
void require_normal_form_consistency(const ControlAffineSystem& system,
                                     const NormalFormModel& model, int n_samples,
                                     std::uint64_t seed, double threshold = 1e-4);

/// Sampled estimates of the linear-growth constants of the plant and of its
/// strict-feedback pieces; `overall` is the worst ratio observed.
struct GrowthReport {
  double drift_ratio = 0.0;  // |f(x)| / |x|
  double b_bar_ratio = 0.0;  // |b_bar| / (|xi| + |eta|)
  double a_bar_norm = 0.0;
  double f0_ratio = 0.0;  // |f0(eta)| / |eta|
  double g0_norm = 0.0;
  double g_norm = 0.0;
  double overall = 0.0;
};

GrowthReport check_growth_assumption(const ControlAffineSystem& system,
                                     const NormalFormModel& model, int n_samples,
                                     std::uint64_t seed);

// ---------------------------------------------------------------------------
// Builtin plants

/// The planar linear plant with stable open-loop dynamics but unstable zeros:
///   xdot = [-2 1; -10 1] x + [1; 0] u,  y = x1.
class LinearNmp : public ControlAffineSystem {
 public:
  LinearNmp();
  std::string name() const override { return "linear_nmp"; }
  void drift(const Eigen::VectorXd& x, Eigen::VectorXd& out) const override;
  void input_matrix(const Eigen::VectorXd& x, Eigen::MatrixXd& out) const override;
  void output(const Eigen::VectorXd& x, Eigen::VectorXd& out) const override;
  void dynamics_jacobian_x(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                           Eigen::MatrixXd& jac) const override;
  void output_jacobian(const Eigen::VectorXd& x, Eigen::MatrixXd& jac) const override;
  std::optional<LinearStateSpace> linear() const override;
  std::shared_ptr<const NormalFormModel> normal_form() const override;

 private:
  Eigen::Matrix2d A_;
  Eigen::Vector2d B_;
};

/// Drift-negated variant of LinearNmp: passively unstable, minimum-phase.
/// Constructed for the large-weight / short-horizon experiments.
class LinearNmpFlipped : public ControlAffineSystem {
 public:
  LinearNmpFlipped();
  std::string name() const override { return "linear_nmp_flipped"; }
  void drift(const Eigen::VectorXd& x, Eigen::VectorXd& out) const override;
  void input_matrix(const Eigen::VectorXd& x, Eigen::MatrixXd& out) const override;
  void output(const Eigen::VectorXd& x, Eigen::VectorXd& out) const override;
  void dynamics_jacobian_x(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                           Eigen::MatrixXd& jac) const override;
  void output_jacobian(const Eigen::VectorXd& x, Eigen::MatrixXd& jac) const override;
  std::optional<LinearStateSpace> linear() const override;
  std::shared_ptr<const NormalFormModel> normal_form() const override;

 private:
  Eigen::Matrix2d A_;
  Eigen::Vector2d B_;
};

enum class FlexibleLinkOutput { Theta1, Theta3 };

struct FlexibleLinkParams {
  double K = 2.0;      // spring coefficient, > 1
  double beta1 = 0.0;  // arm friction, >= 0
  double beta2 = 0.0;  // motor friction, >= 0
};

/// Flexible link manipulator. State (theta1, theta1_dot, theta2, theta2_dot):
///   x1_dot = x2
///   x2_dot = sin(x1) + K (x3 - x1) - beta1 x2
///   x3_dot = x4
///   x4_dot = K (x1 - x3) - beta2 x4 + u
/// Output Theta1 (y = x1) makes the plant full-state linearizable; output
/// Theta3 (y = x3) leaves two-dimensional zero dynamics whose phase depends
/// on the friction coefficients.
class FlexibleLink : public ControlAffineSystem {
 public:
  explicit FlexibleLink(FlexibleLinkOutput out, FlexibleLinkParams params = {});
  std::string name() const override;
  void drift(const Eigen::VectorXd& x, Eigen::VectorXd& out) const override;
  void input_matrix(const Eigen::VectorXd& x, Eigen::MatrixXd& out) const override;
  void output(const Eigen::VectorXd& x, Eigen::VectorXd& out) const override;
  void dynamics_jacobian_x(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                           Eigen::MatrixXd& jac) const override;
  void output_jacobian(const Eigen::VectorXd& x, Eigen::MatrixXd& jac) const override;
  std::shared_ptr<const NormalFormModel> normal_form() const override;

  const FlexibleLinkParams& params() const { return params_; }
  FlexibleLinkOutput output_choice() const { return out_; }

 private:
  FlexibleLinkOutput out_;
  FlexibleLinkParams params_;
};

/// Pendulum arm  x1_dot = x2, x2_dot = sin(x1) + u  with y = x1.
/// Full-state linearizable; used for minimum-phase smoke tests.
class InvertedPendulum : public ControlAffineSystem {
 public:
  InvertedPendulum();
  std::string name() const override { return "pendulum"; }
  void drift(const Eigen::VectorXd& x, Eigen::VectorXd& out) const override;
  void input_matrix(const Eigen::VectorXd& x, Eigen::MatrixXd& out) const override;
  void output(const Eigen::VectorXd& x, Eigen::VectorXd& out) const override;
  void dynamics_jacobian_x(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                           Eigen::MatrixXd& jac) const override;
  void output_jacobian(const Eigen::VectorXd& x, Eigen::MatrixXd& jac) const override;
  std::shared_ptr<const NormalFormModel> normal_form() const override;
};

/// Builtin registry used by scenario files. Names: "linear_nmp",
/// "linear_nmp_flipped", "flexible_link_theta1", "flexible_link_theta3",
/// "pendulum".
std::shared_ptr<const ControlAffineSystem> make_builtin(const std::string& name,
                                                        FlexibleLinkParams params = {});

/// Normal form of a builtin; throws std::invalid_argument if the plant does
/// not supply one.
std::shared_ptr<const NormalFormModel> normal_form_of(const ControlAffineSystem& system);

}  // namespace cheapctl
