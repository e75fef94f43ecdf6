#pragma once

#include <Eigen/Dense>
#include <utility>

#include "cheapctl/errors.hpp"
#include "cheapctl/systems.hpp"

namespace cheapctl {

/// Control weight pair (epsilon, epsilon_tilde) with epsilon = epsilon_tilde^(2r).
struct CheapControlWeights {
  double epsilon = 1.0;
  double epsilon_tilde = 1.0;
  int r = 1;

  static CheapControlWeights from_epsilon(double epsilon, int r);
  static CheapControlWeights from_epsilon_tilde(double epsilon_tilde, int r);
};

/// Block-diagonal scaling diag(1, et, ..., et^(r-1)) with q-sized identity blocks.
class ScalingMatrix {
 public:
  ScalingMatrix(double epsilon_tilde, int r, int q);

  double epsilon_tilde() const { return epsilon_tilde_; }
  int r() const { return r_; }
  int q() const { return q_; }
  int dim() const { return r_ * q_; }

  /// Block weight et^(k-1) of block k (1-based).
  double block_weight(int k) const;

  Eigen::VectorXd diagonal() const;
  Eigen::MatrixXd matrix() const;

  Eigen::VectorXd apply(const Eigen::VectorXd& xi) const;
  Eigen::VectorXd apply_inverse(const Eigen::VectorXd& xi_tilde) const;

 private:
  double epsilon_tilde_;
  int r_;
  int q_;
};

ScalingMatrix scaling_matrix(double epsilon_tilde, int r, int q);

/// Running cost |h_val|^2 + epsilon |u|^2.
double running_cost(const Eigen::VectorXd& h_val, const Eigen::VectorXd& u, double epsilon);

struct FastSlowPoint {
  Eigen::VectorXd xi_tilde;
  Eigen::VectorXd u_tilde;
};

/// (xi, u) -> (S(et) xi, et^r u).
FastSlowPoint to_fast_slow(const NormalFormModel& model, const CheapControlWeights& w,
                           const Eigen::VectorXd& xi, const Eigen::VectorXd& u);

/// Inverse of to_fast_slow.
std::pair<Eigen::VectorXd, Eigen::VectorXd> from_fast_slow(const NormalFormModel& model,
                                                           const CheapControlWeights& w,
                                                           const Eigen::VectorXd& xi_tilde,
                                                           const Eigen::VectorXd& u_tilde);

/// b_bar and A_bar seen through the scaling: arguments are (xi_tilde, eta).
Eigen::VectorXd b_tilde(const NormalFormModel& model, const CheapControlWeights& w,
                        const Eigen::VectorXd& xi_tilde, const Eigen::VectorXd& eta);
Eigen::MatrixXd a_tilde(const NormalFormModel& model, const CheapControlWeights& w,
                        const Eigen::VectorXd& xi_tilde, const Eigen::VectorXd& eta);

}  // namespace cheapctl
