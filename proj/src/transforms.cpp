#include "cheapctl/transforms.hpp"

#include <cmath>

namespace cheapctl {

CheapControlWeights CheapControlWeights::from_epsilon(double epsilon, int r) {
  if (epsilon <= 0.0) throw NonPositiveEpsilon("epsilon must be > 0");
  if (r < 1) throw std::invalid_argument("relative degree must be >= 1");
  CheapControlWeights w;
  w.epsilon = epsilon;
  w.r = r;
  w.epsilon_tilde = std::pow(epsilon, 1.0 / (2.0 * r));
  return w;
}

CheapControlWeights CheapControlWeights::from_epsilon_tilde(double epsilon_tilde, int r) {
  if (epsilon_tilde <= 0.0) throw NonPositiveEpsilon("epsilon_tilde must be > 0");
  if (r < 1) throw std::invalid_argument("relative degree must be >= 1");
  CheapControlWeights w;
  w.epsilon_tilde = epsilon_tilde;
  w.r = r;
  w.epsilon = std::pow(epsilon_tilde, 2.0 * r);
  return w;
}

ScalingMatrix::ScalingMatrix(double epsilon_tilde, int r, int q)
    : epsilon_tilde_(epsilon_tilde), r_(r), q_(q) {
  if (epsilon_tilde <= 0.0) throw NonPositiveEpsilon("epsilon_tilde must be > 0");
  if (r < 1 || q < 1) throw std::invalid_argument("scaling_matrix requires r >= 1, q >= 1");
}

double ScalingMatrix::block_weight(int k) const { return std::pow(epsilon_tilde_, k - 1); }

Eigen::VectorXd ScalingMatrix::diagonal() const {
  Eigen::VectorXd d(dim());
  for (int k = 0; k < r_; ++k) d.segment(k * q_, q_).setConstant(block_weight(k + 1));
  return d;
}

Eigen::MatrixXd ScalingMatrix::matrix() const { return diagonal().asDiagonal(); }

Eigen::VectorXd ScalingMatrix::apply(const Eigen::VectorXd& xi) const {
  if (xi.size() != dim()) throw InvalidDimension("scaling: xi has wrong dimension");
  return diagonal().cwiseProduct(xi);
}

Eigen::VectorXd ScalingMatrix::apply_inverse(const Eigen::VectorXd& xi_tilde) const {
  if (xi_tilde.size() != dim()) throw InvalidDimension("scaling: xi_tilde has wrong dimension");
  return xi_tilde.cwiseQuotient(diagonal());
}

ScalingMatrix scaling_matrix(double epsilon_tilde, int r, int q) {
  return ScalingMatrix(epsilon_tilde, r, q);
}

double running_cost(const Eigen::VectorXd& h_val, const Eigen::VectorXd& u, double epsilon) {
  return h_val.squaredNorm() + epsilon * u.squaredNorm();
}

FastSlowPoint to_fast_slow(const NormalFormModel& model, const CheapControlWeights& w,
                           const Eigen::VectorXd& xi, const Eigen::VectorXd& u) {
  const ScalingMatrix S(w.epsilon_tilde, model.r, model.q);
  FastSlowPoint p;
  p.xi_tilde = S.apply(xi);
  p.u_tilde = std::pow(w.epsilon_tilde, model.r) * u;
  return p;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> from_fast_slow(const NormalFormModel& model,
                                                           const CheapControlWeights& w,
                                                           const Eigen::VectorXd& xi_tilde,
                                                           const Eigen::VectorXd& u_tilde) {
  const ScalingMatrix S(w.epsilon_tilde, model.r, model.q);
  return {S.apply_inverse(xi_tilde), u_tilde / std::pow(w.epsilon_tilde, model.r)};
}

Eigen::VectorXd b_tilde(const NormalFormModel& model, const CheapControlWeights& w,
                        const Eigen::VectorXd& xi_tilde, const Eigen::VectorXd& eta) {
  const ScalingMatrix S(w.epsilon_tilde, model.r, model.q);
  return model.b_bar(S.apply_inverse(xi_tilde), eta);
}

Eigen::MatrixXd a_tilde(const NormalFormModel& model, const CheapControlWeights& w,
                        const Eigen::VectorXd& xi_tilde, const Eigen::VectorXd& eta) {
  const ScalingMatrix S(w.epsilon_tilde, model.r, model.q);
  return model.a_bar(S.apply_inverse(xi_tilde), eta);
}

}  // namespace cheapctl
