#include "cheapctl/transforms.hpp"

#include <cmath>

#include "cheapctl/rng.hpp"
#include "gtest/gtest.h"

using namespace cheapctl;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (const double x : vals) v(i++) = x;
  return v;
}

}  // namespace

TEST(ScalingMatrix, IdentityAtOne) {
  const ScalingMatrix S = scaling_matrix(1.0, 3, 1);
  EXPECT_TRUE(S.matrix().isApprox(Eigen::MatrixXd::Identity(3, 3)));
}

TEST(ScalingMatrix, FormulaEvaluation) {
  const ScalingMatrix S = scaling_matrix(0.5, 2, 1);
  EXPECT_DOUBLE_EQ(S.diagonal()(0), 1.0);
  EXPECT_DOUBLE_EQ(S.diagonal()(1), 0.5);
}

TEST(ScalingMatrix, BlockStructure) {
  const ScalingMatrix S = scaling_matrix(0.1, 2, 2);
  const Eigen::VectorXd d = S.diagonal();
  EXPECT_DOUBLE_EQ(d(0), 1.0);
  EXPECT_DOUBLE_EQ(d(1), 1.0);
  EXPECT_DOUBLE_EQ(d(2), 0.1);
  EXPECT_DOUBLE_EQ(d(3), 0.1);
}

TEST(ScalingMatrix, RejectsNonPositiveEpsilon) {
  EXPECT_THROW(scaling_matrix(0.0, 2, 1), NonPositiveEpsilon);
  EXPECT_THROW(scaling_matrix(-0.5, 2, 1), NonPositiveEpsilon);
  EXPECT_THROW(CheapControlWeights::from_epsilon(0.0, 2), NonPositiveEpsilon);
}

TEST(ScalingMatrix, MonotoneBlocksAndIdentity) {
  for (const double et : {0.05, 0.3, 0.9}) {
    const ScalingMatrix S = scaling_matrix(et, 4, 1);
    for (int k = 1; k < 4; ++k) {
      EXPECT_LT(S.block_weight(k + 1), S.block_weight(k));
    }
  }
  EXPECT_TRUE(scaling_matrix(1.0, 4, 2).matrix().isIdentity(0.0));
}

TEST(Weights, EpsilonReparameterization) {
  for (const int r : {1, 2, 4}) {
    for (const double eps : {1.0, 1e-2, 1e-6}) {
      const CheapControlWeights w = CheapControlWeights::from_epsilon(eps, r);
      EXPECT_NEAR(std::pow(w.epsilon_tilde, 2.0 * r) / eps, 1.0, 1e-12);
    }
  }
}

TEST(FastSlow, IdentityAtEpsilonOne) {
  const auto model = normal_form_of(*make_builtin("pendulum"));
  const CheapControlWeights w = CheapControlWeights::from_epsilon_tilde(1.0, model->r);
  const Eigen::VectorXd xi = vec({0.3, -0.7});
  const Eigen::VectorXd u = vec({2.0});
  const FastSlowPoint p = to_fast_slow(*model, w, xi, u);
  EXPECT_TRUE(p.xi_tilde.isApprox(xi));
  EXPECT_TRUE(p.u_tilde.isApprox(u));
}

TEST(FastSlow, FormulaExample) {
  const auto model = normal_form_of(*make_builtin("pendulum"));  // r = 2, q = 1
  const CheapControlWeights w = CheapControlWeights::from_epsilon_tilde(0.1, model->r);
  const FastSlowPoint p = to_fast_slow(*model, w, vec({1.0, 1.0}), vec({5.0}));
  EXPECT_DOUBLE_EQ(p.xi_tilde(0), 1.0);
  EXPECT_DOUBLE_EQ(p.xi_tilde(1), 0.1);
  EXPECT_NEAR(p.u_tilde(0), 0.05, 1e-15);
}

TEST(FastSlow, RoundTrip) {
  const auto model = normal_form_of(*make_builtin("flexible_link_theta1", {2.0, 0.5, 0.5}));
  UniformSampler rng(41);
  for (int i = 0; i < 100; ++i) {
    const double et = 0.02 + 0.98 * (i / 99.0);
    const CheapControlWeights w = CheapControlWeights::from_epsilon_tilde(et, model->r);
    const Eigen::VectorXd xi = rng.vector(model->dim_xi, -2.0, 2.0);
    const Eigen::VectorXd u = rng.vector(model->q, -2.0, 2.0);
    const FastSlowPoint p = to_fast_slow(*model, w, xi, u);
    const auto [xi2, u2] = from_fast_slow(*model, w, p.xi_tilde, p.u_tilde);
    EXPECT_LT((xi2 - xi).norm(), 1e-12 * std::max(1.0, xi.norm()));
    EXPECT_LT((u2 - u).norm(), 1e-12 * std::max(1.0, u.norm()));
  }
}

TEST(RunningCost, Examples) {
  EXPECT_DOUBLE_EQ(running_cost(vec({0.0}), vec({0.0}), 0.5), 0.0);
  EXPECT_DOUBLE_EQ(running_cost(vec({1.0}), vec({2.0}), 0.25), 2.0);
  EXPECT_GT(running_cost(vec({0.1}), vec({0.0}), 1.0), 0.0);
}

TEST(RunningCost, FastSlowCostInvariance) {
  // |xi_1|^2 + eps |u|^2 == |xi_tilde_1|^2 + |u_tilde|^2 on random samples.
  for (const char* name : {"linear_nmp", "pendulum", "flexible_link_theta3"}) {
    const auto model = normal_form_of(*make_builtin(name, {2.0, 0.5, 0.5}));
    UniformSampler rng(43);
    for (int i = 0; i < 100; ++i) {
      const double et = 0.02 + 0.98 * (i / 99.0);
      const CheapControlWeights w = CheapControlWeights::from_epsilon_tilde(et, model->r);
      const Eigen::VectorXd xi = rng.vector(model->dim_xi, -2.0, 2.0);
      const Eigen::VectorXd u = rng.vector(model->q, -2.0, 2.0);
      const double lhs = running_cost(xi.head(model->q), u, w.epsilon);
      const FastSlowPoint p = to_fast_slow(*model, w, xi, u);
      const double rhs = p.xi_tilde.head(model->q).squaredNorm() + p.u_tilde.squaredNorm();
      EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(lhs)));
    }
  }
}

// Trajectories of the plant, mapped through the scaling, must satisfy the
// fast-slow dynamics: et * d(xi_tilde)/dt = F xi_tilde + G [et^r b + A u_tilde].
TEST(FastSlow, DynamicsConsistencyAlongTrajectory) {
  for (const char* name : {"linear_nmp", "pendulum", "flexible_link_theta3"}) {
    const auto system = make_builtin(name, {2.0, 0.5, 0.5});
    const auto model = normal_form_of(*system);
    const CheapControlWeights w = CheapControlWeights::from_epsilon_tilde(0.5, model->r);
    const ScalingMatrix S(w.epsilon_tilde, model->r, model->q);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(system->state_dim());
    for (int i = 0; i < x.size(); ++i) x(i) = 0.3 + 0.1 * i;
    const Eigen::VectorXd u = vec({0.4});
    const Eigen::VectorXd u_tilde = std::pow(w.epsilon_tilde, model->r) * u;

    const double h = 1e-3;
    double worst = 0.0;
    for (int step = 0; step < 200; ++step) {
      // One RK4 step of the plant under constant u.
      Eigen::VectorXd k1(x.size()), k2(x.size()), k3(x.size()), k4(x.size());
      system->dynamics(x, u, k1);
      system->dynamics(x + 0.5 * h * k1, u, k2);
      system->dynamics(x + 0.5 * h * k2, u, k3);
      system->dynamics(x + h * k3, u, k4);
      const Eigen::VectorXd x_next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

      const auto [xi_a, eta_a] = model->to_normal(x);
      const auto [xi_b, eta_b] = model->to_normal(x_next);
      const Eigen::VectorXd xt_a = S.apply(xi_a);
      const Eigen::VectorXd xt_b = S.apply(xi_b);
      const Eigen::VectorXd d_xt = (xt_b - xt_a) / h;

      const Eigen::VectorXd mid_xt = 0.5 * (xt_a + xt_b);
      const Eigen::VectorXd mid_eta = 0.5 * (eta_a + eta_b);
      const Eigen::VectorXd rhs =
          model->F * mid_xt +
          model->G * (std::pow(w.epsilon_tilde, model->r) * b_tilde(*model, w, mid_xt, mid_eta) +
                      a_tilde(*model, w, mid_xt, mid_eta) * u_tilde);
      worst = std::max(worst, (w.epsilon_tilde * d_xt - rhs).norm());
      x = x_next;
    }
    EXPECT_LT(worst, 1e-4) << name;
  }
}
