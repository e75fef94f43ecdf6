#include "cheapctl/systems.hpp"

#include <cmath>
#include <numbers>

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

std::vector<std::shared_ptr<const ControlAffineSystem>> all_builtins() {
  return {
      make_builtin("linear_nmp"),
      make_builtin("linear_nmp_flipped"),
      make_builtin("pendulum"),
      make_builtin("flexible_link_theta1", {2.0, 0.0, 0.0}),
      make_builtin("flexible_link_theta1", {2.0, 0.5, 0.5}),
      make_builtin("flexible_link_theta3", {2.0, 0.0, 0.0}),
      make_builtin("flexible_link_theta3", {2.0, 0.5, 0.5}),
  };
}

}  // namespace

TEST(EvalDynamics, OriginIsEquilibrium) {
  for (const auto& system : all_builtins()) {
    const Eigen::VectorXd x = Eigen::VectorXd::Zero(system->state_dim());
    const Eigen::VectorXd u = Eigen::VectorXd::Zero(system->input_dim());
    EXPECT_LT(eval_dynamics(*system, x, u).norm(), 1e-12) << system->name();
    EXPECT_LT(system->output(x).norm(), 1e-12) << system->name();
  }
}

TEST(EvalDynamics, LinearNmpMatrixRows) {
  const auto system = make_builtin("linear_nmp");
  const Eigen::VectorXd dx = eval_dynamics(*system, vec({1.0, 0.0}), vec({0.0}));
  EXPECT_DOUBLE_EQ(dx(0), -2.0);
  EXPECT_DOUBLE_EQ(dx(1), -10.0);
}

TEST(EvalDynamics, FlexibleLinkHandSubstitution) {
  const auto system = make_builtin("flexible_link_theta1", {2.0, 0.0, 0.0});
  const double half_pi = std::numbers::pi / 2.0;
  const Eigen::VectorXd dx = eval_dynamics(*system, vec({half_pi, 0.0, 0.0, 0.0}), vec({0.0}));
  EXPECT_NEAR(dx(0), 0.0, 1e-15);
  EXPECT_NEAR(dx(1), 1.0 - std::numbers::pi, 1e-12);
  EXPECT_NEAR(dx(2), 0.0, 1e-15);
  EXPECT_NEAR(dx(3), std::numbers::pi, 1e-12);
}

TEST(EvalDynamics, DimensionMismatchThrows) {
  const auto system = make_builtin("linear_nmp");
  EXPECT_THROW(eval_dynamics(*system, vec({1.0}), vec({0.0})), InvalidDimension);
  EXPECT_THROW(eval_dynamics(*system, vec({1.0, 0.0}), vec({0.0, 0.0})), InvalidDimension);
}

TEST(NormalForm, LinearNmpZeroDynamics) {
  const auto model = normal_form_of(*make_builtin("linear_nmp"));
  EXPECT_EQ(model->r, 1);
  EXPECT_EQ(model->dim_eta, 1);
  // Zeroing the output in the second state row leaves eta_dot = eta.
  EXPECT_DOUBLE_EQ(model->f0(vec({0.7}))(0), 0.7);
  EXPECT_DOUBLE_EQ(model->g0(vec({0.7}))(0, 0), -10.0);
  EXPECT_DOUBLE_EQ(model->b_bar(vec({2.0}), vec({3.0}))(0), -1.0);
}

TEST(NormalForm, Theta1IsFullStateLinearizable) {
  const auto model = normal_form_of(*make_builtin("flexible_link_theta1", {2.0, 0.0, 0.0}));
  EXPECT_EQ(model->r, 4);
  EXPECT_EQ(model->dim_eta, 0);
}

TEST(NormalForm, FrictionlessTheta3ZeroEigenvalues) {
  // Linearized zero dynamics [[0, 1], [1 - K, 0]]: for K = 2 the spectrum is
  // the conjugate pair +/- i, i.e. not asymptotically stable.
  const auto model = normal_form_of(*make_builtin("flexible_link_theta3", {2.0, 0.0, 0.0}));
  EXPECT_EQ(model->dim_eta, 2);
  const PhaseVerdict verdict = classify_phase(*model);
  ASSERT_EQ(verdict.zero_eigenvalues.size(), 2u);
  double max_abs_re = 0.0, max_abs_im = 0.0;
  for (const auto& ev : verdict.zero_eigenvalues) {
    max_abs_re = std::max(max_abs_re, std::abs(ev.real()));
    max_abs_im = std::max(max_abs_im, std::abs(ev.imag()));
  }
  EXPECT_LT(max_abs_re, 1e-6);
  EXPECT_NEAR(max_abs_im, 1.0, 1e-6);
  EXPECT_NE(verdict.kind, PhaseKind::ExpMinimumPhase);
}

TEST(ClassifyPhase, LinearNmpIsExpNonMinimumPhase) {
  const auto model = normal_form_of(*make_builtin("linear_nmp"));
  const PhaseVerdict verdict = classify_phase(*model);
  EXPECT_EQ(verdict.kind, PhaseKind::ExpNonMinimumPhase);
  ASSERT_EQ(verdict.zero_eigenvalues.size(), 1u);
  EXPECT_NEAR(verdict.zero_eigenvalues[0].real(), 1.0, 1e-9);
  EXPECT_NEAR(verdict.margin, 1.0, 1e-9);
}

TEST(ClassifyPhase, Theta1IsMinimumPhase) {
  const auto model = normal_form_of(*make_builtin("flexible_link_theta1", {2.0, 0.0, 0.0}));
  EXPECT_EQ(classify_phase(*model).kind, PhaseKind::ExpMinimumPhase);
}

TEST(ClassifyPhase, DampedTheta3IsMinimumPhase) {
  const auto model = normal_form_of(*make_builtin("flexible_link_theta3", {2.0, 0.5, 0.5}));
  const PhaseVerdict verdict = classify_phase(*model);
  EXPECT_EQ(verdict.kind, PhaseKind::ExpMinimumPhase);
  EXPECT_NEAR(verdict.margin, 0.25, 1e-6);  // roots of s^2 + 0.5 s + 1
}

TEST(ClassifyPhase, FlippedPlantIsMinimumPhase) {
  const auto model = normal_form_of(*make_builtin("linear_nmp_flipped"));
  EXPECT_EQ(classify_phase(*model).kind, PhaseKind::ExpMinimumPhase);
}

TEST(NormalFormConsistency, AllBuiltinsPass) {
  for (const auto& system : all_builtins()) {
    const auto model = normal_form_of(*system);
    const ConsistencyReport report = check_normal_form_consistency(*system, *model, 100, 17);
    EXPECT_TRUE(report.passed) << system->name() << " residual " << report.max_residual;
    EXPECT_LT(report.max_residual, 1e-4) << system->name();
  }
}

TEST(NormalFormConsistency, CorruptedBbarIsDetected) {
  const auto system = make_builtin("linear_nmp");
  const auto good = normal_form_of(*system);
  auto bad = std::make_shared<NormalFormModel>(*good);
  bad->b_bar = [inner = good->b_bar](const Eigen::VectorXd& xi, const Eigen::VectorXd& eta) {
    return (inner(xi, eta).array() + 1.0).matrix().eval();
  };
  EXPECT_THROW(require_normal_form_consistency(*system, *bad, 50, 17), InconsistentNormalForm);
}

TEST(Growth, LinearNmpApproachesSpectralNorm) {
  const auto system = make_builtin("linear_nmp");
  const auto model = normal_form_of(*system);
  const GrowthReport report = check_growth_assumption(*system, *model, 4000, 5);
  // Largest singular value of [[-2, 1], [-10, 1]].
  Eigen::Matrix2d A;
  A << -2.0, 1.0, -10.0, 1.0;
  const double sigma_max = A.operatorNorm();
  EXPECT_NEAR(sigma_max, 10.266, 5e-3);
  EXPECT_LE(report.drift_ratio, sigma_max + 1e-12);
  EXPECT_GE(report.drift_ratio, 0.99 * sigma_max);
  EXPECT_GE(report.overall, report.drift_ratio);
}

TEST(Growth, ZeroDriftPlantHasZeroDriftRatio) {
  struct ZeroDrift : ControlAffineSystem {
    ZeroDrift() : ControlAffineSystem(1, 1) {}
    std::string name() const override { return "zero_drift"; }
    void drift(const Eigen::VectorXd&, Eigen::VectorXd& out) const override {
      out = Eigen::VectorXd::Zero(1);
    }
    void input_matrix(const Eigen::VectorXd&, Eigen::MatrixXd& out) const override {
      out = Eigen::MatrixXd::Identity(1, 1);
    }
    void output(const Eigen::VectorXd& x, Eigen::VectorXd& out) const override { out = x; }
  };
  ZeroDrift system;
  NormalFormModel model;
  model.q = 1;
  model.r = 1;
  model.dim_xi = 1;
  model.dim_eta = 0;
  make_normal_form_matrices(1, 1, model.F, model.G, model.C);
  model.b_bar = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return Eigen::VectorXd::Zero(1);
  };
  model.a_bar = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Identity(1, 1);
  };
  model.f0 = [](const Eigen::VectorXd&) { return Eigen::VectorXd(0); };
  model.g0 = [](const Eigen::VectorXd&) { return Eigen::MatrixXd(0, 1); };
  model.to_normal = [](const Eigen::VectorXd& x) {
    return std::make_pair(x, Eigen::VectorXd(0));
  };
  model.from_normal = [](const Eigen::VectorXd& xi, const Eigen::VectorXd&) { return xi; };

  const GrowthReport report = check_growth_assumption(system, model, 200, 5);
  EXPECT_DOUBLE_EQ(report.drift_ratio, 0.0);
  EXPECT_DOUBLE_EQ(report.g_norm, 1.0);
}

TEST(Growth, FlexibleLinkFiniteOnBox) {
  const auto system = make_builtin("flexible_link_theta3", {2.0, 0.5, 0.5});
  const auto model = normal_form_of(*system);
  const GrowthReport report = check_growth_assumption(*system, *model, 500, 5);
  EXPECT_TRUE(std::isfinite(report.overall));
  EXPECT_GT(report.overall, 0.0);
}

TEST(NormalFormInvariants, OutputEqualsFirstXiBlock) {
  for (const auto& system : all_builtins()) {
    const auto model = normal_form_of(*system);
    UniformSampler rng(23);
    for (int i = 0; i < 100; ++i) {
      const Eigen::VectorXd xi = rng.vector(model->dim_xi, -2.0, 2.0);
      const Eigen::VectorXd eta = rng.vector(model->dim_eta, -2.0, 2.0);
      const Eigen::VectorXd x = model->from_normal(xi, eta);
      EXPECT_LT((system->output(x) - xi.head(model->q)).norm(), 1e-9) << system->name();
    }
  }
}

TEST(NormalFormInvariants, RoundTripOnSampledPoints) {
  for (const auto& system : all_builtins()) {
    const auto model = normal_form_of(*system);
    UniformSampler rng(29);
    for (int i = 0; i < 100; ++i) {
      const Eigen::VectorXd xi = rng.vector(model->dim_xi, -2.0, 2.0);
      const Eigen::VectorXd eta = rng.vector(model->dim_eta, -2.0, 2.0);
      const auto [xi2, eta2] = model->to_normal(model->from_normal(xi, eta));
      EXPECT_LT((xi2 - xi).norm(), 1e-9) << system->name();
      if (model->dim_eta > 0) EXPECT_LT((eta2 - eta).norm(), 1e-9) << system->name();
    }
  }
}

TEST(NormalFormInvariants, ABarSingularValueFloor) {
  for (const auto& system : all_builtins()) {
    const auto model = normal_form_of(*system);
    UniformSampler rng(31);
    double smallest = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 1000; ++i) {
      const Eigen::VectorXd xi = rng.vector(model->dim_xi, -2.0, 2.0);
      const Eigen::VectorXd eta = rng.vector(model->dim_eta, -2.0, 2.0);
      const Eigen::JacobiSVD<Eigen::MatrixXd> svd(model->a_bar(xi, eta));
      smallest = std::min(smallest, svd.singularValues().minCoeff());
    }
    // The builtins have constant A_bar; the floor is exact.
    EXPECT_GE(smallest, 0.5) << system->name();
    EXPECT_DOUBLE_EQ(smallest, model->a_bar_sigma_min) << system->name();
  }
}

TEST(Builtins, UnknownNameThrows) {
  EXPECT_THROW(make_builtin("no_such_plant"), std::invalid_argument);
}
