#include "cheapctl/systems.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "cheapctl/rng.hpp"

namespace cheapctl {

namespace {

constexpr double kJacobianFdStep = 1e-6;
constexpr double kFlowFdStep = 1e-4;
constexpr double kSampleBox = 2.0;

Eigen::VectorXd rk4_flow_step(const ControlAffineSystem& system, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u, double h) {
  Eigen::VectorXd k1(x.size()), k2(x.size()), k3(x.size()), k4(x.size());
  system.dynamics(x, u, k1);
  system.dynamics(x + 0.5 * h * k1, u, k2);
  system.dynamics(x + 0.5 * h * k2, u, k3);
  system.dynamics(x + h * k3, u, k4);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

void ControlAffineSystem::dynamics_jacobian_x(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                              Eigen::MatrixXd& jac) const {
  jac.resize(n_, n_);
  Eigen::VectorXd xp = x, xm = x, fp(n_), fm(n_);
  for (int j = 0; j < n_; ++j) {
    xp(j) = x(j) + kJacobianFdStep;
    xm(j) = x(j) - kJacobianFdStep;
    dynamics(xp, u, fp);
    dynamics(xm, u, fm);
    jac.col(j) = (fp - fm) / (2.0 * kJacobianFdStep);
    xp(j) = x(j);
    xm(j) = x(j);
  }
}

void ControlAffineSystem::output_jacobian(const Eigen::VectorXd& x, Eigen::MatrixXd& jac) const {
  jac.resize(q_, n_);
  Eigen::VectorXd xp = x, xm = x, hp(q_), hm(q_);
  for (int j = 0; j < n_; ++j) {
    xp(j) = x(j) + kJacobianFdStep;
    xm(j) = x(j) - kJacobianFdStep;
    output(xp, hp);
    output(xm, hm);
    jac.col(j) = (hp - hm) / (2.0 * kJacobianFdStep);
    xp(j) = x(j);
    xm(j) = x(j);
  }
}

Eigen::VectorXd ControlAffineSystem::drift(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(n_);
  drift(x, out);
  return out;
}

Eigen::MatrixXd ControlAffineSystem::input_matrix(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd out(n_, q_);
  input_matrix(x, out);
  return out;
}

Eigen::VectorXd ControlAffineSystem::output(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(q_);
  output(x, out);
  return out;
}

void ControlAffineSystem::dynamics(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                   Eigen::VectorXd& out) const {
  drift(x, out);
  Eigen::MatrixXd g(n_, q_);
  input_matrix(x, g);
  out.noalias() += g * u;
}

Eigen::VectorXd eval_dynamics(const ControlAffineSystem& system, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u) {
  if (x.size() != system.state_dim()) {
    std::ostringstream msg;
    msg << "state dimension " << x.size() << " != " << system.state_dim();
    throw InvalidDimension(msg.str());
  }
  if (u.size() != system.input_dim()) {
    std::ostringstream msg;
    msg << "input dimension " << u.size() << " != " << system.input_dim();
    throw InvalidDimension(msg.str());
  }
  Eigen::VectorXd out(system.state_dim());
  system.dynamics(x, u, out);
  return out;
}

void make_normal_form_matrices(int r, int q, Eigen::MatrixXd& F, Eigen::MatrixXd& G,
                               Eigen::MatrixXd& C) {
  const int dim_xi = r * q;
  F = Eigen::MatrixXd::Zero(dim_xi, dim_xi);
  for (int k = 0; k + 1 < r; ++k) {
    F.block(k * q, (k + 1) * q, q, q).setIdentity();
  }
  G = Eigen::MatrixXd::Zero(dim_xi, q);
  G.bottomRows(q).setIdentity();
  C = Eigen::MatrixXd::Zero(q, dim_xi);
  C.leftCols(q).setIdentity();
}

std::string to_string(PhaseKind kind) {
  switch (kind) {
    case PhaseKind::ExpMinimumPhase:
      return "exp_minimum_phase";
    case PhaseKind::ExpNonMinimumPhase:
      return "exp_non_minimum_phase";
    case PhaseKind::Marginal:
      return "marginal";
  }
  return "marginal";
}

PhaseVerdict classify_phase(const NormalFormModel& model, double tol) {
  PhaseVerdict verdict;
  if (model.dim_eta == 0) {
    // Full-state linearizable: minimum-phase by convention.
    verdict.kind = PhaseKind::ExpMinimumPhase;
    verdict.margin = std::numeric_limits<double>::infinity();
    return verdict;
  }

  const int m = model.dim_eta;
  Eigen::MatrixXd jac(m, m);
  Eigen::VectorXd ep = Eigen::VectorXd::Zero(m), em = Eigen::VectorXd::Zero(m);
  for (int j = 0; j < m; ++j) {
    ep(j) = kJacobianFdStep;
    em(j) = -kJacobianFdStep;
    jac.col(j) = (model.f0(ep) - model.f0(em)) / (2.0 * kJacobianFdStep);
    ep(j) = 0.0;
    em(j) = 0.0;
  }

  Eigen::EigenSolver<Eigen::MatrixXd> eig(jac);
  double max_re = -std::numeric_limits<double>::infinity();
  double min_re = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) {
    const std::complex<double> lambda = eig.eigenvalues()(i);
    verdict.zero_eigenvalues.push_back(lambda);
    max_re = std::max(max_re, lambda.real());
    min_re = std::min(min_re, lambda.real());
  }
  verdict.margin = std::abs(max_re);
  if (max_re < -tol) {
    verdict.kind = PhaseKind::ExpMinimumPhase;
  } else if (min_re > tol) {
    // -f0 has a Hurwitz linearization: exponentially non-minimum-phase.
    verdict.kind = PhaseKind::ExpNonMinimumPhase;
  } else {
    verdict.kind = PhaseKind::Marginal;
  }
  return verdict;
}

ConsistencyReport check_normal_form_consistency(const ControlAffineSystem& system,
                                                const NormalFormModel& model, int n_samples,
                                                std::uint64_t seed, double threshold) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  ConsistencyReport report;
  UniformSampler rng(seed);
  const double h = kFlowFdStep;
  for (int s = 0; s < n_samples; ++s) {
    const Eigen::VectorXd x = rng.vector(system.state_dim(), -kSampleBox, kSampleBox);
    const Eigen::VectorXd u = rng.vector(system.input_dim(), -kSampleBox, kSampleBox);

    const Eigen::VectorXd x_fwd = rk4_flow_step(system, x, u, h);
    const Eigen::VectorXd x_bwd = rk4_flow_step(system, x, u, -h);
    const auto [xi_f, eta_f] = model.to_normal(x_fwd);
    const auto [xi_b, eta_b] = model.to_normal(x_bwd);
    const Eigen::VectorXd dxi = (xi_f - xi_b) / (2.0 * h);
    const Eigen::VectorXd deta = (eta_f - eta_b) / (2.0 * h);

    const auto [xi, eta] = model.to_normal(x);
    const Eigen::VectorXd xi_rhs =
        model.F * xi + model.G * (model.b_bar(xi, eta) + model.a_bar(xi, eta) * u);
    double residual = (dxi - xi_rhs).cwiseAbs().maxCoeff();
    if (model.dim_eta > 0) {
      const Eigen::VectorXd eta_rhs = model.f0(eta) + model.g0(eta) * xi.head(model.q);
      residual = std::max(residual, (deta - eta_rhs).cwiseAbs().maxCoeff());
    }
    if (residual > report.max_residual) {
      report.max_residual = residual;
      report.worst_x = x;
      report.worst_u = u;
    }
  }
  report.passed = report.max_residual < threshold;
  return report;
}

void require_normal_form_consistency(const ControlAffineSystem& system,
                                     const NormalFormModel& model, int n_samples,
                                     std::uint64_t seed, double threshold) {
  const ConsistencyReport report =
      check_normal_form_consistency(system, model, n_samples, seed, threshold);
  if (!report.passed) {
    std::ostringstream msg;
    msg << "normal form of " << system.name() << " inconsistent: max residual "
        << report.max_residual << " exceeds " << threshold;
    throw InconsistentNormalForm(msg.str());
  }
}

GrowthReport check_growth_assumption(const ControlAffineSystem& system,
                                     const NormalFormModel& model, int n_samples,
                                     std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  GrowthReport report;
  UniformSampler rng(seed);
  for (int s = 0; s < n_samples; ++s) {
    Eigen::VectorXd x = rng.vector(system.state_dim(), -kSampleBox, kSampleBox);
    while (x.norm() < 1e-8) x = rng.vector(system.state_dim(), -kSampleBox, kSampleBox);
    const auto [xi, eta] = model.to_normal(x);

    report.drift_ratio = std::max(report.drift_ratio, system.drift(x).norm() / x.norm());
    report.g_norm = std::max(report.g_norm, system.input_matrix(x).operatorNorm());

    const double denom = xi.norm() + eta.norm();
    if (denom > 1e-8) {
      report.b_bar_ratio = std::max(report.b_bar_ratio, model.b_bar(xi, eta).norm() / denom);
    }
    report.a_bar_norm = std::max(report.a_bar_norm, model.a_bar(xi, eta).operatorNorm());
    if (model.dim_eta > 0 && eta.norm() > 1e-8) {
      report.f0_ratio = std::max(report.f0_ratio, model.f0(eta).norm() / eta.norm());
      report.g0_norm = std::max(report.g0_norm, model.g0(eta).operatorNorm());
    }
  }
  report.overall = std::max({report.drift_ratio, report.b_bar_ratio, report.a_bar_norm,
                             report.f0_ratio, report.g0_norm, report.g_norm});
  return report;
}

// ---------------------------------------------------------------------------
// LinearNmp

LinearNmp::LinearNmp() : ControlAffineSystem(2, 1) {
  A_ << -2.0, 1.0, -10.0, 1.0;
  B_ << 1.0, 0.0;
}

void LinearNmp::drift(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  out.noalias() = A_ * x;
}

void LinearNmp::input_matrix(const Eigen::VectorXd&, Eigen::MatrixXd& out) const { out = B_; }

void LinearNmp::output(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  out.resize(1);
  out(0) = x(0);
}

void LinearNmp::dynamics_jacobian_x(const Eigen::VectorXd&, const Eigen::VectorXd&,
                                    Eigen::MatrixXd& jac) const {
  jac = A_;
}

void LinearNmp::output_jacobian(const Eigen::VectorXd&, Eigen::MatrixXd& jac) const {
  jac.resize(1, 2);
  jac << 1.0, 0.0;
}

std::optional<LinearStateSpace> LinearNmp::linear() const {
  LinearStateSpace ss;
  ss.A = A_;
  ss.B = B_;
  ss.C = Eigen::MatrixXd::Zero(1, 2);
  ss.C(0, 0) = 1.0;
  return ss;
}

std::shared_ptr<const NormalFormModel> LinearNmp::normal_form() const {
  auto model = std::make_shared<NormalFormModel>();
  model->q = 1;
  model->r = 1;
  model->dim_xi = 1;
  model->dim_eta = 1;
  model->a_bar_sigma_min = 1.0;
  make_normal_form_matrices(1, 1, model->F, model->G, model->C);
  model->b_bar = [](const Eigen::VectorXd& xi, const Eigen::VectorXd& eta) {
    Eigen::VectorXd b(1);
    b(0) = -2.0 * xi(0) + eta(0);
    return b;
  };
  model->a_bar = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Identity(1, 1);
  };
  model->f0 = [](const Eigen::VectorXd& eta) { return eta; };
  model->g0 = [](const Eigen::VectorXd&) {
    Eigen::MatrixXd g(1, 1);
    g(0, 0) = -10.0;
    return g;
  };
  model->to_normal = [](const Eigen::VectorXd& x) {
    return std::make_pair(x.head(1).eval(), x.tail(1).eval());
  };
  model->from_normal = [](const Eigen::VectorXd& xi, const Eigen::VectorXd& eta) {
    Eigen::VectorXd x(2);
    x << xi(0), eta(0);
    return x;
  };
  return model;
}

// ---------------------------------------------------------------------------
// LinearNmpFlipped

LinearNmpFlipped::LinearNmpFlipped() : ControlAffineSystem(2, 1) {
  A_ << 2.0, -1.0, 10.0, -1.0;
  B_ << 1.0, 0.0;
}

void LinearNmpFlipped::drift(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  out.noalias() = A_ * x;
}

void LinearNmpFlipped::input_matrix(const Eigen::VectorXd&, Eigen::MatrixXd& out) const {
  out = B_;
}

void LinearNmpFlipped::output(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  out.resize(1);
  out(0) = x(0);
}

void LinearNmpFlipped::dynamics_jacobian_x(const Eigen::VectorXd&, const Eigen::VectorXd&,
                                           Eigen::MatrixXd& jac) const {
  jac = A_;
}

void LinearNmpFlipped::output_jacobian(const Eigen::VectorXd&, Eigen::MatrixXd& jac) const {
  jac.resize(1, 2);
  jac << 1.0, 0.0;
}

std::optional<LinearStateSpace> LinearNmpFlipped::linear() const {
  LinearStateSpace ss;
  ss.A = A_;
  ss.B = B_;
  ss.C = Eigen::MatrixXd::Zero(1, 2);
  ss.C(0, 0) = 1.0;
  return ss;
}

std::shared_ptr<const NormalFormModel> LinearNmpFlipped::normal_form() const {
  auto model = std::make_shared<NormalFormModel>();
  model->q = 1;
  model->r = 1;
  model->dim_xi = 1;
  model->dim_eta = 1;
  model->a_bar_sigma_min = 1.0;
  make_normal_form_matrices(1, 1, model->F, model->G, model->C);
  model->b_bar = [](const Eigen::VectorXd& xi, const Eigen::VectorXd& eta) {
    Eigen::VectorXd b(1);
    b(0) = 2.0 * xi(0) - eta(0);
    return b;
  };
  model->a_bar = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Identity(1, 1);
  };
  model->f0 = [](const Eigen::VectorXd& eta) { return (-eta).eval(); };
  model->g0 = [](const Eigen::VectorXd&) {
    Eigen::MatrixXd g(1, 1);
    g(0, 0) = 10.0;
    return g;
  };
  model->to_normal = [](const Eigen::VectorXd& x) {
    return std::make_pair(x.head(1).eval(), x.tail(1).eval());
  };
  model->from_normal = [](const Eigen::VectorXd& xi, const Eigen::VectorXd& eta) {
    Eigen::VectorXd x(2);
    x << xi(0), eta(0);
    return x;
  };
  return model;
}

// ---------------------------------------------------------------------------
// FlexibleLink

FlexibleLink::FlexibleLink(FlexibleLinkOutput out, FlexibleLinkParams params)
    : ControlAffineSystem(4, 1), out_(out), params_(params) {
  if (params_.K <= 1.0) throw std::invalid_argument("FlexibleLink requires K > 1");
  if (params_.beta1 < 0.0 || params_.beta2 < 0.0) {
    throw std::invalid_argument("FlexibleLink requires nonnegative friction");
  }
}

std::string FlexibleLink::name() const {
  return out_ == FlexibleLinkOutput::Theta1 ? "flexible_link_theta1" : "flexible_link_theta3";
}

void FlexibleLink::drift(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  const double K = params_.K;
  out.resize(4);
  out(0) = x(1);
  out(1) = std::sin(x(0)) + K * (x(2) - x(0)) - params_.beta1 * x(1);
  out(2) = x(3);
  out(3) = K * (x(0) - x(2)) - params_.beta2 * x(3);
}

void FlexibleLink::input_matrix(const Eigen::VectorXd&, Eigen::MatrixXd& out) const {
  out = Eigen::MatrixXd::Zero(4, 1);
  out(3, 0) = 1.0;
}

void FlexibleLink::output(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  out.resize(1);
  out(0) = out_ == FlexibleLinkOutput::Theta1 ? x(0) : x(2);
}

void FlexibleLink::dynamics_jacobian_x(const Eigen::VectorXd& x, const Eigen::VectorXd&,
                                       Eigen::MatrixXd& jac) const {
  const double K = params_.K;
  jac = Eigen::MatrixXd::Zero(4, 4);
  jac(0, 1) = 1.0;
  jac(1, 0) = std::cos(x(0)) - K;
  jac(1, 1) = -params_.beta1;
  jac(1, 2) = K;
  jac(2, 3) = 1.0;
  jac(3, 0) = K;
  jac(3, 2) = -K;
  jac(3, 3) = -params_.beta2;
}

void FlexibleLink::output_jacobian(const Eigen::VectorXd&, Eigen::MatrixXd& jac) const {
  jac = Eigen::MatrixXd::Zero(1, 4);
  jac(0, out_ == FlexibleLinkOutput::Theta1 ? 0 : 2) = 1.0;
}

std::shared_ptr<const NormalFormModel> FlexibleLink::normal_form() const {
  const double K = params_.K;
  const double b1 = params_.beta1;
  const double b2 = params_.beta2;

  auto model = std::make_shared<NormalFormModel>();
  model->q = 1;

  if (out_ == FlexibleLinkOutput::Theta1) {
    // y = x1 has relative degree four: the plant is full-state linearizable.
    model->r = 4;
    model->dim_xi = 4;
    model->dim_eta = 0;
    model->a_bar_sigma_min = K;
    make_normal_form_matrices(4, 1, model->F, model->G, model->C);

    auto to_xi = [K, b1](const Eigen::VectorXd& x) {
      Eigen::VectorXd xi(4);
      xi(0) = x(0);
      xi(1) = x(1);
      xi(2) = std::sin(x(0)) + K * (x(2) - x(0)) - b1 * x(1);
      xi(3) = std::cos(x(0)) * x(1) + K * (x(3) - x(1)) - b1 * xi(2);
      return xi;
    };
    auto from_xi = [K, b1](const Eigen::VectorXd& xi) {
      Eigen::VectorXd x(4);
      x(0) = xi(0);
      x(1) = xi(1);
      x(2) = (xi(2) - std::sin(xi(0)) + K * xi(0) + b1 * xi(1)) / K;
      x(3) = (xi(3) - std::cos(xi(0)) * xi(1) + K * xi(1) + b1 * xi(2)) / K;
      return x;
    };

    model->b_bar = [K, b1, b2, from_xi](const Eigen::VectorXd& xi, const Eigen::VectorXd&) {
      const Eigen::VectorXd x = from_xi(xi);
      Eigen::VectorXd b(1);
      b(0) = -std::sin(x(0)) * x(1) * x(1) + std::cos(x(0)) * xi(2) +
             K * (K * (x(0) - x(2)) - b2 * x(3)) - K * xi(2) - b1 * xi(3);
      return b;
    };
    model->a_bar = [K](const Eigen::VectorXd&, const Eigen::VectorXd&) {
      return (K * Eigen::MatrixXd::Identity(1, 1)).eval();
    };
    model->f0 = [](const Eigen::VectorXd&) { return Eigen::VectorXd(0); };
    model->g0 = [](const Eigen::VectorXd&) { return Eigen::MatrixXd(0, 1); };
    model->to_normal = [to_xi](const Eigen::VectorXd& x) {
      return std::make_pair(to_xi(x), Eigen::VectorXd(0));
    };
    model->from_normal = [from_xi](const Eigen::VectorXd& xi, const Eigen::VectorXd&) {
      return from_xi(xi);
    };
    return model;
  }

  // y = x3: relative degree two, zeros are the arm states (x1, x2).
  model->r = 2;
  model->dim_xi = 2;
  model->dim_eta = 2;
  model->a_bar_sigma_min = 1.0;
  make_normal_form_matrices(2, 1, model->F, model->G, model->C);

  model->b_bar = [K, b2](const Eigen::VectorXd& xi, const Eigen::VectorXd& eta) {
    Eigen::VectorXd b(1);
    b(0) = K * (eta(0) - xi(0)) - b2 * xi(1);
    return b;
  };
  model->a_bar = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Identity(1, 1);
  };
  model->f0 = [K, b1](const Eigen::VectorXd& eta) {
    Eigen::VectorXd f(2);
    f(0) = eta(1);
    f(1) = std::sin(eta(0)) - K * eta(0) - b1 * eta(1);
    return f;
  };
  model->g0 = [K](const Eigen::VectorXd&) {
    Eigen::MatrixXd g(2, 1);
    g << 0.0, K;
    return g;
  };
  model->to_normal = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd xi(2), eta(2);
    xi << x(2), x(3);
    eta << x(0), x(1);
    return std::make_pair(xi, eta);
  };
  model->from_normal = [](const Eigen::VectorXd& xi, const Eigen::VectorXd& eta) {
    Eigen::VectorXd x(4);
    x << eta(0), eta(1), xi(0), xi(1);
    return x;
  };
  return model;
}

// ---------------------------------------------------------------------------
// InvertedPendulum

InvertedPendulum::InvertedPendulum() : ControlAffineSystem(2, 1) {}

void InvertedPendulum::drift(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  out.resize(2);
  out(0) = x(1);
  out(1) = std::sin(x(0));
}

void InvertedPendulum::input_matrix(const Eigen::VectorXd&, Eigen::MatrixXd& out) const {
  out = Eigen::MatrixXd::Zero(2, 1);
  out(1, 0) = 1.0;
}

void InvertedPendulum::output(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  out.resize(1);
  out(0) = x(0);
}

void InvertedPendulum::dynamics_jacobian_x(const Eigen::VectorXd& x, const Eigen::VectorXd&,
                                           Eigen::MatrixXd& jac) const {
  jac = Eigen::MatrixXd::Zero(2, 2);
  jac(0, 1) = 1.0;
  jac(1, 0) = std::cos(x(0));
}

void InvertedPendulum::output_jacobian(const Eigen::VectorXd&, Eigen::MatrixXd& jac) const {
  jac.resize(1, 2);
  jac << 1.0, 0.0;
}

std::shared_ptr<const NormalFormModel> InvertedPendulum::normal_form() const {
  auto model = std::make_shared<NormalFormModel>();
  model->q = 1;
  model->r = 2;
  model->dim_xi = 2;
  model->dim_eta = 0;
  model->a_bar_sigma_min = 1.0;
  make_normal_form_matrices(2, 1, model->F, model->G, model->C);
  model->b_bar = [](const Eigen::VectorXd& xi, const Eigen::VectorXd&) {
    Eigen::VectorXd b(1);
    b(0) = std::sin(xi(0));
    return b;
  };
  model->a_bar = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Identity(1, 1);
  };
  model->f0 = [](const Eigen::VectorXd&) { return Eigen::VectorXd(0); };
  model->g0 = [](const Eigen::VectorXd&) { return Eigen::MatrixXd(0, 1); };
  model->to_normal = [](const Eigen::VectorXd& x) {
    return std::make_pair(x, Eigen::VectorXd(0));
  };
  model->from_normal = [](const Eigen::VectorXd& xi, const Eigen::VectorXd&) { return xi; };
  return model;
}

// ---------------------------------------------------------------------------

std::shared_ptr<const ControlAffineSystem> make_builtin(const std::string& name,
                                                        FlexibleLinkParams params) {
  if (name == "linear_nmp") return std::make_shared<LinearNmp>();
  if (name == "linear_nmp_flipped") return std::make_shared<LinearNmpFlipped>();
  if (name == "flexible_link_theta1") {
    return std::make_shared<FlexibleLink>(FlexibleLinkOutput::Theta1, params);
  }
  if (name == "flexible_link_theta3") {
    return std::make_shared<FlexibleLink>(FlexibleLinkOutput::Theta3, params);
  }
  if (name == "pendulum") return std::make_shared<InvertedPendulum>();
  throw std::invalid_argument("unknown builtin system: " + name);
}

std::shared_ptr<const NormalFormModel> normal_form_of(const ControlAffineSystem& system) {
  auto model = system.normal_form();
  if (!model) {
    throw std::invalid_argument("system " + system.name() + " supplies no normal form");
  }
  return model;
}

}  // namespace cheapctl
