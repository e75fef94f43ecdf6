#include "cheapctl/ocp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

namespace cheapctl {

namespace {

constexpr double kDefaultCtrlDt = 0.01;

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

struct RolloutBuffers {
  Eigen::VectorXd k1, k2, k3, k4, x2, x3, x4, h_val;
};

double stage_cost(const ControlAffineSystem& system, double epsilon, const Eigen::VectorXd& x,
                  const Eigen::VectorXd& u, Eigen::VectorXd& h_buf) {
  system.output(x, h_buf);
  return h_buf.squaredNorm() + epsilon * u.squaredNorm();
}

struct RolloutResult {
  double cost = 0.0;
  bool finite = true;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;  // grid nodes; always filled (needed by the adjoint)
};

RolloutResult rollout(const ControlAffineSystem& system, double epsilon, const Eigen::VectorXd& x0,
                      const HorizonSpec& horizon, const std::vector<Eigen::VectorXd>& u) {
  const int n = system.state_dim();
  const double h = horizon.dt_ctrl() / horizon.n_int;

  RolloutResult out;
  out.times.reserve(static_cast<size_t>(horizon.n_ctrl) * horizon.n_int + 1);
  out.states.reserve(out.times.capacity());
  out.times.push_back(0.0);
  out.states.push_back(x0);

  RolloutBuffers b;
  b.k1.resize(n);
  b.k2.resize(n);
  b.k3.resize(n);
  b.k4.resize(n);

  Eigen::VectorXd x = x0;
  double t = 0.0;
  double cost = 0.0;
  for (int i = 0; i < horizon.n_ctrl && out.finite; ++i) {
    const Eigen::VectorXd& ui = u[i];
    for (int s = 0; s < horizon.n_int; ++s) {
      system.dynamics(x, ui, b.k1);
      const double l1 = stage_cost(system, epsilon, x, ui, b.h_val);
      b.x2 = x + (0.5 * h) * b.k1;
      system.dynamics(b.x2, ui, b.k2);
      const double l2 = stage_cost(system, epsilon, b.x2, ui, b.h_val);
      b.x3 = x + (0.5 * h) * b.k2;
      system.dynamics(b.x3, ui, b.k3);
      const double l3 = stage_cost(system, epsilon, b.x3, ui, b.h_val);
      b.x4 = x + h * b.k3;
      system.dynamics(b.x4, ui, b.k4);
      const double l4 = stage_cost(system, epsilon, b.x4, ui, b.h_val);

      x += (h / 6.0) * (b.k1 + 2.0 * b.k2 + 2.0 * b.k3 + b.k4);
      cost += (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
      t += h;
      out.times.push_back(t);
      out.states.push_back(x);
      if (!std::isfinite(cost) || !x.allFinite()) {
        out.finite = false;
        cost = std::numeric_limits<double>::infinity();
        break;
      }
    }
  }
  out.cost = cost;
  return out;
}

// Exact reverse-mode differentiation of the rollout with respect to the
// stacked controls.
void adjoint_gradient(const ControlAffineSystem& system, double epsilon,
                      const HorizonSpec& horizon, const std::vector<Eigen::VectorXd>& u,
                      const RolloutResult& fwd, Eigen::VectorXd& grad) {
  const int n = system.state_dim();
  const int q = system.input_dim();
  const double h = horizon.dt_ctrl() / horizon.n_int;
  const double w1 = h / 6.0, w2 = h / 3.0, w3 = h / 3.0, w4 = h / 6.0;

  grad.setZero(static_cast<Eigen::Index>(horizon.n_ctrl) * q);

  Eigen::VectorXd lam = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd k1(n), k2(n), k3(n);
  Eigen::VectorXd x2(n), x3(n), x4(n);
  Eigen::VectorXd d(n), gx(n), lam_acc(n);
  Eigen::MatrixXd jac(n, n), gmat(n, q), hjac(q, n);
  Eigen::VectorXd h_val(q);

  auto lx = [&](const Eigen::VectorXd& x, Eigen::VectorXd& out) {
    system.output(x, h_val);
    system.output_jacobian(x, hjac);
    out.noalias() = 2.0 * hjac.transpose() * h_val;
  };

  for (int i = horizon.n_ctrl - 1; i >= 0; --i) {
    const Eigen::VectorXd& ui = u[i];
    const Eigen::VectorXd lu = 2.0 * epsilon * ui;
    for (int s = horizon.n_int - 1; s >= 0; --s) {
      const Eigen::VectorXd& x1 = fwd.states[static_cast<size_t>(i) * horizon.n_int + s];
      system.dynamics(x1, ui, k1);
      x2 = x1 + (0.5 * h) * k1;
      system.dynamics(x2, ui, k2);
      x3 = x1 + (0.5 * h) * k2;
      system.dynamics(x3, ui, k3);
      x4 = x1 + h * k3;

      lam_acc = lam;
      auto gseg = grad.segment(static_cast<Eigen::Index>(i) * q, q);

      // stage 4
      d = w4 * lam;
      system.dynamics_jacobian_x(x4, ui, jac);
      lx(x4, gx);
      gx = jac.transpose() * d + w4 * gx;
      system.input_matrix(x4, gmat);
      gseg.noalias() += gmat.transpose() * d + w4 * lu;
      lam_acc += gx;
      // stage 3
      d = w3 * lam + h * gx;
      system.dynamics_jacobian_x(x3, ui, jac);
      lx(x3, gx);
      gx = jac.transpose() * d + w3 * gx;
      system.input_matrix(x3, gmat);
      gseg.noalias() += gmat.transpose() * d + w3 * lu;
      lam_acc += gx;
      // stage 2
      d = w2 * lam + (0.5 * h) * gx;
      system.dynamics_jacobian_x(x2, ui, jac);
      lx(x2, gx);
      gx = jac.transpose() * d + w2 * gx;
      system.input_matrix(x2, gmat);
      gseg.noalias() += gmat.transpose() * d + w2 * lu;
      lam_acc += gx;
      // stage 1
      d = w1 * lam + (0.5 * h) * gx;
      system.dynamics_jacobian_x(x1, ui, jac);
      lx(x1, gx);
      gx = jac.transpose() * d + w1 * gx;
      system.input_matrix(x1, gmat);
      gseg.noalias() += gmat.transpose() * d + w1 * lu;
      lam_acc += gx;

      lam = lam_acc;
    }
  }
}

std::vector<Eigen::VectorXd> unflatten(const Eigen::VectorXd& u_flat, int n_ctrl, int q) {
  std::vector<Eigen::VectorXd> u(n_ctrl);
  for (int i = 0; i < n_ctrl; ++i) u[i] = u_flat.segment(static_cast<Eigen::Index>(i) * q, q);
  return u;
}

}  // namespace

HorizonSpec HorizonSpec::with_defaults(double T) {
  HorizonSpec spec;
  spec.T = T;
  spec.n_ctrl = std::max(20, static_cast<int>(std::ceil(T / kDefaultCtrlDt - 1e-9)));
  spec.n_int = 10;
  return spec;
}

void HorizonSpec::validate() const {
  if (!(T > 0.0)) throw std::invalid_argument("HorizonSpec: T must be > 0");
  if (n_ctrl < 1) throw std::invalid_argument("HorizonSpec: n_ctrl must be >= 1");
  if (n_int < 1) throw std::invalid_argument("HorizonSpec: n_int must be >= 1");
}

ControlTrajectory ControlTrajectory::zeros(const HorizonSpec& horizon, int q) {
  ControlTrajectory ctrl;
  ctrl.horizon = horizon;
  ctrl.values.assign(horizon.n_ctrl, Eigen::VectorXd::Zero(q));
  return ctrl;
}

Eigen::VectorXd ControlTrajectory::flat() const {
  const int q = values.empty() ? 0 : static_cast<int>(values.front().size());
  Eigen::VectorXd u(static_cast<Eigen::Index>(values.size()) * q);
  for (size_t i = 0; i < values.size(); ++i) u.segment(static_cast<Eigen::Index>(i) * q, q) = values[i];
  return u;
}

ControlTrajectory ControlTrajectory::from_flat(const Eigen::VectorXd& u, const HorizonSpec& horizon,
                                               int q) {
  if (u.size() != static_cast<Eigen::Index>(horizon.n_ctrl) * q) {
    throw InvalidDimension("from_flat: control vector has wrong size");
  }
  ControlTrajectory ctrl;
  ctrl.horizon = horizon;
  ctrl.values = unflatten(u, horizon.n_ctrl, q);
  return ctrl;
}

double evaluate_cost(const ControlAffineSystem& system, double epsilon, const Eigen::VectorXd& x0,
                     const ControlTrajectory& ctrl) {
  if (epsilon <= 0.0) throw NonPositiveEpsilon("epsilon must be > 0");
  ctrl.horizon.validate();
  if (static_cast<int>(ctrl.values.size()) != ctrl.horizon.n_ctrl) {
    throw InvalidDimension("control trajectory length != n_ctrl");
  }
  if (x0.size() != system.state_dim()) throw InvalidDimension("x0 has wrong dimension");
  const RolloutResult r = rollout(system, epsilon, x0, ctrl.horizon, ctrl.values);
  if (!r.finite) throw NonFiniteCost("cost integration overflowed");
  return r.cost;
}

double objective_and_gradient(const ControlAffineSystem& system, double epsilon,
                              const Eigen::VectorXd& x0, const HorizonSpec& horizon,
                              const Eigen::VectorXd& u_flat, Eigen::VectorXd* grad) {
  const auto u = unflatten(u_flat, horizon.n_ctrl, system.input_dim());
  const RolloutResult fwd = rollout(system, epsilon, x0, horizon, u);
  if (grad != nullptr) {
    if (!fwd.finite) throw NonFiniteCost("gradient requested at a divergent control");
    adjoint_gradient(system, epsilon, horizon, u, fwd, *grad);
  }
  return fwd.cost;
}

SolveReport simulate_control(const ControlAffineSystem& system, double epsilon,
                             const Eigen::VectorXd& x0, const ControlTrajectory& ctrl) {
  const RolloutResult r = rollout(system, epsilon, x0, ctrl.horizon, ctrl.values);
  SolveReport report;
  report.cost = r.cost;
  report.converged = false;
  report.iterations = 0;
  report.grad_norm = std::numeric_limits<double>::quiet_NaN();
  report.times = r.times;
  report.states = r.states;
  if (!r.finite) throw NonFiniteCost("simulation overflowed");
  return report;
}

std::pair<ControlTrajectory, SolveReport> solve_finite_horizon(const ControlAffineSystem& system,
                                                               double epsilon,
                                                               const Eigen::VectorXd& x0,
                                                               const HorizonSpec& horizon,
                                                               const SolveOptions& opts) {
  if (epsilon <= 0.0) throw NonPositiveEpsilon("epsilon must be > 0");
  horizon.validate();
  if (x0.size() != system.state_dim()) throw InvalidDimension("x0 has wrong dimension");
  const int q = system.input_dim();
  const Eigen::Index dim = static_cast<Eigen::Index>(horizon.n_ctrl) * q;

  Eigen::VectorXd u = Eigen::VectorXd::Zero(dim);
  if (opts.warm_start) {
    if (static_cast<int>(opts.warm_start->values.size()) != horizon.n_ctrl) {
      throw InvalidDimension("warm start length != n_ctrl");
    }
    u = opts.warm_start->flat();
  }

  Eigen::VectorXd g(dim), g_new(dim);
  double f = objective_and_gradient(system, epsilon, x0, horizon, u, &g);
  if (!std::isfinite(f)) throw NonFiniteCost("initial control is divergent");

  std::deque<Eigen::VectorXd> S, Y;
  std::deque<double> rho;
  Eigen::VectorXd d(dim), u_new(dim), alpha_buf;

  int it = 0;
  bool converged = g.norm() <= opts.tol_grad;
  while (!converged && it < opts.max_iters) {
    ++it;

    // Two-loop recursion for d = -H g.
    d = -g;
    const int m = static_cast<int>(S.size());
    if (m > 0) {
      std::vector<double> alpha(m);
      for (int j = m - 1; j >= 0; --j) {
        alpha[j] = rho[j] * S[j].dot(d);
        d -= alpha[j] * Y[j];
      }
      const double gamma = S.back().dot(Y.back()) / Y.back().squaredNorm();
      d *= gamma;
      for (int j = 0; j < m; ++j) {
        const double beta = rho[j] * Y[j].dot(d);
        d += (alpha[j] - beta) * S[j];
      }
    }
    double slope = g.dot(d);
    if (!std::isfinite(slope) || slope >= 0.0) {
      S.clear();
      Y.clear();
      rho.clear();
      d = -g;
      slope = -g.squaredNorm();
    }

    double step = S.empty() ? std::min(1.0, 1.0 / std::max(1.0, g.norm())) : 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      u_new = u + step * d;
      f_new = objective_and_gradient(system, epsilon, x0, horizon, u_new, nullptr);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    objective_and_gradient(system, epsilon, x0, horizon, u_new, &g_new);
    Eigen::VectorXd s_vec = u_new - u;
    Eigen::VectorXd y_vec = g_new - g;
    const double sy = s_vec.dot(y_vec);
    if (sy > 1e-12 * s_vec.norm() * y_vec.norm()) {
      S.push_back(std::move(s_vec));
      Y.push_back(std::move(y_vec));
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opts.lbfgs_memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    u = u_new;
    f = f_new;
    g = g_new;
    converged = g.norm() <= opts.tol_grad;
  }

  ControlTrajectory ctrl = ControlTrajectory::from_flat(u, horizon, q);
  const RolloutResult final_run = rollout(system, epsilon, x0, horizon, ctrl.values);
  SolveReport report;
  report.cost = final_run.cost;
  report.converged = converged;
  report.iterations = it;
  report.grad_norm = g.norm();
  report.times = final_run.times;
  report.states = final_run.states;
  return {std::move(ctrl), std::move(report)};
}

std::pair<ControlTrajectory, SolveReport> solve_with_continuation(
    const ControlAffineSystem& system, double epsilon, const Eigen::VectorXd& x0,
    const HorizonSpec& horizon, const SolveOptions& opts, int n_stages) {
  horizon.validate();
  const int q = system.input_dim();
  SolveOptions stage_opts = opts;
  stage_opts.warm_start.reset();

  ControlTrajectory prev;
  bool have_prev = false;
  for (int stage = n_stages - 1; stage >= 0; --stage) {
    HorizonSpec spec = horizon;
    spec.n_ctrl = std::max(1, horizon.n_ctrl >> stage);
    spec.T = horizon.T * spec.n_ctrl / horizon.n_ctrl;
    if (have_prev) {
      ControlTrajectory warm = ControlTrajectory::zeros(spec, q);
      for (size_t i = 0; i < prev.values.size() && i < warm.values.size(); ++i) {
        warm.values[i] = prev.values[i];
      }
      stage_opts.warm_start = std::move(warm);
    }
    auto [ctrl, report] = solve_finite_horizon(system, epsilon, x0, spec, stage_opts);
    if (stage == 0) return {std::move(ctrl), std::move(report)};
    prev = std::move(ctrl);
    have_prev = true;
  }
  return solve_finite_horizon(system, epsilon, x0, horizon, opts);  // n_stages <= 0
}

// ---------------------------------------------------------------------------
// Linear-plant oracles

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n || M.rows() != n || M.cols() != n) {
    throw InvalidDimension("solve_lyapunov: dimension mismatch");
  }
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n * n, n * n);
  const Eigen::MatrixXd At = A.transpose();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  // vec(A^T X) = (I (x) A^T) vec(X), vec(X A) = (A^T (x) I) vec(X)
  for (int i = 0; i < n; ++i) {
    K.block(i * n, i * n, n, n) = At;
    for (int j = 0; j < n; ++j) {
      K.block(i * n, j * n, n, n) += At(i, j) * I;
    }
  }
  Eigen::VectorXd rhs(n * n);
  for (int col = 0; col < n; ++col) rhs.segment(col * n, n) = -M.col(col);
  const Eigen::VectorXd v = K.fullPivLu().solve(rhs);
  Eigen::MatrixXd X(n, n);
  for (int col = 0; col < n; ++col) X.col(col) = v.segment(col * n, n);
  return 0.5 * (X + X.transpose().eval());
}

bool is_stabilizable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double tol) {
  const int n = static_cast<int>(A.rows());
  const Eigen::EigenSolver<Eigen::MatrixXd> eig(A);
  const double scale = std::max(1.0, A.norm() + B.norm());
  for (int i = 0; i < n; ++i) {
    const std::complex<double> lambda = eig.eigenvalues()(i);
    if (lambda.real() < -tol) continue;
    Eigen::MatrixXcd pencil(n, n + B.cols());
    pencil.leftCols(n) = A.cast<std::complex<double>>() -
                         lambda * Eigen::MatrixXcd::Identity(n, n);
    pencil.rightCols(B.cols()) = B.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pencil);
    if (svd.singularValues()(n - 1) <= tol * scale) return false;
  }
  return true;
}

int riccati_steps_for(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                      const Eigen::MatrixXd& C, double epsilon, double T) {
  const double rate =
      A.operatorNorm() + B.operatorNorm() * C.operatorNorm() / std::sqrt(epsilon) + 1.0;
  return std::max(2000, static_cast<int>(std::ceil(T * rate * 8.0)));
}

RiccatiSolution solve_riccati_finite(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                     const Eigen::MatrixXd& C, double epsilon, double T,
                                     int n_steps, bool keep_gains) {
  if (epsilon <= 0.0) throw NonPositiveEpsilon("epsilon must be > 0");
  if (T < 0.0) throw std::invalid_argument("T must be >= 0");
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n || B.rows() != n || C.cols() != n) {
    throw InvalidDimension("riccati: dimension mismatch");
  }
  const Eigen::MatrixXd Q = C.transpose() * C;

  auto rhs = [&](const Eigen::MatrixXd& P, Eigen::MatrixXd& out) {
    const Eigen::MatrixXd PB = P * B;
    out.noalias() = A.transpose() * P;
    out.noalias() += P * A;
    out.noalias() -= (1.0 / epsilon) * PB * PB.transpose();
    out += Q;
  };

  for (int attempt = 0; attempt < 4; ++attempt) {
    const long steps = static_cast<long>(n_steps) << attempt;
    const double h = T / static_cast<double>(std::max<long>(steps, 1));
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd k1(n, n), k2(n, n), k3(n, n), k4(n, n);

    RiccatiSolution sol;
    const long max_kept = 1 << 20;
    const long stride = keep_gains ? std::max<long>(1, steps / max_kept) : 0;
    if (keep_gains) {
      sol.times.reserve(static_cast<size_t>(steps / std::max<long>(stride, 1)) + 2);
      sol.times.push_back(T);  // time-to-go 0
      sol.gains.push_back((1.0 / epsilon) * B.transpose() * P);
    }

    bool ok = true;
    for (long i = 0; i < steps; ++i) {
      rhs(P, k1);
      rhs(P + 0.5 * h * k1, k2);
      rhs(P + 0.5 * h * k2, k3);
      rhs(P + h * k3, k4);
      P += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if ((i & 63) == 0 && !all_finite(P)) {
        ok = false;
        break;
      }
      if (keep_gains && ((i + 1) % stride == 0 || i + 1 == steps)) {
        sol.times.push_back(T - static_cast<double>(i + 1) * h);
        sol.gains.push_back((1.0 / epsilon) * B.transpose() * P);
      }
    }
    if (!ok || !all_finite(P)) continue;

    P = 0.5 * (P + P.transpose().eval());
    sol.P0 = P;
    if (keep_gains) {
      std::reverse(sol.times.begin(), sol.times.end());
      std::reverse(sol.gains.begin(), sol.gains.end());
    }
    return sol;
  }
  throw StepTooLarge("riccati integration produced non-finite entries after 3 retries");
}

double care_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& C,
                     double epsilon, const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd PB = P * B;
  return (A.transpose() * P + P * A - (1.0 / epsilon) * PB * PB.transpose() +
          C.transpose() * C)
      .norm();
}

Eigen::MatrixXd solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& C, double epsilon) {
  if (epsilon <= 0.0) throw NonPositiveEpsilon("epsilon must be > 0");
  if (!is_stabilizable(A, B)) throw NotStabilizable("(A, B) is not stabilizable");
  const int n = static_cast<int>(A.rows());

  // Finite-horizon initialization, doubling T until the value form settles
  // on a stabilizing gain. The settle test alone is not enough: for very
  // cheap control the integral plateaus long before the horizon covers the
  // slow (e.g. unstable-zero) timescale.
  auto stabilizing = [&](const Eigen::MatrixXd& X) {
    const Eigen::MatrixXd Acl = A - (1.0 / epsilon) * B * B.transpose() * X;
    const Eigen::EigenSolver<Eigen::MatrixXd> eig(Acl);
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
      if (eig.eigenvalues()(i).real() >= 0.0) return false;
    }
    return true;
  };
  Eigen::MatrixXd P_prev =
      solve_riccati_finite(A, B, C, epsilon, 1.0, riccati_steps_for(A, B, C, epsilon, 1.0), false)
          .P0;
  Eigen::MatrixXd P;
  bool settled = false;
  for (double T = 2.0; T <= 8192.0; T *= 2.0) {
    P = solve_riccati_finite(A, B, C, epsilon, T, riccati_steps_for(A, B, C, epsilon, T), false)
            .P0;
    if ((P - P_prev).norm() < 1e-6 && stabilizing(P)) {
      settled = true;
      break;
    }
    P_prev = P;
  }
  if (!settled) throw NotStabilizable("no stabilizing initialization found");

  // Newton-Kleinman polish.
  const Eigen::MatrixXd Q = C.transpose() * C;
  double res = care_residual(A, B, C, epsilon, P);
  for (int it = 0; it < 100 && res > 1e-11; ++it) {
    const Eigen::MatrixXd K = (1.0 / epsilon) * B.transpose() * P;
    const Eigen::MatrixXd Acl = A - B * K;
    P = solve_lyapunov(Acl, Q + epsilon * K.transpose() * K);
    const double res_new = care_residual(A, B, C, epsilon, P);
    if (!std::isfinite(res_new)) throw SolverFailure("Newton-Kleinman diverged");
    res = res_new;
  }
  if (res > 1e-10) {
    std::ostringstream msg;
    msg << "Newton-Kleinman stalled at residual " << res;
    throw SolverFailure(msg.str());
  }
  // Stabilizing by construction; verify.
  const Eigen::MatrixXd Acl = A - (1.0 / epsilon) * B * B.transpose() * P;
  const Eigen::EigenSolver<Eigen::MatrixXd> eig(Acl);
  for (int i = 0; i < n; ++i) {
    if (eig.eigenvalues()(i).real() >= 0.0) {
      throw NotStabilizable("CARE solution is not stabilizing");
    }
  }
  return P;
}

MinEnergySolution min_energy_value(const Eigen::MatrixXd& A0, const Eigen::MatrixXd& B0,
                                   const Eigen::VectorXd& eta0) {
  MinEnergySolution sol;
  const int m = static_cast<int>(A0.rows());
  if (m == 0) {
    sol.P0 = Eigen::MatrixXd::Zero(0, 0);
    sol.feedback_gain = Eigen::MatrixXd::Zero(B0.cols(), 0);
    sol.value = 0.0;
    return sol;
  }
  if (eta0.size() != m) throw InvalidDimension("eta0 has wrong dimension");
  if (!is_stabilizable(A0, B0)) throw NotStabilizable("(A0, B0) is not stabilizable");

  const Eigen::EigenSolver<Eigen::MatrixXd> eig(A0);
  const bool hurwitz = [&] {
    for (int i = 0; i < m; ++i) {
      if (eig.eigenvalues()(i).real() >= -1e-9) return false;
    }
    return true;
  }();

  if (hurwitz) {
    // Stable zeros need no output energy.
    sol.P0 = Eigen::MatrixXd::Zero(m, m);
    sol.feedback_gain = Eigen::MatrixXd::Zero(B0.cols(), m);
    sol.value = 0.0;
    return sol;
  }

  // Newton-Kleinman on A0^T P + P A0 - P B0 B0^T P = 0, seeded from the
  // unit-weight LQR solution (which is stabilizing).
  Eigen::MatrixXd P = solve_care(A0, B0, Eigen::MatrixXd::Identity(m, m), 1.0);
  double res = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200; ++it) {
    const Eigen::MatrixXd K = B0.transpose() * P;
    const Eigen::MatrixXd Acl = A0 - B0 * K;
    P = solve_lyapunov(Acl, K.transpose() * K);
    const Eigen::MatrixXd PB = P * B0;
    res = (A0.transpose() * P + P * A0 - PB * PB.transpose()).norm();
    if (res < 1e-11) break;
  }
  if (res > 1e-9) throw SolverFailure("minimum-energy CARE did not converge");

  sol.P0 = P;
  sol.feedback_gain = -B0.transpose() * P;
  sol.value = eta0.dot(P * eta0);
  return sol;
}

}  // namespace cheapctl
