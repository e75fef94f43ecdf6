#include "cheapctl/rhc_vi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace cheapctl {

namespace {

constexpr double kLambdaCap = 1e6;

struct AppliedSegment {
  std::vector<double> times;  // relative to segment start, first node omitted
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> controls;  // control active on the substep ending here
  std::vector<double> cost_acc;           // accumulated cost at each node
  double cost = 0.0;
  Eigen::VectorXd x_end;
};

// Integrates the plant under the piecewise-constant control prefix of length
// `duration`, splitting at control-interval boundaries so the quadrature
// matches the solver's bit for bit on aligned grids.
AppliedSegment apply_control_prefix(const ControlAffineSystem& system, double epsilon,
                                    const Eigen::VectorXd& x0, const ControlTrajectory& ctrl,
                                    double duration, int n_int) {
  const double dtc = ctrl.horizon.dt_ctrl();
  const int n = system.state_dim();
  AppliedSegment seg;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), x2(n), x3(n), x4(n), h_val(system.output_dim());
  double cost = 0.0;

  auto stage_l = [&](const Eigen::VectorXd& xs, const Eigen::VectorXd& u) {
    system.output(xs, h_val);
    return h_val.squaredNorm() + epsilon * u.squaredNorm();
  };

  const int n_pieces = static_cast<int>(std::ceil(duration / dtc - 1e-9));
  double t_rel = 0.0;
  for (int j = 0; j < n_pieces; ++j) {
    const double t0 = j * dtc;
    const double t1 = std::min((j + 1) * dtc, duration);
    const Eigen::VectorXd& u = ctrl.values[std::min<size_t>(j, ctrl.values.size() - 1)];
    const int n_sub = std::max(1, static_cast<int>(std::lround(n_int * (t1 - t0) / dtc)));
    const double h = (t1 - t0) / n_sub;
    for (int s = 0; s < n_sub; ++s) {
      system.dynamics(x, u, k1);
      const double l1 = stage_l(x, u);
      x2 = x + (0.5 * h) * k1;
      system.dynamics(x2, u, k2);
      const double l2 = stage_l(x2, u);
      x3 = x + (0.5 * h) * k2;
      system.dynamics(x3, u, k3);
      const double l3 = stage_l(x3, u);
      x4 = x + h * k3;
      system.dynamics(x4, u, k4);
      const double l4 = stage_l(x4, u);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      cost += (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
      t_rel += h;
      seg.times.push_back(t_rel);
      seg.states.push_back(x);
      seg.controls.push_back(u);
      seg.cost_acc.push_back(cost);
    }
  }
  seg.cost = cost;
  seg.x_end = x;
  return seg;
}

ControlTrajectory shift_warm_start(const ControlTrajectory& ctrl, int shift, int q) {
  ControlTrajectory shifted;
  shifted.horizon = ctrl.horizon;
  shifted.values.assign(ctrl.values.size(), Eigen::VectorXd::Zero(q));
  for (size_t i = 0; i + shift < ctrl.values.size(); ++i) {
    shifted.values[i] = ctrl.values[i + shift];
  }
  return shifted;
}

}  // namespace

void RHCConfig::validate() const {
  if (!(dt > 0.0) || T < dt) throw std::invalid_argument("RHCConfig requires T >= dt > 0");
  if (sim_time < T) throw std::invalid_argument("RHCConfig requires sim_time >= T");
  if (diverge_radius > 0.0 && settle_radius > 0.0 && diverge_radius <= settle_radius) {
    throw std::invalid_argument("RHCConfig requires diverge_radius > settle_radius");
  }
  if (n_int < 1) throw std::invalid_argument("RHCConfig requires n_int >= 1");
  if (!(ctrl_dt_target > 0.0)) throw std::invalid_argument("RHCConfig requires ctrl_dt_target > 0");
}

HorizonSpec RHCConfig::horizon_spec() const {
  const int per_dt = std::max(1, static_cast<int>(std::lround(dt / ctrl_dt_target)));
  HorizonSpec spec;
  spec.T = T;
  spec.n_int = n_int;
  const double ratio = T / dt;
  const int n_dt = static_cast<int>(std::lround(ratio));
  if (n_dt >= 1 && std::abs(ratio - n_dt) < 1e-9) {
    spec.n_ctrl = n_dt * per_dt;
  } else {
    spec.n_ctrl = std::max(1, static_cast<int>(std::ceil(ratio * per_dt - 1e-9)));
  }
  return spec;
}

double RHCConfig::resolved_diverge_radius(const Eigen::VectorXd& x0) const {
  return diverge_radius > 0.0 ? diverge_radius : 1e3 * std::max(1.0, x0.norm());
}

double RHCConfig::resolved_settle_radius(const Eigen::VectorXd& x0) const {
  return settle_radius > 0.0 ? settle_radius : 1e-2 * std::max(1.0, x0.norm());
}

std::string to_string(StabilityKind kind) {
  switch (kind) {
    case StabilityKind::Stabilized:
      return "stabilized";
    case StabilityKind::Diverged:
      return "diverged";
    case StabilityKind::Inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

ClosedLoopTrace run_rhc(const ControlAffineSystem& system, const RHCConfig& config,
                        const Eigen::VectorXd& x0) {
  config.validate();
  if (x0.size() != system.state_dim()) throw InvalidDimension("x0 has wrong dimension");

  const HorizonSpec horizon = config.horizon_spec();
  const int q = system.input_dim();
  const double diverge = config.resolved_diverge_radius(x0);
  const int n_steps = static_cast<int>(std::ceil(config.sim_time / config.dt - 1e-9));
  const int shift = std::max(1, static_cast<int>(std::lround(config.dt / horizon.dt_ctrl())));

  ClosedLoopTrace trace;
  trace.sample_times.push_back(0.0);
  trace.sample_states.push_back(x0);
  trace.dense_times.push_back(0.0);
  trace.dense_states.push_back(x0);
  trace.dense_controls.push_back(Eigen::VectorXd::Zero(q));
  trace.dense_running_cost.push_back(0.0);

  Eigen::VectorXd x = x0;
  SolveOptions opts = config.solver;
  opts.warm_start.reset();

  for (int k = 0; k < n_steps; ++k) {
    if (x.norm() >= diverge) {
      trace.diverged_early = true;
      break;
    }
    ControlTrajectory ctrl;
    SolveReport report;
    try {
      std::tie(ctrl, report) = solve_finite_horizon(system, config.epsilon, x, horizon, opts);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "rhc step " << k << ": " << e.what();
      throw SolverFailure(msg.str());
    }

    const AppliedSegment seg =
        apply_control_prefix(system, config.epsilon, x, ctrl, config.dt, config.n_int);
    const double t_base = k * config.dt;
    const double cost_base = trace.accumulated_cost;
    bool crossed = false;
    bool overflowed = false;
    for (size_t i = 0; i < seg.times.size(); ++i) {
      trace.dense_times.push_back(t_base + seg.times[i]);
      trace.dense_states.push_back(seg.states[i]);
      trace.dense_controls.push_back(seg.controls[i]);
      trace.dense_running_cost.push_back(cost_base + seg.cost_acc[i]);
      if (!seg.states[i].allFinite()) {
        // Keep the overflowed node as the escape marker and stop here.
        overflowed = true;
        break;
      }
      if (seg.states[i].norm() >= diverge) crossed = true;
    }
    report.times.clear();
    report.states.clear();
    trace.per_step_reports.push_back(std::move(report));

    if (overflowed) {
      trace.diverged_early = true;
      break;
    }
    trace.accumulated_cost = cost_base + seg.cost;
    x = seg.x_end;
    trace.sample_times.push_back((k + 1) * config.dt);
    trace.sample_states.push_back(x);

    if (crossed) {
      trace.diverged_early = true;
      break;
    }
    opts.warm_start = shift_warm_start(ctrl, shift, q);
  }
  return trace;
}

StabilityVerdict classify_stability(const ClosedLoopTrace& trace, const RHCConfig& config) {
  if (trace.sample_states.empty()) throw std::invalid_argument("trace is empty");
  const Eigen::VectorXd& x0 = trace.sample_states.front();
  const double diverge = config.resolved_diverge_radius(x0);
  const double settle = config.resolved_settle_radius(x0);

  StabilityVerdict verdict;

  // Overflowed states count as escaped.
  auto state_norm = [](const Eigen::VectorXd& x) {
    return x.allFinite() ? x.norm() : std::numeric_limits<double>::infinity();
  };

  double max_norm = 0.0;
  for (const auto& x : trace.dense_states) max_norm = std::max(max_norm, state_norm(x));
  for (size_t i = 0; i < trace.dense_states.size(); ++i) {
    if (state_norm(trace.dense_states[i]) >= diverge) {
      verdict.kind = StabilityKind::Diverged;
      verdict.escape_time = trace.dense_times[i];
      verdict.overshoot = max_norm / std::max(1e-30, x0.norm());
      return verdict;
    }
  }

  // The run must cover the configured window to call it stabilized.
  if (trace.dense_times.empty() || trace.dense_times.back() < config.sim_time - 1e-9) {
    verdict.kind = StabilityKind::Inconclusive;
    return verdict;
  }

  const double tail_start = 0.8 * config.sim_time;
  bool settled = true;
  for (size_t i = 0; i < trace.dense_states.size(); ++i) {
    if (trace.dense_times[i] >= tail_start && trace.dense_states[i].norm() > settle) {
      settled = false;
      break;
    }
  }
  if (!settled) {
    verdict.kind = StabilityKind::Inconclusive;
    return verdict;
  }

  if (max_norm <= 1e-14) {
    // Identically zero trace.
    verdict.kind = StabilityKind::Stabilized;
    verdict.overshoot = 0.0;
    verdict.decay_rate = kLambdaCap;
    return verdict;
  }

  // Least-squares decay fit from the sample-norm peak onward.
  size_t peak = 0;
  double peak_norm = -1.0;
  for (size_t i = 0; i < trace.sample_states.size(); ++i) {
    const double nn = trace.sample_states[i].norm();
    if (nn > peak_norm) {
      peak_norm = nn;
      peak = i;
    }
  }
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  int n_pts = 0;
  for (size_t i = peak; i < trace.sample_states.size(); ++i) {
    const double nn = trace.sample_states[i].norm();
    if (nn < 1e-300) continue;
    const double t = trace.sample_times[i];
    const double y = std::log(nn);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++n_pts;
  }
  double lambda = kLambdaCap;
  if (n_pts >= 2) {
    const double denom = n_pts * stt - st * st;
    if (std::abs(denom) > 1e-300) lambda = -(n_pts * sty - st * sy) / denom;
  }
  lambda = std::min(lambda, kLambdaCap);

  verdict.overshoot = max_norm / std::max(1e-30, x0.norm());
  verdict.decay_rate = lambda;
  verdict.kind = lambda > 0.0 ? StabilityKind::Stabilized : StabilityKind::Inconclusive;
  return verdict;
}

double vi_value(const ControlAffineSystem& system, double epsilon, const Eigen::VectorXd& x0,
                int k, double dt, const SolveOptions& opts) {
  if (k < 1) throw std::invalid_argument("vi_value requires k >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("vi_value requires dt > 0");
  const double T = (k - 1) * dt;
  if (T <= 0.0) return 0.0;  // V^1 = 0
  const auto [ctrl, report] =
      solve_finite_horizon(system, epsilon, x0, HorizonSpec::with_defaults(T), opts);
  (void)ctrl;
  return report.cost;
}

namespace {

int auto_vi_steps(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& C,
                  double epsilon, double dt) {
  const double rate =
      A.operatorNorm() + B.operatorNorm() * C.operatorNorm() / std::sqrt(epsilon) + 1.0;
  return std::max(1000, static_cast<int>(std::ceil(dt * rate * 8.0)));
}

// One Bellman step: integrate the Riccati flow for dt of time-to-go starting
// from the previous iterate.
Eigen::MatrixXd bellman_step(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                             const Eigen::MatrixXd& C, double epsilon, double dt,
                             const Eigen::MatrixXd& P_terminal, int n_sub,
                             RiccatiSolution* schedule) {
  const int n = static_cast<int>(A.rows());
  const Eigen::MatrixXd Q = C.transpose() * C;
  auto rhs = [&](const Eigen::MatrixXd& P, Eigen::MatrixXd& out) {
    const Eigen::MatrixXd PB = P * B;
    out.noalias() = A.transpose() * P;
    out.noalias() += P * A;
    out.noalias() -= (1.0 / epsilon) * PB * PB.transpose();
    out += Q;
  };
  const double h = dt / n_sub;
  Eigen::MatrixXd P = P_terminal;
  Eigen::MatrixXd k1(n, n), k2(n, n), k3(n, n), k4(n, n);
  if (schedule != nullptr) {
    schedule->times.push_back(dt);
    schedule->gains.push_back((1.0 / epsilon) * B.transpose() * P);
  }
  for (int i = 0; i < n_sub; ++i) {
    rhs(P, k1);
    rhs(P + 0.5 * h * k1, k2);
    rhs(P + 0.5 * h * k2, k3);
    rhs(P + h * k3, k4);
    P += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (schedule != nullptr) {
      schedule->times.push_back(dt - (i + 1) * h);
      schedule->gains.push_back((1.0 / epsilon) * B.transpose() * P);
    }
  }
  if (!P.allFinite()) throw StepTooLarge("value-iteration Bellman step overflowed");
  return 0.5 * (P + P.transpose().eval());
}

}  // namespace

Eigen::MatrixXd vi_recursion_linear(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                    const Eigen::MatrixXd& C, double epsilon, double dt, int k,
                                    int n_sub) {
  if (epsilon <= 0.0) throw NonPositiveEpsilon("epsilon must be > 0");
  if (k < 0) throw std::invalid_argument("vi_recursion_linear requires k >= 0");
  if (n_sub <= 0) n_sub = auto_vi_steps(A, B, C, epsilon, dt);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(A.rows(), A.cols());  // P_1 = 0
  for (int j = 0; j < k; ++j) {
    P = bellman_step(A, B, C, epsilon, dt, P, n_sub, nullptr);
  }
  return P;
}

RiccatiSolution vi_greedy_gain_schedule(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                        const Eigen::MatrixXd& C, double epsilon, double dt,
                                        const Eigen::MatrixXd& P_terminal, int n_sub) {
  if (n_sub <= 0) n_sub = auto_vi_steps(A, B, C, epsilon, dt);
  RiccatiSolution sol;
  sol.P0 = bellman_step(A, B, C, epsilon, dt, P_terminal, n_sub, &sol);
  std::reverse(sol.times.begin(), sol.times.end());
  std::reverse(sol.gains.begin(), sol.gains.end());
  return sol;
}

void write_trace_csv(const ClosedLoopTrace& trace, const RHCConfig& config,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");

  const int n = trace.dense_states.empty() ? 0 : static_cast<int>(trace.dense_states[0].size());
  const int q = trace.dense_controls.empty() ? 0 : static_cast<int>(trace.dense_controls[0].size());
  out << "# schema=1\n";
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",x_" << i;
  for (int i = 1; i <= q; ++i) out << ",u_" << i;
  out << ",running_cost,grad_norm\n";

  char buf[32];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (size_t i = 0; i < trace.dense_times.size(); ++i) {
    const double t = trace.dense_times[i];
    int step = static_cast<int>(t / config.dt);
    step = std::min<int>(step, static_cast<int>(trace.per_step_reports.size()) - 1);
    const double grad =
        step >= 0 && !trace.per_step_reports.empty() ? trace.per_step_reports[step].grad_norm : 0.0;
    out << fmt(t);
    for (int j = 0; j < n; ++j) out << "," << fmt(trace.dense_states[i](j));
    for (int j = 0; j < q; ++j) out << "," << fmt(trace.dense_controls[i](j));
    out << "," << fmt(trace.dense_running_cost[i]) << "," << fmt(grad) << "\n";
  }
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace cheapctl
