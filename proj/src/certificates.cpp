#include "cheapctl/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "cheapctl/rng.hpp"

namespace cheapctl {

namespace {

constexpr double kFdStep = 1e-6;

// Coefficients of the monic polynomial with the given roots.
std::vector<double> poly_from_roots(const std::vector<double>& roots) {
  std::vector<double> coeffs{1.0};
  for (const double r : roots) {
    std::vector<double> next(coeffs.size() + 1, 0.0);
    for (size_t i = 0; i < coeffs.size(); ++i) {
      next[i] += coeffs[i];
      next[i + 1] -= coeffs[i] * r;
    }
    coeffs = std::move(next);
  }
  return coeffs;  // c[0] lambda^r + c[1] lambda^(r-1) + ... + c[r]
}

}  // namespace

Eigen::MatrixXd zero_dynamics_jacobian(const NormalFormModel& model) {
  const int m = model.dim_eta;
  Eigen::MatrixXd jac(m, m);
  Eigen::VectorXd ep = Eigen::VectorXd::Zero(m), em = Eigen::VectorXd::Zero(m);
  for (int j = 0; j < m; ++j) {
    ep(j) = kFdStep;
    em(j) = -kFdStep;
    jac.col(j) = (model.f0(ep) - model.f0(em)) / (2.0 * kFdStep);
    ep(j) = 0.0;
    em(j) = 0.0;
  }
  return jac;
}

double DetectabilityCertificate::evaluate(const Eigen::VectorXd& xi_tilde,
                                          const Eigen::VectorXd& eta) const {
  double w = epsilon_tilde * xi_tilde.dot(P * xi_tilde);
  if (eta.size() > 0) w += eta.dot(Q * eta);
  return alpha * w;
}

double DetectabilityCertificate::evaluate_state(const Eigen::VectorXd& x) const {
  const auto [xi, eta] = model->to_normal(x);
  const ScalingMatrix S(epsilon_tilde, model->r, model->q);
  return evaluate(S.apply(xi), eta);
}

HorizonBound horizon_bound(double alpha_v, double alpha_w_hi, double alpha_w_lo, double k_w,
                           double dt) {
  if (!(alpha_v > 0.0) || !(alpha_w_hi > 0.0) || !(alpha_w_lo > 0.0) || !(k_w > 0.0) ||
      !(dt > 0.0)) {
    throw DegenerateConstants("horizon_bound requires strictly positive constants");
  }
  if (alpha_w_lo > alpha_w_hi) {
    throw DegenerateConstants("horizon_bound requires alpha_w_lo <= alpha_w_hi");
  }
  HorizonBound b;
  b.alpha_v = alpha_v;
  b.alpha_w_hi = alpha_w_hi;
  b.alpha_w_lo = alpha_w_lo;
  b.k_w = k_w;
  b.dt = dt;
  b.m_dt = std::exp(-k_w * alpha_w_lo * dt / (alpha_v + alpha_w_hi));
  if (!(b.m_dt < 1.0) || !(b.m_dt > 0.0)) {
    throw DegenerateConstants("contraction factor left (0, 1)");
  }
  b.t_star = alpha_v * (alpha_v + alpha_w_hi) / (k_w * alpha_w_lo * (1.0 - b.m_dt));
  return b;
}

double estimate_alpha_v(const ControlAffineSystem& system, double epsilon,
                        const std::vector<Eigen::VectorXd>& sample_states,
                        const AlphaVOptions& opts) {
  std::vector<const Eigen::VectorXd*> states;
  for (const auto& x : sample_states) {
    if (x.norm() > 1e-12) states.push_back(&x);
  }
  if (states.empty()) throw EmptySamples("estimate_alpha_v needs at least one nonzero state");

  double alpha_v = 0.0;
  if (const auto ss = system.linear()) {
    const int steps = riccati_steps_for(ss->A, ss->B, ss->C, epsilon, opts.T_proxy);
    const Eigen::MatrixXd P =
        solve_riccati_finite(ss->A, ss->B, ss->C, epsilon, opts.T_proxy, steps, false).P0;
    for (const auto* x : states) {
      alpha_v = std::max(alpha_v, x->dot(P * (*x)) / x->squaredNorm());
    }
    return alpha_v;
  }

  const HorizonSpec horizon =
      opts.horizon ? *opts.horizon : HorizonSpec::with_defaults(opts.T_proxy);
  for (const auto* x : states) {
    const auto [ctrl, report] = solve_with_continuation(system, epsilon, *x, horizon, opts.solver);
    (void)ctrl;
    alpha_v = std::max(alpha_v, report.cost / x->squaredNorm());
  }
  return alpha_v;
}

DetectabilityCertificate build_w_linear(std::shared_ptr<const NormalFormModel> model,
                                        double epsilon_tilde, int n_samples, std::uint64_t seed) {
  if (!model) throw std::invalid_argument("build_w_linear: null model");
  if (epsilon_tilde <= 0.0) throw NonPositiveEpsilon("epsilon_tilde must be > 0");

  const int q = model->q;
  const int r = model->r;
  const int dim_xi = model->dim_xi;
  const int dim_eta = model->dim_eta;

  Eigen::MatrixXd A0;
  if (dim_eta > 0) {
    const PhaseVerdict phase = classify_phase(*model);
    if (phase.kind != PhaseKind::ExpMinimumPhase) {
      throw NotMinimumPhase("certificate requires exponentially minimum-phase zero dynamics");
    }
    A0 = zero_dynamics_jacobian(*model);
  }

  DetectabilityCertificate cert;
  cert.model = model;
  cert.epsilon_tilde = epsilon_tilde;

  // Output injection: channel c gets poles -(c r + 1) ... -(c r + r), so the
  // closed spectrum is -1, ..., -dim_xi.
  cert.M = Eigen::MatrixXd::Zero(dim_xi, q);
  for (int c = 0; c < q; ++c) {
    std::vector<double> roots(r);
    for (int k = 0; k < r; ++k) roots[k] = -(c * r + k + 1);
    const std::vector<double> coeffs = poly_from_roots(roots);
    for (int k = 1; k <= r; ++k) cert.M((k - 1) * q + c, c) = -coeffs[k];
  }
  const Eigen::MatrixXd F_cl = model->F + cert.M * model->C;
  cert.P = solve_lyapunov(F_cl, 2.0 * Eigen::MatrixXd::Identity(dim_xi, dim_xi));
  if (dim_eta > 0) {
    cert.Q = solve_lyapunov(A0, Eigen::MatrixXd::Identity(dim_eta, dim_eta));
  } else {
    cert.Q = Eigen::MatrixXd::Zero(0, 0);
  }

  // Sample the decrement along the scaled dynamics.
  const double et_r = std::pow(epsilon_tilde, r);
  const ScalingMatrix S(epsilon_tilde, r, q);
  UniformSampler rng(seed);
  std::vector<double> wdot_over_sigma, loss_over_sigma;
  wdot_over_sigma.reserve(n_samples);
  loss_over_sigma.reserve(n_samples);
  struct Sample {
    Eigen::VectorXd xi_tilde, eta, u_tilde;
  };
  std::vector<Sample> kept;
  for (int s = 0; s < n_samples; ++s) {
    Sample sm;
    sm.xi_tilde = rng.vector(dim_xi, -1.0, 1.0);
    sm.eta = rng.vector(dim_eta, -1.0, 1.0);
    sm.u_tilde = rng.vector(q, -1.0, 1.0);
    const double sigma = sm.xi_tilde.squaredNorm() + sm.eta.squaredNorm();
    if (sigma < 1e-12) continue;

    const Eigen::VectorXd xi = S.apply_inverse(sm.xi_tilde);
    const Eigen::VectorXd b = model->b_bar(xi, sm.eta);
    const Eigen::MatrixXd A_b = model->a_bar(xi, sm.eta);
    const Eigen::VectorXd xi_dot_scaled = model->F * sm.xi_tilde +
                                          model->G * (et_r * b + A_b * sm.u_tilde);
    double wdot = 2.0 * sm.xi_tilde.dot(cert.P * xi_dot_scaled);
    if (dim_eta > 0) {
      const Eigen::VectorXd eta_dot =
          model->f0(sm.eta) + model->g0(sm.eta) * sm.xi_tilde.head(q);
      wdot += 2.0 * sm.eta.dot(cert.Q * eta_dot);
    }
    const double loss = sm.xi_tilde.head(q).squaredNorm() + sm.u_tilde.squaredNorm();
    wdot_over_sigma.push_back(wdot / sigma);
    loss_over_sigma.push_back(loss / sigma);
    kept.push_back(std::move(sm));
  }

  // k_w(alpha) = min_i (loss_i - alpha wdot_i) / sigma_i is the decrement
  // rate left after scaling the Lyapunov pair by alpha. Maximize
  // alpha * k_w(alpha): vanishing alpha would trivialize W and blow up the
  // horizon bound even though the rate alone looks good.
  auto rate_at = [&](double a) {
    double k = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < wdot_over_sigma.size(); ++i) {
      k = std::min(k, loss_over_sigma[i] - a * wdot_over_sigma[i]);
    }
    return k;
  };
  auto quality_at = [&](double a) { return a * rate_at(a); };
  double best_alpha = 1.0;
  double best_quality = quality_at(1.0);
  for (double a = 1e-9; a <= 1e9; a *= 1.25) {
    const double g = quality_at(a);
    if (g > best_quality) {
      best_quality = g;
      best_alpha = a;
    }
  }
  {
    double lo = best_alpha / 1.25, hi = best_alpha * 1.25;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = quality_at(x1), f2 = quality_at(x2);
    for (int it = 0; it < 80; ++it) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + gr * (hi - lo);
        f2 = quality_at(x2);
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - gr * (hi - lo);
        f1 = quality_at(x1);
      }
    }
    const double mid = 0.5 * (lo + hi);
    if (quality_at(mid) > best_quality) {
      best_quality = quality_at(mid);
      best_alpha = mid;
    }
  }
  const double best_rate = rate_at(best_alpha);

  if (!(best_rate > 0.0)) {
    size_t worst = 0;
    double worst_val = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < wdot_over_sigma.size(); ++i) {
      const double v = loss_over_sigma[i] - best_alpha * wdot_over_sigma[i];
      if (v < worst_val) {
        worst_val = v;
        worst = i;
      }
    }
    std::ostringstream msg;
    msg << "decrement violated at epsilon_tilde=" << epsilon_tilde << ": worst sample slack "
        << worst_val << " at |xi_tilde|=" << kept[worst].xi_tilde.norm()
        << " |eta|=" << kept[worst].eta.norm() << "; shrink the weight";
    throw DecrementViolated(msg.str());
  }

  cert.alpha = best_alpha;
  cert.k_w = 0.9 * best_rate;

  double margin = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < wdot_over_sigma.size(); ++i) {
    margin = std::min(margin,
                      loss_over_sigma[i] - best_alpha * wdot_over_sigma[i] - cert.k_w);
  }
  cert.sample_margin = margin;

  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(dim_xi + dim_eta, dim_xi + dim_eta);
  block.topLeftCorner(dim_xi, dim_xi) = best_alpha * epsilon_tilde * cert.P;
  if (dim_eta > 0) block.bottomRightCorner(dim_eta, dim_eta) = best_alpha * cert.Q;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(block);
  cert.alpha_w_lo = eig.eigenvalues().minCoeff();
  cert.alpha_w_hi = eig.eigenvalues().maxCoeff();
  return cert;
}

CompositeDecayReport check_composite_decay(const ControlAffineSystem& system,
                                           const RHCConfig& config,
                                           const DetectabilityCertificate& certificate,
                                           const Eigen::VectorXd& x0) {
  const ClosedLoopTrace trace = run_rhc(system, config, x0);
  CompositeDecayReport report;
  const size_t solves = trace.per_step_reports.size();
  for (size_t k = 0; k < solves; ++k) {
    const double w = certificate.evaluate_state(trace.sample_states[k]);
    report.y_values.push_back(w + trace.per_step_reports[k].cost);
  }
  double y_peak = 0.0;
  for (const double y : report.y_values) y_peak = std::max(y_peak, y);
  // Ratios are meaningful until Y reaches the numerical floor of the
  // per-step solves; contraction is certified down to that resolution.
  const double floor = std::max(1e-30, 1e-8 * y_peak);
  for (size_t k = 0; k + 1 < report.y_values.size(); ++k) {
    if (report.y_values[k] <= floor) continue;
    report.ratios.push_back(report.y_values[k + 1] / report.y_values[k]);
  }
  report.max_ratio = report.ratios.empty()
                         ? 0.0
                         : *std::max_element(report.ratios.begin(), report.ratios.end());
  report.passed = report.ratios.empty() || report.max_ratio < 1.0;
  return report;
}

ScalingFit verify_performance_scaling(
    const ControlAffineSystem& system, const NormalFormModel& model,
    const std::vector<double>& epsilon_tilde_grid,
    const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& states,
    const ScalingMode& mode, const ScalingOptions& opts) {
  if (epsilon_tilde_grid.size() < 2) {
    throw std::invalid_argument("scaling fit needs at least two grid points");
  }
  ScalingFit fit;
  fit.k_hat = 0.0;

  const auto ss = system.linear();
  std::vector<double> slopes_xi, slopes_eta;

  for (size_t sid = 0; sid < states.size(); ++sid) {
    const auto& [xi_tilde, eta] = states[sid];
    if (xi_tilde.norm() < 1e-12 && eta.norm() < 1e-12) {
      throw std::invalid_argument("scaling fit states must be nonzero");
    }
    std::vector<double> log_et, log_v;
    for (const double et : epsilon_tilde_grid) {
      const CheapControlWeights w = CheapControlWeights::from_epsilon_tilde(et, model.r);
      const ScalingMatrix S(et, model.r, model.q);
      const Eigen::VectorXd x = model.from_normal(S.apply_inverse(xi_tilde), eta);

      double value = 0.0;
      if (ss) {
        if (mode.infinite) {
          const Eigen::MatrixXd P = solve_care(ss->A, ss->B, ss->C, w.epsilon);
          value = x.dot(P * x);
        } else {
          const int steps = riccati_steps_for(ss->A, ss->B, ss->C, w.epsilon, mode.T);
          const Eigen::MatrixXd P =
              solve_riccati_finite(ss->A, ss->B, ss->C, w.epsilon, mode.T, steps, false).P0;
          value = x.dot(P * x);
        }
      } else {
        const double T = mode.infinite ? opts.T_proxy : mode.T;
        const HorizonSpec horizon = opts.horizon ? *opts.horizon : HorizonSpec::with_defaults(T);
        const auto [ctrl, report] =
            solve_with_continuation(system, w.epsilon, x, horizon, opts.solver);
        (void)ctrl;
        value = report.cost;
      }

      ScalingSample sample;
      sample.epsilon_tilde = et;
      sample.state_id = static_cast<int>(sid);
      sample.value = value;
      sample.xi_tilde_norm2 = xi_tilde.squaredNorm();
      sample.eta_norm2 = eta.squaredNorm();
      fit.samples.push_back(sample);

      const double bound_arg =
          et * sample.xi_tilde_norm2 + std::pow(et, 2.0 * model.r) * sample.eta_norm2;
      if (bound_arg > 0.0) fit.k_hat = std::max(fit.k_hat, value / bound_arg);

      if (value > 0.0) {
        log_et.push_back(std::log(et));
        log_v.push_back(std::log(value));
      }
    }

    if (log_et.size() >= 2) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (size_t i = 0; i < log_et.size(); ++i) {
        sx += log_et[i];
        sy += log_v[i];
        sxx += log_et[i] * log_et[i];
        sxy += log_et[i] * log_v[i];
      }
      const double n = static_cast<double>(log_et.size());
      const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
      if (eta.norm() < 1e-12) {
        slopes_xi.push_back(slope);
      } else if (xi_tilde.norm() < 1e-12) {
        slopes_eta.push_back(slope);
      }
    }
  }

  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  if (!slopes_xi.empty()) fit.slope_xi = mean(slopes_xi);
  if (!slopes_eta.empty()) fit.slope_eta = mean(slopes_eta);
  return fit;
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::string certificate_to_json(const DetectabilityCertificate& certificate) {
  nlohmann::json j;
  j["epsilon_tilde"] = certificate.epsilon_tilde;
  j["alpha"] = certificate.alpha;
  j["alpha_w_lo"] = certificate.alpha_w_lo;
  j["alpha_w_hi"] = certificate.alpha_w_hi;
  j["k_w"] = certificate.k_w;
  j["sample_margin"] = certificate.sample_margin;
  j["P"] = matrix_to_json(certificate.P);
  j["Q"] = matrix_to_json(certificate.Q);
  j["M"] = matrix_to_json(certificate.M);
  const Eigen::MatrixXd F_cl = certificate.model->F + certificate.M * certificate.model->C;
  j["lyapunov_residual"] =
      (F_cl.transpose() * certificate.P + certificate.P * F_cl +
       2.0 * Eigen::MatrixXd::Identity(certificate.P.rows(), certificate.P.cols()))
          .norm();
  return j.dump(2);
}

std::string scaling_fit_to_json(const ScalingFit& fit) {
  nlohmann::json j;
  j["slope_xi"] = fit.slope_xi;
  j["slope_eta"] = fit.slope_eta;
  j["k_hat"] = fit.k_hat;
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : fit.samples) {
    samples.push_back({{"epsilon_tilde", s.epsilon_tilde},
                       {"state_id", s.state_id},
                       {"value", s.value},
                       {"xi_tilde_norm2", s.xi_tilde_norm2},
                       {"eta_norm2", s.eta_norm2}});
  }
  j["samples"] = samples;
  return j.dump(2);
}

}  // namespace cheapctl
