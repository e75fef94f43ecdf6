#include "cheapctl/rhc_vi.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cheapctl/systems.hpp"
#include "gtest/gtest.h"

using namespace cheapctl;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (const double x : vals) v(i++) = x;
  return v;
}

// Synthetic single-state trace |x(t)| = amp * exp(rate * t) on a dt grid.
ClosedLoopTrace synthetic_trace(double amp, double rate, double dt, double t_end) {
  ClosedLoopTrace trace;
  for (double t = 0.0; t <= t_end + 1e-12; t += dt) {
    const Eigen::VectorXd x = vec({amp * std::exp(rate * t)});
    trace.sample_times.push_back(t);
    trace.sample_states.push_back(x);
    trace.dense_times.push_back(t);
    trace.dense_states.push_back(x);
    trace.dense_controls.push_back(vec({0.0}));
    trace.dense_running_cost.push_back(0.0);
  }
  return trace;
}

}  // namespace

TEST(RhcConfig, Validation) {
  RHCConfig config;
  config.T = 0.1;
  config.dt = 0.25;
  EXPECT_THROW(config.validate(), std::invalid_argument);
  config.T = 1.0;
  config.dt = 0.25;
  config.sim_time = 0.5;
  EXPECT_THROW(config.validate(), std::invalid_argument);
  config.sim_time = 5.0;
  EXPECT_NO_THROW(config.validate());
  EXPECT_EQ(config.horizon_spec().n_ctrl, 100);  // 4 segments of 25 intervals
}

TEST(RunRhc, OriginStaysAtOrigin) {
  const auto system = make_builtin("linear_nmp");
  RHCConfig config;
  config.T = 0.5;
  config.dt = 0.25;
  config.epsilon = 1.0;
  config.sim_time = 2.0;
  const ClosedLoopTrace trace = run_rhc(*system, config, Eigen::VectorXd::Zero(2));
  EXPECT_EQ(trace.per_step_reports.size(), 8u);
  for (const auto& x : trace.dense_states) EXPECT_DOUBLE_EQ(x.norm(), 0.0);
  for (const auto& u : trace.dense_controls) EXPECT_DOUBLE_EQ(u.norm(), 0.0);
  EXPECT_DOUBLE_EQ(trace.accumulated_cost, 0.0);
  const StabilityVerdict verdict = classify_stability(trace, config);
  EXPECT_EQ(verdict.kind, StabilityKind::Stabilized);
  EXPECT_DOUBLE_EQ(verdict.overshoot, 0.0);
  EXPECT_DOUBLE_EQ(verdict.decay_rate, 1e6);
}

TEST(RunRhc, ShortHorizonCheapWeightDivergesOnNmpPlant) {
  const auto system = make_builtin("linear_nmp");
  RHCConfig config;
  config.T = 0.25;
  config.dt = 0.25;
  config.epsilon = 1e-4;
  config.sim_time = 20.0;
  const ClosedLoopTrace trace = run_rhc(*system, config, vec({0.0, 1.0}));
  EXPECT_TRUE(trace.diverged_early);
  const StabilityVerdict verdict = classify_stability(trace, config);
  EXPECT_EQ(verdict.kind, StabilityKind::Diverged);
  // Zeros escape at their natural unit rate: |x| ~ e^t crosses 1e3 near t=7.
  EXPECT_GT(verdict.escape_time, 4.0);
  EXPECT_LT(verdict.escape_time, 11.0);
}

TEST(RunRhc, LongHorizonRescuesSameWeight) {
  const auto system = make_builtin("linear_nmp");
  RHCConfig config;
  config.T = 4.0;
  config.dt = 0.25;
  config.epsilon = 1e-2;
  config.sim_time = 20.0;
  const ClosedLoopTrace trace = run_rhc(*system, config, vec({0.0, 1.0}));
  const StabilityVerdict verdict = classify_stability(trace, config);
  EXPECT_EQ(verdict.kind, StabilityKind::Stabilized);
  EXPECT_GT(verdict.decay_rate, 0.0);
}

TEST(RunRhc, TraceContinuityAndMonotoneTime) {
  const auto system = make_builtin("pendulum");
  RHCConfig config;
  config.T = 0.5;
  config.dt = 0.25;
  config.epsilon = 0.1;
  config.sim_time = 3.0;
  const ClosedLoopTrace trace = run_rhc(*system, config, vec({0.6, 0.0}));
  for (size_t i = 1; i < trace.dense_times.size(); ++i) {
    EXPECT_GT(trace.dense_times[i], trace.dense_times[i - 1]);
  }
  // Sample states sit on the dense grid with no jump between segments.
  for (size_t k = 0; k < trace.sample_times.size(); ++k) {
    const double t = trace.sample_times[k];
    double best = 1e9;
    size_t idx = 0;
    for (size_t i = 0; i < trace.dense_times.size(); ++i) {
      if (std::abs(trace.dense_times[i] - t) < best) {
        best = std::abs(trace.dense_times[i] - t);
        idx = i;
      }
    }
    ASSERT_LT(best, 1e-9);
    EXPECT_LT((trace.dense_states[idx] - trace.sample_states[k]).norm(), 1e-9);
  }
}

TEST(RunRhc, DeterministicRerun) {
  const auto system = make_builtin("linear_nmp");
  RHCConfig config;
  config.T = 0.5;
  config.dt = 0.25;
  config.epsilon = 0.1;
  config.sim_time = 4.0;
  const Eigen::VectorXd x0 = vec({0.3, -0.4});
  const ClosedLoopTrace a = run_rhc(*system, config, x0);
  const ClosedLoopTrace b = run_rhc(*system, config, x0);
  ASSERT_EQ(a.dense_states.size(), b.dense_states.size());
  EXPECT_EQ(a.accumulated_cost, b.accumulated_cost);
  for (size_t i = 0; i < a.dense_states.size(); ++i) {
    EXPECT_EQ(a.dense_states[i](0), b.dense_states[i](0));
    EXPECT_EQ(a.dense_states[i](1), b.dense_states[i](1));
  }
  const StabilityVerdict va = classify_stability(a, config);
  const StabilityVerdict vb = classify_stability(b, config);
  EXPECT_EQ(va.kind, vb.kind);
  EXPECT_EQ(va.decay_rate, vb.decay_rate);
}

TEST(ClassifyStability, ZeroTraceConvention) {
  RHCConfig config;
  config.T = 0.5;
  config.dt = 0.1;
  config.epsilon = 1.0;
  config.sim_time = 20.0;
  const ClosedLoopTrace trace = synthetic_trace(0.0, 0.0, 0.1, 20.0);
  const StabilityVerdict verdict = classify_stability(trace, config);
  EXPECT_EQ(verdict.kind, StabilityKind::Stabilized);
  EXPECT_DOUBLE_EQ(verdict.overshoot, 0.0);
  EXPECT_DOUBLE_EQ(verdict.decay_rate, 1e6);
}

TEST(ClassifyStability, GrowingTraceDiverges) {
  RHCConfig config;
  config.T = 0.5;
  config.dt = 0.1;
  config.epsilon = 1.0;
  config.sim_time = 20.0;
  config.diverge_radius = 10.0;
  config.settle_radius = 0.01;
  const ClosedLoopTrace trace = synthetic_trace(1.0, 0.5, 0.1, 20.0);
  const StabilityVerdict verdict = classify_stability(trace, config);
  EXPECT_EQ(verdict.kind, StabilityKind::Diverged);
  EXPECT_NEAR(verdict.escape_time, std::log(10.0) / 0.5, 0.11);
}

TEST(ClassifyStability, DecayingTraceFitsRate) {
  RHCConfig config;
  config.T = 0.5;
  config.dt = 0.1;
  config.epsilon = 1.0;
  config.sim_time = 20.0;
  const ClosedLoopTrace trace = synthetic_trace(2.0, -3.0, 0.1, 20.0);
  const StabilityVerdict verdict = classify_stability(trace, config);
  EXPECT_EQ(verdict.kind, StabilityKind::Stabilized);
  EXPECT_NEAR(verdict.decay_rate, 3.0, 0.05);
  EXPECT_DOUBLE_EQ(verdict.overshoot, 1.0);
}

TEST(ViValue, FirstIterateIsZero) {
  const auto system = make_builtin("linear_nmp");
  EXPECT_DOUBLE_EQ(vi_value(*system, 0.1, vec({0.0, 1.0}), 1, 0.25), 0.0);
  EXPECT_THROW(vi_value(*system, 0.1, vec({0.0, 1.0}), 0, 0.25), std::invalid_argument);
}

TEST(ViValue, MatchesRiccatiThroughHorizonIdentity) {
  const auto system = make_builtin("linear_nmp");
  const auto ss = *system->linear();
  const Eigen::VectorXd x0 = vec({0.0, 1.0});
  // V^5 = V_{4 dt} = V_{1.0}.
  const double v = vi_value(*system, 0.1, x0, 5, 0.25);
  const Eigen::MatrixXd P =
      solve_riccati_finite(ss.A, ss.B, ss.C, 0.1, 1.0,
                           riccati_steps_for(ss.A, ss.B, ss.C, 0.1, 1.0), false)
          .P0;
  const double oracle = x0.dot(P * x0);
  EXPECT_LT(std::abs(v - oracle) / oracle, 0.01);
}

TEST(ViRecursion, SingleStepEqualsFiniteRiccati) {
  const auto ss = *make_builtin("linear_nmp")->linear();
  const Eigen::MatrixXd P2 = vi_recursion_linear(ss.A, ss.B, ss.C, 1.0, 0.25, 1, 2500);
  const Eigen::MatrixXd P_dre =
      solve_riccati_finite(ss.A, ss.B, ss.C, 1.0, 0.25, 3125, false).P0;
  EXPECT_LT((P2 - P_dre).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ViRecursion, ConvergesMonotonicallyToCareOnMpPlant) {
  Eigen::MatrixXd A(1, 1), B(1, 1), C(1, 1);
  A << 0.0;
  B << 1.0;
  C << 1.0;
  const Eigen::MatrixXd Pc = solve_care(A, B, C, 1.0);
  double prev_err = std::numeric_limits<double>::infinity();
  for (const int k : {2, 4, 8, 16, 32}) {
    const Eigen::MatrixXd Pk = vi_recursion_linear(A, B, C, 1.0, 0.25, k - 1, 0);
    const double err = std::abs(Pk(0, 0) - Pc(0, 0));
    EXPECT_LE(err, prev_err + 1e-12);
    prev_err = err;
  }
  EXPECT_LT(prev_err, 1e-6);
}

// The first-segment gains of the horizon-T problem must equal the greedy
// gains of the value-iteration step whose terminal weight is the previous
// iterate, on shared grid nodes (independent step sizes on the two sides).
TEST(ViRecursion, GreedyGainsMatchFirstHorizonSegment) {
  const auto ss = *make_builtin("linear_nmp")->linear();
  const double eps = 0.1, dt = 0.25;
  const int N = 8;  // T = 2.0
  const Eigen::MatrixXd P_N = vi_recursion_linear(ss.A, ss.B, ss.C, eps, dt, N - 1, 2500);
  const RiccatiSolution greedy = vi_greedy_gain_schedule(ss.A, ss.B, ss.C, eps, dt, P_N, 2500);
  const int full_steps = N * 3125;
  const RiccatiSolution full =
      solve_riccati_finite(ss.A, ss.B, ss.C, eps, N * dt, full_steps, true);
  // Common nodes: multiples of dt/125 (2500 = 125*20, 3125 = 125*25).
  double max_err = 0.0;
  for (int m = 0; m <= 125; ++m) {
    const double t = m * dt / 125.0;
    const size_t ig = static_cast<size_t>(std::llround(t / (dt / 2500.0)));
    const size_t id = static_cast<size_t>(std::llround(t / (N * dt / full_steps)));
    max_err = std::max(max_err,
                       (greedy.gains[ig] - full.gains[id]).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(max_err, 1e-6);
}

TEST(TraceCsv, WritesDenseRows) {
  const auto system = make_builtin("linear_nmp");
  RHCConfig config;
  config.T = 0.5;
  config.dt = 0.25;
  config.epsilon = 0.1;
  config.sim_time = 1.0;
  const ClosedLoopTrace trace = run_rhc(*system, config, vec({0.5, 0.0}));
  const std::string path = std::filesystem::temp_directory_path() / "cheapctl_trace_test.csv";
  write_trace_csv(trace, config, path);

  std::ifstream in(path);
  ASSERT_TRUE(in.good());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# schema=1");
  std::getline(in, line);
  EXPECT_EQ(line, "t,x_1,x_2,u_1,running_cost,grad_norm");
  size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, trace.dense_times.size());
  std::filesystem::remove(path);
}

TEST(TraceCsv, UnwritablePathThrows) {
  const ClosedLoopTrace trace = synthetic_trace(1.0, -1.0, 0.1, 1.0);
  RHCConfig config;
  config.T = 0.5;
  config.dt = 0.1;
  config.epsilon = 1.0;
  EXPECT_THROW(write_trace_csv(trace, config, "/nonexistent_dir/deeper/trace.csv"), IoError);
}
