#include "cheapctl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "cheapctl/certificates.hpp"
#include "cheapctl/ocp.hpp"
#include "cheapctl/rng.hpp"
#include "cheapctl/transforms.hpp"

namespace cheapctl {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (const char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

double parse_double(const std::string& field, const std::string& raw) {
  const std::string s = trim(raw);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw ConfigInvalid(field + ": cannot parse number '" + s + "'");
  }
  return v;
}

std::vector<double> parse_double_list(const std::string& field, const std::string& raw) {
  std::vector<double> out;
  for (const std::string& part : split(raw, ',')) {
    if (trim(part).empty()) continue;
    out.push_back(parse_double(field, part));
  }
  return out;
}

Eigen::VectorXd parse_vector(const std::string& field, const std::string& raw) {
  std::istringstream in(trim(raw));
  std::vector<double> vals;
  std::string tok;
  while (in >> tok) vals.push_back(parse_double(field, tok));
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  for (size_t i = 0; i < vals.size(); ++i) v(static_cast<Eigen::Index>(i)) = vals[i];
  return v;
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

Scenario parse_scenario_text(const std::string& text) {
  Scenario sc;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigInvalid("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "system") {
      sc.system = value;
    } else if (key == "K") {
      sc.link_params.K = parse_double(key, value);
    } else if (key == "beta1") {
      sc.link_params.beta1 = parse_double(key, value);
    } else if (key == "beta2") {
      sc.link_params.beta2 = parse_double(key, value);
    } else if (key == "epsilon_list") {
      sc.epsilon_list = parse_double_list(key, value);
    } else if (key == "T_list") {
      sc.T_list = parse_double_list(key, value);
    } else if (key == "dt") {
      sc.dt = parse_double(key, value);
    } else if (key == "x0_list") {
      sc.x0_list.clear();
      for (const std::string& part : split(value, ';')) {
        if (trim(part).empty()) continue;
        sc.x0_list.push_back(parse_vector(key, part));
      }
    } else if (key == "sim_time") {
      sc.sim_time = parse_double(key, value);
    } else if (key == "diverge_radius") {
      sc.diverge_radius = parse_double(key, value);
    } else if (key == "settle_radius") {
      sc.settle_radius = parse_double(key, value);
    } else if (key == "ctrl_dt") {
      sc.ctrl_dt = parse_double(key, value);
    } else if (key == "n_int") {
      sc.n_int = static_cast<int>(parse_double(key, value));
    } else if (key == "tol_grad") {
      sc.tol_grad = parse_double(key, value);
    } else if (key == "max_iters") {
      sc.max_iters = static_cast<int>(parse_double(key, value));
    } else if (key == "seed") {
      sc.seed = static_cast<std::uint64_t>(parse_double(key, value));
    } else {
      throw ConfigInvalid(key + ": unknown key");
    }
  }
  return sc;
}

Scenario parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario_text(buffer.str());
}

std::shared_ptr<const ControlAffineSystem> scenario_system(const Scenario& scenario) {
  try {
    return make_builtin(scenario.system, scenario.link_params);
  } catch (const std::exception& e) {
    throw ConfigInvalid(std::string("system: ") + e.what());
  }
}

void validate_scenario(const Scenario& scenario) {
  const auto system = scenario_system(scenario);
  if (scenario.epsilon_list.empty()) throw ConfigInvalid("epsilon_list: must be nonempty");
  for (const double e : scenario.epsilon_list) {
    if (!(e > 0.0)) throw ConfigInvalid("epsilon_list: entries must be > 0");
  }
  if (scenario.T_list.empty()) throw ConfigInvalid("T_list: must be nonempty");
  for (const double T : scenario.T_list) {
    if (!(T > 0.0)) throw ConfigInvalid("T_list: entries must be > 0");
  }
  if (!(scenario.dt > 0.0)) throw ConfigInvalid("dt: must be > 0");
  const double t_min = *std::min_element(scenario.T_list.begin(), scenario.T_list.end());
  if (scenario.dt > t_min + 1e-12) throw ConfigInvalid("dt: must satisfy dt <= min(T_list)");
  if (scenario.x0_list.empty()) throw ConfigInvalid("x0_list: must be nonempty");
  for (const auto& x0 : scenario.x0_list) {
    if (x0.size() != system->state_dim()) {
      throw ConfigInvalid("x0_list: entry dimension != state dimension of " + scenario.system);
    }
  }
  const double t_max = *std::max_element(scenario.T_list.begin(), scenario.T_list.end());
  if (scenario.sim_time < t_max) throw ConfigInvalid("sim_time: must be >= max(T_list)");
  if (!(scenario.ctrl_dt > 0.0)) throw ConfigInvalid("ctrl_dt: must be > 0");
  if (scenario.n_int < 1) throw ConfigInvalid("n_int: must be >= 1");
  if (scenario.max_iters < 1) throw ConfigInvalid("max_iters: must be >= 1");
  if (!(scenario.tol_grad > 0.0)) throw ConfigInvalid("tol_grad: must be > 0");
}

RHCConfig scenario_rhc_config(const Scenario& scenario, double epsilon, double T) {
  RHCConfig config;
  config.T = T;
  config.dt = scenario.dt;
  config.epsilon = epsilon;
  config.sim_time = scenario.sim_time;
  config.diverge_radius = scenario.diverge_radius;
  config.settle_radius = scenario.settle_radius;
  config.ctrl_dt_target = scenario.ctrl_dt;
  config.n_int = scenario.n_int;
  config.solver.tol_grad = scenario.tol_grad;
  config.solver.max_iters = scenario.max_iters;
  return config;
}

int verdict_code(StabilityKind kind) {
  switch (kind) {
    case StabilityKind::Stabilized:
      return 1;
    case StabilityKind::Diverged:
      return -1;
    case StabilityKind::Inconclusive:
      return 0;
  }
  return 0;
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CHEAPCTL_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

namespace {

SweepRow run_cell(const ControlAffineSystem& system, const Scenario& scenario, double epsilon,
                  double T, int x0_id) {
  SweepRow row;
  row.epsilon = epsilon;
  row.T = T;
  row.dt = scenario.dt;
  row.x0_id = x0_id;
  try {
    const RHCConfig config = scenario_rhc_config(scenario, epsilon, T);
    const ClosedLoopTrace trace = run_rhc(system, config, scenario.x0_list[x0_id]);
    const StabilityVerdict verdict = classify_stability(trace, config);
    row.verdict = verdict.kind;
    row.decay_rate = verdict.decay_rate;
    row.escape_time = verdict.escape_time;
    row.overshoot = verdict.overshoot;
    row.accumulated_cost = trace.accumulated_cost;
    row.steps = static_cast<int>(trace.per_step_reports.size());
    for (const auto& rep : trace.per_step_reports) {
      row.total_iterations += rep.iterations;
      row.max_grad_norm = std::max(row.max_grad_norm, rep.grad_norm);
    }
  } catch (const std::exception&) {
    row.failed = true;
    row.verdict = StabilityKind::Inconclusive;
  }
  return row;
}

}  // namespace

SweepResult run_sweep(const Scenario& scenario, int workers) {
  validate_scenario(scenario);
  const auto system = scenario_system(scenario);

  struct Cell {
    double epsilon;
    double T;
    int x0_id;
  };
  std::vector<Cell> cells;
  for (const double eps : scenario.epsilon_list) {
    for (const double T : scenario.T_list) {
      for (size_t i = 0; i < scenario.x0_list.size(); ++i) {
        cells.push_back({eps, T, static_cast<int>(i)});
      }
    }
  }

  SweepResult result;
  result.scenario = scenario;
  result.rows.resize(cells.size());

  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      result.rows[i] =
          run_cell(*system, scenario, cells[i].epsilon, cells[i].T, cells[i].x0_id);
    }
  };

  const int n_workers =
      std::min<int>(resolve_workers(workers), static_cast<int>(cells.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return result;
}

namespace {

std::string verdict_string(const SweepRow& row) {
  if (row.failed) return "failed";
  return to_string(row.verdict);
}

}  // namespace

void emit_phase_diagram(const SweepResult& result, const std::string& out_dir) {
  if (result.rows.empty()) throw std::invalid_argument("empty sweep result");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);

  const std::string long_path = out_dir + "/sweep_long.csv";
  std::ofstream longf(long_path);
  if (!longf) throw IoError("cannot open " + long_path + " for writing");
  longf << "# schema=1\n";
  longf << "# system=" << result.scenario.system << " seed=" << result.scenario.seed << "\n";
  longf << "epsilon,T,dt,x0_id,verdict,decay_rate,escape_time,overshoot,accumulated_cost,"
           "steps,total_iterations,max_grad_norm\n";
  for (const SweepRow& row : result.rows) {
    longf << format_double(row.epsilon) << "," << format_double(row.T) << ","
          << format_double(row.dt) << "," << row.x0_id << "," << verdict_string(row) << ","
          << format_double(row.decay_rate) << "," << format_double(row.escape_time) << ","
          << format_double(row.overshoot) << "," << format_double(row.accumulated_cost) << ","
          << row.steps << "," << row.total_iterations << ","
          << format_double(row.max_grad_norm) << "\n";
  }
  if (!longf) throw IoError("write failed for " + long_path);
  longf.close();

  // Verdict-code matrix, one block per initial state.
  std::vector<double> epsilons = result.scenario.epsilon_list;
  std::vector<double> horizons = result.scenario.T_list;
  const std::string matrix_path = out_dir + "/phase_matrix.csv";
  std::ofstream mat(matrix_path);
  if (!mat) throw IoError("cannot open " + matrix_path + " for writing");
  mat << "# schema=1\n";
  for (size_t x0 = 0; x0 < result.scenario.x0_list.size(); ++x0) {
    mat << "# x0_id=" << x0 << "\n";
    mat << "epsilon\\T";
    for (const double T : horizons) mat << "," << format_double(T);
    mat << "\n";
    for (const double eps : epsilons) {
      mat << format_double(eps);
      for (const double T : horizons) {
        int code = 0;
        for (const SweepRow& row : result.rows) {
          if (row.x0_id == static_cast<int>(x0) && row.epsilon == eps && row.T == T) {
            code = row.failed ? 0 : verdict_code(row.verdict);
            break;
          }
        }
        mat << "," << code;
      }
      mat << "\n";
    }
  }
  if (!mat) throw IoError("write failed for " + matrix_path);
}

std::vector<SweepRow> parse_sweep_long_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<SweepRow> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;  // column header
      continue;
    }
    const auto parts = split(line, ',');
    if (parts.size() != 12) throw IoError("malformed sweep row: " + line);
    SweepRow row;
    row.epsilon = parse_double("epsilon", parts[0]);
    row.T = parse_double("T", parts[1]);
    row.dt = parse_double("dt", parts[2]);
    row.x0_id = static_cast<int>(parse_double("x0_id", parts[3]));
    const std::string v = trim(parts[4]);
    row.failed = v == "failed";
    row.verdict = v == "stabilized"  ? StabilityKind::Stabilized
                  : v == "diverged" ? StabilityKind::Diverged
                                    : StabilityKind::Inconclusive;
    row.decay_rate = parse_double("decay_rate", parts[5]);
    row.escape_time = parse_double("escape_time", parts[6]);
    row.overshoot = parse_double("overshoot", parts[7]);
    row.accumulated_cost = parse_double("accumulated_cost", parts[8]);
    row.steps = static_cast<int>(parse_double("steps", parts[9]));
    row.total_iterations = static_cast<long>(parse_double("total_iterations", parts[10]));
    row.max_grad_norm = parse_double("max_grad_norm", parts[11]);
    rows.push_back(row);
  }
  return rows;
}

std::vector<PhaseMatrixBlock> parse_phase_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<PhaseMatrixBlock> blocks;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# x0_id=", 0) == 0) {
      PhaseMatrixBlock block;
      block.x0_id = std::atoi(line.c_str() + 8);
      if (!std::getline(in, line)) break;
      const auto header = split(line, ',');
      for (size_t i = 1; i < header.size(); ++i) {
        block.horizons.push_back(parse_double("T", header[i]));
      }
      while (in.peek() != '#' && in.peek() != EOF && std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto parts = split(line, ',');
        block.epsilons.push_back(parse_double("epsilon", parts[0]));
        std::vector<int> row;
        for (size_t i = 1; i < parts.size(); ++i) {
          row.push_back(static_cast<int>(parse_double("code", parts[i])));
        }
        block.codes.push_back(std::move(row));
      }
      blocks.push_back(std::move(block));
    }
  }
  return blocks;
}

// ---------------------------------------------------------------------------
// CLI

namespace {

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir, double epsilon,
                 double T, int x0_index) {
  Scenario sc = parse_scenario_file(scenario_path);
  validate_scenario(sc);
  const auto system = scenario_system(sc);
  const double eps = epsilon > 0.0 ? epsilon : sc.epsilon_list.front();
  const double horizon = T > 0.0 ? T : sc.T_list.front();
  if (x0_index < 0 || x0_index >= static_cast<int>(sc.x0_list.size())) {
    throw ConfigInvalid("x0-index: out of range");
  }
  const RHCConfig config = scenario_rhc_config(sc, eps, horizon);
  const ClosedLoopTrace trace = run_rhc(*system, config, sc.x0_list[x0_index]);
  const StabilityVerdict verdict = classify_stability(trace, config);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  write_trace_csv(trace, config, out_dir + "/trace.csv");

  std::cout << "system=" << sc.system << " epsilon=" << format_double(eps)
            << " T=" << format_double(horizon) << " verdict=" << to_string(verdict.kind);
  if (verdict.kind == StabilityKind::Stabilized) {
    std::cout << " lambda=" << format_double(verdict.decay_rate);
  } else if (verdict.kind == StabilityKind::Diverged) {
    std::cout << " escape_time=" << format_double(verdict.escape_time);
  }
  std::cout << " cost=" << format_double(trace.accumulated_cost) << "\n";
  std::cout << "trace written to " << out_dir << "/trace.csv\n";
  return 0;
}

int cmd_sweep(const std::string& scenario_path, const std::string& out_dir, int workers,
              long long seed_override) {
  Scenario sc = parse_scenario_file(scenario_path);
  if (seed_override >= 0) sc.seed = static_cast<std::uint64_t>(seed_override);
  const SweepResult result = run_sweep(sc, workers);
  emit_phase_diagram(result, out_dir);
  int stabilized = 0, diverged = 0, other = 0;
  for (const auto& row : result.rows) {
    if (row.failed) {
      ++other;
    } else if (row.verdict == StabilityKind::Stabilized) {
      ++stabilized;
    } else if (row.verdict == StabilityKind::Diverged) {
      ++diverged;
    } else {
      ++other;
    }
  }
  std::cout << "sweep: " << result.rows.size() << " cells, " << stabilized << " stabilized, "
            << diverged << " diverged, " << other << " other\n";
  std::cout << "results written to " << out_dir << "/sweep_long.csv and phase_matrix.csv\n";
  return 0;
}

int cmd_bound(double alpha_v, double alpha_w_hi, double alpha_w_lo, double k_w, double dt,
              const std::string& system_name, double epsilon, const FlexibleLinkParams& params) {
  if (!system_name.empty()) {
    const auto system = make_builtin(system_name, params);
    const auto model = normal_form_of(*system);
    const CheapControlWeights w = CheapControlWeights::from_epsilon(epsilon, model->r);
    const DetectabilityCertificate cert = build_w_linear(model, w.epsilon_tilde);

    UniformSampler rng(7);
    std::vector<Eigen::VectorXd> states;
    for (int i = 0; i < 8; ++i) states.push_back(rng.vector(system->state_dim(), -1.0, 1.0));
    const double av = estimate_alpha_v(*system, epsilon, states);

    const HorizonBound bound = horizon_bound(av, cert.alpha_w_hi, cert.alpha_w_lo, cert.k_w, dt);
    std::cout << "certificate: alpha_w_lo=" << format_double(cert.alpha_w_lo)
              << " alpha_w_hi=" << format_double(cert.alpha_w_hi)
              << " k_w=" << format_double(cert.k_w)
              << " sample_margin=" << format_double(cert.sample_margin) << "\n";
    std::cout << "alpha_v=" << format_double(av) << " M(dt)=" << format_double(bound.m_dt)
              << " T*=" << format_double(bound.t_star) << "\n";
    return 0;
  }
  const HorizonBound bound = horizon_bound(alpha_v, alpha_w_hi, alpha_w_lo, k_w, dt);
  std::cout << "M(dt)=" << format_double(bound.m_dt) << " T*=" << format_double(bound.t_star)
            << "\n";
  return 0;
}

int cmd_vi_compare(const std::string& system_name, double epsilon, double dt, int k) {
  const auto system = make_builtin(system_name);
  const auto ss = system->linear();
  if (!ss) throw ConfigInvalid("system: vi-compare needs a linear plant");

  double max_err = 0.0;
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(ss->A.rows(), ss->A.cols());
  for (int j = 1; j <= k; ++j) {
    P = vi_greedy_gain_schedule(ss->A, ss->B, ss->C, epsilon, dt, P, 2500).P0;
    const int steps = std::max(riccati_steps_for(ss->A, ss->B, ss->C, epsilon, j * dt),
                               static_cast<int>(std::ceil(j * dt / 8e-5)));
    const Eigen::MatrixXd P_dre =
        solve_riccati_finite(ss->A, ss->B, ss->C, epsilon, j * dt, steps, false).P0;
    const double err = (P - P_dre).cwiseAbs().maxCoeff();
    max_err = std::max(max_err, err);
    std::cout << "k=" << j << " horizon=" << format_double(j * dt)
              << " max|P_vi - P_dre|=" << format_double(err) << "\n";
  }
  std::cout << "max error over k<=" << k << ": " << format_double(max_err) << "\n";
  return max_err < 1e-8 ? 0 : 1;
}

int cmd_verify();

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"cheap-control receding-horizon laboratory"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "run one closed loop and export the trace");
  std::string sim_scenario, sim_out = "out";
  double sim_eps = -1.0, sim_T = -1.0;
  int sim_x0 = 0;
  sim->add_option("--scenario", sim_scenario, "scenario file")->required();
  sim->add_option("--out", sim_out, "output directory");
  sim->add_option("--epsilon", sim_eps, "control weight (default: first of scenario)");
  sim->add_option("--T", sim_T, "prediction horizon (default: first of scenario)");
  sim->add_option("--x0-index", sim_x0, "initial state index");

  // sweep
  auto* swp = app.add_subcommand("sweep", "run the scenario grid");
  std::string swp_scenario, swp_out = "out";
  int swp_workers = 0;
  long long swp_seed = -1;
  swp->add_option("--scenario", swp_scenario, "scenario file")->required();
  swp->add_option("--out", swp_out, "output directory");
  swp->add_option("--workers", swp_workers, "worker threads (0: CHEAPCTL_WORKERS or hardware)");
  swp->add_option("--seed", swp_seed, "seed override");

  // bound
  auto* bnd = app.add_subcommand("bound", "evaluate the horizon threshold");
  double b_av = 0, b_hi = 0, b_lo = 0, b_kw = 0, b_dt = 0, b_eps = 1.0;
  std::string b_system;
  FlexibleLinkParams b_params;
  bnd->add_option("--alpha-v", b_av, "value growth constant");
  bnd->add_option("--alpha-w-hi", b_hi, "upper sandwich constant");
  bnd->add_option("--alpha-w-lo", b_lo, "lower sandwich constant");
  bnd->add_option("--k-w", b_kw, "decrement rate");
  bnd->add_option("--dt", b_dt, "sampling interval")->required();
  bnd->add_option("--system", b_system, "build the certificate for this builtin instead");
  bnd->add_option("--epsilon", b_eps, "control weight for the certificate route");
  bnd->add_option("--K", b_params.K, "flexible link spring coefficient");
  bnd->add_option("--beta1", b_params.beta1, "flexible link arm friction");
  bnd->add_option("--beta2", b_params.beta2, "flexible link motor friction");

  // vi-compare
  auto* vic = app.add_subcommand("vi-compare", "value-iteration vs horizon identity");
  std::string v_system = "linear_nmp";
  double v_eps = 1.0, v_dt = 0.25;
  int v_k = 8;
  vic->add_option("--system", v_system, "linear builtin");
  vic->add_option("--epsilon", v_eps, "control weight");
  vic->add_option("--dt", v_dt, "iteration step");
  vic->add_option("--k", v_k, "number of Bellman steps");

  // verify
  auto* ver = app.add_subcommand("verify", "run the invariant suites");
  (void)ver;

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      app.exit(e);
      return 0;
    }
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_scenario, sim_out, sim_eps, sim_T, sim_x0);
    if (swp->parsed()) return cmd_sweep(swp_scenario, swp_out, swp_workers, swp_seed);
    if (bnd->parsed())
      return cmd_bound(b_av, b_hi, b_lo, b_kw, b_dt, b_system, b_eps, b_params);
    if (vic->parsed()) return cmd_vi_compare(v_system, v_eps, v_dt, v_k);
    if (ver->parsed()) return cmd_verify();
  } catch (const ConfigInvalid& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

namespace {

struct CheckPrinter {
  bool all_passed = true;
  void report(const std::string& name, bool passed, const std::string& detail) {
    std::cout << (passed ? "[PASS] " : "[FAIL] ") << name;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << "\n";
    all_passed = all_passed && passed;
  }
};

int cmd_verify() {
  CheckPrinter out;

  // Transform identities on every builtin that ships a normal form.
  const std::vector<std::string> names = {"linear_nmp", "linear_nmp_flipped", "pendulum",
                                          "flexible_link_theta1", "flexible_link_theta3"};
  for (const std::string& name : names) {
    const auto system =
        make_builtin(name, FlexibleLinkParams{2.0, 0.5, 0.5});
    const auto model = normal_form_of(*system);
    UniformSampler rng(11);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Eigen::VectorXd xi = rng.vector(model->dim_xi, -2.0, 2.0);
      const Eigen::VectorXd eta = rng.vector(model->dim_eta, -2.0, 2.0);
      const Eigen::VectorXd u = rng.vector(model->q, -2.0, 2.0);
      const double et = 0.05 + 0.95 * (i / 99.0);
      const CheapControlWeights w = CheapControlWeights::from_epsilon_tilde(et, model->r);
      const FastSlowPoint p = to_fast_slow(*model, w, xi, u);
      const double lhs = xi.head(model->q).squaredNorm() + w.epsilon * u.squaredNorm();
      const double rhs = p.xi_tilde.head(model->q).squaredNorm() + p.u_tilde.squaredNorm();
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(1e-12, std::abs(lhs)));
    }
    out.report("cost invariance " + name, worst < 1e-12,
               "max rel err " + format_double(worst));

    const ConsistencyReport consistency = check_normal_form_consistency(*system, *model, 50, 3);
    out.report("normal form consistency " + name, consistency.passed,
               "max residual " + format_double(consistency.max_residual));
  }

  // Oracle agreement on the linear plant.
  {
    const auto system = make_builtin("linear_nmp");
    const auto ss = system->linear();
    Eigen::VectorXd x0(2);
    x0 << 1.0, 0.0;
    double worst = 0.0;
    for (const double eps : {1.0, 0.1}) {
      for (const double T : {1.0, 2.0}) {
        HorizonSpec horizon;
        horizon.T = T;
        horizon.n_ctrl = static_cast<int>(T / 0.005);
        horizon.n_int = 10;
        const auto [ctrl, report] = solve_finite_horizon(*system, eps, x0, horizon);
        (void)ctrl;
        const int steps = riccati_steps_for(ss->A, ss->B, ss->C, eps, T);
        const Eigen::MatrixXd P =
            solve_riccati_finite(ss->A, ss->B, ss->C, eps, T, steps, false).P0;
        const double oracle = x0.dot(P * x0);
        worst = std::max(worst, std::abs(report.cost - oracle) / oracle);
      }
    }
    out.report("oracle agreement linear_nmp", worst < 0.01,
               "max rel err " + format_double(worst));
  }

  // Cheap-control plateau on the non-minimum-phase plant.
  {
    const auto system = make_builtin("linear_nmp");
    const auto ss = system->linear();
    Eigen::MatrixXd A0(1, 1), B0(1, 1);
    A0 << 1.0;
    B0 << -10.0;
    Eigen::VectorXd eta0(1);
    eta0 << 1.0;
    const MinEnergySolution me = min_energy_value(A0, B0, eta0);
    Eigen::VectorXd x0(2);
    x0 << 0.0, 1.0;
    double v_min = std::numeric_limits<double>::infinity();
    for (const double eps : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
      const Eigen::MatrixXd P = solve_care(ss->A, ss->B, ss->C, eps);
      v_min = std::min(v_min, x0.dot(P * x0));
    }
    out.report("minimum-energy plateau linear_nmp", v_min >= 0.95 * me.value,
               "min V=" + format_double(v_min) + " floor=" + format_double(me.value));
  }

  return out.all_passed ? 0 : 1;
}

}  // namespace

}  // namespace cheapctl
