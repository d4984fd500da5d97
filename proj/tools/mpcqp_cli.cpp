// Command-line front end: assemble LTV MPC problems, apply move blocking and
// partial condensing, solve, sweep condensing levels, simulate in closed
// loop, and export KKT sparsity patterns.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mpcqp/json_io.hpp"
#include "mpcqp/kkt.hpp"
#include "mpcqp/rng.hpp"
#include "mpcqp/simulate.hpp"
#include "mpcqp/solver.hpp"
#include "mpcqp/sweep.hpp"

namespace {

using namespace mpcqp;

// "1,2,3" plain list; "10*24" means the value 10 repeated 24 times
std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::string token;
  std::stringstream ss(text);
  while (std::getline(ss, token, ',')) {
    if (token.empty()) throw CLI::ValidationError("empty entry in list '" + text + "'");
    const auto star = token.find('*');
    int value = 0, repeat = 1;
    try {
      if (star == std::string::npos) {
        value = std::stoi(token);
      } else {
        value = std::stoi(token.substr(0, star));
        repeat = std::stoi(token.substr(star + 1));
      }
    } catch (const std::exception&) {
      throw CLI::ValidationError("cannot parse list entry '" + token + "'");
    }
    for (int i = 0; i < repeat; ++i) out.push_back(value);
  }
  if (out.empty()) throw CLI::ValidationError("empty list '" + text + "'");
  return out;
}

struct CommonOpts {
  std::string problem_file;
  std::string benchmark;
  int masses = 6;
  int horizon = 240;
  std::string mb = "1*0";  // placeholder; empty means no blocking (all ones)
  std::string pc = "ones";
  bool strict_bounds = false;
  double tol = 1e-8;
  int max_iters = 50;
  std::uint64_t seed = 1;
  std::string out_path;

  void add_to(CLI::App* cmd, bool with_transform = true) {
    cmd->add_option("--problem", problem_file, "problem JSON file");
    cmd->add_option("--benchmark", benchmark, "builtin benchmark name (oscillating-masses)")
        ->check(CLI::IsMember({"oscillating-masses"}));
    cmd->add_option("--masses", masses, "benchmark: number of masses (even, >= 4)");
    cmd->add_option("--horizon", horizon, "benchmark: prediction horizon");
    if (with_transform) {
      cmd->add_option("--mb", mb, "move-blocking window sizes, e.g. 1,2,3 or 10*24 (default: no blocking)");
      cmd->add_option("--pc", pc, "condensing window sizes, 'empty' (dense), 'ones' (sparse) or a list");
      cmd->add_flag("--strict-bounds", strict_bounds,
                    "tightest per-window bounds instead of the window average");
    }
    cmd->add_option("--tol", tol, "solver residual tolerance");
    cmd->add_option("--max-iters", max_iters, "solver iteration limit");
    cmd->add_option("--seed", seed, "RNG seed (benchmark initial state, disturbances)");
    cmd->add_option("--out", out_path, "output path (default: stdout)");
  }

  MpcProblem load_problem() const {
    if (!problem_file.empty()) return load_problem_file(problem_file);
    if (benchmark.empty())
      throw CLI::ValidationError("either --problem or --benchmark is required");
    MpcProblem p = make_oscillating_masses(masses, 1.0, 1.0, 0.0, 0.5, 0.5, horizon);
    // random initial displacements make the regulator problem nontrivial
    Rng rng(seed);
    for (int i = 0; i < masses; ++i) p.x0[i] = rng.uniform(-0.5, 0.5);
    return p;
  }

  SolverSettings settings() const {
    SolverSettings s;
    s.kkt_tol = tol;
    s.comp_tol = tol;
    s.max_iters = max_iters;
    return s;
  }

  BlockingVector blocking(int n_stages) const {
    if (mb == "1*0") return blocking_identity(n_stages);
    return blocking_vector(parse_int_list(mb), n_stages);
  }

  CondensingVector condensing(int n_stages) const {
    if (pc == "ones") return condensing_identity(n_stages);
    if (pc == "empty") return condensing_dense(n_stages);
    return condensing_vector(parse_int_list(pc), n_stages);
  }

  BoundMode bound_mode() const {
    return strict_bounds ? BoundMode::WindowTight : BoundMode::WindowAverage;
  }

  void write(const std::string& text) const {
    if (out_path.empty()) {
      std::cout << text;
      return;
    }
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file: " + out_path);
    f << text;
  }
};

int cmd_solve(const CommonOpts& opts) {
  const MpcProblem problem = opts.load_problem();
  const SparseQp qp = assemble_sparse_qp(problem);
  const int n_stages = problem.horizon();
  const Transform tf = partial_prediction(qp, opts.condensing(n_stages), opts.blocking(n_stages));
  const GeneralizedQp g = build_generalized_qp(qp, tf, opts.bound_mode());
  auto [sol, rep] = solve_box_qp(g, opts.settings());
  auto [u_full, x_full] = expand_solution(sol.u, sol.x, tf);
  opts.write(solution_to_json(sol, rep, u_full, x_full).dump(2) + "\n");
  return sol.status == SolveStatus::Converged ? 0 : 2;
}

int cmd_pattern(const CommonOpts& opts) {
  const MpcProblem problem = opts.load_problem();
  const SparseQp qp = assemble_sparse_qp(problem);
  const int n_stages = problem.horizon();
  const Transform tf = partial_prediction(qp, opts.condensing(n_stages), opts.blocking(n_stages));
  const GeneralizedQp g = build_generalized_qp(qp, tf, opts.bound_mode());
  const KktPattern pat = kkt_pattern(g);
  std::string out;
  for (const auto& [r, c] : pat.coords) {
    out += std::to_string(r);
    out += ' ';
    out += std::to_string(c);
    out += '\n';
  }
  opts.write(out);
  return 0;
}

int cmd_sweep(const CommonOpts& opts, const std::vector<std::string>& pcs, int jobs) {
  SweepConfig cfg;
  cfg.problem = opts.load_problem();
  const int n_stages = cfg.problem.horizon();
  cfg.blocking = opts.blocking(n_stages);
  cfg.settings = opts.settings();
  cfg.bound_mode = opts.bound_mode();
  cfg.jobs = jobs;
  if (pcs.empty() || (pcs.size() == 1 && pcs[0] == "family")) {
    cfg.condensings = family_condensing_vectors(n_stages, cfg.blocking);
  } else {
    for (const auto& item : pcs) {
      if (item == "empty")
        cfg.condensings.push_back(condensing_dense(n_stages));
      else if (item == "ones")
        cfg.condensings.push_back(condensing_identity(n_stages));
      else
        cfg.condensings.push_back(condensing_vector(parse_int_list(item), n_stages));
    }
  }
  const auto rows = run_sweep(cfg);
  opts.write(sweep_csv(rows));
  return 0;
}

int cmd_simulate(const CommonOpts& opts, int steps, double amp, bool disturb_all) {
  SimConfig cfg;
  cfg.problem = opts.load_problem();
  const int n_stages = cfg.problem.horizon();
  cfg.blocking = opts.blocking(n_stages);
  cfg.condensing = opts.condensing(n_stages);
  cfg.settings = opts.settings();
  cfg.bound_mode = opts.bound_mode();
  cfg.steps = steps;
  cfg.amplitude = amp;
  cfg.seed = opts.seed;
  if (!opts.benchmark.empty() && !disturb_all) {
    // displacement states of each mass
    for (int i = 0; i < opts.masses; ++i) cfg.disturbed_states.push_back(i);
  } else if (amp > 0.0) {
    for (int i = 0; i < cfg.problem.nx(); ++i) cfg.disturbed_states.push_back(i);
  }
  opts.write(run_simulation_csv(cfg));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"move-blocked, partially condensed MPC QP toolkit"};
  app.require_subcommand(1);

  CommonOpts solve_opts, sweep_opts, sim_opts, pattern_opts;
  std::vector<std::string> sweep_pcs;
  int jobs = 1;
  int steps = 100;
  double amp = 0.5;
  bool disturb_all = false;

  auto* solve = app.add_subcommand("solve", "solve one transformed problem, write solution JSON");
  solve_opts.add_to(solve);
  auto* sweep = app.add_subcommand("sweep", "sweep condensing levels, write cost/memory CSV");
  sweep_opts.add_to(sweep, false);
  sweep->add_option("--mb", sweep_opts.mb, "move-blocking window sizes");
  sweep->add_option("--pc", sweep_pcs,
                    "condensing vectors: 'family' (default) or repeated lists/'empty'/'ones'");
  sweep->add_flag("--strict-bounds", sweep_opts.strict_bounds, "tightest per-window bounds");
  sweep->add_option("--jobs", jobs, "rows computed concurrently");
  auto* sim = app.add_subcommand("simulate", "closed-loop receding-horizon run, write CSV trajectory");
  sim_opts.add_to(sim);
  sim->add_option("--steps", steps, "simulation length");
  sim->add_option("--amp", amp, "disturbance amplitude (uniform)");
  sim->add_flag("--disturb-all", disturb_all, "apply disturbance to every state component");
  auto* pattern = app.add_subcommand("pattern", "write the KKT pattern as 0-based 'row col' lines");
  pattern_opts.add_to(pattern);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(solve_opts);
    if (sweep->parsed()) return cmd_sweep(sweep_opts, sweep_pcs, jobs);
    if (sim->parsed()) return cmd_simulate(sim_opts, steps, amp, disturb_all);
    if (pattern->parsed()) return cmd_pattern(pattern_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
