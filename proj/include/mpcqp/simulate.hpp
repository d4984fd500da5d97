#pragma once

#include <string>
#include <vector>

#include "mpcqp/csv.hpp"
#include "mpcqp/rng.hpp"
#include "mpcqp/solver.hpp"
#include "mpcqp/sparse_qp.hpp"
#include "mpcqp/transform.hpp"

namespace mpcqp {

/// Receding-horizon simulation setup. The controller solves the transformed
/// QP from the measured state and applies the first expanded input; the plant
/// then advances with the stage-0 model plus a seeded uniform disturbance on
/// the listed state components. The prediction model keeps its own drift
/// (zero for the regulator benchmarks); the disturbance is unknown to the
/// controller.
struct SimConfig {
  MpcProblem problem;
  int steps = 100;
  double amplitude = 0.5;
  std::uint64_t seed = 1;
  std::vector<int> disturbed_states;  // indices receiving noise each step
  BlockingVector blocking;
  CondensingVector condensing;
  SolverSettings settings;
  BoundMode bound_mode = BoundMode::WindowAverage;
};

/// Byte-deterministic CSV trajectory:
/// step, x0..x{nx-1}, u0..u{nu-1}, objective, solve_flops, iterations, status.
/// A failed solve keeps the previous applied input and flags the row.
inline std::string run_simulation_csv(const SimConfig& cfg) {
  if (cfg.steps < 1) throw std::invalid_argument("simulate: steps must be at least 1");
  if (cfg.amplitude < 0.0) throw std::invalid_argument("simulate: amplitude must be nonnegative");
  const int nx = cfg.problem.nx();
  const int nu = cfg.problem.nu();
  for (int idx : cfg.disturbed_states)
    if (idx < 0 || idx >= nx) throw std::invalid_argument("simulate: disturbed state index out of range");

  std::string out = "step";
  for (int i = 0; i < nx; ++i) out += ",x" + std::to_string(i);
  for (int i = 0; i < nu; ++i) out += ",u" + std::to_string(i);
  out += ",objective,solve_flops,iterations,status\n";

  Rng rng(cfg.seed);
  MpcProblem problem = cfg.problem;
  Vector state = cfg.problem.x0;
  Vector applied(nu, 0.0);
  Vector warm;  // previous full input plan

  for (int step = 0; step < cfg.steps; ++step) {
    problem.x0 = state;
    const SparseQp qp = assemble_sparse_qp(problem);
    const Transform tf = partial_prediction(qp, cfg.condensing, cfg.blocking);
    const GeneralizedQp g =
        build_generalized_qp(qp, tf, cfg.bound_mode, warm.empty() ? nullptr : &warm);
    auto [sol, rep] = solve_box_qp(g, cfg.settings);
    double objective = sol.objective;
    if (sol.status == SolveStatus::Converged) {
      auto [u_full, x_full] = expand_solution(sol.u, sol.x, tf);
      for (int i = 0; i < nu; ++i) applied[i] = u_full[i];
      warm = std::move(u_full);
    }
    // else: keep the previous applied input; the status column flags the row

    out += format_u64(static_cast<std::uint64_t>(step));
    for (int i = 0; i < nx; ++i) {
      out += ',';
      out += format_double(state[i]);
    }
    for (int i = 0; i < nu; ++i) {
      out += ',';
      out += format_double(applied[i]);
    }
    out += ',';
    out += format_double(objective);
    out += ',';
    out += format_u64(rep.solve_flops);
    out += ',';
    out += format_u64(static_cast<std::uint64_t>(rep.iterations));
    out += ',';
    out += to_string(sol.status);
    out += '\n';

    // plant step with the stage-0 model plus disturbance
    Vector next(nx, 0.0);
    matvec_accum(problem.model.A[0], state.data(), next.data(), nullptr);
    matvec_accum(problem.model.B[0], applied.data(), next.data(), nullptr);
    for (int i = 0; i < nx; ++i) next[i] += problem.model.w[0][i];
    for (int idx : cfg.disturbed_states) next[idx] += rng.uniform(-cfg.amplitude, cfg.amplitude);
    state = std::move(next);
  }
  return out;
}

}  // namespace mpcqp
