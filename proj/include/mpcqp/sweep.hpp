#pragma once

#include <algorithm>
#include <future>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpcqp/csv.hpp"
#include "mpcqp/solver.hpp"
#include "mpcqp/sparse_qp.hpp"
#include "mpcqp/transform.hpp"

namespace mpcqp {

/// One condensing level of a sweep over otherwise identical blocked QPs.
struct SweepRow {
  CondensingVector pc;
  int n_kept = 0;
  std::uint64_t prep_flops = 0;
  std::uint64_t solve_flops = 0;
  std::uint64_t total_flops = 0;
  std::uint64_t nnz_kkt = 0;
  std::uint64_t factor_fill = 0;
  int iterations = 0;
  double objective = 0.0;
};

struct SweepConfig {
  MpcProblem problem;
  BlockingVector blocking;
  std::vector<CondensingVector> condensings;
  SolverSettings settings;
  BoundMode bound_mode = BoundMode::WindowAverage;
  double equivalence_tol = 1e-6;
  int jobs = 1;
};

/// Condensing vectors for a sweep across the whole sparse-to-dense range:
/// the empty vector (dense), and for every divisor i of the horizon a vector
/// of length i. Where N/i is at least the largest blocking window the vector
/// is the equal-window [N/i, ..., N/i]; otherwise it is derived from the
/// blocking vector by repeatedly splitting the first occurrence of the
/// largest window into [ceil(w/2), floor(w/2)] until the length reaches i.
/// Rows come out ordered from fully sparse to fully dense.
inline std::vector<CondensingVector> family_condensing_vectors(int n_stages,
                                                               const BlockingVector& blocking) {
  const int m_max = *std::max_element(blocking.m.begin(), blocking.m.end());
  std::vector<int> divisors;
  for (int i = 1; i <= n_stages; ++i)
    if (n_stages % i == 0) divisors.push_back(i);
  std::sort(divisors.rbegin(), divisors.rend());

  std::vector<CondensingVector> out;
  for (int len : divisors) {
    if (n_stages / len >= m_max || len < static_cast<int>(blocking.m.size())) {
      out.push_back(condensing_vector(std::vector<int>(len, n_stages / len), n_stages));
    } else {
      std::vector<int> p = blocking.m;
      while (static_cast<int>(p.size()) < len) {
        auto it = std::max_element(p.begin(), p.end());
        const int w = *it;
        if (w < 2) throw std::logic_error("family_condensing_vectors: cannot split further");
        const int hi = (w + 1) / 2;
        *it = hi;
        p.insert(std::next(it), w - hi);
      }
      out.push_back(condensing_vector(std::move(p), n_stages));
    }
  }
  out.push_back(condensing_dense(n_stages));
  return out;
}

inline SweepRow run_sweep_row(const SparseQp& qp, const BlockingVector& blocking,
                              const CondensingVector& pc, const SolverSettings& settings,
                              BoundMode bound_mode) {
  SweepRow row;
  row.pc = pc;
  row.n_kept = pc.count();
  const Transform tf = partial_prediction(qp, pc, blocking);
  const GeneralizedQp g = build_generalized_qp(qp, tf, bound_mode);
  auto [sol, rep] = solve_box_qp(g, settings);
  if (sol.status != SolveStatus::Converged) {
    std::string desc = "[";
    for (size_t i = 0; i < pc.p.size(); ++i) desc += (i ? "," : "") + std::to_string(pc.p[i]);
    desc += "]";
    throw std::runtime_error("sweep: solver returned '" + std::string(to_string(sol.status)) +
                             "' for condensing vector " + desc);
  }
  row.prep_flops = rep.prep_flops;
  row.solve_flops = rep.solve_flops;
  row.total_flops = rep.prep_flops + rep.solve_flops;
  row.nnz_kkt = rep.nnz_kkt;
  row.factor_fill = rep.factor_fill;
  row.iterations = rep.iterations;
  row.objective = sol.objective;
  return row;
}

/// Runs every condensing level against the same blocked problem. Rows are
/// returned sorted by the number of kept states, fully sparse first. All
/// levels describe the same optimization problem, so the objectives must
/// agree; a relative spread beyond equivalence_tol aborts the sweep.
inline std::vector<SweepRow> run_sweep(const SweepConfig& cfg) {
  const SparseQp qp = assemble_sparse_qp(cfg.problem);
  for (const auto& pc : cfg.condensings)
    if (!pc.p.empty() && static_cast<int>(pc.kept.size()) != cfg.problem.horizon())
      throw std::invalid_argument("sweep: condensing vector horizon mismatch");

  std::vector<SweepRow> rows(cfg.condensings.size());
  if (cfg.jobs > 1) {
    std::vector<std::future<SweepRow>> futs;
    for (const auto& pc : cfg.condensings)
      futs.push_back(std::async(std::launch::async, [&qp, &cfg, pc] {
        return run_sweep_row(qp, cfg.blocking, pc, cfg.settings, cfg.bound_mode);
      }));
    for (size_t i = 0; i < futs.size(); ++i) rows[i] = futs[i].get();
  } else {
    for (size_t i = 0; i < cfg.condensings.size(); ++i)
      rows[i] = run_sweep_row(qp, cfg.blocking, cfg.condensings[i], cfg.settings, cfg.bound_mode);
  }

  std::stable_sort(rows.begin(), rows.end(),
                   [](const SweepRow& a, const SweepRow& b) { return a.n_kept > b.n_kept; });

  // equivalence gate: condensing must not move the optimum
  std::vector<double> objs;
  for (const auto& r : rows) objs.push_back(r.objective);
  std::sort(objs.begin(), objs.end());
  const double median = objs[objs.size() / 2];
  for (const auto& r : rows) {
    const double dev = std::abs(r.objective - median) / (1.0 + std::abs(median));
    if (dev > cfg.equivalence_tol) {
      std::string desc = "[";
      for (size_t i = 0; i < r.pc.p.size(); ++i) desc += (i ? "," : "") + std::to_string(r.pc.p[i]);
      desc += "]";
      throw std::runtime_error("sweep: objective equivalence violated at condensing vector " + desc +
                               ": objective " + format_double(r.objective) + " vs median " +
                               format_double(median) + " (relative deviation " + format_double(dev) +
                               ")");
    }
  }
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "N_x,prep_flops,solve_flops,total_flops,nnz_kkt,factor_fill,iterations,objective\n";
  for (const auto& r : rows) {
    out += format_u64(r.n_kept);
    out += ',';
    out += format_u64(r.prep_flops);
    out += ',';
    out += format_u64(r.solve_flops);
    out += ',';
    out += format_u64(r.total_flops);
    out += ',';
    out += format_u64(r.nnz_kkt);
    out += ',';
    out += format_u64(r.factor_fill);
    out += ',';
    out += format_u64(static_cast<std::uint64_t>(r.iterations));
    out += ',';
    out += format_double(r.objective);
    out += '\n';
  }
  return out;
}

}  // namespace mpcqp
