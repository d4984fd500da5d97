#pragma once

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mpcqp/kkt.hpp"
#include "mpcqp/linalg.hpp"
#include "mpcqp/profile_ldlt.hpp"
#include "mpcqp/transform.hpp"

namespace mpcqp {

/// Bounds with magnitude at or beyond this sentinel are treated as absent and
/// excluded from complementarity.
inline constexpr double kInfinityBound = 1e20;
inline constexpr double kInfinityThreshold = 1e19;

inline bool finite_bound(double v) { return std::abs(v) < kInfinityThreshold; }

struct SolverSettings {
  double kkt_tol = 1e-8;     // stationarity / primal residual tolerance
  double comp_tol = 1e-8;    // complementarity tolerance
  int max_iters = 50;
  double reg = 1e-10;        // static regularization of the multiplier diagonal
  const char* flop_model = "unit";  // add=mul=div=sqrt=1, compare=copy=0
};

enum class SolveStatus { Converged, MaxIters, InfeasibleBounds };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIters: return "max_iters";
    case SolveStatus::InfeasibleBounds: return "infeasible_bounds";
  }
  return "unknown";
}

struct Solution {
  Vector u;        // blocked inputs
  Vector x;        // kept states
  Vector lam;      // equality multipliers
  Vector z_lower;  // lower-bound multipliers (zero where the bound is absent)
  Vector z_upper;
  double objective = 0.0;  // includes the constant term
  SolveStatus status = SolveStatus::MaxIters;
};

struct SolveReport {
  int iterations = 0;
  std::uint64_t prep_flops = 0;   // generalized QP build (preparation phase)
  std::uint64_t solve_flops = 0;  // interior-point work (feedback phase)
  std::uint64_t nnz_kkt = 0;
  std::uint64_t factor_fill = 0;
  int pivots_floored = 0;
  int refinement_steps = 0;
  std::vector<double> mu_trace;  // barrier value at each accepted iterate
};

struct KktResiduals {
  double stationarity = 0.0;
  double primal_eq = 0.0;
  double primal_bound = 0.0;
  double complementarity = 0.0;
};

namespace detail {

struct ResidualVecs {
  Vector ru;  // R u + S^T x + r - B^T lam - zl + zu
  Vector rx;  // S u + Q x + q + A^T lam
  Vector rg;  // A x - B u - w
};

inline ResidualVecs residual_vectors(const GeneralizedQp& g, const Vector& u, const Vector& x,
                                     const Vector& lam, const Vector& zl, const Vector& zu,
                                     FlopCount* fc) {
  ResidualVecs rv;
  rv.ru = bm_matvec(g.R, u, fc);
  if (g.cond.count() > 0) {
    Vector stx = bm_tmatvec(g.S, x, fc);
    for (size_t i = 0; i < rv.ru.size(); ++i) rv.ru[i] += stx[i];
    count_adds(fc, rv.ru.size());
    Vector btl = bm_tmatvec(g.B, lam, fc);
    for (size_t i = 0; i < rv.ru.size(); ++i) rv.ru[i] -= btl[i];
    count_adds(fc, rv.ru.size());
  }
  for (size_t i = 0; i < rv.ru.size(); ++i) rv.ru[i] += g.r[i] - zl[i] + zu[i];
  count_adds(fc, 3 * rv.ru.size());

  if (g.cond.count() > 0) {
    rv.rx = bm_matvec(g.S, u, fc);
    Vector qx = bm_matvec(g.Q, x, fc);
    Vector atl = bm_tmatvec(g.A, lam, fc);
    for (size_t i = 0; i < rv.rx.size(); ++i) rv.rx[i] += qx[i] + g.q[i] + atl[i];
    count_adds(fc, 3 * rv.rx.size());

    rv.rg = bm_matvec(g.A, x, fc);
    Vector bu = bm_matvec(g.B, u, fc);
    for (size_t i = 0; i < rv.rg.size(); ++i) rv.rg[i] -= bu[i] + g.w[i];
    count_adds(fc, 2 * rv.rg.size());
  }
  return rv;
}

}  // namespace detail

/// Infinity norms of the four KKT residual groups of the generalized QP.
/// This is the single convergence authority: the solver terminates on exactly
/// these numbers.
inline KktResiduals kkt_residuals(const GeneralizedQp& g, const Solution& sol,
                                  FlopCount* fc = nullptr) {
  KktResiduals res;
  const detail::ResidualVecs rv =
      detail::residual_vectors(g, sol.u, sol.x, sol.lam, sol.z_lower, sol.z_upper, fc);
  res.stationarity = std::max(norm_inf(rv.ru), norm_inf(rv.rx));
  res.primal_eq = norm_inf(rv.rg);
  for (size_t i = 0; i < sol.u.size(); ++i) {
    if (finite_bound(g.u_lower[i])) {
      res.primal_bound = std::max(res.primal_bound, g.u_lower[i] - sol.u[i]);
      res.complementarity =
          std::max(res.complementarity, std::abs((sol.u[i] - g.u_lower[i]) * sol.z_lower[i]));
    }
    if (finite_bound(g.u_upper[i])) {
      res.primal_bound = std::max(res.primal_bound, sol.u[i] - g.u_upper[i]);
      res.complementarity =
          std::max(res.complementarity, std::abs((g.u_upper[i] - sol.u[i]) * sol.z_upper[i]));
    }
  }
  res.primal_bound = std::max(res.primal_bound, 0.0);
  return res;
}

/// 1/2 [u;x]^T H [u;x] + r^T u + q^T x + c0 for the generalized problem.
inline double eval_objective_gqp(const GeneralizedQp& g, const Vector& u, const Vector& x,
                                 FlopCount* fc = nullptr) {
  const Vector ru = bm_matvec(g.R, u, fc);
  double obj = 0.5 * dot(u, ru, fc) + dot(g.r, u, fc) + g.c0;
  if (g.cond.count() > 0) {
    const Vector qx = bm_matvec(g.Q, x, fc);
    const Vector su = bm_matvec(g.S, u, fc);
    obj += 0.5 * dot(x, qx, fc) + dot(x, su, fc) + dot(g.q, x, fc);
  }
  return obj;
}

namespace detail {

inline void check_joint_cost_psd(const GeneralizedQp& g) {
  const double scale = 1.0 + std::max(bm_max_abs(g.R), bm_max_abs(g.Q));
  for (int w = 0; w < g.win.count(); ++w)
    if (g.R.has(w, w)) {
      const Matrix& m = g.R.at(w, w);
      for (int i = 0; i < m.rows(); ++i)
        if (m(i, i) < -1e-8 * scale)
          throw std::invalid_argument("solve_box_qp: cost matrix has a negative diagonal");
    }
  const int dim = g.n_inputs() + g.n_states();
  if (dim > 160) return;  // full spectral check only at small sizes
  Matrix joint(dim, dim);
  auto put = [&](const BlockMatrix& m, int r0, int c0) {
    const Matrix d = bm_to_dense(m);
    for (int i = 0; i < d.rows(); ++i)
      for (int j = 0; j < d.cols(); ++j) joint(r0 + i, c0 + j) = d(i, j);
  };
  put(g.R, 0, 0);
  if (g.cond.count() > 0) {
    put(g.Q, g.n_inputs(), g.n_inputs());
    const Matrix s = bm_to_dense(g.S);
    for (int i = 0; i < s.rows(); ++i)
      for (int j = 0; j < s.cols(); ++j) {
        joint(g.n_inputs() + i, j) = s(i, j);
        joint(j, g.n_inputs() + i) = s(i, j);
      }
  }
  const Vector ev = symmetric_eigenvalues(joint);
  if (!ev.empty() && ev.front() < -1e-7 * (1.0 + std::abs(ev.back())))
    throw std::invalid_argument("solve_box_qp: joint cost matrix is not positive semidefinite");
}

}  // namespace detail

/// Primal-dual interior-point (Mehrotra predictor-corrector) for the
/// generalized box-constrained QP. The Newton systems are solved by an
/// envelope LDL^T over the stage-interleaved ordering, every arithmetic
/// operation is tallied, and the barrier parameter is kept non-increasing
/// across accepted iterates by backtracking the step length.
inline std::pair<Solution, SolveReport> solve_box_qp(const GeneralizedQp& g,
                                                     const SolverSettings& settings = {}) {
  const int nu_t = g.n_inputs();
  const int nx_t = g.n_states();
  const int n_kept = g.cond.count();

  Solution sol;
  sol.u.assign(nu_t, 0.0);
  sol.x.assign(nx_t, 0.0);
  sol.lam.assign(nx_t, 0.0);
  sol.z_lower.assign(nu_t, 0.0);
  sol.z_upper.assign(nu_t, 0.0);

  SolveReport rep;
  rep.prep_flops = g.prep_flops.total();

  for (int i = 0; i < nu_t; ++i)
    if (g.u_lower[i] > g.u_upper[i]) {
      sol.status = SolveStatus::InfeasibleBounds;
      return {sol, rep};
    }
  for (int i = 0; i < nu_t; ++i)
    if (finite_bound(g.u_lower[i]) && finite_bound(g.u_upper[i]) && g.u_lower[i] == g.u_upper[i])
      throw std::invalid_argument("solve_box_qp: equal lower and upper bound is not supported");
  detail::check_joint_cost_psd(g);

  std::vector<int> lb_idx, ub_idx;
  for (int i = 0; i < nu_t; ++i) {
    if (finite_bound(g.u_lower[i])) lb_idx.push_back(i);
    if (finite_bound(g.u_upper[i])) ub_idx.push_back(i);
  }
  const int m_bnd = static_cast<int>(lb_idx.size() + ub_idx.size());

  FlopCount fc;
  KktAssembler assembler(g);
  rep.nnz_kkt = kkt_pattern(g).nnz();
  rep.factor_fill = assembler.fill();
  const KktLayout& lay = assembler.layout();

  // interior start: clamp the warm start strictly inside the bounds
  for (int i = 0; i < nu_t; ++i) {
    double v = g.u_warm[i];
    const bool lf = finite_bound(g.u_lower[i]), uf = finite_bound(g.u_upper[i]);
    if (lf && uf) {
      const double margin = 0.1 * (g.u_upper[i] - g.u_lower[i]);
      v = std::clamp(v, g.u_lower[i] + margin, g.u_upper[i] - margin);
    } else if (lf) {
      v = std::max(v, g.u_lower[i] + 1.0);
    } else if (uf) {
      v = std::min(v, g.u_upper[i] - 1.0);
    }
    sol.u[i] = v;
  }
  // state start from the prediction equality (unit lower block-bidiagonal)
  if (n_kept > 0) {
    Vector rhs = bm_matvec(g.B, sol.u, &fc);
    for (int i = 0; i < nx_t; ++i) rhs[i] += g.w[i];
    count_adds(&fc, nx_t);
    for (int l = 0; l < n_kept; ++l) {
      if (l >= 1 && g.A.has(l, l - 1)) {
        Vector t(g.nx, 0.0);
        matvec_accum(g.A.at(l, l - 1), rhs.data() + static_cast<size_t>(l - 1) * g.nx, t.data(), &fc);
        for (int i = 0; i < g.nx; ++i) rhs[static_cast<size_t>(l) * g.nx + i] -= t[i];
        count_adds(&fc, g.nx);
      }
    }
    sol.x = rhs;
  }
  for (int i : lb_idx) sol.z_lower[i] = 1.0;
  for (int i : ub_idx) sol.z_upper[i] = 1.0;

  // slacks are implicit; the floor guards divisions when a slack underflows
  // to zero in the last ulps near a bound
  constexpr double kSlackFloor = 1e-30;
  auto slack_lo = [&](int i) { return std::max(sol.u[i] - g.u_lower[i], kSlackFloor); };
  auto slack_hi = [&](int i) { return std::max(g.u_upper[i] - sol.u[i], kSlackFloor); };
  auto barrier_mu = [&]() {
    if (m_bnd == 0) return 0.0;
    double s = 0.0;
    for (int i : lb_idx) s += slack_lo(i) * sol.z_lower[i];
    for (int i : ub_idx) s += slack_hi(i) * sol.z_upper[i];
    count_fma(&fc, static_cast<std::uint64_t>(m_bnd));
    count_divs(&fc, 1);
    return s / m_bnd;
  };

  Vector rhs(lay.dim), delta(lay.dim);
  Vector du(nu_t), dx(nx_t), dl(nx_t);
  Vector du_aff(nu_t), dzl_aff(nu_t, 0.0), dzu_aff(nu_t, 0.0);
  Vector zl_sl(nu_t, 0.0), zu_su(nu_t, 0.0);

  auto scatter_rhs = [&](const Vector& vu, const Vector& vx, const Vector& vg) {
    for (int w = 0; w < g.win.count(); ++w)
      for (int i = 0; i < g.nu; ++i) rhs[lay.u_pos[w] + i] = vu[static_cast<size_t>(w) * g.nu + i];
    for (int l = 0; l < n_kept; ++l)
      for (int i = 0; i < g.nx; ++i) {
        rhs[lay.x_pos[l] + i] = vx[static_cast<size_t>(l) * g.nx + i];
        rhs[lay.l_pos[l] + i] = vg[static_cast<size_t>(l) * g.nx + i];
      }
  };
  auto gather_delta = [&](Vector& vu, Vector& vx, Vector& vl) {
    for (int w = 0; w < g.win.count(); ++w)
      for (int i = 0; i < g.nu; ++i) vu[static_cast<size_t>(w) * g.nu + i] = delta[lay.u_pos[w] + i];
    for (int l = 0; l < n_kept; ++l)
      for (int i = 0; i < g.nx; ++i) {
        vx[static_cast<size_t>(l) * g.nx + i] = delta[lay.x_pos[l] + i];
        vl[static_cast<size_t>(l) * g.nx + i] = delta[lay.l_pos[l] + i];
      }
  };

  Vector d_diag(nu_t, 0.0);
  // solve the augmented system for the rhs currently scattered into `rhs`,
  // with iterative refinement against the unregularized system
  auto solve_kkt = [&](Vector& out_u, Vector& out_x, Vector& out_l) {
    Vector ru0(nu_t), rx0(nx_t), rg0(nx_t);
    for (int w = 0; w < g.win.count(); ++w)
      for (int i = 0; i < g.nu; ++i) ru0[static_cast<size_t>(w) * g.nu + i] = rhs[lay.u_pos[w] + i];
    for (int l = 0; l < n_kept; ++l)
      for (int i = 0; i < g.nx; ++i) {
        rx0[static_cast<size_t>(l) * g.nx + i] = rhs[lay.x_pos[l] + i];
        rg0[static_cast<size_t>(l) * g.nx + i] = rhs[lay.l_pos[l] + i];
      }
    const double rhs_scale = 1.0 + norm_inf(rhs);
    delta = rhs;
    profile_ldlt_solve(assembler.profile(), delta, &fc);
    gather_delta(out_u, out_x, out_l);
    for (int pass = 0; pass < 2; ++pass) {
      // residual of the D-augmented, unregularized system
      Vector res_u = bm_matvec(g.R, out_u, &fc);
      for (int i = 0; i < nu_t; ++i) res_u[i] += d_diag[i] * out_u[i];
      count_fma(&fc, nu_t);
      Vector res_x(nx_t, 0.0), res_g(nx_t, 0.0);
      if (n_kept > 0) {
        Vector stx = bm_tmatvec(g.S, out_x, &fc);
        Vector btl = bm_tmatvec(g.B, out_l, &fc);
        for (int i = 0; i < nu_t; ++i) res_u[i] += stx[i] - btl[i];
        count_adds(&fc, 2 * static_cast<std::uint64_t>(nu_t));
        res_x = bm_matvec(g.S, out_u, &fc);
        Vector qx = bm_matvec(g.Q, out_x, &fc);
        Vector atl = bm_tmatvec(g.A, out_l, &fc);
        for (int i = 0; i < nx_t; ++i) res_x[i] += qx[i] + atl[i];
        count_adds(&fc, 2 * static_cast<std::uint64_t>(nx_t));
        res_g = bm_matvec(g.A, out_x, &fc);
        Vector bu = bm_matvec(g.B, out_u, &fc);
        for (int i = 0; i < nx_t; ++i) res_g[i] -= bu[i];
        count_adds(&fc, nx_t);
      }
      for (int i = 0; i < nu_t; ++i) res_u[i] = ru0[i] - res_u[i];
      for (int i = 0; i < nx_t; ++i) {
        res_x[i] = rx0[i] - res_x[i];
        res_g[i] = rg0[i] - res_g[i];
      }
      count_adds(&fc, static_cast<std::uint64_t>(nu_t) + 2 * nx_t);
      const double rn = std::max({norm_inf(res_u), norm_inf(res_x), norm_inf(res_g)});
      if (rn <= 1e-10 * rhs_scale) break;
      scatter_rhs(res_u, res_x, res_g);
      Vector save = delta;
      delta = rhs;
      profile_ldlt_solve(assembler.profile(), delta, &fc);
      for (int i = 0; i < lay.dim; ++i) delta[i] += save[i];
      count_adds(&fc, lay.dim);
      gather_delta(out_u, out_x, out_l);
      ++rep.refinement_steps;
    }
  };

  double mu = barrier_mu();
  const double tau = 0.995;  // fraction-to-boundary

  int iter = 0;
  for (;; ++iter) {
    const detail::ResidualVecs rv =
        detail::residual_vectors(g, sol.u, sol.x, sol.lam, sol.z_lower, sol.z_upper, &fc);
    KktResiduals res;
    res.stationarity = std::max(norm_inf(rv.ru), n_kept ? norm_inf(rv.rx) : 0.0);
    res.primal_eq = n_kept ? norm_inf(rv.rg) : 0.0;
    // raw slacks here: the convergence check must mirror kkt_residuals
    double comp = 0.0, bviol = 0.0;
    for (int i : lb_idx) {
      comp = std::max(comp, std::abs((sol.u[i] - g.u_lower[i]) * sol.z_lower[i]));
      bviol = std::max(bviol, g.u_lower[i] - sol.u[i]);
    }
    for (int i : ub_idx) {
      comp = std::max(comp, std::abs((g.u_upper[i] - sol.u[i]) * sol.z_upper[i]));
      bviol = std::max(bviol, sol.u[i] - g.u_upper[i]);
    }
    bviol = std::max(bviol, 0.0);
    count_muls(&fc, static_cast<std::uint64_t>(m_bnd));
    rep.mu_trace.push_back(mu);
#ifdef MPCQP_DEBUG_ITERS
    std::fprintf(stderr, "it=%d stat=%.3e eq=%.3e bnd=%.3e comp=%.3e mu=%.3e\n", iter,
                 res.stationarity, res.primal_eq, bviol, comp, mu);
#endif

    const bool residuals_finite = std::isfinite(res.stationarity) && std::isfinite(res.primal_eq) &&
                                  std::isfinite(comp) && std::isfinite(bviol);
    if (residuals_finite && res.stationarity <= settings.kkt_tol &&
        res.primal_eq <= settings.kkt_tol && bviol <= settings.kkt_tol &&
        comp <= settings.comp_tol) {
      sol.status = SolveStatus::Converged;
      break;
    }
    if (iter >= settings.max_iters || !residuals_finite) {
      sol.status = SolveStatus::MaxIters;
      break;
    }

    // barrier diagonal
    std::fill(d_diag.begin(), d_diag.end(), 0.0);
    for (int i : lb_idx) {
      zl_sl[i] = sol.z_lower[i] / slack_lo(i);
      d_diag[i] += zl_sl[i];
    }
    for (int i : ub_idx) {
      zu_su[i] = sol.z_upper[i] / slack_hi(i);
      d_diag[i] += zu_su[i];
    }
    count_divs(&fc, static_cast<std::uint64_t>(m_bnd));
    count_adds(&fc, static_cast<std::uint64_t>(m_bnd));
    assembler.fill_values(d_diag, settings.reg, &fc);
    const LdltInfo finfo = profile_ldlt_factor(assembler.profile(), lay.dual, &fc);
    rep.pivots_floored += finfo.pivots_floored;

    // affine predictor; the z terms cancel from the stationarity residual
    Vector ruh = rv.ru;
    for (int i = 0; i < nu_t; ++i) ruh[i] += sol.z_lower[i] - sol.z_upper[i];
    count_adds(&fc, 2 * static_cast<std::uint64_t>(nu_t));
    {
      Vector nu_rhs(nu_t), nx_rhs(nx_t, 0.0), ng_rhs(nx_t, 0.0);
      for (int i = 0; i < nu_t; ++i) nu_rhs[i] = -ruh[i];
      for (int i = 0; i < nx_t; ++i) {
        nx_rhs[i] = -rv.rx[i];
        ng_rhs[i] = -rv.rg[i];
      }
      scatter_rhs(nu_rhs, nx_rhs, ng_rhs);
    }
    solve_kkt(du_aff, dx, dl);
    double alpha_aff = 1.0;
    for (int i : lb_idx) {
      dzl_aff[i] = -sol.z_lower[i] - zl_sl[i] * du_aff[i];
      if (du_aff[i] < 0.0) alpha_aff = std::min(alpha_aff, -slack_lo(i) / du_aff[i]);
      if (dzl_aff[i] < 0.0) alpha_aff = std::min(alpha_aff, -sol.z_lower[i] / dzl_aff[i]);
    }
    for (int i : ub_idx) {
      dzu_aff[i] = -sol.z_upper[i] + zu_su[i] * du_aff[i];
      if (du_aff[i] > 0.0) alpha_aff = std::min(alpha_aff, slack_hi(i) / du_aff[i]);
      if (dzu_aff[i] < 0.0) alpha_aff = std::min(alpha_aff, -sol.z_upper[i] / dzu_aff[i]);
    }
    count_fma(&fc, static_cast<std::uint64_t>(m_bnd));

    double sigma = 0.0;
    if (m_bnd > 0) {
      double mu_aff = 0.0;
      for (int i : lb_idx)
        mu_aff += (slack_lo(i) + alpha_aff * du_aff[i]) * (sol.z_lower[i] + alpha_aff * dzl_aff[i]);
      for (int i : ub_idx)
        mu_aff += (slack_hi(i) - alpha_aff * du_aff[i]) * (sol.z_upper[i] + alpha_aff * dzu_aff[i]);
      mu_aff /= m_bnd;
      count_fma(&fc, 5 * static_cast<std::uint64_t>(m_bnd));
      count_divs(&fc, 1);
      const double ratio = mu > 0.0 ? mu_aff / mu : 0.0;
      sigma = std::clamp(ratio * ratio * ratio, 0.0, 1.0);
      count_muls(&fc, 2);
      count_divs(&fc, 1);
    }
    // target complementarity; floored near the tolerance so the barrier never
    // collapses orders of magnitude below what the factorization can resolve
    const double mu_target = std::max(sigma * mu, std::min(mu, 0.05 * settings.comp_tol));
    count_muls(&fc, 2);

    // centered step: the affine direction only sets the centering parameter
    // (second-order corrector products are omitted; they can amplify affine
    // overshoot along directions with no opposing bound)
    {
      Vector nu_rhs(nu_t), nx_rhs(nx_t, 0.0), ng_rhs(nx_t, 0.0);
      for (int i = 0; i < nu_t; ++i) nu_rhs[i] = -ruh[i];
      for (int i : lb_idx) nu_rhs[i] += mu_target / slack_lo(i);
      for (int i : ub_idx) nu_rhs[i] -= mu_target / slack_hi(i);
      count_adds(&fc, static_cast<std::uint64_t>(m_bnd));
      count_divs(&fc, static_cast<std::uint64_t>(m_bnd));
      for (int i = 0; i < nx_t; ++i) {
        nx_rhs[i] = -rv.rx[i];
        ng_rhs[i] = -rv.rg[i];
      }
      scatter_rhs(nu_rhs, nx_rhs, ng_rhs);
    }
    solve_kkt(du, dx, dl);

    Vector dzl(nu_t, 0.0), dzu(nu_t, 0.0);
    double alpha_p_max = 1.0, alpha_d_max = 1.0;
    for (int i : lb_idx) {
      dzl[i] = (mu_target - slack_lo(i) * sol.z_lower[i]) / slack_lo(i) - zl_sl[i] * du[i];
      if (du[i] < 0.0) alpha_p_max = std::min(alpha_p_max, -slack_lo(i) / du[i]);
      if (dzl[i] < 0.0) alpha_d_max = std::min(alpha_d_max, -sol.z_lower[i] / dzl[i]);
    }
    for (int i : ub_idx) {
      dzu[i] = (mu_target - slack_hi(i) * sol.z_upper[i]) / slack_hi(i) + zu_su[i] * du[i];
      if (du[i] > 0.0) alpha_p_max = std::min(alpha_p_max, slack_hi(i) / du[i]);
      if (dzu[i] < 0.0) alpha_d_max = std::min(alpha_d_max, -sol.z_upper[i] / dzu[i]);
    }
    count_fma(&fc, 5 * static_cast<std::uint64_t>(m_bnd));
    count_divs(&fc, 2 * static_cast<std::uint64_t>(m_bnd));

    double alpha_p = std::min(1.0, tau * alpha_p_max);
    double alpha_d = std::min(1.0, tau * alpha_d_max);
    count_muls(&fc, 2);

    if (m_bnd > 0) {
      // keep the barrier parameter non-increasing
      auto mu_at = [&](double ap, double ad) {
        double s = 0.0;
        for (int i : lb_idx) s += (slack_lo(i) + ap * du[i]) * (sol.z_lower[i] + ad * dzl[i]);
        for (int i : ub_idx) s += (slack_hi(i) - ap * du[i]) * (sol.z_upper[i] + ad * dzu[i]);
        count_fma(&fc, 5 * static_cast<std::uint64_t>(m_bnd));
        count_divs(&fc, 1);
        return s / m_bnd;
      };
      for (int tries = 0; tries < 40 && mu_at(alpha_p, alpha_d) > mu; ++tries) {
        alpha_p *= 0.7;
        alpha_d *= 0.7;
        count_muls(&fc, 2);
      }
    }

    axpy(sol.u, alpha_p, du, &fc);
    if (n_kept > 0) {
      axpy(sol.x, alpha_p, dx, &fc);
      axpy(sol.lam, alpha_d, dl, &fc);
    }
    for (int i : lb_idx) sol.z_lower[i] += alpha_d * dzl[i];
    for (int i : ub_idx) sol.z_upper[i] += alpha_d * dzu[i];
    count_fma(&fc, static_cast<std::uint64_t>(m_bnd));
    mu = barrier_mu();
  }

  rep.iterations = iter;
  sol.objective = eval_objective_gqp(g, sol.u, sol.x, &fc);
  rep.solve_flops = fc.total();
  return {sol, rep};
}

}  // namespace mpcqp
