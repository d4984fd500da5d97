#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mpcqp/linalg.hpp"
#include "mpcqp/solver.hpp"

namespace mpcqp {

/// Global solve by active-set enumeration: every assignment of
/// {free, at lower, at upper} over the bounded inputs is tried, the resulting
/// equality-constrained QP is solved densely, and primal-feasible candidates
/// with sign-correct multipliers compete on objective value. Exact (up to
/// dense solve accuracy) for convex instances; exponential, so the finite
/// bound count is capped at 14. Candidates with a singular reduced KKT are
/// skipped, never fatal.
inline Solution solve_box_qp_bruteforce(const GeneralizedQp& g) {
  const int nu_t = g.n_inputs();
  const int nx_t = g.n_states();
  const int nz = nu_t + nx_t;

  Solution best;
  best.u.assign(nu_t, 0.0);
  best.x.assign(nx_t, 0.0);
  best.lam.assign(nx_t, 0.0);
  best.z_lower.assign(nu_t, 0.0);
  best.z_upper.assign(nu_t, 0.0);

  for (int i = 0; i < nu_t; ++i)
    if (g.u_lower[i] > g.u_upper[i]) {
      best.status = SolveStatus::InfeasibleBounds;
      return best;
    }

  struct BoundedVar {
    int idx;
    bool has_lo, has_hi;
  };
  std::vector<BoundedVar> bounded;
  int bound_count = 0;
  for (int i = 0; i < nu_t; ++i) {
    const bool lo = finite_bound(g.u_lower[i]);
    const bool hi = finite_bound(g.u_upper[i]);
    if (lo) ++bound_count;
    if (hi) ++bound_count;
    if (lo || hi) bounded.push_back({i, lo, hi});
  }
  if (bound_count > 14)
    throw std::invalid_argument("solve_box_qp_bruteforce: more than 14 bound constraints");

  // dense data: z = [u; x]
  Matrix h(nz, nz);
  {
    const Matrix r = bm_to_dense(g.R);
    for (int i = 0; i < nu_t; ++i)
      for (int j = 0; j < nu_t; ++j) h(i, j) = r(i, j);
    if (nx_t > 0) {
      const Matrix q = bm_to_dense(g.Q);
      const Matrix s = bm_to_dense(g.S);
      for (int i = 0; i < nx_t; ++i)
        for (int j = 0; j < nx_t; ++j) h(nu_t + i, nu_t + j) = q(i, j);
      for (int i = 0; i < nx_t; ++i)
        for (int j = 0; j < nu_t; ++j) {
          h(nu_t + i, j) = s(i, j);
          h(j, nu_t + i) = s(i, j);
        }
    }
  }
  Matrix geq(nx_t, nz);
  if (nx_t > 0) {
    const Matrix b = bm_to_dense(g.B);
    const Matrix a = bm_to_dense(g.A);
    for (int i = 0; i < nx_t; ++i) {
      for (int j = 0; j < nu_t; ++j) geq(i, j) = -b(i, j);
      for (int j = 0; j < nx_t; ++j) geq(i, nu_t + j) = a(i, j);
    }
  }
  Vector gvec(nz);
  for (int i = 0; i < nu_t; ++i) gvec[i] = g.r[i];
  for (int i = 0; i < nx_t; ++i) gvec[nu_t + i] = g.q[i];

  double scale = 1.0 + max_abs(h);
  for (double v : gvec) scale = std::max(scale, 1.0 + std::abs(v));
  const double feas_tol = 1e-8 * scale;
  const double mult_tol = 1e-8 * scale;

  const int nb = static_cast<int>(bounded.size());
  std::vector<int> state(nb, 0);  // 0 free, 1 at lower, 2 at upper
  bool found = false;
  double best_obj = 0.0;

  for (;;) {
    // admissible assignment? (one-sided vars cannot sit at the absent bound)
    bool admissible = true;
    for (int b = 0; b < nb && admissible; ++b) {
      if (state[b] == 1 && !bounded[b].has_lo) admissible = false;
      if (state[b] == 2 && !bounded[b].has_hi) admissible = false;
    }
    if (admissible) {
      std::vector<int> fixed(nu_t, 0);
      Vector zfix(nz, 0.0);
      for (int b = 0; b < nb; ++b) {
        if (state[b] == 0) continue;
        fixed[bounded[b].idx] = 1;
        zfix[bounded[b].idx] =
            state[b] == 1 ? g.u_lower[bounded[b].idx] : g.u_upper[bounded[b].idx];
      }
      std::vector<int> free_idx;
      for (int i = 0; i < nz; ++i)
        if (i >= nu_t || !fixed[i]) free_idx.push_back(i);
      const int nf = static_cast<int>(free_idx.size());

      Matrix kkt(nf + nx_t, nf + nx_t);
      Vector rhs(nf + nx_t, 0.0);
      for (int a = 0; a < nf; ++a) {
        for (int b2 = 0; b2 < nf; ++b2) kkt(a, b2) = h(free_idx[a], free_idx[b2]);
        double s = gvec[free_idx[a]];
        for (int i = 0; i < nz; ++i)
          if (i < nu_t && fixed[i]) s += h(free_idx[a], i) * zfix[i];
        rhs[a] = -s;
      }
      for (int e = 0; e < nx_t; ++e) {
        for (int a = 0; a < nf; ++a) {
          kkt(nf + e, a) = geq(e, free_idx[a]);
          kkt(a, nf + e) = geq(e, free_idx[a]);
        }
        double s = g.w[e];
        for (int i = 0; i < nu_t; ++i)
          if (fixed[i]) s -= geq(e, i) * zfix[i];
        rhs[nf + e] = s;
      }

      DenseLu lu(std::move(kkt));
      if (!lu.singular()) {
        const Vector zsol = lu.solve(rhs);
        Vector z = zfix;
        for (int a = 0; a < nf; ++a) z[free_idx[a]] = zsol[a];
        Vector lam(nx_t);
        for (int e = 0; e < nx_t; ++e) lam[e] = zsol[nf + e];

        // gradient of the Lagrangian without bound multipliers
        Vector grad = gvec;
        for (int i = 0; i < nz; ++i)
          for (int j = 0; j < nz; ++j) grad[i] += h(i, j) * z[j];
        for (int e = 0; e < nx_t; ++e)
          for (int i = 0; i < nz; ++i) grad[i] += geq(e, i) * lam[e];

        bool ok = true;
        Vector zl(nu_t, 0.0), zu(nu_t, 0.0);
        for (int b = 0; b < nb && ok; ++b) {
          const int i = bounded[b].idx;
          if (state[b] == 0) {
            if (bounded[b].has_lo && z[i] < g.u_lower[i] - feas_tol) ok = false;
            if (bounded[b].has_hi && z[i] > g.u_upper[i] + feas_tol) ok = false;
          } else if (state[b] == 1) {
            zl[i] = grad[i];
            if (zl[i] < -mult_tol) ok = false;
          } else {
            zu[i] = -grad[i];
            if (zu[i] < -mult_tol) ok = false;
          }
        }
        if (ok) {
          double obj = g.c0;
          for (int i = 0; i < nz; ++i) {
            double hz = 0.0;
            for (int j = 0; j < nz; ++j) hz += h(i, j) * z[j];
            obj += 0.5 * z[i] * hz + gvec[i] * z[i];
          }
          if (!found || obj < best_obj) {
            found = true;
            best_obj = obj;
            for (int i = 0; i < nu_t; ++i) best.u[i] = z[i];
            for (int i = 0; i < nx_t; ++i) best.x[i] = z[nu_t + i];
            best.lam = lam;
            best.z_lower = zl;
            best.z_upper = zu;
          }
        }
      }
    }

    // next assignment (odometer)
    int b = 0;
    for (; b < nb; ++b) {
      if (++state[b] <= 2) break;
      state[b] = 0;
    }
    if (b == nb) break;
  }

  if (!found) throw std::runtime_error("solve_box_qp_bruteforce: no optimal active set found");
  best.objective = best_obj;
  best.status = SolveStatus::Converged;
  return best;
}

}  // namespace mpcqp
