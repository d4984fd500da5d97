#pragma once

#include <stdexcept>
#include <utility>

#include "mpcqp/block_matrix.hpp"
#include "mpcqp/model.hpp"

namespace mpcqp {

/// The horizon-stacked box-constrained QP
///
///   min 1/2 [u;x]^T [[R, S^T],[S, Q]] [u;x] + r^T u + q^T x + c0
///   s.t. A x = B u + w,   u_lower <= u <= u_upper
///
/// over u = (u_0..u_{N-1}) and x = (x_1..x_N). A is unit block-bidiagonal
/// (identity diagonal, -A_k subdiagonal) and invertible by construction; S
/// carries the stage cross terms on its superdiagonal with the stage-0 term
/// folded into r. r, w and c0 depend on the initial state.
struct SparseQp {
  MpcProblem problem;  // source data; stage blocks are reused by transforms

  BlockMatrix R;  // N x N blocks, nu x nu, diagonal
  BlockMatrix S;  // N x N blocks, nx x nu, superdiagonal (stage k couples u_k with x_k)
  BlockMatrix Q;  // N x N blocks, nx x nx, diagonal (stages 1..N)
  BlockMatrix A;  // N x N blocks, nx x nx
  BlockMatrix B;  // N x N blocks, nx x nu, diagonal
  Vector r;       // N*nu
  Vector q;       // N*nx
  Vector w;       // N*nx
  Vector u_lower;
  Vector u_upper;
  double c0 = 0.0;

  int horizon() const { return problem.horizon(); }
  int nx() const { return problem.nx(); }
  int nu() const { return problem.nu(); }
};

/// Forward recursion of the dynamics; returns the stacked (x_1..x_N).
inline Vector rollout(const LtvModel& model, const Vector& x0, const Vector& u_stacked) {
  const int n_stages = model.horizon();
  const int nx = model.nx();
  const int nu = model.nu();
  if (static_cast<int>(u_stacked.size()) != n_stages * nu)
    throw std::invalid_argument("rollout: input sequence has wrong length");
  if (static_cast<int>(x0.size()) != nx) throw std::invalid_argument("rollout: x0 has wrong length");

  Vector traj(static_cast<size_t>(n_stages) * nx);
  Vector x = x0;
  for (int k = 0; k < n_stages; ++k) {
    Vector next(nx, 0.0);
    matvec_accum(model.A[k], x.data(), next.data(), nullptr);
    for (int i = 0; i < nx; ++i) next[i] += model.w[k][i];
    matvec_accum(model.B[k], u_stacked.data() + static_cast<size_t>(k) * nu, next.data(), nullptr);
    for (int i = 0; i < nx; ++i) traj[static_cast<size_t>(k) * nx + i] = next[i];
    x = std::move(next);
  }
  return traj;
}

inline SparseQp assemble_sparse_qp(const MpcProblem& problem) {
  const ValidationReport rep = validate(problem);
  if (!rep.ok()) throw std::invalid_argument("assemble_sparse_qp: " + rep.joined());

  const int n_stages = problem.horizon();
  const int nx = problem.nx();
  const int nu = problem.nu();

  SparseQp qp;
  qp.problem = problem;
  qp.R = BlockMatrix::uniform(n_stages, n_stages, nu, nu);
  qp.S = BlockMatrix::uniform(n_stages, n_stages, nx, nu);
  qp.Q = BlockMatrix::uniform(n_stages, n_stages, nx, nx);
  qp.A = BlockMatrix::uniform(n_stages, n_stages, nx, nx);
  qp.B = BlockMatrix::uniform(n_stages, n_stages, nx, nu);

  for (int k = 0; k < n_stages; ++k) {
    if (!problem.costs.R[k].is_zero()) qp.R.set(k, k, problem.costs.R[k]);
    if (!problem.costs.Q[k + 1].is_zero()) qp.Q.set(k, k, problem.costs.Q[k + 1]);
    qp.A.set(k, k, Matrix::Identity(nx));
    if (k >= 1 && !problem.model.A[k].is_zero()) qp.A.set(k, k - 1, negate(problem.model.A[k]));
    if (!problem.model.B[k].is_zero()) qp.B.set(k, k, problem.model.B[k]);
  }
  for (int k = 1; k < n_stages; ++k)
    if (!problem.costs.S[k].is_zero()) qp.S.set(k - 1, k, problem.costs.S[k]);

  qp.r.assign(static_cast<size_t>(n_stages) * nu, 0.0);
  qp.q.assign(static_cast<size_t>(n_stages) * nx, 0.0);
  qp.w.assign(static_cast<size_t>(n_stages) * nx, 0.0);
  qp.u_lower.assign(static_cast<size_t>(n_stages) * nu, 0.0);
  qp.u_upper.assign(static_cast<size_t>(n_stages) * nu, 0.0);

  // r_0 = S_0^T x0 + r_0 (stage-0 cross term folded in)
  tmatvec_accum(problem.costs.S[0], problem.x0.data(), qp.r.data(), nullptr);
  for (int i = 0; i < nu; ++i) qp.r[i] += problem.costs.r[0][i];
  for (int k = 1; k < n_stages; ++k)
    for (int i = 0; i < nu; ++i) qp.r[static_cast<size_t>(k) * nu + i] = problem.costs.r[k][i];

  for (int k = 0; k < n_stages; ++k)
    for (int i = 0; i < nx; ++i) qp.q[static_cast<size_t>(k) * nx + i] = problem.costs.q[k + 1][i];

  // w_0 = A_0 x0 + w_0
  matvec_accum(problem.model.A[0], problem.x0.data(), qp.w.data(), nullptr);
  for (int k = 0; k < n_stages; ++k)
    for (int i = 0; i < nx; ++i) qp.w[static_cast<size_t>(k) * nx + i] += problem.model.w[k][i];

  for (int k = 0; k < n_stages; ++k)
    for (int i = 0; i < nu; ++i) {
      qp.u_lower[static_cast<size_t>(k) * nu + i] = problem.u_lower[k][i];
      qp.u_upper[static_cast<size_t>(k) * nu + i] = problem.u_upper[k][i];
    }

  // c0 = 1/2 x0^T Q_0 x0 + q_0^T x0
  Vector q0x(nx, 0.0);
  matvec_accum(problem.costs.Q[0], problem.x0.data(), q0x.data(), nullptr);
  qp.c0 = 0.5 * dot(problem.x0, q0x, nullptr) + dot(problem.costs.q[0], problem.x0, nullptr);

  return qp;
}

/// 1/2 [u;x]^T H [u;x] + r^T u + q^T x + c0, constant term included.
inline double eval_objective(const SparseQp& qp, const Vector& u, const Vector& x,
                             FlopCount* fc = nullptr) {
  if (static_cast<int>(u.size()) != qp.R.cols() || static_cast<int>(x.size()) != qp.Q.cols())
    throw std::invalid_argument("eval_objective: size mismatch");
  const Vector ru = bm_matvec(qp.R, u, fc);
  const Vector qx = bm_matvec(qp.Q, x, fc);
  const Vector su = bm_matvec(qp.S, u, fc);
  double obj = 0.5 * (dot(u, ru, fc) + dot(x, qx, fc)) + dot(x, su, fc);
  obj += dot(qp.r, u, fc) + dot(qp.q, x, fc) + qp.c0;
  return obj;
}

}  // namespace mpcqp
