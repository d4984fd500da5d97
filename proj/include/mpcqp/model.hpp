#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mpcqp/linalg.hpp"
#include "mpcqp/matrix.hpp"

namespace mpcqp {

/// Discrete-time LTV prediction model x_{k+1} = A_k x_k + B_k u_k + w_k,
/// k = 0..N-1. All stages share the state/input dimensions.
struct LtvModel {
  std::vector<Matrix> A;  // N matrices, nx by nx
  std::vector<Matrix> B;  // N matrices, nx by nu
  std::vector<Vector> w;  // N vectors, nx

  int horizon() const { return static_cast<int>(A.size()); }
  int nx() const { return A.empty() ? 0 : A[0].rows(); }
  int nu() const { return B.empty() ? 0 : B[0].cols(); }
};

/// Stage cost data. Q and q carry N+1 entries (index N is the terminal
/// weight); R, S, r carry N. S_k couples input k with state k; Q_0 and q_0
/// enter only through the constant cost term.
struct StageCosts {
  std::vector<Matrix> Q;
  std::vector<Matrix> R;
  std::vector<Matrix> S;  // nx by nu
  std::vector<Vector> q;
  std::vector<Vector> r;
};

/// Box-constrained LTV MPC regulator problem over a finite horizon.
struct MpcProblem {
  LtvModel model;
  StageCosts costs;
  std::vector<Vector> u_lower;  // N stage bounds, nu each
  std::vector<Vector> u_upper;
  Vector x0;

  int horizon() const { return model.horizon(); }
  int nx() const { return model.nx(); }
  int nu() const { return model.nu(); }
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }

  std::string joined() const {
    std::string s;
    for (const auto& v : violations) {
      if (!s.empty()) s += "; ";
      s += v;
    }
    return s;
  }
};

/// Exact zero-order-hold discretization via the augmented matrix exponential
/// exp([[Ac, Bc],[0, 0]] Ts) = [[Ad, Bd],[0, I]].
inline std::pair<Matrix, Matrix> discretize_zoh(const Matrix& a_c, const Matrix& b_c, double ts) {
  const int nx = a_c.rows();
  const int nu = b_c.cols();
  if (a_c.cols() != nx || b_c.rows() != nx)
    throw std::invalid_argument("discretize_zoh: dimension mismatch");
  if (!(ts > 0.0)) throw std::invalid_argument("discretize_zoh: sampling time must be positive");
  if (!all_finite(a_c) || !all_finite(b_c) || !std::isfinite(ts))
    throw std::invalid_argument("discretize_zoh: non-finite input");

  Matrix aug(nx + nu, nx + nu);
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < nx; ++j) aug(i, j) = a_c(i, j) * ts;
    for (int j = 0; j < nu; ++j) aug(i, nx + j) = b_c(i, j) * ts;
  }
  const Matrix e = expm(aug);
  Matrix a_d(nx, nx), b_d(nx, nu);
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < nx; ++j) a_d(i, j) = e(i, j);
    for (int j = 0; j < nu; ++j) b_d(i, j) = e(i, nx + j);
  }
  return {std::move(a_d), std::move(b_d)};
}

namespace detail {

inline bool is_symmetric(const Matrix& m, double tol) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > tol) return false;
  return true;
}

/// min eigenvalue > 1e-10 (1 + max eigenvalue)
inline bool is_positive_definite(const Matrix& m) {
  const Vector ev = symmetric_eigenvalues(m);
  if (ev.empty()) return false;
  return ev.front() > 1e-10 * (1.0 + std::abs(ev.back()));
}

/// min eigenvalue >= -1e-8
inline bool is_positive_semidefinite(const Matrix& m) {
  const Vector ev = symmetric_eigenvalues(m);
  if (ev.empty()) return true;
  return ev.front() >= -1e-8;
}

}  // namespace detail

/// Checks the problem against the regulator assumptions: consistent
/// dimensions, R_k positive definite, cost Schur complements and terminal
/// weight positive semidefinite, bounds not crossed. Violations are reported
/// as data with the offending stage named; nothing throws.
inline ValidationReport validate(const MpcProblem& p) {
  ValidationReport rep;
  auto fail = [&rep](std::string msg) { rep.violations.push_back(std::move(msg)); };

  const int n_stages = p.horizon();
  if (n_stages < 1) {
    fail("horizon must be at least 1");
    return rep;
  }
  const int nx = p.nx();
  const int nu = p.nu();
  if (nx < 1 || nu < 1) {
    fail("state and input dimensions must be at least 1");
    return rep;
  }

  for (int k = 0; k < n_stages; ++k) {
    if (p.model.A[k].rows() != nx || p.model.A[k].cols() != nx)
      fail("A_" + std::to_string(k) + " has inconsistent dimensions");
    if (static_cast<int>(p.model.B.size()) <= k || p.model.B[k].rows() != nx || p.model.B[k].cols() != nu)
      fail("B_" + std::to_string(k) + " has inconsistent dimensions");
    if (static_cast<int>(p.model.w.size()) <= k || static_cast<int>(p.model.w[k].size()) != nx)
      fail("w_" + std::to_string(k) + " has inconsistent dimensions");
  }
  if (static_cast<int>(p.costs.Q.size()) != n_stages + 1) fail("Q sequence must have horizon+1 entries");
  if (static_cast<int>(p.costs.R.size()) != n_stages) fail("R sequence must have horizon entries");
  if (static_cast<int>(p.costs.S.size()) != n_stages) fail("S sequence must have horizon entries");
  if (static_cast<int>(p.costs.q.size()) != n_stages + 1) fail("q sequence must have horizon+1 entries");
  if (static_cast<int>(p.costs.r.size()) != n_stages) fail("r sequence must have horizon entries");
  if (static_cast<int>(p.u_lower.size()) != n_stages || static_cast<int>(p.u_upper.size()) != n_stages)
    fail("bound sequences must have horizon entries");
  if (static_cast<int>(p.x0.size()) != nx) fail("x0 has inconsistent dimension");
  if (!rep.ok()) return rep;

  for (int k = 0; k <= n_stages; ++k) {
    if (p.costs.Q[k].rows() != nx || p.costs.Q[k].cols() != nx)
      fail("Q_" + std::to_string(k) + " has inconsistent dimensions");
    if (static_cast<int>(p.costs.q[k].size()) != nx)
      fail("q_" + std::to_string(k) + " has inconsistent dimensions");
  }
  for (int k = 0; k < n_stages; ++k) {
    if (p.costs.R[k].rows() != nu || p.costs.R[k].cols() != nu)
      fail("R_" + std::to_string(k) + " has inconsistent dimensions");
    if (p.costs.S[k].rows() != nx || p.costs.S[k].cols() != nu)
      fail("S_" + std::to_string(k) + " has inconsistent dimensions");
    if (static_cast<int>(p.costs.r[k].size()) != nu)
      fail("r_" + std::to_string(k) + " has inconsistent dimensions");
    if (static_cast<int>(p.u_lower[k].size()) != nu || static_cast<int>(p.u_upper[k].size()) != nu)
      fail("bounds at stage " + std::to_string(k) + " have inconsistent dimensions");
  }
  if (!rep.ok()) return rep;

  for (int k = 0; k < n_stages; ++k) {
    const Matrix& r_k = p.costs.R[k];
    const Matrix& q_k = p.costs.Q[k];
    const Matrix& s_k = p.costs.S[k];
    const double sym_tol = 1e-9 * (1.0 + std::max(max_abs(r_k), max_abs(q_k)));
    if (!detail::is_symmetric(r_k, sym_tol)) {
      fail("R_" + std::to_string(k) + " not symmetric");
      continue;
    }
    if (!detail::is_symmetric(q_k, sym_tol)) {
      fail("Q_" + std::to_string(k) + " not symmetric");
      continue;
    }
    if (!detail::is_positive_definite(r_k)) {
      fail("R_" + std::to_string(k) + " not positive definite");
      continue;
    }
    // Schur complement Q_k - S_k R_k^-1 S_k^T
    Matrix schur = q_k;
    if (!s_k.is_zero()) {
      DenseLu lu(r_k);
      Matrix rinv_st(nu, nx);
      for (int j = 0; j < nx; ++j) {
        Vector col(nu);
        for (int i = 0; i < nu; ++i) col[i] = s_k(j, i);
        col = lu.solve(col);
        for (int i = 0; i < nu; ++i) rinv_st(i, j) = col[i];
      }
      Matrix srs(nx, nx);
      mul_accum(srs, s_k, rinv_st, nullptr);
      sub_accum(schur, srs, nullptr);
    }
    if (!detail::is_positive_semidefinite(schur))
      fail("cost Schur complement at stage " + std::to_string(k) + " not positive semidefinite");
  }
  if (!detail::is_positive_semidefinite(p.costs.Q[n_stages])) fail("terminal Q not positive semidefinite");

  for (int k = 0; k < n_stages; ++k)
    for (int i = 0; i < nu; ++i)
      if (p.u_lower[k][i] > p.u_upper[k][i]) {
        fail("crossed input bounds at stage " + std::to_string(k));
        break;
      }

  return rep;
}

/// Chain of point masses joined by springs (and optional dampers), first and
/// last mass attached to the walls. Actuator j applies an equal-and-opposite
/// force pair between masses j and j+2, so an even chain of n masses carries
/// n-2 inputs. State is [displacements; velocities]. Weights are identity,
/// cross terms and linear terms zero, drift zero, bounds +-u_bound.
inline MpcProblem make_oscillating_masses(int n_masses, double mass, double spring_k, double damping,
                                          double ts, double u_bound, int horizon) {
  if (n_masses < 2 || n_masses % 2 != 0)
    throw std::invalid_argument("make_oscillating_masses: number of masses must be even and at least 2");
  if (n_masses == 2)
    throw std::invalid_argument("make_oscillating_masses: 2 masses leave no interior actuators (n_u = 0)");
  if (!(mass > 0.0) || !(spring_k > 0.0))
    throw std::invalid_argument("make_oscillating_masses: mass and spring constant must be positive");
  if (damping < 0.0) throw std::invalid_argument("make_oscillating_masses: damping must be nonnegative");
  if (horizon < 1) throw std::invalid_argument("make_oscillating_masses: horizon must be at least 1");

  const int n = n_masses;
  const int nx = 2 * n;
  const int nu = n - 2;

  // wall-to-wall chain Laplacian
  Matrix lap(n, n);
  for (int i = 0; i < n; ++i) {
    lap(i, i) = 2.0;
    if (i > 0) lap(i, i - 1) = -1.0;
    if (i + 1 < n) lap(i, i + 1) = -1.0;
  }

  Matrix a_c(nx, nx);
  for (int i = 0; i < n; ++i) a_c(i, n + i) = 1.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      a_c(n + i, j) = -(spring_k / mass) * lap(i, j);
      a_c(n + i, n + j) = -(damping / mass) * lap(i, j);
    }

  Matrix b_c(nx, nu);
  for (int j = 0; j < nu; ++j) {
    b_c(n + j, j) = 1.0 / mass;
    b_c(n + j + 2, j) = -1.0 / mass;
  }

  auto [a_d, b_d] = discretize_zoh(a_c, b_c, ts);

  MpcProblem p;
  p.model.A.assign(horizon, a_d);
  p.model.B.assign(horizon, b_d);
  p.model.w.assign(horizon, Vector(nx, 0.0));
  p.costs.Q.assign(horizon + 1, Matrix::Identity(nx));
  p.costs.R.assign(horizon, Matrix::Identity(nu));
  p.costs.S.assign(horizon, Matrix(nx, nu));
  p.costs.q.assign(horizon + 1, Vector(nx, 0.0));
  p.costs.r.assign(horizon, Vector(nu, 0.0));
  p.u_lower.assign(horizon, Vector(nu, -u_bound));
  p.u_upper.assign(horizon, Vector(nu, u_bound));
  p.x0.assign(nx, 0.0);
  return p;
}

}  // namespace mpcqp
