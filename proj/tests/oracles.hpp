// Test-only helpers: independent oracle implementations (Eigen-based dense
// linear algebra, truncated-series discretization, stage-wise cost sums) and
// deterministic random instance generators. Nothing here is reachable from
// the library headers, so the oracle route stays independent of the
// implementation it checks.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mpcqp/bruteforce.hpp"
#include "mpcqp/rng.hpp"
#include "mpcqp/solver.hpp"
#include "mpcqp/sparse_qp.hpp"
#include "mpcqp/transform.hpp"

namespace oracles {

using mpcqp::BlockMatrix;
using mpcqp::Matrix;
using mpcqp::MpcProblem;
using mpcqp::Rng;
using mpcqp::Vector;

inline Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

inline Eigen::MatrixXd to_eigen(const BlockMatrix& m) { return to_eigen(mpcqp::bm_to_dense(m)); }

inline Eigen::VectorXd to_eigen(const Vector& v) {
  Eigen::VectorXd e(static_cast<Eigen::Index>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) e(static_cast<Eigen::Index>(i)) = v[i];
  return e;
}

/// Largest and smallest eigenvalue magnitude of a general square matrix.
inline std::pair<double, double> eig_magnitude_range(const Matrix& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(to_eigen(m));
  double lo = 1e300, hi = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double mag = std::abs(es.eigenvalues()(i));
    lo = std::min(lo, mag);
    hi = std::max(hi, mag);
  }
  return {lo, hi};
}

inline double min_symmetric_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  return es.eigenvalues().minCoeff();
}

/// Scaled 20-term Taylor series for exp(A), an independent route to the
/// zero-order-hold map (terminates exactly for nilpotent inputs).
inline Matrix expm_series(const Matrix& a) {
  const int n = a.rows();
  Eigen::MatrixXd ea = to_eigen(a);
  int s = 0;
  while (ea.cwiseAbs().maxCoeff() > 0.25 && s < 60) {
    ea *= 0.5;
    ++s;
  }
  Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= 20; ++k) {
    term = (term * ea) / static_cast<double>(k);
    acc += term;
  }
  for (int k = 0; k < s; ++k) acc = acc * acc;
  Matrix out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = acc(i, j);
  return out;
}

/// Stage-wise evaluation of the horizon cost (the original sum, terminal
/// term and initial-state constant included).
inline double stage_sum_objective(const MpcProblem& p, const Vector& u_stacked,
                                  const Vector& x_stacked) {
  const int n_stages = p.horizon();
  const int nx = p.nx();
  const int nu = p.nu();
  auto stage_x = [&](int k) {  // x_k with x_0 = initial state
    Eigen::VectorXd v(nx);
    for (int i = 0; i < nx; ++i) v(i) = k == 0 ? p.x0[i] : x_stacked[(k - 1) * nx + i];
    return v;
  };
  double j = 0.0;
  for (int k = 0; k < n_stages; ++k) {
    Eigen::VectorXd uk(nu);
    for (int i = 0; i < nu; ++i) uk(i) = u_stacked[k * nu + i];
    const Eigen::VectorXd xk = stage_x(k);
    j += 0.5 * uk.dot(to_eigen(p.costs.R[k]) * uk) + 0.5 * xk.dot(to_eigen(p.costs.Q[k]) * xk) +
         xk.dot(to_eigen(p.costs.S[k]) * uk) + to_eigen(p.costs.r[k]).dot(uk) +
         to_eigen(p.costs.q[k]).dot(xk);
  }
  const Eigen::VectorXd xn = stage_x(n_stages);
  j += 0.5 * xn.dot(to_eigen(p.costs.Q[n_stages]) * xn) + to_eigen(p.costs.q[n_stages]).dot(xn);
  return j;
}

struct ProblemOptions {
  bool with_cross_terms = true;
  bool with_drift = true;
  double bound_halfwidth = 0.6;  // negative: bounds at the infinity sentinel
  int bounded_channels = -1;     // input channels with finite bounds; -1: all
};

/// Random LTV problem with a positive semidefinite joint stage cost (built as
/// G^T G with a ridge on the input block, so R_k is positive definite and the
/// Schur condition holds by construction).
inline MpcProblem random_problem(Rng& rng, int n_stages, int nx, int nu,
                                 const ProblemOptions& opt = {}) {
  MpcProblem p;
  for (int k = 0; k < n_stages; ++k) {
    Matrix a(nx, nx), b(nx, nu);
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < nx; ++j) a(i, j) = rng.uniform(-1.5, 1.5) / nx;
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < nu; ++j) b(i, j) = rng.uniform(-1.0, 1.0);
    Vector w(nx, 0.0);
    if (opt.with_drift)
      for (auto& v : w) v = rng.uniform(-0.2, 0.2);
    p.model.A.push_back(std::move(a));
    p.model.B.push_back(std::move(b));
    p.model.w.push_back(std::move(w));
  }
  for (int k = 0; k <= n_stages; ++k) {
    const int d = nx + (k < n_stages ? nu : 0);
    Eigen::MatrixXd gm(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) gm(i, j) = rng.uniform(-1.0, 1.0);
    Eigen::MatrixXd joint = gm.transpose() * gm / d;
    Matrix q(nx, nx);
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < nx; ++j) q(i, j) = joint(i, j);
    p.costs.Q.push_back(std::move(q));
    Vector qv(nx);
    for (auto& v : qv) v = rng.uniform(-0.5, 0.5);
    p.costs.q.push_back(std::move(qv));
    if (k < n_stages) {
      Matrix r(nu, nu), s(nx, nu);
      for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nu; ++j) r(i, j) = joint(nx + i, nx + j);
      for (int i = 0; i < nu; ++i) r(i, i) += 0.5;
      if (opt.with_cross_terms)
        for (int i = 0; i < nx; ++i)
          for (int j = 0; j < nu; ++j) s(i, j) = joint(i, nx + j);
      p.costs.R.push_back(std::move(r));
      p.costs.S.push_back(std::move(s));
      Vector rv(nu);
      for (auto& v : rv) v = rng.uniform(-0.5, 0.5);
      p.costs.r.push_back(std::move(rv));
      // per-channel bounds, uniform across stages so blocked bounds stay
      // cleanly finite or absent
      Vector lo(nu, -mpcqp::kInfinityBound), hi(nu, mpcqp::kInfinityBound);
      if (opt.bound_halfwidth > 0.0) {
        const int nb = opt.bounded_channels < 0 ? nu : std::min(opt.bounded_channels, nu);
        for (int i = 0; i < nb; ++i) {
          lo[i] = -opt.bound_halfwidth;
          hi[i] = opt.bound_halfwidth;
        }
      }
      p.u_lower.push_back(std::move(lo));
      p.u_upper.push_back(std::move(hi));
    }
  }
  p.x0.resize(nx);
  for (auto& v : p.x0) v = rng.uniform(-1.0, 1.0);
  return p;
}

inline std::vector<int> random_window_sizes(Rng& rng, int n_stages, int max_window = 3) {
  std::vector<int> m;
  int rem = n_stages;
  while (rem > 0) {
    const int v = 1 + static_cast<int>(rng.next_u64() % static_cast<unsigned>(std::min(rem, max_window)));
    m.push_back(v);
    rem -= v;
  }
  return m;
}

}  // namespace oracles
