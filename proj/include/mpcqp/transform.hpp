#pragma once

#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mpcqp/block_matrix.hpp"
#include "mpcqp/sparse_qp.hpp"

namespace mpcqp {

/// Move-blocking window sizes over the input horizon. Window l groups the
/// inputs of `m[l]` consecutive stages into one decision variable; the sizes
/// must be positive and sum to the horizon.
struct BlockingVector {
  std::vector<int> m;
  std::vector<int> close;         // cumulative sums; window l covers stages [close[l]-m[l], close[l])
  std::vector<int> win_of_stage;  // stage (0-based) -> window index

  int count() const { return static_cast<int>(m.size()); }
  int horizon() const { return close.empty() ? 0 : close.back(); }
  bool is_identity() const {
    for (int v : m)
      if (v != 1) return false;
    return true;
  }
};

inline BlockingVector blocking_vector(std::vector<int> m, int n_stages) {
  BlockingVector b;
  b.m = std::move(m);
  if (b.m.empty()) throw std::invalid_argument("blocking vector must be nonempty");
  int total = 0;
  for (int v : b.m) {
    if (v < 1) throw std::invalid_argument("blocking window sizes must be positive");
    total += v;
    b.close.push_back(total);
  }
  if (total != n_stages)
    throw std::invalid_argument("blocking window sizes must sum to the horizon (" +
                                std::to_string(total) + " != " + std::to_string(n_stages) + ")");
  b.win_of_stage.resize(n_stages);
  int w = 0;
  for (int k = 0; k < n_stages; ++k) {
    if (k >= b.close[w]) ++w;
    b.win_of_stage[k] = w;
  }
  return b;
}

inline BlockingVector blocking_identity(int n_stages) {
  return blocking_vector(std::vector<int>(n_stages, 1), n_stages);
}

/// Condensing window sizes over the state horizon. The state closing each
/// window is kept as a decision variable; all other states are eliminated.
/// An empty vector keeps nothing (fully dense formulation); all-ones keeps
/// everything (fully sparse).
struct CondensingVector {
  std::vector<int> p;
  std::vector<int> kept_rows;  // 0-based block rows of kept states (cumsum - 1)
  std::vector<bool> kept;      // per block row 0..N-1
  std::vector<int> kept_index; // block row -> index among kept states, -1 otherwise

  int count() const { return static_cast<int>(kept_rows.size()); }
  bool eliminates_states() const { return count() < static_cast<int>(kept.size()); }
  bool is_identity() const { return !kept.empty() && !eliminates_states(); }
};

inline CondensingVector condensing_vector(std::vector<int> p, int n_stages) {
  CondensingVector c;
  c.p = std::move(p);
  c.kept.assign(n_stages, false);
  c.kept_index.assign(n_stages, -1);
  int total = 0;
  for (int v : c.p) {
    if (v < 1) throw std::invalid_argument("condensing window sizes must be positive");
    total += v;
    if (total > n_stages) break;
    c.kept_rows.push_back(total - 1);
  }
  if (!c.p.empty() && total != n_stages)
    throw std::invalid_argument("condensing window sizes must sum to the horizon (" +
                                std::to_string(total) + " != " + std::to_string(n_stages) + ")");
  for (size_t l = 0; l < c.kept_rows.size(); ++l) {
    c.kept[c.kept_rows[l]] = true;
    c.kept_index[c.kept_rows[l]] = static_cast<int>(l);
  }
  return c;
}

inline CondensingVector condensing_identity(int n_stages) {
  return condensing_vector(std::vector<int>(n_stages, 1), n_stages);
}

inline CondensingVector condensing_dense(int n_stages) {
  return condensing_vector({}, n_stages);
}

// ---------------------------------------------------------------------------
// selector matrices
// ---------------------------------------------------------------------------

/// Blocking matrix pair (T, T+): T stacks one identity block per stage,
/// column-grouped by window; T+ = (T^T T)^-1 T^T averages within each window.
inline std::pair<BlockMatrix, BlockMatrix> blocking_matrix(const BlockingVector& win, int nu) {
  const int n_stages = win.horizon();
  BlockMatrix t = BlockMatrix::uniform(n_stages, win.count(), nu, nu);
  BlockMatrix tplus = BlockMatrix::uniform(win.count(), n_stages, nu, nu);
  for (int k = 0; k < n_stages; ++k) {
    const int w = win.win_of_stage[k];
    t.set(k, w, Matrix::Identity(nu));
    Matrix avg(nu, nu);
    for (int i = 0; i < nu; ++i) avg(i, i) = 1.0 / win.m[w];
    tplus.set(w, k, std::move(avg));
  }
  return {std::move(t), std::move(tplus)};
}

/// Kept/eliminated state selectors (E, F): orthonormal 0/1 columns, kept
/// columns pick the window-closing states, eliminated columns the rest.
inline std::pair<BlockMatrix, BlockMatrix> condensing_selectors(const CondensingVector& cond,
                                                                int n_stages, int nx) {
  if (static_cast<int>(cond.kept.size()) != n_stages)
    throw std::invalid_argument("condensing_selectors: horizon mismatch");
  const int n_kept = cond.count();
  BlockMatrix e = BlockMatrix::uniform(n_stages, n_kept, nx, nx);
  BlockMatrix f = BlockMatrix::uniform(n_stages, n_stages - n_kept, nx, nx);
  int drop = 0;
  for (int j = 0; j < n_stages; ++j) {
    if (cond.kept[j])
      e.set(j, cond.kept_index[j], Matrix::Identity(nx));
    else
      f.set(j, drop++, Matrix::Identity(nx));
  }
  return {std::move(e), std::move(f)};
}

// ---------------------------------------------------------------------------
// window application helpers (selection applied by index, never via explicit
// selector products)
// ---------------------------------------------------------------------------

namespace detail {

/// result = A T (merge block columns by window; copies for the first stage of
/// a window, adds for the rest)
inline BlockMatrix col_merge(const BlockMatrix& a, const BlockingVector& win, FlopCount* fc) {
  std::vector<int> cdims(win.count(), a.col_dims.empty() ? 0 : a.col_dims[0]);
  BlockMatrix r(a.row_dims, cdims);
  for (const auto& [key, m] : a.blocks) r.accumulate_block(key.first, win.win_of_stage[key.second], m, fc);
  return r;
}

/// result = T^T A (merge block rows by window)
inline BlockMatrix row_merge(const BlockMatrix& a, const BlockingVector& win, FlopCount* fc) {
  std::vector<int> rdims(win.count(), a.row_dims.empty() ? 0 : a.row_dims[0]);
  BlockMatrix r(rdims, a.col_dims);
  for (const auto& [key, m] : a.blocks) r.accumulate_block(win.win_of_stage[key.first], key.second, m, fc);
  return r;
}

/// result = rows of A picked in the given order (pure selection, no FLOPs)
inline BlockMatrix row_select(const BlockMatrix& a, const std::vector<int>& rows) {
  std::vector<int> rdims(rows.size());
  for (size_t l = 0; l < rows.size(); ++l) rdims[l] = a.row_dims[rows[l]];
  BlockMatrix r(rdims, a.col_dims);
  std::vector<int> pos(a.row_dims.size(), -1);
  for (size_t l = 0; l < rows.size(); ++l) pos[rows[l]] = static_cast<int>(l);
  for (const auto& [key, m] : a.blocks)
    if (pos[key.first] >= 0) r.set(pos[key.first], key.second, m);
  return r;
}

/// T^T v (per-window sums)
inline Vector vec_row_merge(const Vector& v, const BlockingVector& win, int nu, FlopCount* fc) {
  Vector r(static_cast<size_t>(win.count()) * nu, 0.0);
  for (int k = 0; k < win.horizon(); ++k) {
    const int w = win.win_of_stage[k];
    for (int i = 0; i < nu; ++i) r[static_cast<size_t>(w) * nu + i] += v[static_cast<size_t>(k) * nu + i];
  }
  std::uint64_t extra = 0;
  for (int m : win.m) extra += static_cast<std::uint64_t>(m - 1) * nu;
  count_adds(fc, extra);
  return r;
}

/// T+ v (per-window averages)
inline Vector vec_reduce(const Vector& v, const BlockingVector& win, int nu, FlopCount* fc) {
  Vector r = vec_row_merge(v, win, nu, fc);
  for (int w = 0; w < win.count(); ++w) {
    if (win.m[w] == 1) continue;
    const double inv = 1.0 / win.m[w];
    count_divs(fc, 1);
    for (int i = 0; i < nu; ++i) r[static_cast<size_t>(w) * nu + i] *= inv;
    count_muls(fc, nu);
  }
  return r;
}

/// T v (replicate each window value across its stages)
inline Vector vec_expand(const Vector& v, const BlockingVector& win, int nu) {
  Vector r(static_cast<size_t>(win.horizon()) * nu);
  for (int k = 0; k < win.horizon(); ++k) {
    const int w = win.win_of_stage[k];
    for (int i = 0; i < nu; ++i) r[static_cast<size_t>(k) * nu + i] = v[static_cast<size_t>(w) * nu + i];
  }
  return r;
}

inline Vector vec_row_select(const Vector& v, const std::vector<int>& rows, int dim) {
  Vector r(rows.size() * static_cast<size_t>(dim));
  for (size_t l = 0; l < rows.size(); ++l)
    for (int i = 0; i < dim; ++i) r[l * dim + i] = v[static_cast<size_t>(rows[l]) * dim + i];
  return r;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// partial prediction
// ---------------------------------------------------------------------------

/// All matrices of the combined move-blocking / state-condensing map
///
///   u = u_expand * ub,    x = kept_to_state * xb + ublk_to_state * ub + state_bias.
///
/// pred_lhs is the block matrix whose rows are identities at kept states and
/// dynamics rows at eliminated ones; its inverse is unit lower triangular and
/// is assembled chain by chain from products of the stage maps, so blocks
/// outside the chains are structurally absent.
struct Transform {
  BlockingVector win;
  CondensingVector cond;
  int n_stages = 0;
  int nx = 0;
  int nu = 0;

  BlockMatrix u_expand;       // T
  BlockMatrix u_reduce;       // left inverse of T (window averages)
  BlockMatrix keep_sel;       // kept-state selector
  BlockMatrix drop_sel;       // eliminated-state selector
  BlockMatrix pred_lhs;       // keep rows -> I, drop rows -> dynamics rows
  BlockMatrix pred_lhs_inv;   // unit lower triangular chains
  BlockMatrix u_to_state;     // pred_lhs_inv applied to eliminated-row input blocks
  BlockMatrix kept_to_state;  // pred_lhs_inv columns at kept states
  BlockMatrix ublk_to_state;  // u_to_state merged by blocking windows
  Vector state_bias;          // pred_lhs_inv applied to eliminated-row drift (x0 dependent)

  FlopCount build_flops;

  bool eliminates_states() const { return cond.eliminates_states(); }
};

/// Builds the partial state prediction for the given blocking and condensing
/// choices. Chains never cross kept states, so every block is a product of
/// consecutive stage maps and the work is linear in the number of stored
/// blocks.
inline Transform partial_prediction(const SparseQp& qp, const CondensingVector& cond,
                                    const BlockingVector& win) {
  const int n_stages = qp.horizon();
  const int nx = qp.nx();
  const int nu = qp.nu();
  if (win.horizon() != n_stages || static_cast<int>(cond.kept.size()) != n_stages)
    throw std::invalid_argument("partial_prediction: transform horizon mismatch");

  Transform tf;
  tf.win = win;
  tf.cond = cond;
  tf.n_stages = n_stages;
  tf.nx = nx;
  tf.nu = nu;
  FlopCount* fc = &tf.build_flops;

  auto [t, tplus] = blocking_matrix(win, nu);
  tf.u_expand = std::move(t);
  tf.u_reduce = std::move(tplus);
  auto [e, f] = condensing_selectors(cond, n_stages, nx);
  tf.keep_sel = std::move(e);
  tf.drop_sel = std::move(f);

  const auto& model = qp.problem.model;

  tf.pred_lhs = BlockMatrix::uniform(n_stages, n_stages, nx, nx);
  tf.pred_lhs_inv = BlockMatrix::uniform(n_stages, n_stages, nx, nx);
  for (int j = 0; j < n_stages; ++j) {
    tf.pred_lhs.set(j, j, Matrix::Identity(nx));
    tf.pred_lhs_inv.set(j, j, Matrix::Identity(nx));
    if (cond.kept[j] || j == 0) continue;
    if (!qp.A.has(j, j - 1)) continue;  // zero stage map breaks the chain
    tf.pred_lhs.set(j, j - 1, qp.A.at(j, j - 1));
    // row j of the inverse is A_j times row j-1 (chains stop at kept rows)
    auto it = tf.pred_lhs_inv.blocks.lower_bound({j - 1, 0});
    for (; it != tf.pred_lhs_inv.blocks.end() && it->first.first == j - 1; ++it)
      tf.pred_lhs_inv.set(j, it->first.second, mul(model.A[j], it->second, fc));
  }

  // input-to-state map through eliminated rows
  tf.u_to_state = BlockMatrix::uniform(n_stages, n_stages, nx, nu);
  for (const auto& [key, m] : tf.pred_lhs_inv.blocks) {
    const int c = key.second;
    if (cond.kept[c] || !qp.B.has(c, c)) continue;
    tf.u_to_state.set(key.first, c, mul(m, qp.B.at(c, c), fc));
  }

  // kept-state columns of the inverse
  tf.kept_to_state = BlockMatrix(std::vector<int>(n_stages, nx), std::vector<int>(cond.count(), nx));
  for (const auto& [key, m] : tf.pred_lhs_inv.blocks)
    if (cond.kept[key.second]) tf.kept_to_state.set(key.first, cond.kept_index[key.second], m);

  tf.ublk_to_state = detail::col_merge(tf.u_to_state, win, fc);

  // bias chain b_j = w_j + A_j b_{j-1} over eliminated rows
  tf.state_bias.assign(static_cast<size_t>(n_stages) * nx, 0.0);
  for (int j = 0; j < n_stages; ++j) {
    if (cond.kept[j]) continue;
    double* bj = tf.state_bias.data() + static_cast<size_t>(j) * nx;
    for (int i = 0; i < nx; ++i) bj[i] = qp.w[static_cast<size_t>(j) * nx + i];
    if (j >= 1 && !cond.kept[j - 1])
      matvec_accum(model.A[j], tf.state_bias.data() + static_cast<size_t>(j - 1) * nx, bj, fc);
  }

  return tf;
}

// ---------------------------------------------------------------------------
// generalized QP
// ---------------------------------------------------------------------------

/// How per-stage input bounds are mapped onto a blocking window: the window
/// average (the left-inverse bound map, which can admit inputs violating the
/// tightest stage bound when bounds differ inside a window) or the tightest
/// bounds (max of lowers, min of uppers).
enum class BoundMode { WindowAverage, WindowTight };

/// The transformed QP over blocked inputs ub and kept states xb:
///
///   min 1/2 [ub;xb]^T [[R, S^T],[S, Q]] [ub;xb] + r^T ub + q^T xb + c0
///   s.t. A xb = B ub + w,   u_lower <= ub <= u_upper
///
/// with the same block structure as the sparse stacked QP, one block per
/// blocking window / kept state. A is unit lower block-bidiagonal.
struct GeneralizedQp {
  BlockMatrix R;  // Nu x Nu blocks of nu x nu
  BlockMatrix S;  // Nx x Nu blocks of nx x nu
  BlockMatrix Q;  // Nx x Nx blocks of nx x nx
  BlockMatrix A;  // Nx x Nx blocks of nx x nx
  BlockMatrix B;  // Nx x Nu blocks of nx x nu
  Vector r, q, w;
  Vector u_lower, u_upper;
  Vector u_warm;
  double c0 = 0.0;

  BlockingVector win;
  CondensingVector cond;
  int nx = 0;
  int nu = 0;
  FlopCount prep_flops;  // transform build + matrix assembly

  int n_inputs() const { return win.count() * nu; }
  int n_states() const { return cond.count() * nx; }
};

/// Assembles the generalized QP from the sparse QP and a transform. The
/// shared product Q*Gamma + S*T is formed once and reused; selector
/// applications are index operations. Cost matrices are symmetrized after
/// assembly and the pre-symmetrization deviation must stay below 1e-12.
inline GeneralizedQp build_generalized_qp(const SparseQp& qp, const Transform& tf,
                                          BoundMode bound_mode = BoundMode::WindowAverage,
                                          const Vector* u_warm = nullptr) {
  if (tf.n_stages != qp.horizon() || tf.nx != qp.nx() || tf.nu != qp.nu())
    throw std::invalid_argument("build_generalized_qp: transform built for a different problem shape");

  GeneralizedQp g;
  g.win = tf.win;
  g.cond = tf.cond;
  g.nx = tf.nx;
  g.nu = tf.nu;
  g.prep_flops = tf.build_flops;
  FlopCount* fc = &g.prep_flops;

  const bool elim = tf.eliminates_states();
  const auto& gamma = tf.ublk_to_state;
  const auto& upsilon = tf.kept_to_state;
  const BlockMatrix upsilon_t = bm_transpose(upsilon);
  const std::vector<int>& kept_rows = tf.cond.kept_rows;

  // x-rows of (A * X): X_k - A_k X_{k-1}; the subdiagonal blocks of the
  // stacked dynamics already carry the minus sign.
  auto apply_dyn_lhs = [&](const BlockMatrix& x) {
    BlockMatrix r = x;
    for (int k = 1; k < tf.n_stages; ++k) {
      if (!qp.A.has(k, k - 1)) continue;
      const Matrix& sub = qp.A.at(k, k - 1);
      auto it = x.blocks.lower_bound({k - 1, 0});
      for (; it != x.blocks.end() && it->first.first == k - 1; ++it)
        r.accumulate_product(k, it->first.second, sub, it->second, fc);
    }
    return r;
  };

  const BlockMatrix st = detail::col_merge(qp.S, tf.win, fc);
  const BlockMatrix bt = detail::col_merge(qp.B, tf.win, fc);

  // R = T^T R T + Gamma^T (Q Gamma + S T) + (S T)^T Gamma
  g.R = detail::row_merge(detail::col_merge(qp.R, tf.win, fc), tf.win, fc);
  BlockMatrix qg_p_st = st;
  if (elim) {
    bm_add(qg_p_st, bm_mul(qp.Q, gamma, fc), fc);
    bm_add(g.R, bm_mul(bm_transpose(gamma), qg_p_st, fc), fc);
    bm_add(g.R, bm_mul(bm_transpose(st), gamma, fc), fc);
  }
  const double r_dev = bm_sym_deviation(g.R);
  if (r_dev >= 1e-12 * (1.0 + bm_max_abs(g.R)))
    throw std::logic_error("build_generalized_qp: input cost asymmetry " + std::to_string(r_dev));
  bm_symmetrize(g.R, fc);

  // S = Upsilon^T (Q Gamma + S T)
  g.S = bm_mul(upsilon_t, qg_p_st, fc);

  // Q = Upsilon^T Q Upsilon
  g.Q = bm_mul(upsilon_t, bm_mul(qp.Q, upsilon, fc), fc);
  const double q_dev = bm_sym_deviation(g.Q);
  if (q_dev >= 1e-12 * (1.0 + bm_max_abs(g.Q)))
    throw std::logic_error("build_generalized_qp: state cost asymmetry " + std::to_string(q_dev));
  bm_symmetrize(g.Q, fc);

  // A = E^T A Upsilon,  B = E^T (B T - A Gamma)
  g.A = detail::row_select(apply_dyn_lhs(upsilon), kept_rows);
  g.B = detail::row_select(bt, kept_rows);
  if (elim) {
    const BlockMatrix ag = detail::row_select(apply_dyn_lhs(gamma), kept_rows);
    for (const auto& [key, m] : ag.blocks) {
      auto it = g.B.blocks.find(key);
      if (it == g.B.blocks.end())
        g.B.set(key.first, key.second, negate(m));
      else
        sub_accum(it->second, m, fc);
    }
  }

  // linear terms and constant
  Vector q_plus_qb = qp.q;
  g.r = detail::vec_row_merge(qp.r, tf.win, tf.nu, fc);
  g.c0 = qp.c0;
  if (elim) {
    Vector qb = bm_matvec(qp.Q, tf.state_bias, fc);
    q_plus_qb = add(qp.q, qb, fc);
    Vector st_b = bm_tmatvec(st, tf.state_bias, fc);
    Vector g_qqb = bm_tmatvec(gamma, q_plus_qb, fc);
    for (size_t i = 0; i < g.r.size(); ++i) g.r[i] += st_b[i] + g_qqb[i];
    count_adds(fc, 2 * g.r.size());
    // constant picked up by the bias: q^T b + 1/2 b^T Q b
    g.c0 += dot(tf.state_bias, qp.q, fc) + 0.5 * dot(tf.state_bias, qb, fc);
    count_muls(fc, 1);
    count_adds(fc, 2);
  }
  g.q = bm_tmatvec(upsilon, q_plus_qb, fc);

  // w = E^T (w - A b): kept rows only; the bias vanishes at kept rows
  g.w.assign(static_cast<size_t>(tf.cond.count()) * tf.nx, 0.0);
  for (int l = 0; l < tf.cond.count(); ++l) {
    const int row = kept_rows[l];
    double* out = g.w.data() + static_cast<size_t>(l) * tf.nx;
    for (int i = 0; i < tf.nx; ++i) out[i] = qp.w[static_cast<size_t>(row) * tf.nx + i];
    if (row >= 1 && !tf.cond.kept[row - 1])
      matvec_accum(qp.problem.model.A[row], tf.state_bias.data() + static_cast<size_t>(row - 1) * tf.nx,
                   out, fc);
  }

  // bounds
  if (bound_mode == BoundMode::WindowAverage) {
    g.u_lower = detail::vec_reduce(qp.u_lower, tf.win, tf.nu, fc);
    g.u_upper = detail::vec_reduce(qp.u_upper, tf.win, tf.nu, fc);
  } else {
    g.u_lower.assign(static_cast<size_t>(tf.win.count()) * tf.nu, 0.0);
    g.u_upper.assign(static_cast<size_t>(tf.win.count()) * tf.nu, 0.0);
    for (int w = 0; w < tf.win.count(); ++w)
      for (int i = 0; i < tf.nu; ++i) {
        double lo = -1e300, hi = 1e300;
        for (int k = w == 0 ? 0 : tf.win.close[w - 1]; k < tf.win.close[w]; ++k) {
          lo = std::max(lo, qp.u_lower[static_cast<size_t>(k) * tf.nu + i]);
          hi = std::min(hi, qp.u_upper[static_cast<size_t>(k) * tf.nu + i]);
        }
        g.u_lower[static_cast<size_t>(w) * tf.nu + i] = lo;
        g.u_upper[static_cast<size_t>(w) * tf.nu + i] = hi;
      }
  }

  if (u_warm) {
    if (u_warm->size() != qp.u_lower.size())
      throw std::invalid_argument("build_generalized_qp: warm start has wrong length");
    g.u_warm = detail::vec_reduce(*u_warm, tf.win, tf.nu, fc);
  } else {
    g.u_warm.assign(static_cast<size_t>(tf.win.count()) * tf.nu, 0.0);
  }

  return g;
}

/// Maps a generalized solution back to the full input sequence and state
/// trajectory: u = T ub, x = Upsilon xb + Gamma ub + b.
inline std::pair<Vector, Vector> expand_solution(const Vector& ub, const Vector& xb,
                                                 const Transform& tf, FlopCount* fc = nullptr) {
  if (static_cast<int>(ub.size()) != tf.win.count() * tf.nu ||
      static_cast<int>(xb.size()) != tf.cond.count() * tf.nx)
    throw std::invalid_argument("expand_solution: size mismatch");
  Vector u = detail::vec_expand(ub, tf.win, tf.nu);
  Vector x = tf.state_bias;
  for (const auto& [key, m] : tf.kept_to_state.blocks)
    matvec_accum(m, xb.data() + static_cast<size_t>(key.second) * tf.nx,
                 x.data() + static_cast<size_t>(key.first) * tf.nx, fc);
  for (const auto& [key, m] : tf.ublk_to_state.blocks)
    matvec_accum(m, ub.data() + static_cast<size_t>(key.second) * tf.nu,
                 x.data() + static_cast<size_t>(key.first) * tf.nx, fc);
  return {std::move(u), std::move(x)};
}

}  // namespace mpcqp
