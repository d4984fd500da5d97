#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "mpcqp/transform.hpp"

namespace mpcqp {

/// KKT block pattern [[R, S^T, B^T],[S, Q, A^T],[B, A, 0]] in the natural
/// variable order (blocked inputs, kept states, multipliers). nnz counts
/// nonzero scalars of the stored blocks; the coordinate list is row-major
/// sorted, 0-based, and deterministic for fixed inputs.
struct KktPattern {
  int dim = 0;
  std::vector<std::pair<int, int>> coords;
  std::uint64_t nnz() const { return coords.size(); }
};

inline KktPattern kkt_pattern(const GeneralizedQp& g) {
  KktPattern pat;
  const int nu_t = g.n_inputs();
  const int nx_t = g.n_states();
  pat.dim = nu_t + 2 * nx_t;

  auto scan = [&pat](const BlockMatrix& m, int row_base, int col_base, bool mirror) {
    for (const auto& [key, blk] : m.blocks) {
      const int r0 = row_base + m.row_off[key.first];
      const int c0 = col_base + m.col_off[key.second];
      for (int i = 0; i < blk.rows(); ++i)
        for (int j = 0; j < blk.cols(); ++j)
          if (blk(i, j) != 0.0) {
            pat.coords.emplace_back(r0 + i, c0 + j);
            if (mirror) pat.coords.emplace_back(c0 + j, r0 + i);
          }
    }
  };

  scan(g.R, 0, 0, false);
  scan(g.S, nu_t, 0, true);
  scan(g.Q, nu_t, nu_t, false);
  scan(g.B, nu_t + nx_t, 0, true);
  scan(g.A, nu_t + nx_t, nu_t, true);
  std::sort(pat.coords.begin(), pat.coords.end());
  return pat;
}

/// Stage-interleaved elimination order: for each kept stage, the input
/// windows closing within its condensing window, then the kept state block,
/// then its multiplier block. Fixed (not fill-minimizing) so fill and FLOP
/// counts are reproducible; it keeps the KKT matrix block-banded.
struct KktLayout {
  int dim = 0;
  int nu = 0, nx = 0;
  std::vector<int> u_pos;  // scalar offset of each input window
  std::vector<int> x_pos;  // of each kept state block
  std::vector<int> l_pos;  // of each multiplier block
  std::vector<signed char> dual;  // 1 on multiplier rows
};

inline KktLayout interleaved_layout(const GeneralizedQp& g) {
  KktLayout lay;
  lay.nu = g.nu;
  lay.nx = g.nx;
  const int n_win = g.win.count();
  const int n_kept = g.cond.count();
  lay.u_pos.resize(n_win);
  lay.x_pos.resize(n_kept);
  lay.l_pos.resize(n_kept);

  int pos = 0, w = 0;
  for (int l = 0; l < n_kept; ++l) {
    const int kept_stage = g.cond.kept_rows[l] + 1;
    while (w < n_win && g.win.close[w] <= kept_stage) {
      lay.u_pos[w++] = pos;
      pos += g.nu;
    }
    lay.x_pos[l] = pos;
    pos += g.nx;
    lay.l_pos[l] = pos;
    pos += g.nx;
  }
  while (w < n_win) {
    lay.u_pos[w++] = pos;
    pos += g.nu;
  }
  lay.dim = pos;
  lay.dual.assign(pos, 0);
  for (int l = 0; l < n_kept; ++l)
    for (int i = 0; i < g.nx; ++i) lay.dual[lay.l_pos[l] + i] = 1;
  return lay;
}

/// Symmetric envelope storage: row i holds columns fcol[i]..i packed. The
/// profile is derived from the block supports, so the factorization fill is
/// exactly the envelope size.
struct ProfileMatrix {
  int n = 0;
  std::vector<int> fcol;
  std::vector<std::size_t> rp;  // row i occupies [rp[i], rp[i+1])
  std::vector<double> a;

  double& at(int i, int j) { return a[rp[i] + static_cast<std::size_t>(j - fcol[i])]; }
  double get(int i, int j) const {
    if (j > i) std::swap(i, j);
    if (j < fcol[i]) return 0.0;
    return a[rp[i] + static_cast<std::size_t>(j - fcol[i])];
  }
  std::uint64_t fill() const { return a.size(); }
};

/// Builds and refills the interleaved augmented KKT matrix
/// [[R+D, S^T, -B^T],[S, Q, A^T],[-B, A, -reg I]].
class KktAssembler {
 public:
  explicit KktAssembler(const GeneralizedQp& g) : g_(&g), lay_(interleaved_layout(g)) {
    prof_.n = lay_.dim;
    prof_.fcol.resize(lay_.dim);
    for (int i = 0; i < lay_.dim; ++i) prof_.fcol[i] = i;

    auto widen = [this](const BlockMatrix& m, const std::vector<int>& rbase,
                        const std::vector<int>& cbase) {
      for (const auto& [key, blk] : m.blocks) {
        const int r0 = rbase[key.first];
        const int c0 = cbase[key.second];
        for (int i = 0; i < blk.rows(); ++i)
          if (c0 < r0 + i) prof_.fcol[r0 + i] = std::min(prof_.fcol[r0 + i], c0);
        for (int j = 0; j < blk.cols(); ++j)
          if (r0 < c0 + j) prof_.fcol[c0 + j] = std::min(prof_.fcol[c0 + j], r0);
      }
    };
    widen(g.R, lay_.u_pos, lay_.u_pos);
    widen(g.S, lay_.x_pos, lay_.u_pos);
    widen(g.Q, lay_.x_pos, lay_.x_pos);
    widen(g.B, lay_.l_pos, lay_.u_pos);
    widen(g.A, lay_.l_pos, lay_.x_pos);

    prof_.rp.resize(lay_.dim + 1);
    prof_.rp[0] = 0;
    for (int i = 0; i < lay_.dim; ++i)
      prof_.rp[i + 1] = prof_.rp[i] + static_cast<std::size_t>(i - prof_.fcol[i] + 1);
    prof_.a.assign(prof_.rp.back(), 0.0);
  }

  const KktLayout& layout() const { return lay_; }
  ProfileMatrix& profile() { return prof_; }
  std::uint64_t fill() const { return prof_.fill(); }

  /// d: barrier diagonal on the input variables (size n_inputs); reg goes on
  /// the multiplier diagonal with a negative sign.
  void fill_values(const Vector& d, double reg, FlopCount* fc) {
    std::fill(prof_.a.begin(), prof_.a.end(), 0.0);
    scatter(g_->R, lay_.u_pos, lay_.u_pos, 1.0);
    scatter(g_->S, lay_.x_pos, lay_.u_pos, 1.0);
    scatter(g_->Q, lay_.x_pos, lay_.x_pos, 1.0);
    scatter(g_->B, lay_.l_pos, lay_.u_pos, -1.0);
    scatter(g_->A, lay_.l_pos, lay_.x_pos, 1.0);
    const int n_win = g_->win.count();
    for (int w = 0; w < n_win; ++w)
      for (int i = 0; i < lay_.nu; ++i) {
        const int gi = lay_.u_pos[w] + i;
        prof_.at(gi, gi) += d[static_cast<size_t>(w) * lay_.nu + i];
      }
    count_adds(fc, d.size());
    for (size_t l = 0; l < lay_.l_pos.size(); ++l)
      for (int i = 0; i < lay_.nx; ++i) {
        const int gi = lay_.l_pos[l] + i;
        prof_.at(gi, gi) = -reg;
      }
  }

 private:
  void scatter(const BlockMatrix& m, const std::vector<int>& rbase, const std::vector<int>& cbase,
               double sign) {
    for (const auto& [key, blk] : m.blocks) {
      const int r0 = rbase[key.first];
      const int c0 = cbase[key.second];
      for (int i = 0; i < blk.rows(); ++i)
        for (int j = 0; j < blk.cols(); ++j) {
          const int gi = r0 + i, gj = c0 + j;
          if (gi >= gj)
            prof_.at(gi, gj) = sign * blk(i, j);
          else if (&rbase != &cbase || key.first != key.second)
            prof_.at(gj, gi) = sign * blk(i, j);
        }
    }
  }

  const GeneralizedQp* g_;
  KktLayout lay_;
  ProfileMatrix prof_;
};

}  // namespace mpcqp
