#pragma once

#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mpcqp/matrix.hpp"

namespace mpcqp {

/// Block-sparse matrix: dense blocks on a fixed block grid, keyed by
/// (block row, block col). Zero blocks are never stored. This is the storage
/// everything downstream manipulates; structural nonzero counts scan the
/// stored blocks for nonzero entries.
struct BlockMatrix {
  std::vector<int> row_dims;
  std::vector<int> col_dims;
  std::vector<int> row_off;  // size row_dims.size()+1
  std::vector<int> col_off;
  std::map<std::pair<int, int>, Matrix> blocks;

  BlockMatrix() { row_off = col_off = {0}; }

  BlockMatrix(std::vector<int> rdims, std::vector<int> cdims)
      : row_dims(std::move(rdims)), col_dims(std::move(cdims)) {
    row_off.resize(row_dims.size() + 1, 0);
    for (size_t i = 0; i < row_dims.size(); ++i) row_off[i + 1] = row_off[i] + row_dims[i];
    col_off.resize(col_dims.size() + 1, 0);
    for (size_t j = 0; j < col_dims.size(); ++j) col_off[j + 1] = col_off[j] + col_dims[j];
  }

  static BlockMatrix uniform(int brows, int bcols, int rdim, int cdim) {
    return BlockMatrix(std::vector<int>(brows, rdim), std::vector<int>(bcols, cdim));
  }

  int block_rows() const { return static_cast<int>(row_dims.size()); }
  int block_cols() const { return static_cast<int>(col_dims.size()); }
  int rows() const { return row_off.back(); }
  int cols() const { return col_off.back(); }

  bool has(int i, int j) const { return blocks.count({i, j}) != 0; }

  const Matrix& at(int i, int j) const {
    auto it = blocks.find({i, j});
    if (it == blocks.end()) throw std::out_of_range("BlockMatrix: missing block");
    return it->second;
  }

  void set(int i, int j, Matrix m) {
    if (m.rows() != row_dims[i] || m.cols() != col_dims[j])
      throw std::invalid_argument("BlockMatrix: block dimension mismatch");
    blocks[{i, j}] = std::move(m);
  }

  /// c(i,j) += a*b with identity fast paths; fresh blocks come from mul().
  void accumulate_product(int i, int j, const Matrix& a, const Matrix& b, FlopCount* fc) {
    auto it = blocks.find({i, j});
    if (it == blocks.end()) {
      set(i, j, mul(a, b, fc));
    } else if (a.identity) {
      add_accum(it->second, b, fc);
    } else if (b.identity) {
      add_accum(it->second, a, fc);
    } else {
      mul_accum(it->second, a, b, fc);
    }
  }

  void accumulate_block(int i, int j, const Matrix& m, FlopCount* fc) {
    auto it = blocks.find({i, j});
    if (it == blocks.end())
      set(i, j, m);
    else
      add_accum(it->second, m, fc);
  }
};

inline BlockMatrix bm_transpose(const BlockMatrix& a) {
  BlockMatrix t(a.col_dims, a.row_dims);
  for (const auto& [key, m] : a.blocks) t.set(key.second, key.first, transpose(m));
  return t;
}

inline BlockMatrix bm_mul(const BlockMatrix& a, const BlockMatrix& b, FlopCount* fc) {
  if (a.col_dims != b.row_dims) throw std::invalid_argument("bm_mul: block grid mismatch");
  BlockMatrix c(a.row_dims, b.col_dims);
  for (const auto& [akey, ablk] : a.blocks) {
    const int i = akey.first, k = akey.second;
    auto it = b.blocks.lower_bound({k, 0});
    for (; it != b.blocks.end() && it->first.first == k; ++it)
      c.accumulate_product(i, it->first.second, ablk, it->second, fc);
  }
  return c;
}

/// a += b
inline void bm_add(BlockMatrix& a, const BlockMatrix& b, FlopCount* fc) {
  if (a.row_dims != b.row_dims || a.col_dims != b.col_dims)
    throw std::invalid_argument("bm_add: block grid mismatch");
  for (const auto& [key, m] : b.blocks) a.accumulate_block(key.first, key.second, m, fc);
}

inline Vector bm_matvec(const BlockMatrix& a, const Vector& x, FlopCount* fc) {
  if (static_cast<int>(x.size()) != a.cols()) throw std::invalid_argument("bm_matvec: size mismatch");
  Vector y(a.rows(), 0.0);
  for (const auto& [key, m] : a.blocks)
    matvec_accum(m, x.data() + a.col_off[key.second], y.data() + a.row_off[key.first], fc);
  return y;
}

inline Vector bm_tmatvec(const BlockMatrix& a, const Vector& x, FlopCount* fc) {
  if (static_cast<int>(x.size()) != a.rows()) throw std::invalid_argument("bm_tmatvec: size mismatch");
  Vector y(a.cols(), 0.0);
  for (const auto& [key, m] : a.blocks)
    tmatvec_accum(m, x.data() + a.row_off[key.first], y.data() + a.col_off[key.second], fc);
  return y;
}

inline Matrix bm_to_dense(const BlockMatrix& a) {
  Matrix d(a.rows(), a.cols());
  for (const auto& [key, m] : a.blocks) {
    const int r0 = a.row_off[key.first], c0 = a.col_off[key.second];
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) d(r0 + i, c0 + j) = m(i, j);
  }
  return d;
}

/// Structural nonzeros: nonzero scalars of stored blocks.
inline std::uint64_t bm_nnz(const BlockMatrix& a) {
  std::uint64_t n = 0;
  for (const auto& [key, m] : a.blocks)
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j)
        if (m(i, j) != 0.0) ++n;
  return n;
}

inline double bm_max_abs(const BlockMatrix& a) {
  double v = 0.0;
  for (const auto& [key, m] : a.blocks) v = std::max(v, max_abs(m));
  return v;
}

/// Largest |a_ij - a_ji|; requires a structurally symmetric block layout.
inline double bm_sym_deviation(const BlockMatrix& a) {
  double dev = 0.0;
  for (const auto& [key, m] : a.blocks) {
    auto it = a.blocks.find({key.second, key.first});
    if (it == a.blocks.end()) {
      dev = std::max(dev, max_abs(m));
      continue;
    }
    const Matrix& p = it->second;
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) dev = std::max(dev, std::abs(m(i, j) - p(j, i)));
  }
  return dev;
}

inline void bm_symmetrize(BlockMatrix& a, FlopCount* fc) {
  for (auto& [key, m] : a.blocks) {
    const auto [i, j] = key;
    if (i > j) continue;
    auto it = a.blocks.find({j, i});
    if (it == a.blocks.end()) throw std::logic_error("bm_symmetrize: block layout not symmetric");
    Matrix& p = it->second;
    if (i == j) {
      for (int r = 0; r < m.rows(); ++r)
        for (int c = r + 1; c < m.cols(); ++c) {
          const double v = 0.5 * (m(r, c) + m(c, r));
          m(r, c) = v;
          m(c, r) = v;
        }
      count_adds(fc, static_cast<std::uint64_t>(m.rows()) * (m.rows() - 1) / 2);
      count_muls(fc, static_cast<std::uint64_t>(m.rows()) * (m.rows() - 1) / 2);
    } else {
      for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c) {
          const double v = 0.5 * (m(r, c) + p(c, r));
          m(r, c) = v;
          p(c, r) = v;
        }
      count_adds(fc, static_cast<std::uint64_t>(m.rows()) * m.cols());
      count_muls(fc, static_cast<std::uint64_t>(m.rows()) * m.cols());
    }
  }
}

inline bool bm_bitwise_equal(const BlockMatrix& a, const BlockMatrix& b) {
  if (a.row_dims != b.row_dims || a.col_dims != b.col_dims) return false;
  if (a.blocks.size() != b.blocks.size()) return false;
  auto ia = a.blocks.begin();
  auto ib = b.blocks.begin();
  for (; ia != a.blocks.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return false;
    if (!bitwise_equal(ia->second, ib->second)) return false;
  }
  return true;
}

}  // namespace mpcqp
