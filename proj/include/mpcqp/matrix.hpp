#pragma once

#include <cassert>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "mpcqp/flops.hpp"

namespace mpcqp {

using Vector = std::vector<double>;

/// Dense row-major matrix. `identity` is an exactness hint: when set, the
/// values are exactly the identity and products with it are plain copies
/// (zero FLOPs), which keeps identity transformations bit-exact.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, 0.0) {}

  static Matrix Identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    m.identity = true;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

  double* data() { return a_.data(); }
  const double* data() const { return a_.data(); }

  bool is_zero() const {
    for (double v : a_)
      if (v != 0.0) return false;
    return true;
  }

  bool identity = false;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> a_;
};

inline bool bitwise_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return std::memcmp(a.data(), b.data(), sizeof(double) * a.rows() * a.cols()) == 0;
}

inline Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  t.identity = m.identity;
  return t;
}

inline Matrix negate(const Matrix& m) {
  Matrix r(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) r(i, j) = -m(i, j);
  return r;
}

/// c += a * b
inline void mul_accum(Matrix& c, const Matrix& a, const Matrix& b, FlopCount* fc) {
  assert(a.cols() == b.rows() && c.rows() == a.rows() && c.cols() == b.cols());
  const int m = a.rows(), k = a.cols(), n = b.cols();
  c.identity = false;
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      const double aip = a(i, p);
      for (int j = 0; j < n; ++j) c(i, j) += aip * b(p, j);
    }
  count_fma(fc, static_cast<std::uint64_t>(m) * k * n);
}

inline Matrix mul(const Matrix& a, const Matrix& b, FlopCount* fc) {
  assert(a.cols() == b.rows());
  if (a.identity) return b;  // copy, zero FLOPs
  if (b.identity) return a;
  Matrix c(a.rows(), b.cols());
  mul_accum(c, a, b, fc);
  return c;
}

/// a += b (identity hint dropped)
inline void add_accum(Matrix& a, const Matrix& b, FlopCount* fc) {
  assert(a.rows() == b.rows() && a.cols() == b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) a(i, j) += b(i, j);
  a.identity = false;
  count_adds(fc, static_cast<std::uint64_t>(a.rows()) * a.cols());
}

inline void sub_accum(Matrix& a, const Matrix& b, FlopCount* fc) {
  assert(a.rows() == b.rows() && a.cols() == b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) a(i, j) -= b(i, j);
  a.identity = false;
  count_adds(fc, static_cast<std::uint64_t>(a.rows()) * a.cols());
}

inline void scale(Matrix& a, double s, FlopCount* fc) {
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) a(i, j) *= s;
  a.identity = false;
  count_muls(fc, static_cast<std::uint64_t>(a.rows()) * a.cols());
}

/// y += A x over raw spans (used by block kernels)
inline void matvec_accum(const Matrix& a, const double* x, double* y, FlopCount* fc) {
  for (int i = 0; i < a.rows(); ++i) {
    double s = y[i];
    for (int j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  count_fma(fc, static_cast<std::uint64_t>(a.rows()) * a.cols());
}

/// y += A^T x over raw spans
inline void tmatvec_accum(const Matrix& a, const double* x, double* y, FlopCount* fc) {
  for (int i = 0; i < a.rows(); ++i) {
    const double xi = x[i];
    for (int j = 0; j < a.cols(); ++j) y[j] += a(i, j) * xi;
  }
  count_fma(fc, static_cast<std::uint64_t>(a.rows()) * a.cols());
}

inline Vector matvec(const Matrix& a, const Vector& x, FlopCount* fc) {
  assert(static_cast<int>(x.size()) == a.cols());
  Vector y(a.rows(), 0.0);
  matvec_accum(a, x.data(), y.data(), fc);
  return y;
}

inline double max_abs(const Matrix& m) {
  double v = 0.0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) v = std::max(v, std::abs(m(i, j)));
  return v;
}

inline double norm_inf(const Vector& v) {
  double r = 0.0;
  for (double x : v) r = std::max(r, std::abs(x));
  return r;
}

inline double dot(const Vector& a, const Vector& b, FlopCount* fc) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  count_fma(fc, a.size());
  return s;
}

inline void axpy(Vector& y, double alpha, const Vector& x, FlopCount* fc) {
  assert(x.size() == y.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
  count_fma(fc, x.size());
}

inline Vector add(const Vector& a, const Vector& b, FlopCount* fc) {
  assert(a.size() == b.size());
  Vector r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  count_adds(fc, a.size());
  return r;
}

inline Vector sub(const Vector& a, const Vector& b, FlopCount* fc) {
  assert(a.size() == b.size());
  Vector r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  count_adds(fc, a.size());
  return r;
}

inline bool all_finite(const Matrix& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (!std::isfinite(m(i, j))) return false;
  return true;
}

inline bool all_finite(const Vector& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace mpcqp
