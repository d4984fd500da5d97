#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mpcqp/matrix.hpp"

namespace mpcqp {

/// Dense LU with partial pivoting. Not FLOP-instrumented; used for small
/// reference solves (matrix exponential, active-set enumeration candidates).
class DenseLu {
 public:
  explicit DenseLu(Matrix a) : lu_(std::move(a)), piv_(lu_.rows()) {
    const int n = lu_.rows();
    if (lu_.cols() != n) throw std::invalid_argument("DenseLu: matrix must be square");
    double scale = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(lu_(i, j)));
    const double tiny = 1e-13 * (1.0 + scale);
    for (int k = 0; k < n; ++k) {
      int p = k;
      for (int i = k + 1; i < n; ++i)
        if (std::abs(lu_(i, k)) > std::abs(lu_(p, k))) p = i;
      piv_[k] = p;
      if (p != k)
        for (int j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
      if (std::abs(lu_(k, k)) <= tiny) {
        singular_ = true;
        return;
      }
      for (int i = k + 1; i < n; ++i) {
        lu_(i, k) /= lu_(k, k);
        const double lik = lu_(i, k);
        for (int j = k + 1; j < n; ++j) lu_(i, j) -= lik * lu_(k, j);
      }
    }
  }

  bool singular() const { return singular_; }

  Vector solve(Vector b) const {
    const int n = lu_.rows();
    if (singular_) throw std::runtime_error("DenseLu: singular matrix");
    // rows were interchanged wholesale during factorization, so all swaps
    // apply to the right-hand side before the triangular solves
    for (int k = 0; k < n; ++k) std::swap(b[k], b[piv_[k]]);
    for (int k = 0; k < n; ++k)
      for (int i = k + 1; i < n; ++i) b[i] -= lu_(i, k) * b[k];
    for (int k = n - 1; k >= 0; --k) {
      for (int j = k + 1; j < n; ++j) b[k] -= lu_(k, j) * b[j];
      b[k] /= lu_(k, k);
    }
    return b;
  }

 private:
  Matrix lu_;
  std::vector<int> piv_;
  bool singular_ = false;
};

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
inline Vector symmetric_eigenvalues(Matrix a) {
  const int n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("symmetric_eigenvalues: matrix must be square");
  if (n == 0) return {};
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    double diag = 0.0;
    for (int i = 0; i < n; ++i) diag += a(i, i) * a(i, i);
    if (off <= 1e-30 * (1.0 + diag)) break;
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  Vector ev(n);
  for (int i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

namespace detail {

inline double one_norm(const Matrix& a) {
  double r = 0.0;
  for (int j = 0; j < a.cols(); ++j) {
    double c = 0.0;
    for (int i = 0; i < a.rows(); ++i) c += std::abs(a(i, j));
    r = std::max(r, c);
  }
  return r;
}

}  // namespace detail

/// Matrix exponential by scaling-and-squaring with a degree-13 Pade
/// approximant; accurate to machine precision for well-scaled inputs.
inline Matrix expm(const Matrix& a) {
  const int n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("expm: matrix must be square");
  if (!all_finite(a)) throw std::invalid_argument("expm: non-finite input");

  static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                             1187353796428800.0,  129060195264000.0,   10559470521600.0,
                             670442572800.0,      33522128640.0,       1323241920.0,
                             40840800.0,          960960.0,            16380.0,
                             182.0,               1.0};
  const double theta13 = 5.371920351148152;

  const double nrm = detail::one_norm(a);
  int s = 0;
  if (nrm > theta13) s = static_cast<int>(std::ceil(std::log2(nrm / theta13)));
  Matrix as = a;
  if (s > 0) scale(as, std::ldexp(1.0, -s), nullptr);

  const Matrix a2 = mul(as, as, nullptr);
  const Matrix a4 = mul(a2, a2, nullptr);
  const Matrix a6 = mul(a2, a4, nullptr);
  const Matrix eye = Matrix::Identity(n);

  auto lincomb = [&](double c6, double c4, double c2, double c0) {
    Matrix r(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        r(i, j) = c6 * a6(i, j) + c4 * a4(i, j) + c2 * a2(i, j) + c0 * eye(i, j);
    return r;
  };

  Matrix w1 = lincomb(b[13], b[11], b[9], 0.0);
  Matrix w2 = lincomb(b[7], b[5], b[3], b[1]);
  Matrix w = mul(a6, w1, nullptr);
  add_accum(w, w2, nullptr);
  Matrix u = mul(as, w, nullptr);

  Matrix z1 = lincomb(b[12], b[10], b[8], 0.0);
  Matrix v = mul(a6, z1, nullptr);
  Matrix z2 = lincomb(b[6], b[4], b[2], b[0]);
  add_accum(v, z2, nullptr);

  // (V - U) F = (V + U)
  Matrix num = v, den = v;
  add_accum(num, u, nullptr);
  sub_accum(den, u, nullptr);
  DenseLu lu(den);
  if (lu.singular()) throw std::runtime_error("expm: Pade denominator singular");
  Matrix f(n, n);
  for (int j = 0; j < n; ++j) {
    Vector col(n);
    for (int i = 0; i < n; ++i) col[i] = num(i, j);
    col = lu.solve(col);
    for (int i = 0; i < n; ++i) f(i, j) = col[i];
  }
  for (int k = 0; k < s; ++k) f = mul(f, f, nullptr);
  return f;
}

}  // namespace mpcqp
