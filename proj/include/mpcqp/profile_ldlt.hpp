#pragma once

#include <cmath>
#include <vector>

#include "mpcqp/kkt.hpp"

namespace mpcqp {

struct LdltInfo {
  int pivots_floored = 0;
};

/// In-place LDL^T of a symmetric envelope matrix with 1x1 pivots in the given
/// order (no pivoting, so the envelope is preserved exactly). Pivots whose
/// sign disagrees with the variable class, or that are too small, are floored
/// to a signed epsilon; iterative refinement downstream absorbs the
/// perturbation. After the call the strictly-lower envelope holds L and the
/// diagonal holds D.
inline LdltInfo profile_ldlt_factor(ProfileMatrix& m, const std::vector<signed char>& dual,
                                    FlopCount* fc) {
  const int n = m.n;
  LdltInfo info;
  double diag_scale = 0.0;
  for (int i = 0; i < n; ++i) diag_scale = std::max(diag_scale, std::abs(m.at(i, i)));
  const double floor = 1e-12 * (1.0 + diag_scale);

  std::vector<double> w(n, 0.0);  // w[k] = L(i,k) * D(k) for the active row
  std::uint64_t fmas = 0, divs = 0, muls = 0;
  for (int i = 0; i < n; ++i) {
    const int fi = m.fcol[i];
    double* row_i = m.a.data() + m.rp[i];
    for (int j = fi; j < i; ++j) {
      const int lo = std::max(fi, m.fcol[j]);
      const double* row_j = m.a.data() + m.rp[j] - m.fcol[j];
      double s = row_i[j - fi];
      for (int k = lo; k < j; ++k) s -= w[k] * row_j[k];
      fmas += static_cast<std::uint64_t>(j - lo);
      const double dj = row_j[j];
      const double lij = s / dj;
      divs += 1;
      row_i[j - fi] = lij;
      w[j] = lij * dj;
      muls += 1;
    }
    double d = row_i[i - fi];
    for (int k = fi; k < i; ++k) d -= w[k] * row_i[k - fi];
    fmas += static_cast<std::uint64_t>(i - fi);
    const double sign = dual[i] ? -1.0 : 1.0;
    if (sign * d <= floor) {
      d = sign * floor;
      ++info.pivots_floored;
    }
    row_i[i - fi] = d;
  }
  if (fc) {
    fc->adds += fmas;
    fc->muls += fmas + muls;
    fc->divs += divs;
  }
  return info;
}

/// Solves L D L^T x = b in place using a factored profile matrix.
inline void profile_ldlt_solve(const ProfileMatrix& m, Vector& b, FlopCount* fc) {
  const int n = m.n;
  std::uint64_t fmas = 0;
  for (int i = 0; i < n; ++i) {
    const int fi = m.fcol[i];
    const double* row_i = m.a.data() + m.rp[i];
    double s = b[i];
    for (int k = fi; k < i; ++k) s -= row_i[k - fi] * b[k];
    fmas += static_cast<std::uint64_t>(i - fi);
    b[i] = s;
  }
  for (int i = 0; i < n; ++i) b[i] /= m.a[m.rp[i] + static_cast<std::size_t>(i - m.fcol[i])];
  for (int i = n - 1; i >= 0; --i) {
    const int fi = m.fcol[i];
    const double* row_i = m.a.data() + m.rp[i];
    const double bi = b[i];
    for (int k = fi; k < i; ++k) b[k] -= row_i[k - fi] * bi;
    fmas += static_cast<std::uint64_t>(i - fi);
  }
  if (fc) {
    fc->adds += fmas;
    fc->muls += fmas;
    fc->divs += static_cast<std::uint64_t>(n);
  }
}

}  // namespace mpcqp
