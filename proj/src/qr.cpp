#include "cnmf/qr.hpp"

#include <cmath>
#include <vector>

#include "cnmf/errors.hpp"

namespace cnmf {

QrResult thin_qr(const DenseMatrix& m) {
  if (m.rows < m.cols)
    throw DimensionError("thin_qr: input must have at least as many rows as columns");
  const std::size_t rows = m.rows;
  const std::size_t cols = m.cols;

  const double deficiency_floor = 1e-12 * std::sqrt(frobenius_norm_sq(m));

  DenseMatrix w = m;
  // Unit Householder vectors, one per column; empty vector means the column
  // was numerically dependent and no reflection was applied.
  std::vector<std::vector<double>> reflectors(cols);

  for (std::size_t j = 0; j < cols; ++j) {
    double normx_sq = 0.0;
    for (std::size_t i = j; i < rows; ++i) normx_sq += w(i, j) * w(i, j);
    const double normx = std::sqrt(normx_sq);

    if (normx < deficiency_floor) {
      // Dependent column: leave r's diagonal at zero and discard the
      // negligible residual below it.
      for (std::size_t i = j; i < rows; ++i) w(i, j) = 0.0;
      continue;
    }

    const double alpha = w(j, j) >= 0.0 ? -normx : normx;
    std::vector<double> v(rows - j);
    for (std::size_t i = j; i < rows; ++i) v[i - j] = w(i, j);
    v[0] -= alpha;
    double vnorm = 0.0;
    for (double x : v) vnorm += x * x;
    vnorm = std::sqrt(vnorm);
    for (double& x : v) x /= vnorm;

    for (std::size_t c = j; c < cols; ++c) {
      double proj = 0.0;
      for (std::size_t i = j; i < rows; ++i) proj += v[i - j] * w(i, c);
      proj *= 2.0;
      for (std::size_t i = j; i < rows; ++i) w(i, c) -= proj * v[i - j];
    }
    w(j, j) = alpha;
    for (std::size_t i = j + 1; i < rows; ++i) w(i, j) = 0.0;
    reflectors[j] = std::move(v);
  }

  DenseMatrix r(cols, cols);
  for (std::size_t i = 0; i < cols; ++i)
    for (std::size_t j = i; j < cols; ++j) r(i, j) = w(i, j);

  // Q is the leading cols columns of H_0 ... H_{cols-1}, built by applying
  // the reflectors to a slice of the identity in reverse order.
  DenseMatrix q(rows, cols);
  for (std::size_t j = 0; j < cols; ++j) q(j, j) = 1.0;
  for (std::size_t jj = cols; jj-- > 0;) {
    const std::vector<double>& v = reflectors[jj];
    if (v.empty()) continue;
    for (std::size_t c = 0; c < cols; ++c) {
      double proj = 0.0;
      for (std::size_t i = jj; i < rows; ++i) proj += v[i - jj] * q(i, c);
      proj *= 2.0;
      for (std::size_t i = jj; i < rows; ++i) q(i, c) -= proj * v[i - jj];
    }
  }

  return {std::move(q), std::move(r)};
}

}  // namespace cnmf
