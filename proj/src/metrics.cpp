#include "cnmf/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "cnmf/errors.hpp"
#include "cnmf/rng.hpp"

namespace cnmf {

std::string_view run_status_name(RunStatus s) {
  switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::reached_max_iterations: return "reached_max_iterations";
    case RunStatus::aborted: return "aborted";
  }
  return "aborted";
}

CostEstimate estimate_cost(Algorithm algorithm, std::size_t d, std::size_t n,
                           std::size_t k, std::size_t q) {
  if (d == 0 || n == 0 || k == 0)
    throw ConfigError("estimate_cost: d, n, k must all be positive");
  if (is_rp(algorithm) && q == 0)
    throw ConfigError("estimate_cost: compressed algorithms require q > 0");
  if (!is_rp(algorithm) && q != 0)
    throw ConfigError("estimate_cost: q applies to compressed algorithms only");

  CostEstimate e;
  e.algorithm = algorithm;
  e.d = d;
  e.n = n;
  e.k = k;
  e.q = q;
  const double dd = static_cast<double>(d);
  const double dn = static_cast<double>(n);
  const double dk = static_cast<double>(k);
  const double dq = static_cast<double>(q);
  switch (algorithm) {
    case Algorithm::mu: e.flops_per_iteration = 8.0 * dd * dn * dk; break;
    case Algorithm::hals: e.flops_per_iteration = 8.0 * dd * dn * dk; break;
    case Algorithm::fasthals: e.flops_per_iteration = 4.0 * dd * dn * dk; break;
    case Algorithm::mu_rp: e.flops_per_iteration = 4.0 * dd * dk * dq; break;
    case Algorithm::hals_rp: e.flops_per_iteration = 4.0 * dd * dn * dk * dq; break;
    case Algorithm::fasthals_rp: e.flops_per_iteration = 2.0 * dd * dk * dq; break;
  }
  e.memory_floats = is_rp(algorithm) ? (2.0 * dq + dk) * (dd + dn)
                                     : dd * dn + dd * dk + dn * dk;
  return e;
}

namespace {

void check_factor_shapes(std::size_t rows, std::size_t cols, const FactorPair& f) {
  if (f.a.rows != rows || f.b.rows != cols || f.a.cols != f.b.cols)
    throw DimensionError("reconstruction_error: factor shapes do not match the data");
}

}  // namespace

double reconstruction_error(const DenseMatrix& x, const FactorPair& factors) {
  check_factor_shapes(x.rows, x.cols, factors);
  const std::size_t k = factors.a.cols;
  double sum = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* ai = factors.a.row(i);
    const double* xi = x.row(i);
    for (std::size_t j = 0; j < x.cols; ++j) {
      const double* bj = factors.b.row(j);
      double pred = 0.0;
      for (std::size_t l = 0; l < k; ++l) pred += ai[l] * bj[l];
      const double diff = xi[j] - pred;
      sum += diff * diff;
    }
  }
  return 0.5 * sum;
}

double reconstruction_error(const SparseMatrix& x, const FactorPair& factors) {
  check_factor_shapes(x.rows, x.cols, factors);
  const std::size_t k = factors.a.cols;
  // 0.5*|X - AB^T|^2 = 0.5*|X|^2 - trace(B^T X^T A) + 0.5*trace((A^T A)(B^T B)),
  // which only ever touches the stored entries of X.
  double cross = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* ai = factors.a.row(i);
    for (std::size_t p = x.row_offsets[i]; p < x.row_offsets[i + 1]; ++p) {
      const double* bj = factors.b.row(x.col_indices[p]);
      double pred = 0.0;
      for (std::size_t l = 0; l < k; ++l) pred += ai[l] * bj[l];
      cross += x.values[p] * pred;
    }
  }
  DenseMatrix ata = matmul(factors.a, factors.a, true, false);
  DenseMatrix btb = matmul(factors.b, factors.b, true, false);
  double quad = 0.0;
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < k; ++c) quad += ata(r, c) * btb(c, r);
  const double err = 0.5 * frobenius_norm_sq(x) - cross + 0.5 * quad;
  // The expanded form can land a rounding error below zero on near-exact fits.
  return err > 0.0 ? err : 0.0;
}

double gini(const DenseMatrix& b) {
  if (b.values.empty()) throw InputError("gini: empty input");
  double total = 0.0;
  for (double v : b.values) {
    if (v < 0.0 || !std::isfinite(v))
      throw InputError("gini: entries must be finite and non-negative");
    total += v;
  }
  if (total == 0.0) throw InputError("gini: all-zero input has no defined coefficient");

  std::vector<double> sorted = b.values;
  std::stable_sort(sorted.begin(), sorted.end());
  const double m = static_cast<double>(sorted.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i)
    acc += (2.0 * static_cast<double>(i + 1) - m - 1.0) * sorted[i];
  return acc / (m * total);
}

DistortionStats pairwise_distortion(const DenseMatrix& x, const DenseMatrix& left,
                                    std::size_t sample_pairs, std::uint64_t seed) {
  if (x.cols < 2) throw InputError("pairwise_distortion: need at least two columns");
  if (left.rows != x.rows)
    throw DimensionError("pairwise_distortion: projector rows must match data rows");
  if (sample_pairs == 0) throw InputError("pairwise_distortion: sample_pairs must be positive");

  const DenseMatrix projected = matmul(left, x, true, false);  // q x n
  Rng rng(seed);
  auto column_distance = [](const DenseMatrix& m, std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) {
      const double diff = m(r, i) - m(r, j);
      s += diff * diff;
    }
    return std::sqrt(s);
  };

  DistortionStats stats;
  double sum = 0.0;
  for (std::size_t s = 0; s < sample_pairs; ++s) {
    const std::size_t i = rng.index(x.cols);
    std::size_t j = rng.index(x.cols);
    while (j == i) j = rng.index(x.cols);
    const double original = column_distance(x, i, j);
    const double compressed = column_distance(projected, i, j);
    const double rel = original == 0.0 ? 0.0 : std::abs(compressed - original) / original;
    stats.max_relative = std::max(stats.max_relative, rel);
    sum += rel;
  }
  stats.mean_relative = sum / static_cast<double>(sample_pairs);
  return stats;
}

double median(std::vector<double> values) {
  if (values.empty()) throw InputError("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace cnmf
