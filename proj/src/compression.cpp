#include "cnmf/compression.hpp"

#include <algorithm>

#include "cnmf/errors.hpp"
#include "cnmf/qr.hpp"
#include "cnmf/rng.hpp"

namespace cnmf {

DenseMatrix gaussian_sketch(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  DenseMatrix m(rows, cols);
  for (double& v : m.values) v = rng.normal();
  return m;
}

namespace {

// Range finder for x or x^T, chosen by use_transpose. The operator and its
// adjoint are applied through the matmul transpose flags so a sparse x is
// never densified or materialized transposed.
template <typename MatT>
DenseMatrix range_finder_impl(const MatT& x, bool use_transpose, std::size_t q,
                              std::size_t power_iterations, std::uint64_t seed) {
  const std::size_t op_rows = use_transpose ? x.cols : x.rows;
  const std::size_t op_cols = use_transpose ? x.rows : x.cols;
  if (q == 0 || q > std::min(op_rows, op_cols))
    throw ConfigError("powered_range_finder: q must satisfy 1 <= q <= min(rows, cols)");

  DenseMatrix omega = gaussian_sketch(op_cols, q, seed);
  DenseMatrix basis = thin_qr(use_transpose ? matmul(x, omega, true, false)
                                            : matmul(x, omega)).q;
  for (std::size_t it = 0; it < power_iterations; ++it) {
    // Re-orthonormalize after each application so the iterate never carries
    // an explicit power of the gram matrix.
    DenseMatrix z = thin_qr(use_transpose ? matmul(x, basis)
                                          : matmul(x, basis, true, false)).q;
    basis = thin_qr(use_transpose ? matmul(x, z, true, false) : matmul(x, z)).q;
  }
  return basis;
}

template <typename MatT>
ProjectorPair build_projectors_impl(const MatT& x, const SketchConfig& config) {
  // Distinct substreams for the two sketches so the row and column projectors
  // are drawn independently of one another.
  DenseMatrix left = range_finder_impl(x, false, config.q, config.power_iterations,
                                       config.seed * 2);
  DenseMatrix row_basis = range_finder_impl(x, true, config.q, config.power_iterations,
                                            config.seed * 2 + 1);
  return {std::move(left), transpose(row_basis)};
}

}  // namespace

DenseMatrix powered_range_finder(const DenseMatrix& x, const SketchConfig& config) {
  return range_finder_impl(x, false, config.q, config.power_iterations, config.seed);
}

DenseMatrix powered_range_finder(const SparseMatrix& x, const SketchConfig& config) {
  return range_finder_impl(x, false, config.q, config.power_iterations, config.seed);
}

ProjectorPair build_projectors(const DenseMatrix& x, const SketchConfig& config) {
  return build_projectors_impl(x, config);
}

ProjectorPair build_projectors(const SparseMatrix& x, const SketchConfig& config) {
  return build_projectors_impl(x, config);
}

DenseMatrix compress_left(const DenseMatrix& x, const ProjectorPair& p) {
  return matmul(p.left, x, true, false);
}

DenseMatrix compress_left(const SparseMatrix& x, const ProjectorPair& p) {
  // left^T x == (x^T left)^T keeps the sparse operand on the left.
  return transpose(matmul(x, p.left, true, false));
}

DenseMatrix compress_right(const DenseMatrix& x, const ProjectorPair& p) {
  return matmul(x, p.right, false, true);
}

DenseMatrix compress_right(const SparseMatrix& x, const ProjectorPair& p) {
  return matmul(x, p.right, false, true);
}

DenseMatrix compress_factor_a(const DenseMatrix& a, const ProjectorPair& p) {
  return matmul(p.left, a, true, false);
}

DenseMatrix compress_factor_b(const DenseMatrix& b, const ProjectorPair& p) {
  return matmul(p.right, b);
}

}  // namespace cnmf
