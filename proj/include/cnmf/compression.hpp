#pragma once

#include <cstdint>

#include "cnmf/matrix.hpp"

namespace cnmf {

// Sketch geometry for the randomized range finders. q is the compressed
// dimension (target rank plus oversampling) and power_iterations is the
// number of stabilized subspace iterations applied on top of the plain
// sketch.
struct SketchConfig {
  std::size_t q = 0;
  std::size_t power_iterations = 4;
  std::uint64_t seed = 1;
};

// Row-compression pair for a d x n matrix: left is d x q (orthonormal
// columns, applied as left^T x), right is q x n (orthonormal rows, applied
// as x right^T).
struct ProjectorPair {
  DenseMatrix left;
  DenseMatrix right;
};

// Dense i.i.d. standard normal matrix, deterministic in the seed.
DenseMatrix gaussian_sketch(std::size_t rows, std::size_t cols, std::uint64_t seed);

// Orthonormal basis (rows x q) for the approximate range of x, computed by a
// gaussian sketch followed by power_iterations rounds of subspace iteration.
// Every application of x or x^T is followed by a re-orthonormalization, so
// powers of the gram matrix are never formed explicitly.
DenseMatrix powered_range_finder(const DenseMatrix& x, const SketchConfig& config);
DenseMatrix powered_range_finder(const SparseMatrix& x, const SketchConfig& config);

// Builds both projectors for x: left spans the column space of x and right
// spans the row space (as orthonormal rows). The two range finders draw from
// decorrelated streams derived from config.seed.
ProjectorPair build_projectors(const DenseMatrix& x, const SketchConfig& config);
ProjectorPair build_projectors(const SparseMatrix& x, const SketchConfig& config);

// Compressed views of the data and of the factors. compress_left is
// left^T x (q x n), compress_right is x right^T (d x q); the factor helpers
// compress a (d x k) to left^T a (q x k) and b (n x k) to right b (q x k).
DenseMatrix compress_left(const DenseMatrix& x, const ProjectorPair& p);
DenseMatrix compress_left(const SparseMatrix& x, const ProjectorPair& p);
DenseMatrix compress_right(const DenseMatrix& x, const ProjectorPair& p);
DenseMatrix compress_right(const SparseMatrix& x, const ProjectorPair& p);
DenseMatrix compress_factor_a(const DenseMatrix& a, const ProjectorPair& p);
DenseMatrix compress_factor_b(const DenseMatrix& b, const ProjectorPair& p);

}  // namespace cnmf
