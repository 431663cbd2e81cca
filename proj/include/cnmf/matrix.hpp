#pragma once

#include <cstddef>
#include <vector>

namespace cnmf {

// Dense row-major matrix of doubles.
// Invariants: values.size() == rows * cols; entries finite after any
// public operation in this library.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

  double* row(std::size_t i) { return values.data() + i * cols; }
  const double* row(std::size_t i) const { return values.data() + i * cols; }

  bool same_shape(const DenseMatrix& other) const {
    return rows == other.rows && cols == other.cols;
  }
};

// Compressed sparse row matrix. Invariants: row_offsets.size() == rows + 1,
// row_offsets non-decreasing with row_offsets[rows] == values.size(), column
// indices strictly increasing within each row, stored values non-zero and
// finite.
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_offsets;  // size rows + 1
  std::vector<std::size_t> col_indices;
  std::vector<double> values;

  std::size_t nnz() const { return values.size(); }
  DenseMatrix to_dense() const;
  void validate() const;  // throws on any invariant violation
};

struct Triplet {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

// Duplicate (row, col) entries are summed; entries that are (or sum to)
// exactly zero are dropped.
SparseMatrix sparse_from_triplets(std::size_t rows, std::size_t cols,
                                  std::vector<Triplet> triplets);

// Factor pair for X (d x n) ~= A * B^T with A (d x k), B (n x k); component
// vectors a_j, b_j are the columns of A and B.
struct FactorPair {
  DenseMatrix a;
  DenseMatrix b;
};

// C = op(M) * op(N) where op is optional transposition. Dimension mismatches
// throw DimensionError naming both operand shapes. The sparse overload
// supports a sparse left operand only; results are always dense.
DenseMatrix matmul(const DenseMatrix& m, const DenseMatrix& n,
                   bool transpose_left = false, bool transpose_right = false);
DenseMatrix matmul(const SparseMatrix& m, const DenseMatrix& n,
                   bool transpose_left = false, bool transpose_right = false);

// y = op(M) * v.
std::vector<double> matvec(const DenseMatrix& m, const std::vector<double>& v,
                           bool transpose = false);
std::vector<double> matvec(const SparseMatrix& m, const std::vector<double>& v,
                           bool transpose = false);

double frobenius_norm_sq(const DenseMatrix& m);
double frobenius_norm_sq(const SparseMatrix& m);

// Bounds-checked column access; columns of a row-major matrix are strided, so
// they are materialized as vectors.
std::vector<double> column(const DenseMatrix& m, std::size_t j);
void set_column(DenseMatrix& m, std::size_t j, const std::vector<double>& v);

// Entrywise max(v, 0); maps negative zeros to +0 and is idempotent.
std::vector<double> clamp_nonnegative(std::vector<double> v);
DenseMatrix clamp_nonnegative(DenseMatrix m);

DenseMatrix transpose(const DenseMatrix& m);
DenseMatrix identity(std::size_t n);

double dot(const std::vector<double>& a, const std::vector<double>& b);

bool all_finite(const DenseMatrix& m);

}  // namespace cnmf
