#include "cnmf/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "cnmf/errors.hpp"

namespace cnmf {

namespace {

std::string shape_str(std::size_t r, std::size_t c, bool transposed) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%zux%zu%s", r, c, transposed ? "^T" : "");
  return buf;
}

[[noreturn]] void throw_mismatch(const char* what, std::size_t lr, std::size_t lc,
                                 bool lt, std::size_t rr, std::size_t rc, bool rt) {
  throw DimensionError(std::string(what) + ": operand shapes " +
                       shape_str(lr, lc, lt) + " and " + shape_str(rr, rc, rt) +
                       " do not agree");
}

}  // namespace

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t p = row_offsets[i]; p < row_offsets[i + 1]; ++p)
      out(i, col_indices[p]) = values[p];
  return out;
}

void SparseMatrix::validate() const {
  if (row_offsets.size() != rows + 1)
    throw DimensionError("sparse matrix: row_offsets size must be rows + 1");
  if (row_offsets.front() != 0 || row_offsets.back() != values.size())
    throw DimensionError("sparse matrix: row_offsets endpoints malformed");
  if (col_indices.size() != values.size())
    throw DimensionError("sparse matrix: index/value arrays disagree");
  for (std::size_t i = 0; i < rows; ++i) {
    if (row_offsets[i] > row_offsets[i + 1])
      throw DimensionError("sparse matrix: row_offsets must be non-decreasing");
    for (std::size_t p = row_offsets[i]; p < row_offsets[i + 1]; ++p) {
      if (col_indices[p] >= cols)
        throw DimensionError("sparse matrix: column index out of range");
      if (p > row_offsets[i] && col_indices[p] <= col_indices[p - 1])
        throw DimensionError("sparse matrix: column indices must be strictly increasing per row");
      if (values[p] == 0.0 || !std::isfinite(values[p]))
        throw InputError("sparse matrix: stored values must be non-zero and finite");
    }
  }
}

SparseMatrix sparse_from_triplets(std::size_t rows, std::size_t cols,
                                  std::vector<Triplet> triplets) {
  for (const Triplet& t : triplets) {
    if (t.row >= rows || t.col >= cols)
      throw DimensionError("sparse_from_triplets: entry index out of range");
    if (!std::isfinite(t.value))
      throw InputError("sparse_from_triplets: non-finite value");
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseMatrix out;
  out.rows = rows;
  out.cols = cols;
  out.row_offsets.assign(rows + 1, 0);
  std::size_t i = 0;
  while (i < triplets.size()) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < triplets.size() && triplets[j].row == triplets[i].row &&
           triplets[j].col == triplets[i].col) {
      sum += triplets[j].value;
      ++j;
    }
    if (sum != 0.0) {
      out.col_indices.push_back(triplets[i].col);
      out.values.push_back(sum);
      out.row_offsets[triplets[i].row + 1] += 1;
    }
    i = j;
  }
  for (std::size_t r = 0; r < rows; ++r) out.row_offsets[r + 1] += out.row_offsets[r];
  return out;
}

DenseMatrix matmul(const DenseMatrix& m, const DenseMatrix& n,
                   bool transpose_left, bool transpose_right) {
  const std::size_t out_rows = transpose_left ? m.cols : m.rows;
  const std::size_t inner_l = transpose_left ? m.rows : m.cols;
  const std::size_t inner_r = transpose_right ? n.cols : n.rows;
  const std::size_t out_cols = transpose_right ? n.rows : n.cols;
  if (inner_l != inner_r)
    throw_mismatch("matmul", m.rows, m.cols, transpose_left, n.rows, n.cols,
                   transpose_right);

  DenseMatrix c(out_rows, out_cols);
  if (!transpose_left && !transpose_right) {
    // C[i][:] += M[i][l] * N[l][:], contiguous on N and C.
    for (std::size_t i = 0; i < out_rows; ++i) {
      double* ci = c.row(i);
      const double* mi = m.row(i);
      for (std::size_t l = 0; l < inner_l; ++l) {
        const double a = mi[l];
        if (a == 0.0) continue;
        const double* nl = n.row(l);
        for (std::size_t j = 0; j < out_cols; ++j) ci[j] += a * nl[j];
      }
    }
  } else if (!transpose_left && transpose_right) {
    // C[i][j] = dot(M row i, N row j).
    for (std::size_t i = 0; i < out_rows; ++i) {
      double* ci = c.row(i);
      const double* mi = m.row(i);
      for (std::size_t j = 0; j < out_cols; ++j) {
        const double* nj = n.row(j);
        double s = 0.0;
        for (std::size_t l = 0; l < inner_l; ++l) s += mi[l] * nj[l];
        ci[j] = s;
      }
    }
  } else if (transpose_left && !transpose_right) {
    // Accumulate outer products of M's rows with N's rows.
    for (std::size_t l = 0; l < inner_l; ++l) {
      const double* ml = m.row(l);
      const double* nl = n.row(l);
      for (std::size_t i = 0; i < out_rows; ++i) {
        const double a = ml[i];
        if (a == 0.0) continue;
        double* ci = c.row(i);
        for (std::size_t j = 0; j < out_cols; ++j) ci[j] += a * nl[j];
      }
    }
  } else {
    // C[i][j] = sum_l M[l][i] * N[j][l]; M rows stream contiguously.
    for (std::size_t j = 0; j < out_cols; ++j) {
      const double* nj = n.row(j);
      for (std::size_t l = 0; l < inner_l; ++l) {
        const double b = nj[l];
        if (b == 0.0) continue;
        const double* ml = m.row(l);
        for (std::size_t i = 0; i < out_rows; ++i) c(i, j) += ml[i] * b;
      }
    }
  }
  return c;
}

DenseMatrix matmul(const SparseMatrix& m, const DenseMatrix& n,
                   bool transpose_left, bool transpose_right) {
  const std::size_t out_rows = transpose_left ? m.cols : m.rows;
  const std::size_t inner_l = transpose_left ? m.rows : m.cols;
  const std::size_t inner_r = transpose_right ? n.cols : n.rows;
  const std::size_t out_cols = transpose_right ? n.rows : n.cols;
  if (inner_l != inner_r)
    throw_mismatch("matmul(sparse)", m.rows, m.cols, transpose_left, n.rows, n.cols,
                   transpose_right);

  DenseMatrix c(out_rows, out_cols);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t p = m.row_offsets[i]; p < m.row_offsets[i + 1]; ++p) {
      const std::size_t l = m.col_indices[p];
      const double v = m.values[p];
      if (!transpose_left && !transpose_right) {
        const double* nl = n.row(l);
        double* ci = c.row(i);
        for (std::size_t j = 0; j < out_cols; ++j) ci[j] += v * nl[j];
      } else if (!transpose_left && transpose_right) {
        double* ci = c.row(i);
        for (std::size_t j = 0; j < out_cols; ++j) ci[j] += v * n(j, l);
      } else if (transpose_left && !transpose_right) {
        const double* ni = n.row(i);
        double* cl = c.row(l);
        for (std::size_t j = 0; j < out_cols; ++j) cl[j] += v * ni[j];
      } else {
        double* cl = c.row(l);
        for (std::size_t j = 0; j < out_cols; ++j) cl[j] += v * n(j, i);
      }
    }
  }
  return c;
}

std::vector<double> matvec(const DenseMatrix& m, const std::vector<double>& v,
                           bool transpose) {
  const std::size_t need = transpose ? m.rows : m.cols;
  if (v.size() != need)
    throw_mismatch("matvec", m.rows, m.cols, transpose, v.size(), 1, false);
  if (!transpose) {
    std::vector<double> y(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
      const double* mi = m.row(i);
      double s = 0.0;
      for (std::size_t j = 0; j < m.cols; ++j) s += mi[j] * v[j];
      y[i] = s;
    }
    return y;
  }
  std::vector<double> y(m.cols, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double a = v[i];
    if (a == 0.0) continue;
    const double* mi = m.row(i);
    for (std::size_t j = 0; j < m.cols; ++j) y[j] += a * mi[j];
  }
  return y;
}

std::vector<double> matvec(const SparseMatrix& m, const std::vector<double>& v,
                           bool transpose) {
  const std::size_t need = transpose ? m.rows : m.cols;
  if (v.size() != need)
    throw_mismatch("matvec(sparse)", m.rows, m.cols, transpose, v.size(), 1, false);
  std::vector<double> y(transpose ? m.cols : m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t p = m.row_offsets[i]; p < m.row_offsets[i + 1]; ++p) {
      if (!transpose)
        y[i] += m.values[p] * v[m.col_indices[p]];
      else
        y[m.col_indices[p]] += m.values[p] * v[i];
    }
  }
  return y;
}

double frobenius_norm_sq(const DenseMatrix& m) {
  double s = 0.0;
  for (double v : m.values) s += v * v;
  return s;
}

double frobenius_norm_sq(const SparseMatrix& m) {
  double s = 0.0;
  for (double v : m.values) s += v * v;
  return s;
}

std::vector<double> column(const DenseMatrix& m, std::size_t j) {
  if (j >= m.cols) throw DimensionError("column: index out of range");
  std::vector<double> v(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) v[i] = m(i, j);
  return v;
}

void set_column(DenseMatrix& m, std::size_t j, const std::vector<double>& v) {
  if (j >= m.cols) throw DimensionError("set_column: index out of range");
  if (v.size() != m.rows) throw DimensionError("set_column: length must equal rows");
  for (std::size_t i = 0; i < m.rows; ++i) m(i, j) = v[i];
}

std::vector<double> clamp_nonnegative(std::vector<double> v) {
  for (double& x : v) x = x > 0.0 ? x : 0.0;
  return v;
}

DenseMatrix clamp_nonnegative(DenseMatrix m) {
  for (double& x : m.values) x = x > 0.0 ? x : 0.0;
  return m;
}

DenseMatrix transpose(const DenseMatrix& m) {
  DenseMatrix t(m.cols, m.rows);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
  return t;
}

DenseMatrix identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool all_finite(const DenseMatrix& m) {
  for (double v : m.values)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace cnmf
