#pragma once

#include "cnmf/matrix.hpp"

namespace cnmf {

// Thin QR factorization of an m x n matrix with m >= n: q is m x n with
// orthonormal columns, r is n x n upper triangular, and q * r reproduces
// the input. Rank-deficient columns yield a zero diagonal in r and the
// corresponding q column is completed to an orthonormal basis.
struct QrResult {
  DenseMatrix q;
  DenseMatrix r;
};

QrResult thin_qr(const DenseMatrix& m);

}  // namespace cnmf
