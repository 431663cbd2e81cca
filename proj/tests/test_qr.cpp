#include <cmath>

#include "doctest.h"

#include "cnmf/errors.hpp"
#include "cnmf/matrix.hpp"
#include "cnmf/qr.hpp"
#include "cnmf/rng.hpp"

using namespace cnmf;

namespace {

DenseMatrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  DenseMatrix m(r, c);
  for (double& v : m.values) v = rng.normal();
  return m;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    worst = std::max(worst, std::fabs(a.values[i] - b.values[i]));
  return worst;
}

}  // namespace

TEST_CASE("thin_qr reconstructs and orthonormalizes") {
  for (const std::uint64_t seed : {1u, 2u, 3u}) {
    const DenseMatrix m = random_matrix(10, 4, seed);
    const QrResult qr = thin_qr(m);
    REQUIRE(qr.q.rows == 10);
    REQUIRE(qr.q.cols == 4);
    REQUIRE(qr.r.rows == 4);
    REQUIRE(qr.r.cols == 4);

    CHECK(max_abs_diff(matmul(qr.q, qr.q, true, false), identity(4)) < 1e-12);
    CHECK(max_abs_diff(matmul(qr.q, qr.r), m) < 1e-12);
    for (std::size_t i = 1; i < 4; ++i)
      for (std::size_t j = 0; j < i; ++j) CHECK(qr.r(i, j) == 0.0);
  }
}

TEST_CASE("thin_qr square input") {
  const DenseMatrix m = random_matrix(6, 6, 9);
  const QrResult qr = thin_qr(m);
  CHECK(max_abs_diff(matmul(qr.q, qr.q, true, false), identity(6)) < 1e-12);
  CHECK(max_abs_diff(matmul(qr.q, qr.r), m) < 1e-12);
}

TEST_CASE("thin_qr completes rank-deficient input to an orthonormal basis") {
  DenseMatrix m = random_matrix(8, 3, 4);
  // third column = copy of the first: rank 2
  for (std::size_t i = 0; i < 8; ++i) m(i, 2) = m(i, 0);
  const QrResult qr = thin_qr(m);
  CHECK(std::fabs(qr.r(2, 2)) < 1e-10);
  CHECK(max_abs_diff(matmul(qr.q, qr.q, true, false), identity(3)) < 1e-10);
  CHECK(max_abs_diff(matmul(qr.q, qr.r), m) < 1e-10);
}

TEST_CASE("thin_qr rejects wide input") {
  CHECK_THROWS_AS(thin_qr(random_matrix(3, 5, 1)), DimensionError);
}

TEST_CASE("thin_qr is deterministic") {
  const DenseMatrix m = random_matrix(12, 5, 31);
  const QrResult a = thin_qr(m);
  const QrResult b = thin_qr(m);
  CHECK(a.q.values == b.q.values);
  CHECK(a.r.values == b.r.values);
}
