#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"

#include "cnmf/errors.hpp"
#include "cnmf/matrix.hpp"
#include "cnmf/metrics.hpp"
#include "cnmf/rng.hpp"

using namespace cnmf;

namespace {

DenseMatrix filled(std::size_t r, std::size_t c, std::initializer_list<double> v) {
  DenseMatrix m(r, c);
  std::copy(v.begin(), v.end(), m.values.begin());
  return m;
}

}  // namespace

TEST_CASE("estimate_cost implements the closed-form flop model") {
  const std::size_t d = 100, n = 80, k = 5, q = 9;
  CHECK(estimate_cost(Algorithm::mu, d, n, k).flops_per_iteration ==
        doctest::Approx(8.0 * d * n * k));
  CHECK(estimate_cost(Algorithm::hals, d, n, k).flops_per_iteration ==
        doctest::Approx(8.0 * d * n * k));
  CHECK(estimate_cost(Algorithm::fasthals, d, n, k).flops_per_iteration ==
        doctest::Approx(4.0 * d * n * k));
  CHECK(estimate_cost(Algorithm::mu_rp, d, n, k, q).flops_per_iteration ==
        doctest::Approx(4.0 * d * k * q));
  CHECK(estimate_cost(Algorithm::hals_rp, d, n, k, q).flops_per_iteration ==
        doctest::Approx(4.0 * d * n * k * q));
  CHECK(estimate_cost(Algorithm::fasthals_rp, d, n, k, q).flops_per_iteration ==
        doctest::Approx(2.0 * d * k * q));
}

TEST_CASE("estimate_cost implements the closed-form memory model") {
  const std::size_t d = 100, n = 80, k = 5, q = 9;
  CHECK(estimate_cost(Algorithm::mu, d, n, k).memory_floats ==
        doctest::Approx(double(d * n + d * k + n * k)));
  CHECK(estimate_cost(Algorithm::fasthals_rp, d, n, k, q).memory_floats ==
        doctest::Approx(double((2 * q + k) * (d + n))));
}

TEST_CASE("estimate_cost requires q exactly for the compressed variants") {
  CHECK_THROWS_AS(estimate_cost(Algorithm::mu, 10, 10, 2, 5), ConfigError);
  CHECK_THROWS_AS(estimate_cost(Algorithm::mu_rp, 10, 10, 2, 0), ConfigError);
  CHECK_THROWS_AS(estimate_cost(Algorithm::mu, 0, 10, 2), ConfigError);
  CHECK_THROWS_AS(estimate_cost(Algorithm::mu, 10, 0, 2), ConfigError);
  CHECK_THROWS_AS(estimate_cost(Algorithm::mu, 10, 10, 0), ConfigError);
}

TEST_CASE("reconstruction_error is half the squared residual norm") {
  // X = [[1, 2], [3, 4]], A = [[1], [1]], B = [[1], [1]]: residual
  // [[0, 1], [2, 3]] so the objective is (0 + 1 + 4 + 9) / 2 = 7.
  const DenseMatrix x = filled(2, 2, {1, 2, 3, 4});
  const FactorPair f{filled(2, 1, {1, 1}), filled(2, 1, {1, 1})};
  CHECK(reconstruction_error(x, f) == doctest::Approx(7.0));
}

TEST_CASE("reconstruction_error vanishes on an exact product") {
  Rng rng(5);
  FactorPair f{DenseMatrix(7, 3), DenseMatrix(6, 3)};
  for (double& v : f.a.values) v = rng.uniform();
  for (double& v : f.b.values) v = rng.uniform();
  const DenseMatrix x = matmul(f.a, f.b, false, true);
  CHECK(reconstruction_error(x, f) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("sparse reconstruction_error matches the dense path") {
  std::vector<Triplet> trips;
  Rng rng(17);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 7; ++j)
      if (rng.uniform() < 0.4) trips.push_back({i, j, rng.uniform()});
  const SparseMatrix xs = sparse_from_triplets(9, 7, trips);
  const DenseMatrix xd = xs.to_dense();
  FactorPair f{DenseMatrix(9, 2), DenseMatrix(7, 2)};
  for (double& v : f.a.values) v = rng.uniform();
  for (double& v : f.b.values) v = rng.uniform();
  const double dense = reconstruction_error(xd, f);
  const double sparse = reconstruction_error(xs, f);
  CHECK(sparse == doctest::Approx(dense).epsilon(1e-12));
}

TEST_CASE("reconstruction_error rejects mismatched factor shapes") {
  const DenseMatrix x = filled(2, 2, {1, 2, 3, 4});
  CHECK_THROWS_AS(
      reconstruction_error(x, FactorPair{DenseMatrix(3, 1), DenseMatrix(2, 1)}),
      DimensionError);
  CHECK_THROWS_AS(
      reconstruction_error(x, FactorPair{DenseMatrix(2, 1), DenseMatrix(2, 2)}),
      DimensionError);
}

TEST_CASE("gini reference values") {
  SUBCASE("uniform mass gives zero") {
    DenseMatrix m(3, 4);
    for (double& v : m.values) v = 0.7;
    CHECK(std::fabs(gini(m)) < 1e-12);
  }
  SUBCASE("one-hot of m entries gives (m - 1) / m") {
    const DenseMatrix m = filled(1, 4, {0, 0, 0, 5});
    CHECK(gini(m) == doctest::Approx(0.75));
  }
  SUBCASE("1..4 gives 1/4") {
    // sorted 1,2,3,4: sum (2i - 5) v_i = -3 - 2 + 3 + 12 = 10; 10 / (4 * 10)
    const DenseMatrix m = filled(2, 2, {3, 1, 4, 2});
    CHECK(gini(m) == doctest::Approx(0.25));
  }
}

TEST_CASE("gini input contract") {
  CHECK_THROWS_AS(gini(DenseMatrix(0, 0)), InputError);
  CHECK_THROWS_AS(gini(filled(1, 2, {1, -1})), InputError);
  CHECK_THROWS_AS(gini(filled(1, 2, {0, 0})), InputError);
  CHECK_THROWS_AS(gini(filled(1, 2, {1, std::numeric_limits<double>::infinity()})),
                  InputError);
}

TEST_CASE("pairwise_distortion is zero under an orthonormal square projector") {
  Rng rng(23);
  DenseMatrix x(5, 8);
  for (double& v : x.values) v = rng.uniform();
  const DistortionStats stats = pairwise_distortion(x, identity(5), 50, 3);
  CHECK(stats.max_relative < 1e-12);
  CHECK(stats.mean_relative < 1e-12);
}

TEST_CASE("pairwise_distortion input contract") {
  DenseMatrix x(5, 8);
  for (double& v : x.values) v = 1.0;
  CHECK_THROWS_AS(pairwise_distortion(DenseMatrix(5, 1), identity(5), 10, 1),
                  InputError);
  CHECK_THROWS_AS(pairwise_distortion(x, identity(5), 0, 1), InputError);
  CHECK_THROWS_AS(pairwise_distortion(x, DenseMatrix(4, 2), 10, 1), DimensionError);
}

TEST_CASE("median of odd, even, and singleton lists") {
  CHECK(median({3, 1, 2}) == doctest::Approx(2.0));
  CHECK(median({4, 1, 3, 2}) == doctest::Approx(2.5));
  CHECK(median({42}) == doctest::Approx(42.0));
  CHECK_THROWS_AS(median({}), InputError);
}

TEST_CASE("run status names") {
  CHECK(run_status_name(RunStatus::converged) == "converged");
  CHECK(run_status_name(RunStatus::reached_max_iterations) == "reached_max_iterations");
  CHECK(run_status_name(RunStatus::aborted) == "aborted");
}
