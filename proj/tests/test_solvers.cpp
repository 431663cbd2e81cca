#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"

#include "cnmf/compression.hpp"
#include "cnmf/errors.hpp"
#include "cnmf/matrix.hpp"
#include "cnmf/metrics.hpp"
#include "cnmf/rng.hpp"
#include "cnmf/solvers.hpp"

using namespace cnmf;

namespace {

DenseMatrix rank_k_product(std::size_t d, std::size_t n, std::size_t k,
                           std::uint64_t seed) {
  const FactorPair f = initialize(d, n, k, seed);
  return matmul(f.a, f.b, false, true);
}

DenseMatrix random_nonneg(std::size_t d, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  DenseMatrix m(d, n);
  for (double& v : m.values) v = rng.uniform();
  return m;
}

double rel_diff(const DenseMatrix& a, const DenseMatrix& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    num += d * d;
    den += b.values[i] * b.values[i];
  }
  return std::sqrt(num / (den > 0.0 ? den : 1.0));
}

double relative_error(const DenseMatrix& x, const FactorPair& f) {
  return std::sqrt(2.0 * reconstruction_error(x, f) / frobenius_norm_sq(x));
}

// Square q = d = n sketch: the projectors span the whole space, so the
// compressed updates must reproduce the plain ones.
struct SquareFixture {
  DenseMatrix x, xhat, xcheck;
  ProjectorPair proj;
  explicit SquareFixture(std::size_t dim, std::uint64_t data_seed) {
    x = random_nonneg(dim, dim, data_seed);
    SketchConfig sk;
    sk.q = dim;
    sk.power_iterations = 0;
    sk.seed = 5;
    proj = build_projectors(x, sk);
    xhat = compress_left(x, proj);
    xcheck = compress_right(x, proj);
  }
};

}  // namespace

TEST_CASE("initialize fills A then B from one stream") {
  const FactorPair f = initialize(4, 3, 2, 99);
  Rng rng(99);
  for (const double v : f.a.values) CHECK(v == rng.uniform_positive());
  for (const double v : f.b.values) CHECK(v == rng.uniform_positive());
  for (const double v : f.a.values) CHECK(v > 0.0);
  const FactorPair g = initialize(4, 3, 2, 99);
  CHECK(f.a.values == g.a.values);
  CHECK(f.b.values == g.b.values);
  CHECK_THROWS_AS(initialize(0, 3, 2, 1), ConfigError);
}

TEST_CASE("config validation rejects inconsistent setups") {
  SolverConfig cfg;
  cfg.k = 3;

  cfg.k = 0;
  CHECK_THROWS_AS(cfg.validate(10, 8), ConfigError);
  cfg.k = 9;
  CHECK_THROWS_AS(cfg.validate(10, 8), ConfigError);
  cfg.k = 3;
  CHECK_NOTHROW(cfg.validate(10, 8));

  cfg.algorithm = Algorithm::hals_rp;
  cfg.sketch.q = 3;  // must exceed k
  CHECK_THROWS_AS(cfg.validate(10, 8), ConfigError);
  cfg.sketch.q = 9;  // must not exceed min(d, n)
  CHECK_THROWS_AS(cfg.validate(10, 8), ConfigError);
  cfg.sketch.q = 6;
  CHECK_NOTHROW(cfg.validate(10, 8));

  cfg.alpha = -0.5;
  CHECK_THROWS_AS(cfg.validate(10, 8), ConfigError);
  cfg.alpha = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(cfg.validate(10, 8), ConfigError);
  cfg.alpha = 0.1;
  CHECK_NOTHROW(cfg.validate(10, 8));

  cfg.algorithm = Algorithm::fasthals;
  cfg.sketch.q = 0;
  CHECK_THROWS_AS(cfg.validate(10, 8), ConfigError);  // penalty without support
  cfg.alpha = 0.0;
  cfg.beta = 0.2;
  CHECK_THROWS_AS(cfg.validate(10, 8), ConfigError);
  cfg.beta = 0.0;

  cfg.error_interval = 0;
  CHECK_THROWS_AS(cfg.validate(10, 8), ConfigError);
  cfg.error_interval = 5;
  cfg.rel_tolerance = 0.0;
  CHECK_THROWS_AS(cfg.validate(10, 8), ConfigError);
}

TEST_CASE("run rejects invalid data") {
  DenseMatrix x = random_nonneg(6, 5, 3);
  SolverConfig cfg;
  cfg.k = 2;
  x(2, 2) = -0.1;
  CHECK_THROWS_AS(run(x, cfg), InputError);
  x(2, 2) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(run(x, cfg), InputError);
}

TEST_CASE("run records errors on the configured cadence") {
  const DenseMatrix x = random_nonneg(10, 8, 7);
  SolverConfig cfg;
  cfg.algorithm = Algorithm::hals;
  cfg.k = 2;
  cfg.max_iterations = 23;
  cfg.error_interval = 5;
  cfg.rel_tolerance = 1e-300;
  const RunResult r = run(x, cfg);
  REQUIRE(r.trace.records.size() == 6);
  const std::size_t want[] = {0, 5, 10, 15, 20, 23};
  for (std::size_t i = 0; i < 6; ++i) CHECK(r.trace.records[i].iteration == want[i]);
  CHECK(r.trace.iterations_run == 23);
  CHECK(r.trace.status == RunStatus::reached_max_iterations);
  CHECK(std::isfinite(r.trace.gini_b));
  CHECK(r.trace.seed == cfg.seed);
}

TEST_CASE("run with zero iterations reports the initial objective only") {
  const DenseMatrix x = random_nonneg(6, 5, 11);
  SolverConfig cfg;
  cfg.k = 2;
  cfg.max_iterations = 0;
  const RunResult r = run(x, cfg);
  REQUIRE(r.trace.records.size() == 1);
  CHECK(r.trace.records[0].iteration == 0);
  CHECK(r.trace.iterations_run == 0);
  CHECK(r.trace.status == RunStatus::reached_max_iterations);
  // factors are exactly the seeded initialization
  const FactorPair f = initialize(6, 5, 2, cfg.seed);
  CHECK(r.factors.a.values == f.a.values);
  CHECK(r.factors.b.values == f.b.values);
}

TEST_CASE("run is a pure function of data and config") {
  const DenseMatrix x = random_nonneg(12, 9, 13);
  SolverConfig cfg;
  cfg.algorithm = Algorithm::fasthals_rp;
  cfg.k = 2;
  cfg.sketch.q = 5;
  cfg.sketch.power_iterations = 2;
  cfg.sketch.seed = 4;
  cfg.max_iterations = 30;
  const RunResult r1 = run(x, cfg);
  const RunResult r2 = run(x, cfg);
  CHECK(r1.factors.a.values == r2.factors.a.values);
  CHECK(r1.factors.b.values == r2.factors.b.values);
  REQUIRE(r1.trace.records.size() == r2.trace.records.size());
  for (std::size_t i = 0; i < r1.trace.records.size(); ++i)
    CHECK(r1.trace.records[i].error == r2.trace.records[i].error);
}

TEST_CASE("run converges early when the relative decrease stalls") {
  const DenseMatrix x = rank_k_product(10, 8, 1, 21);
  SolverConfig cfg;
  cfg.algorithm = Algorithm::hals;
  cfg.k = 1;
  cfg.max_iterations = 500;
  cfg.error_interval = 1;
  cfg.rel_tolerance = 1e-6;
  const RunResult r = run(x, cfg);
  CHECK(r.trace.status == RunStatus::converged);
  CHECK(r.trace.iterations_run < 500);
  CHECK(r.trace.message.find("iteration") != std::string::npos);
}

TEST_CASE("run aborts on a non-finite objective without recording it") {
  DenseMatrix x(2, 2);
  for (double& v : x.values) v = 1e200;  // squared residual overflows
  SolverConfig cfg;
  cfg.k = 1;
  const RunResult r = run(x, cfg);
  CHECK(r.trace.status == RunStatus::aborted);
  CHECK(r.trace.message == "non-finite objective at iteration 0");
  CHECK(r.trace.records.empty());
}

TEST_CASE("trace echoes the compression geometry only when used") {
  const DenseMatrix x = random_nonneg(10, 9, 31);
  SolverConfig cfg;
  cfg.algorithm = Algorithm::hals;
  cfg.k = 2;
  cfg.sketch.q = 6;  // ignored by the plain variant
  cfg.sketch.power_iterations = 3;
  cfg.max_iterations = 2;
  const RunResult plain = run(x, cfg);
  CHECK(plain.trace.estimate.q == 0);
  CHECK(plain.trace.power_iterations == 0);

  cfg.algorithm = Algorithm::hals_rp;
  const RunResult rp = run(x, cfg);
  CHECK(rp.trace.estimate.q == 6);
  CHECK(rp.trace.power_iterations == 3);
}

TEST_CASE("multiplicative updates fit exactly factorizable rank-1 data") {
  const DenseMatrix x = rank_k_product(30, 25, 1, 501);
  SolverConfig cfg;
  cfg.algorithm = Algorithm::mu;
  cfg.k = 1;
  cfg.max_iterations = 500;
  cfg.rel_tolerance = 1e-300;
  cfg.seed = 3;
  const RunResult r = run(x, cfg);
  CHECK(relative_error(x, r.factors) < 1e-10);
}

TEST_CASE("multiplicative updates never revive exact zeros") {
  const DenseMatrix x = rank_k_product(10, 8, 2, 14);
  FactorPair f = initialize(10, 8, 2, 15);
  f.a(3, 1) = 0.0;
  f.b(2, 0) = 0.0;
  for (int i = 0; i < 10; ++i) mu_step(x, f);
  CHECK(f.a(3, 1) == 0.0);
  CHECK(f.b(2, 0) == 0.0);
  CHECK(all_finite(f.a));
  CHECK(all_finite(f.b));
}

TEST_CASE("multiplicative updates decrease the objective") {
  const DenseMatrix x = random_nonneg(15, 12, 41);
  FactorPair f = initialize(15, 12, 3, 42);
  double prev = reconstruction_error(x, f);
  for (int i = 0; i < 60; ++i) {
    mu_step(x, f);
    const double err = reconstruction_error(x, f);
    CHECK(err <= prev + 1e-10);
    prev = err;
  }
}

TEST_CASE("solver runs agree between dense and sparse data") {
  std::vector<Triplet> trips;
  Rng rng(88);
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t j = 0; j < 15; ++j)
      if (rng.uniform() < 0.3) trips.push_back({i, j, rng.uniform()});
  const SparseMatrix xs = sparse_from_triplets(20, 15, trips);
  const DenseMatrix xd = xs.to_dense();
  for (const Algorithm algo :
       {Algorithm::mu, Algorithm::hals, Algorithm::fasthals}) {
    SolverConfig cfg;
    cfg.algorithm = algo;
    cfg.k = 3;
    cfg.max_iterations = 60;
    cfg.rel_tolerance = 1e-300;
    cfg.seed = 5;
    const double dense = run(xd, cfg).trace.records.back().error;
    const double sparse = run(xs, cfg).trace.records.back().error;
    CHECK(sparse == doctest::Approx(dense).epsilon(1e-12));
  }
}

TEST_CASE("single-component residual updates land on the generating column") {
  const FactorPair truth = initialize(30, 25, 1, 41);
  const DenseMatrix x = matmul(truth.a, truth.b, false, true);
  FactorPair f = initialize(30, 25, 1, 99);
  Rng rng(7);
  for (int s = 0; s < 5; ++s) hals_step(x, f, rng);
  CHECK(relative_error(x, f) < 1e-12);
  // direction of a matches the generator up to scale
  const std::vector<double> got = column(f.a, 0);
  const std::vector<double> want = column(truth.a, 0);
  const double scale = dot(got, want) / dot(got, got);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double diff = scale * got[i] - want[i];
    num += diff * diff;
    den += want[i] * want[i];
  }
  CHECK(std::sqrt(num / den) < 1e-12);
}

TEST_CASE("residual updates revive a zeroed component column") {
  const DenseMatrix x = rank_k_product(12, 12, 2, 9);
  FactorPair f = initialize(12, 12, 2, 4);
  for (std::size_t i = 0; i < 12; ++i) f.b(i, 0) = 0.0;
  Rng rng(6);
  hals_step(x, f, rng);
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < 12; ++i) norm_sq += f.b(i, 0) * f.b(i, 0);
  CHECK(norm_sq > 0.0);
  CHECK(all_finite(f.b));
}

TEST_CASE("gram-accelerated sweeps match the residual form with normalization off") {
  for (std::uint64_t inst = 1; inst <= 3; ++inst) {
    const std::size_t d = 10 + inst, n = 8 + 2 * inst, k = 3;
    const DenseMatrix x = random_nonneg(d, n, 100 + inst);
    FactorPair fh = initialize(d, n, k, 200 + inst);
    FactorPair ff = initialize(d, n, k, 200 + inst);
    Rng rng_h(900), rng_f(900);
    for (int sweep = 0; sweep < 10; ++sweep) {
      hals_step(x, fh, rng_h);
      fasthals_step(x, ff, false, rng_f);
      CHECK(rel_diff(fh.a, ff.a) < 1e-8);
      CHECK(rel_diff(fh.b, ff.b) < 1e-8);
    }
  }
}

TEST_CASE("gram-accelerated sweeps recover exactly factorizable data") {
  const DenseMatrix x = rank_k_product(50, 40, 3, 11);
  std::vector<double> rels;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SolverConfig cfg;
    cfg.algorithm = Algorithm::fasthals;
    cfg.k = 3;
    cfg.max_iterations = 300;
    cfg.rel_tolerance = 1e-300;
    cfg.seed = seed;
    rels.push_back(relative_error(x, run(x, cfg).factors));
  }
  CHECK(median(rels) < 1e-2);
}

TEST_CASE("projected residual sweeps equal plain sweeps on a square sketch") {
  const SquareFixture fx(12, 312);
  FactorPair plain = initialize(12, 12, 3, 412);
  FactorPair rp = initialize(12, 12, 3, 412);
  Rng rng_p(901), rng_r(901);
  for (int sweep = 0; sweep < 5; ++sweep) {
    hals_step(fx.x, plain, rng_p);
    hals_rp_step(fx.xhat, fx.xcheck, rp, fx.proj, 0.0, 0.0, rng_r);
    CHECK(rel_diff(rp.a, plain.a) < 1e-8);
    CHECK(rel_diff(rp.b, plain.b) < 1e-8);
  }
}

TEST_CASE("projected gram sweeps equal plain sweeps on a square sketch") {
  const SquareFixture fx(12, 512);
  FactorPair plain = initialize(12, 12, 3, 612);
  FactorPair rp = initialize(12, 12, 3, 612);
  DenseMatrix a_hat = compress_factor_a(rp.a, fx.proj);
  DenseMatrix b_check = compress_factor_b(rp.b, fx.proj);
  Rng rng_p(902), rng_r(902);
  for (int sweep = 0; sweep < 5; ++sweep) {
    fasthals_step(fx.x, plain, true, rng_p);
    fasthals_rp_step(fx.xhat, fx.xcheck, rp, a_hat, b_check, fx.proj, true, 0.0,
                     0.0, rng_r);
    CHECK(rel_diff(rp.a, plain.a) < 1e-8);
    CHECK(rel_diff(rp.b, plain.b) < 1e-8);
  }
}

TEST_CASE("rectangular sketches preserve the A half-sweep only") {
  // q = n < d: the right projector is square (R^T R = I) so the A half
  // matches; the left projector cannot invert (L L^T != I_d), so the B half
  // legitimately deviates.
  const std::size_t d = 15, n = 10, k = 3;
  const DenseMatrix x = random_nonneg(d, n, 42);
  SketchConfig sk;
  sk.q = 10;
  sk.power_iterations = 0;
  sk.seed = 5;
  const ProjectorPair proj = build_projectors(x, sk);
  const DenseMatrix xhat = compress_left(x, proj);
  const DenseMatrix xcheck = compress_right(x, proj);
  FactorPair plain = initialize(d, n, k, 77);
  FactorPair rp = initialize(d, n, k, 77);
  Rng r1(903), r2(903);
  hals_step(x, plain, r1);
  hals_rp_step(xhat, xcheck, rp, proj, 0.0, 0.0, r2);
  CHECK(rel_diff(rp.a, plain.a) < 1e-8);
  CHECK(rel_diff(rp.b, plain.b) > 1e-3);
}

TEST_CASE("projected sweeps stay finite from an all-zero start") {
  const SquareFixture fx(12, 9);
  SUBCASE("residual form") {
    FactorPair f{DenseMatrix(12, 2), DenseMatrix(12, 2)};
    Rng rng(3);
    hals_rp_step(fx.xhat, fx.xcheck, f, fx.proj, 0.0, 0.0, rng);
    CHECK(all_finite(f.a));
    CHECK(all_finite(f.b));
  }
  SUBCASE("gram form") {
    FactorPair f{DenseMatrix(12, 2), DenseMatrix(12, 2)};
    DenseMatrix a_hat = compress_factor_a(f.a, fx.proj);
    DenseMatrix b_check = compress_factor_b(f.b, fx.proj);
    Rng rng(3);
    fasthals_rp_step(fx.xhat, fx.xcheck, f, a_hat, b_check, fx.proj, true, 0.0,
                     0.0, rng);
    CHECK(all_finite(f.a));
    CHECK(all_finite(f.b));
  }
}

TEST_CASE("semi-nmf updates track the plain multiplicative baseline") {
  const DenseMatrix x = random_nonneg(30, 20, 5150);
  std::vector<double> mu_err, murp_err;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SolverConfig cfg;
    cfg.algorithm = Algorithm::mu;
    cfg.k = 3;
    cfg.max_iterations = 200;
    cfg.rel_tolerance = 1e-300;
    cfg.seed = seed;
    mu_err.push_back(run(x, cfg).trace.records.back().error);
    cfg.algorithm = Algorithm::mu_rp;
    cfg.sketch.q = 10;
    cfg.sketch.power_iterations = 2;
    cfg.sketch.seed = seed;
    murp_err.push_back(run(x, cfg).trace.records.back().error);
  }
  CHECK(median(murp_err) / median(mu_err) < 1.15);
  CHECK(median(murp_err) / median(mu_err) > 0.85);
}

TEST_CASE("penalized column update shrinks and ridges") {
  const std::vector<double> num{3.0, -1.0, 0.5, 8.0};
  const double a_norm_sq = 2.0;

  SUBCASE("zero penalties reduce bitwise to the plain update") {
    const std::vector<double> c = constrained_b_update_hals_rp(num, a_norm_sq, 0.0, 0.0);
    const std::vector<double> u = unconstrained_b_update_hals_rp(num, a_norm_sq);
    CHECK(c == u);
  }
  SUBCASE("l1 subtracts before the clamp") {
    const std::vector<double> c = constrained_b_update_hals_rp(num, a_norm_sq, 1.0, 0.0);
    CHECK(c[0] == doctest::Approx((3.0 - 1.0) / 2.0));
    CHECK(c[1] == 0.0);  // negative numerator clamps
    CHECK(c[2] == 0.0);  // shrunk below zero
    CHECK(c[3] == doctest::Approx(7.0 / 2.0));
  }
  SUBCASE("a large l1 penalty empties the column") {
    for (const double v : constrained_b_update_hals_rp(num, a_norm_sq, 100.0, 0.0))
      CHECK(v == 0.0);
  }
  SUBCASE("l2 strictly shrinks every surviving entry") {
    const std::vector<double> c = constrained_b_update_hals_rp(num, a_norm_sq, 0.0, 10.0);
    const std::vector<double> u = unconstrained_b_update_hals_rp(num, a_norm_sq);
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (u[i] > 0.0) CHECK(c[i] < u[i]);
      CHECK(c[i] == doctest::Approx(num[i] > 0 ? num[i] / 12.0 : 0.0));
    }
  }
}

TEST_CASE("penalized gram-form update matches its closed form") {
  // small fixed state: B (4 x 2), P = X^T A (4 x 2), W = A^T A (2 x 2)
  DenseMatrix b(4, 2), p(4, 2), w(2, 2);
  Rng rng(71);
  for (double& v : b.values) v = rng.uniform();
  for (double& v : p.values) v = 2.0 * rng.uniform() - 0.5;
  w(0, 0) = 1.5;
  w(0, 1) = 0.3;
  w(1, 0) = 0.3;
  w(1, 1) = 0.9;
  const std::size_t j = 1;

  SUBCASE("zero penalties reduce bitwise to the plain update") {
    CHECK(constrained_b_update_fasthals_rp(b, p, w, j, 0.0, 0.0) ==
          unconstrained_b_update_fasthals_rp(b, p, w, j));
  }
  SUBCASE("penalized form") {
    const double alpha = 0.2, beta = 0.7;
    const std::vector<double> got =
        constrained_b_update_fasthals_rp(b, p, w, j, alpha, beta);
    for (std::size_t i = 0; i < 4; ++i) {
      double bw = 0.0;
      for (std::size_t c = 0; c < 2; ++c) bw += b(i, c) * w(c, j);
      const double want =
          std::max(0.0, (b(i, j) * w(j, j) + p(i, j) - bw - alpha) / (w(j, j) + beta));
      CHECK(got[i] == doctest::Approx(want).epsilon(1e-14));
    }
  }
}
