#pragma once

#include <cstdint>

#include "cnmf/algorithm.hpp"
#include "cnmf/compression.hpp"
#include "cnmf/matrix.hpp"
#include "cnmf/metrics.hpp"
#include "cnmf/rng.hpp"

namespace cnmf {

struct SolverConfig {
  Algorithm algorithm = Algorithm::fasthals;
  std::size_t k = 2;
  SketchConfig sketch;  // consulted by the compressed variants only
  double alpha = 0.0;   // L1 penalty on b_j columns
  double beta = 0.0;    // L2 penalty on b_j columns
  std::size_t max_iterations = 200;
  double rel_tolerance = 1e-9;
  std::size_t error_interval = 5;
  std::uint64_t seed = 1;
  bool normalize_a = true;  // honored by fasthals / fasthals-rp only

  // Throws ConfigError when the configuration cannot drive a d x n problem:
  // k out of range, compressed variants without k < q <= min(d, n), penalties
  // negative or attached to an algorithm without a constrained update.
  void validate(std::size_t d, std::size_t n) const;
};

// Uniform(0,1) factors, strictly positive, deterministic in the seed. A is
// filled first, then B, each row-major.
FactorPair initialize(std::size_t d, std::size_t n, std::size_t k, std::uint64_t seed);

// One full multiplicative-update iteration: A refreshed against the current
// B, then B against the refreshed A. Zero entries stay zero.
void mu_step(const DenseMatrix& x, FactorPair& factors);
void mu_step(const SparseMatrix& x, FactorPair& factors);

// Semi-NMF multiplicative iteration on the projected data; the projected
// factors a_hat = L^T A and b_check = R B are refreshed after the half-sweep
// that invalidates them.
void mu_rp_step(const DenseMatrix& xhat, const DenseMatrix& xcheck,
                FactorPair& factors, DenseMatrix& a_hat, DenseMatrix& b_check,
                const ProjectorPair& projectors);

// One HALS sweep: every column of A updated against its rank-one residual,
// then every column of B. Degenerate components are reseeded from rng.
void hals_step(const DenseMatrix& x, FactorPair& factors, Rng& rng);
void hals_step(const SparseMatrix& x, FactorPair& factors, Rng& rng);

// HALS sweep on the projected residuals. The projected factor matrices are
// not carried as state: they are recomputed from the projectors for every
// component, which is what makes this variant costly.
void hals_rp_step(const DenseMatrix& xhat, const DenseMatrix& xcheck,
                  FactorPair& factors, const ProjectorPair& projectors,
                  double alpha, double beta, Rng& rng);

// One FastHALS sweep driven by the precomputed cross products XB, B^T B and
// X^T A, A^T A.
void fasthals_step(const DenseMatrix& x, FactorPair& factors, bool normalize_a,
                   Rng& rng);
void fasthals_step(const SparseMatrix& x, FactorPair& factors, bool normalize_a,
                   Rng& rng);

// FastHALS sweep on the projected data; a_hat and b_check are refreshed once
// after the half-sweep that modifies the underlying factor.
void fasthals_rp_step(const DenseMatrix& xhat, const DenseMatrix& xcheck,
                      FactorPair& factors, DenseMatrix& a_hat, DenseMatrix& b_check,
                      const ProjectorPair& projectors, bool normalize_a,
                      double alpha, double beta, Rng& rng);

// Penalized b_j updates. The first form divides the shrunk correlation by the
// ridge-augmented norm; the second rearranges the FastHALS increment. Both
// reduce exactly (bitwise) to their unconstrained counterparts at
// alpha = beta = 0.
std::vector<double> constrained_b_update_hals_rp(const std::vector<double>& xhat_t_a,
                                                 double a_norm_sq, double alpha,
                                                 double beta);
std::vector<double> constrained_b_update_fasthals_rp(const DenseMatrix& b,
                                                     const DenseMatrix& p,
                                                     const DenseMatrix& w,
                                                     std::size_t j, double alpha,
                                                     double beta);
// Unconstrained counterparts, kept as distinct entry points so the reduction
// can be checked against them.
std::vector<double> unconstrained_b_update_hals_rp(const std::vector<double>& xhat_t_a,
                                                   double a_norm_sq);
std::vector<double> unconstrained_b_update_fasthals_rp(const DenseMatrix& b,
                                                       const DenseMatrix& p,
                                                       const DenseMatrix& w,
                                                       std::size_t j);

struct RunResult {
  FactorPair factors;
  RunTrace trace;
};

// Full solver driver: validates, seeds, initializes, builds projectors for
// the compressed variants, iterates with timed updates, and records the
// uncompressed objective every error_interval iterations (plus iteration 0
// and the final iteration). Stops early when the relative error decrease
// between consecutive evaluations falls below rel_tolerance.
RunResult run(const DenseMatrix& x, const SolverConfig& config);
RunResult run(const SparseMatrix& x, const SolverConfig& config);

}  // namespace cnmf
