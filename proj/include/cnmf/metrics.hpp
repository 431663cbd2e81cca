#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cnmf/algorithm.hpp"
#include "cnmf/matrix.hpp"

namespace cnmf {

// Analytic per-iteration cost model. flops_per_iteration and memory_floats
// are leading-order terms of the closed-form model, not measurements.
struct CostEstimate {
  Algorithm algorithm = Algorithm::mu;
  std::size_t d = 0;
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t q = 0;  // zero for the uncompressed algorithms
  double flops_per_iteration = 0.0;
  double memory_floats = 0.0;
};

// Closed-form cost model:
//   flops  mu: 8dnk, hals: 8dnk, fasthals: 4dnk,
//          mu-rp: 4dkq, hals-rp: 4dnkq, fasthals-rp: 2dkq
//   memory uncompressed: dn + dk + nk, compressed: (2q + k)(d + n)
// q is required (non-zero) exactly for the compressed variants.
CostEstimate estimate_cost(Algorithm algorithm, std::size_t d, std::size_t n,
                           std::size_t k, std::size_t q = 0);

// Half the squared Frobenius norm of X - A B^T. The sparse overload expands
// the square so no d x n dense temporary is ever formed.
double reconstruction_error(const DenseMatrix& x, const FactorPair& factors);
double reconstruction_error(const SparseMatrix& x, const FactorPair& factors);

// Gini coefficient of the flattened non-negative entries: 0 for a uniform
// matrix, approaching 1 as mass concentrates in few entries. Throws
// InputError for negative or all-zero input.
double gini(const DenseMatrix& b);

struct DistortionStats {
  double max_relative = 0.0;
  double mean_relative = 0.0;
};

// Samples column pairs of x and compares their Euclidean distance with the
// distance between the projected columns left^T x_i. Pairs at distance zero
// contribute zero distortion.
DistortionStats pairwise_distortion(const DenseMatrix& x, const DenseMatrix& left,
                                    std::size_t sample_pairs, std::uint64_t seed);

struct RunRecord {
  std::size_t iteration = 0;
  double error = 0.0;
  double elapsed_seconds = 0.0;
};

enum class RunStatus {
  converged,
  reached_max_iterations,
  aborted,
};

std::string_view run_status_name(RunStatus s);

// Full account of one solver run: the error trace, the final Gini of B, the
// analytic cost estimate, and an echo of the configuration that produced it
// (the estimate carries algorithm and dims; the rest is echoed here).
struct RunTrace {
  std::vector<RunRecord> records;
  double update_seconds = 0.0;  // cumulative wall time inside update steps
  double gini_b = 0.0;
  CostEstimate estimate;
  RunStatus status = RunStatus::reached_max_iterations;
  std::string message;
  std::size_t iterations_run = 0;
  std::size_t power_iterations = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
};

double median(std::vector<double> values);

}  // namespace cnmf
