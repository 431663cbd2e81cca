#include "cnmf/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "cnmf/errors.hpp"

namespace cnmf {
namespace {

// Denominator guard for the multiplicative rules.
constexpr double kEpsGuard = 1e-12;
// A component whose update denominator falls below this cannot be revived by
// the update itself; the column feeding the denominator is redrawn instead.
constexpr double kDeadThreshold = 1e-12;
// Redrawn columns are kept small so they perturb the objective as little as
// possible while still being strictly positive.
constexpr double kReinitScale = 1e-3;

void fill_uniform_positive(DenseMatrix& m, Rng& rng) {
  for (double& v : m.values) v = rng.uniform_positive();
}

void reinit_column(DenseMatrix& m, std::size_t j, Rng& rng) {
  for (std::size_t i = 0; i < m.rows; ++i)
    m(i, j) = rng.uniform_positive() * kReinitScale;
}

bool column_all_zero(const DenseMatrix& m, std::size_t j) {
  for (std::size_t i = 0; i < m.rows; ++i)
    if (m(i, j) != 0.0) return false;
  return true;
}

void normalize_column(DenseMatrix& m, std::size_t j) {
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < m.rows; ++i) norm_sq += m(i, j) * m(i, j);
  const double norm = std::sqrt(norm_sq);
  if (norm == 0.0) return;  // zero columns are redrawn before this runs
  for (std::size_t i = 0; i < m.rows; ++i) m(i, j) /= norm;
}

template <typename MatrixT>
void check_data(const MatrixT& x) {
  for (double v : x.values)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw InputError("solver input must be entrywise non-negative and finite");
}

// target = target .* matmul(x', other) ./ (target * (other^T other) + eps),
// with x' = x or x^T. Non-negative in, non-negative out; exact zeros stay.
template <typename MatrixT>
void mu_update_half(const MatrixT& x, DenseMatrix& target, const DenseMatrix& other,
                    bool data_transposed) {
  const DenseMatrix numerator = matmul(x, other, data_transposed, false);
  const DenseMatrix gram = matmul(other, other, true, false);
  const DenseMatrix denominator = matmul(target, gram);
  for (std::size_t i = 0; i < target.values.size(); ++i)
    target.values[i] *= numerator.values[i] / (denominator.values[i] + kEpsGuard);
}

// Semi-NMF half-step: target stays non-negative while cross and gram carry
// mixed signs. Splitting both into positive and negative parts keeps every
// numerator and denominator non-negative, so the square root is always real.
void semi_nmf_half(DenseMatrix& target, const DenseMatrix& cross,
                   const DenseMatrix& gram) {
  DenseMatrix gram_pos(gram.rows, gram.cols);
  DenseMatrix gram_neg(gram.rows, gram.cols);
  for (std::size_t i = 0; i < gram.values.size(); ++i) {
    const double v = gram.values[i];
    if (v > 0.0)
      gram_pos.values[i] = v;
    else
      gram_neg.values[i] = -v;
  }
  const DenseMatrix mixed_pos = matmul(target, gram_pos);
  const DenseMatrix mixed_neg = matmul(target, gram_neg);
  for (std::size_t i = 0; i < target.values.size(); ++i) {
    const double c = cross.values[i];
    const double numerator = (c > 0.0 ? c : 0.0) + mixed_neg.values[i];
    const double denominator = (c < 0.0 ? -c : 0.0) + mixed_pos.values[i] + kEpsGuard;
    target.values[i] *= std::sqrt(numerator / denominator);
  }
}

template <typename MatrixT>
void hals_step_impl(const MatrixT& x, FactorPair& f, Rng& rng) {
  const std::size_t k = f.a.cols;
  // A half-sweep. The component residual is never materialized: its product
  // with b_j is assembled right to left as X b_j - A (B^T b_j) + a_j |b_j|^2.
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> bj = column(f.b, j);
    double den = dot(bj, bj);
    while (den < kDeadThreshold) {
      reinit_column(f.b, j, rng);
      bj = column(f.b, j);
      den = dot(bj, bj);
    }
    const std::vector<double> xb = matvec(x, bj);
    const std::vector<double> corr = matvec(f.a, matvec(f.b, bj, true));
    std::vector<double> aj(f.a.rows);
    for (std::size_t i = 0; i < f.a.rows; ++i)
      aj[i] = (xb[i] - corr[i] + f.a(i, j) * den) / den;
    set_column(f.a, j, clamp_nonnegative(std::move(aj)));
    if (column_all_zero(f.a, j)) reinit_column(f.a, j, rng);
  }
  // B half-sweep, symmetric against X^T.
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> aj = column(f.a, j);
    double den = dot(aj, aj);
    while (den < kDeadThreshold) {
      reinit_column(f.a, j, rng);
      aj = column(f.a, j);
      den = dot(aj, aj);
    }
    const std::vector<double> xta = matvec(x, aj, true);
    const std::vector<double> corr = matvec(f.b, matvec(f.a, aj, true));
    std::vector<double> bj(f.b.rows);
    for (std::size_t i = 0; i < f.b.rows; ++i)
      bj[i] = (xta[i] - corr[i] + f.b(i, j) * den) / den;
    set_column(f.b, j, clamp_nonnegative(std::move(bj)));
    if (column_all_zero(f.b, j)) reinit_column(f.b, j, rng);
  }
}

// Rewrites column j of the cached cross product p = op(x) * factor and row and
// column j of the cached gram g = factor^T factor after column j of factor was
// redrawn.
template <typename MatrixT>
void refresh_cross_products(const MatrixT& x, const DenseMatrix& factor,
                            DenseMatrix& p, DenseMatrix& g, std::size_t j,
                            bool data_transposed) {
  const std::vector<double> fj = column(factor, j);
  set_column(p, j, matvec(x, fj, data_transposed));
  const std::vector<double> gj = matvec(factor, fj, true);
  for (std::size_t l = 0; l < g.rows; ++l) {
    g(l, j) = gj[l];
    g(j, l) = gj[l];
  }
}

template <typename MatrixT>
void fasthals_step_impl(const MatrixT& x, FactorPair& f, bool normalize_a, Rng& rng) {
  const std::size_t k = f.a.cols;
  {
    // A half-sweep: p = X B and g = B^T B stay valid throughout because only
    // A changes.
    DenseMatrix p = matmul(x, f.b);
    DenseMatrix g = matmul(f.b, f.b, true, false);
    for (std::size_t j = 0; j < k; ++j) {
      if (g(j, j) < kDeadThreshold) {
        reinit_column(f.b, j, rng);
        refresh_cross_products(x, f.b, p, g, j, false);
      }
      const double den = g(j, j);
      const std::vector<double> ag = matvec(f.a, column(g, j));
      std::vector<double> aj(f.a.rows);
      for (std::size_t i = 0; i < f.a.rows; ++i)
        aj[i] = f.a(i, j) + (p(i, j) - ag[i]) / den;
      set_column(f.a, j, clamp_nonnegative(std::move(aj)));
      if (column_all_zero(f.a, j)) reinit_column(f.a, j, rng);
      if (normalize_a) normalize_column(f.a, j);
    }
  }
  {
    // B half-sweep against p = X^T A, g = A^T A.
    DenseMatrix p = matmul(x, f.a, true, false);
    DenseMatrix g = matmul(f.a, f.a, true, false);
    for (std::size_t j = 0; j < k; ++j) {
      if (g(j, j) < kDeadThreshold) {
        reinit_column(f.a, j, rng);
        refresh_cross_products(x, f.a, p, g, j, true);
      }
      const double den = g(j, j);
      const std::vector<double> bg = matvec(f.b, column(g, j));
      std::vector<double> bj(f.b.rows);
      for (std::size_t i = 0; i < f.b.rows; ++i)
        bj[i] = f.b(i, j) + (p(i, j) - bg[i]) / den;
      set_column(f.b, j, clamp_nonnegative(std::move(bj)));
      if (column_all_zero(f.b, j)) reinit_column(f.b, j, rng);
    }
  }
}

template <typename MatrixT>
RunResult run_impl(const MatrixT& x, const SolverConfig& config) {
  config.validate(x.rows, x.cols);
  check_data(x);
  const bool compressed = is_rp(config.algorithm);

  RunResult result;
  RunTrace& trace = result.trace;
  trace.estimate = estimate_cost(config.algorithm, x.rows, x.cols, config.k,
                                 compressed ? config.sketch.q : 0);
  trace.power_iterations = compressed ? config.sketch.power_iterations : 0;
  trace.alpha = config.alpha;
  trace.beta = config.beta;
  trace.seed = config.seed;

  // One generator drives the initial fill and every later column redraw, so
  // the whole run is a pure function of (x, config).
  Rng rng(config.seed);
  FactorPair factors;
  factors.a = DenseMatrix(x.rows, config.k);
  fill_uniform_positive(factors.a, rng);
  factors.b = DenseMatrix(x.cols, config.k);
  fill_uniform_positive(factors.b, rng);

  ProjectorPair projectors;
  DenseMatrix xhat, xcheck, a_hat, b_check;
  if (compressed) {
    projectors = build_projectors(x, config.sketch);
    xhat = compress_left(x, projectors);
    xcheck = compress_right(x, projectors);
    a_hat = compress_factor_a(factors.a, projectors);
    b_check = compress_factor_b(factors.b, projectors);
  }

  double previous_error = reconstruction_error(x, factors);
  if (!std::isfinite(previous_error)) {
    trace.status = RunStatus::aborted;
    trace.message = "non-finite objective at iteration 0";
  } else {
    trace.records.push_back({0, previous_error, 0.0});
  }

  using clock = std::chrono::steady_clock;
  for (std::size_t iter = 1;
       trace.status != RunStatus::aborted && iter <= config.max_iterations;
       ++iter) {
    const auto start = clock::now();
    switch (config.algorithm) {
      case Algorithm::mu:
        mu_step(x, factors);
        break;
      case Algorithm::mu_rp:
        mu_rp_step(xhat, xcheck, factors, a_hat, b_check, projectors);
        break;
      case Algorithm::hals:
        hals_step(x, factors, rng);
        break;
      case Algorithm::hals_rp:
        hals_rp_step(xhat, xcheck, factors, projectors, config.alpha, config.beta,
                     rng);
        break;
      case Algorithm::fasthals:
        fasthals_step(x, factors, config.normalize_a, rng);
        break;
      case Algorithm::fasthals_rp:
        fasthals_rp_step(xhat, xcheck, factors, a_hat, b_check, projectors,
                         config.normalize_a, config.alpha, config.beta, rng);
        break;
    }
    trace.update_seconds +=
        std::chrono::duration<double>(clock::now() - start).count();
    trace.iterations_run = iter;

    if (iter % config.error_interval == 0 || iter == config.max_iterations) {
      // Always the uncompressed objective, also for the compressed variants.
      const double err = reconstruction_error(x, factors);
      if (!std::isfinite(err)) {
        trace.status = RunStatus::aborted;
        trace.message = "non-finite objective at iteration " + std::to_string(iter);
        break;
      }
      trace.records.push_back({iter, err, trace.update_seconds});
      const bool converged = previous_error == 0.0
                                 ? err == 0.0
                                 : std::abs(previous_error - err) / previous_error <
                                       config.rel_tolerance;
      if (converged) {
        trace.status = RunStatus::converged;
        trace.message =
            "relative error decrease below tolerance at iteration " +
            std::to_string(iter);
        break;
      }
      previous_error = err;
    }
  }

  trace.gini_b = std::numeric_limits<double>::quiet_NaN();
  try {
    trace.gini_b = gini(factors.b);
  } catch (const InputError&) {
    // An all-zero B has no defined coefficient; leave NaN in the trace.
  }
  result.factors = std::move(factors);
  return result;
}

}  // namespace

void SolverConfig::validate(std::size_t d, std::size_t n) const {
  if (k == 0 || k > std::min(d, n))
    throw ConfigError("k must satisfy 1 <= k <= min(d, n)");
  if (is_rp(algorithm) && (sketch.q <= k || sketch.q > std::min(d, n)))
    throw ConfigError("compressed algorithms require k < q <= min(d, n)");
  if (!(alpha >= 0.0) || !std::isfinite(alpha) || !(beta >= 0.0) ||
      !std::isfinite(beta))
    throw ConfigError("alpha and beta must be finite and non-negative");
  if ((alpha != 0.0 || beta != 0.0) && algorithm != Algorithm::hals_rp &&
      algorithm != Algorithm::fasthals_rp)
    throw ConfigError("penalties are supported by hals-rp and fasthals-rp only");
  if (error_interval == 0) throw ConfigError("error_interval must be positive");
  if (!(rel_tolerance > 0.0) || !std::isfinite(rel_tolerance))
    throw ConfigError("rel_tolerance must be positive and finite");
}

FactorPair initialize(std::size_t d, std::size_t n, std::size_t k,
                      std::uint64_t seed) {
  if (d == 0 || n == 0 || k == 0)
    throw ConfigError("initialize requires positive dimensions");
  Rng rng(seed);
  FactorPair f;
  f.a = DenseMatrix(d, k);
  fill_uniform_positive(f.a, rng);
  f.b = DenseMatrix(n, k);
  fill_uniform_positive(f.b, rng);
  return f;
}

void mu_step(const DenseMatrix& x, FactorPair& factors) {
  mu_update_half(x, factors.a, factors.b, false);
  mu_update_half(x, factors.b, factors.a, true);
}

void mu_step(const SparseMatrix& x, FactorPair& factors) {
  mu_update_half(x, factors.a, factors.b, false);
  mu_update_half(x, factors.b, factors.a, true);
}

void mu_rp_step(const DenseMatrix& xhat, const DenseMatrix& xcheck,
                FactorPair& factors, DenseMatrix& a_hat, DenseMatrix& b_check,
                const ProjectorPair& projectors) {
  semi_nmf_half(factors.a, matmul(xcheck, b_check),
                matmul(b_check, b_check, true, false));
  a_hat = compress_factor_a(factors.a, projectors);
  semi_nmf_half(factors.b, matmul(xhat, a_hat, true, false),
                matmul(a_hat, a_hat, true, false));
  b_check = compress_factor_b(factors.b, projectors);
}

void hals_step(const DenseMatrix& x, FactorPair& factors, Rng& rng) {
  hals_step_impl(x, factors, rng);
}

void hals_step(const SparseMatrix& x, FactorPair& factors, Rng& rng) {
  hals_step_impl(x, factors, rng);
}

void hals_rp_step(const DenseMatrix& xhat, const DenseMatrix& xcheck,
                  FactorPair& factors, const ProjectorPair& projectors,
                  double alpha, double beta, Rng& rng) {
  const std::size_t k = factors.a.cols;
  // A half-sweep. The projected B is rebuilt from the projectors for every
  // component and the projected residual is materialized at d x q; the step
  // keeps no projected-factor state between components.
  for (std::size_t j = 0; j < k; ++j) {
    DenseMatrix b_check = compress_factor_b(factors.b, projectors);
    std::vector<double> bcj = column(b_check, j);
    double den = dot(bcj, bcj);
    while (den < kDeadThreshold) {
      reinit_column(factors.b, j, rng);
      b_check = compress_factor_b(factors.b, projectors);
      bcj = column(b_check, j);
      den = dot(bcj, bcj);
    }
    DenseMatrix residual = matmul(factors.a, b_check, false, true);
    for (std::size_t i = 0; i < residual.rows; ++i)
      for (std::size_t c = 0; c < residual.cols; ++c)
        residual(i, c) = xcheck(i, c) - residual(i, c) + factors.a(i, j) * bcj[c];
    const std::vector<double> num = matvec(residual, bcj);
    std::vector<double> aj(factors.a.rows);
    for (std::size_t i = 0; i < factors.a.rows; ++i) aj[i] = num[i] / den;
    set_column(factors.a, j, clamp_nonnegative(std::move(aj)));
    if (column_all_zero(factors.a, j)) reinit_column(factors.a, j, rng);
  }
  // B half-sweep, against the projected residual at q x n.
  for (std::size_t j = 0; j < k; ++j) {
    DenseMatrix a_hat = compress_factor_a(factors.a, projectors);
    std::vector<double> ahj = column(a_hat, j);
    double den = dot(ahj, ahj);
    while (den < kDeadThreshold) {
      reinit_column(factors.a, j, rng);
      a_hat = compress_factor_a(factors.a, projectors);
      ahj = column(a_hat, j);
      den = dot(ahj, ahj);
    }
    DenseMatrix residual = matmul(a_hat, factors.b, false, true);
    for (std::size_t r = 0; r < residual.rows; ++r)
      for (std::size_t c = 0; c < residual.cols; ++c)
        residual(r, c) = xhat(r, c) - residual(r, c) + ahj[r] * factors.b(c, j);
    const std::vector<double> num = matvec(residual, ahj, true);
    set_column(factors.b, j, constrained_b_update_hals_rp(num, den, alpha, beta));
    if (column_all_zero(factors.b, j)) reinit_column(factors.b, j, rng);
  }
}

void fasthals_step(const DenseMatrix& x, FactorPair& factors, bool normalize_a,
                   Rng& rng) {
  fasthals_step_impl(x, factors, normalize_a, rng);
}

void fasthals_step(const SparseMatrix& x, FactorPair& factors, bool normalize_a,
                   Rng& rng) {
  fasthals_step_impl(x, factors, normalize_a, rng);
}

void fasthals_rp_step(const DenseMatrix& xhat, const DenseMatrix& xcheck,
                      FactorPair& factors, DenseMatrix& a_hat, DenseMatrix& b_check,
                      const ProjectorPair& projectors, bool normalize_a,
                      double alpha, double beta, Rng& rng) {
  const std::size_t k = factors.a.cols;
  {
    // A half-sweep: h and g depend only on B, which is fixed here.
    DenseMatrix h = matmul(xcheck, b_check);
    DenseMatrix g = matmul(b_check, b_check, true, false);
    for (std::size_t j = 0; j < k; ++j) {
      if (g(j, j) < kDeadThreshold) {
        reinit_column(factors.b, j, rng);
        set_column(b_check, j, matvec(projectors.right, column(factors.b, j)));
        refresh_cross_products(xcheck, b_check, h, g, j, false);
      }
      const double den = g(j, j);
      const std::vector<double> ag = matvec(factors.a, column(g, j));
      std::vector<double> aj(factors.a.rows);
      for (std::size_t i = 0; i < factors.a.rows; ++i)
        aj[i] = factors.a(i, j) + (h(i, j) - ag[i]) / den;
      set_column(factors.a, j, clamp_nonnegative(std::move(aj)));
      if (column_all_zero(factors.a, j)) reinit_column(factors.a, j, rng);
      if (normalize_a) normalize_column(factors.a, j);
    }
    a_hat = compress_factor_a(factors.a, projectors);
  }
  {
    // B half-sweep against p = xhat^T a_hat, w = a_hat^T a_hat.
    DenseMatrix p = matmul(xhat, a_hat, true, false);
    DenseMatrix w = matmul(a_hat, a_hat, true, false);
    for (std::size_t j = 0; j < k; ++j) {
      if (w(j, j) < kDeadThreshold) {
        reinit_column(factors.a, j, rng);
        set_column(a_hat, j, matvec(projectors.left, column(factors.a, j), true));
        refresh_cross_products(xhat, a_hat, p, w, j, true);
      }
      set_column(factors.b, j,
                 constrained_b_update_fasthals_rp(factors.b, p, w, j, alpha, beta));
      if (column_all_zero(factors.b, j)) reinit_column(factors.b, j, rng);
    }
    b_check = compress_factor_b(factors.b, projectors);
  }
}

std::vector<double> unconstrained_b_update_hals_rp(
    const std::vector<double>& xhat_t_a, double a_norm_sq) {
  std::vector<double> out(xhat_t_a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xhat_t_a[i] / a_norm_sq;
  return clamp_nonnegative(std::move(out));
}

std::vector<double> constrained_b_update_hals_rp(const std::vector<double>& xhat_t_a,
                                                 double a_norm_sq, double alpha,
                                                 double beta) {
  // Shrink, clamp, then divide by the ridge-augmented norm. At alpha = beta = 0
  // every entry agrees bitwise with the unconstrained form: subtracting 0
  // preserves the numerator and clamping commutes with division by a positive
  // denominator.
  std::vector<double> out(xhat_t_a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xhat_t_a[i] - alpha;
  out = clamp_nonnegative(std::move(out));
  const double den = a_norm_sq + beta;
  for (double& v : out) v /= den;
  return out;
}

std::vector<double> unconstrained_b_update_fasthals_rp(const DenseMatrix& b,
                                                       const DenseMatrix& p,
                                                       const DenseMatrix& w,
                                                       std::size_t j) {
  const double den = w(j, j);
  const std::vector<double> bw = matvec(b, column(w, j));
  std::vector<double> out(b.rows);
  for (std::size_t i = 0; i < b.rows; ++i)
    out[i] = b(i, j) + (p(i, j) - bw[i]) / den;
  return clamp_nonnegative(std::move(out));
}

std::vector<double> constrained_b_update_fasthals_rp(const DenseMatrix& b,
                                                     const DenseMatrix& p,
                                                     const DenseMatrix& w,
                                                     std::size_t j, double alpha,
                                                     double beta) {
  // (b_j w_jj + s - alpha) / (w_jj + beta) rounds differently from
  // b_j + s / w_jj even when alpha = beta = 0, so the exact reduction to the
  // unconstrained update is delivered by dispatch instead of by arithmetic.
  if (alpha == 0.0 && beta == 0.0)
    return unconstrained_b_update_fasthals_rp(b, p, w, j);
  const double wjj = w(j, j);
  const double den = wjj + beta;
  const std::vector<double> bw = matvec(b, column(w, j));
  std::vector<double> out(b.rows);
  for (std::size_t i = 0; i < b.rows; ++i)
    out[i] = (b(i, j) * wjj + p(i, j) - bw[i] - alpha) / den;
  return clamp_nonnegative(std::move(out));
}

RunResult run(const DenseMatrix& x, const SolverConfig& config) {
  return run_impl(x, config);
}

RunResult run(const SparseMatrix& x, const SolverConfig& config) {
  return run_impl(x, config);
}

}  // namespace cnmf
