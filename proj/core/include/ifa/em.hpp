#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "ifa/sampler.hpp"
#include "ifa/types.hpp"

namespace ifa {

/// Result shared by the marginal-likelihood engines.
struct MarginalFit {
  std::vector<ItemParams> items;
  /// Factor correlation; stays the identity for exploratory fits.
  Eigen::MatrixXd correlation;
  /// Item parameters after every iteration (entry 0 is the start).
  std::vector<std::vector<ItemParams>> trajectory;
  std::vector<Eigen::MatrixXd> correlation_trace;
  /// Marginal log-likelihood at the start of every iteration (quadrature EM).
  std::vector<double> loglik_trace;
  /// Final marginal log-likelihood; NaN for the stochastic engines.
  double marginal_loglik = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  int iterations = 0;
  /// Posterior means (quadrature EM) or averaged post-burn-in draws.
  PersonFactors thetas;
  /// Stochastic approximation only: H from the last iteration, items packed
  /// in order, and the number of iterations that fell back to the plain update.
  Eigen::VectorXd last_gradient;
  int hessian_fallbacks = 0;
};

struct EmConfig {
  int points_per_dim = 21;
  int max_iters = 500;
  /// Relative change of the marginal log-likelihood that ends the run.
  double tol = 1e-6;
  std::size_t workers = 0;
};

/// Quadrature EM for K <= 3. Without `start` the spectral estimator
/// supplies the item parameters.
MarginalFit fit_em_quadrature(const Dataset& data, const ModelSpec& model, const EmConfig& config,
                              const QMatrix* q = nullptr, const std::vector<ItemParams>* start = nullptr);

/// Settings shared by the sampling engines.
struct ChainConfig {
  std::uint64_t seed = 1;
  std::size_t workers = 0;
  /// Metropolis settings; adaptation runs only during warm-up and burn-in.
  MhConfig mh{1.0, true, 0.234};
  /// Sampler steps between retained draws; 0 selects 1 for Gibbs, 5 for Metropolis.
  int sweeps = 0;
  /// Steps run before the first iteration to move chains off their start.
  int warmup_sweeps = 20;
};

/// Monte Carlo EM keeps every sampler step as a draw unless chain.sweeps is set.
struct McemConfig {
  ChainConfig chain;
  int max_iters = 40;
  /// Draws per person at iteration t: min(draws_max, ceil(draws_start * draws_growth^(t-1))).
  int draws_start = 10;
  int draws_max = 100;
  double draws_growth = 1.1;
  int draws(int iteration) const;
};

/// Monte Carlo EM: posterior draws replace the quadrature in the E step.
MarginalFit fit_mcem(const Dataset& data, const ModelSpec& model, const McemConfig& config,
                     const QMatrix* q = nullptr, const std::vector<ItemParams>* start = nullptr);

struct StemConfig {
  ChainConfig chain;
  int total_iters = 400;
  int burn_in = 100;
};

/// Stochastic EM: one draw per person, complete-data M step, final estimate
/// averaged over iterations burn_in+1..total_iters.
MarginalFit fit_stem(const Dataset& data, const ModelSpec& model, const StemConfig& config,
                     const QMatrix* q = nullptr, const std::vector<ItemParams>* start = nullptr);

struct SaConfig {
  ChainConfig chain;
  int total_iters = 500;
  /// Iterations with unit gain before the 1/(t - warmup) decay.
  int warmup = 50;
  /// Overrides the default gain schedule when set.
  std::function<double(int)> gain;
  /// Precondition with the Robbins-Monro information estimate Gamma.
  bool use_hessian = true;
  int draws_per_iter = 1;
  /// Largest Euclidean norm of one item's update.
  double max_step = 1.0;
  double gain_at(int t) const;
};

/// Stochastic approximation with MCMC (Robbins-Monro on the marginal score).
MarginalFit fit_sa_mcmc(const Dataset& data, const ModelSpec& model, const SaConfig& config,
                        const QMatrix* q = nullptr, const std::vector<ItemParams>* start = nullptr);

/// Average complete-data score (1 / (N D)) sum_d sum_i grad_beta log f(y_i | theta_id)
/// with items packed in order; masked loadings get zero.
Eigen::VectorXd stochastic_gradient(const Dataset& data, const std::vector<ItemParams>& items, Link link,
                                    const std::vector<PersonFactors>& draws, const QMatrix* q = nullptr);

/// Element-wise mean of iterates first..last (1-based, inclusive).
std::vector<ItemParams> average_iterates(const std::vector<std::vector<ItemParams>>& iterates, int first,
                                         int last);

/// Item parameters as one vector, in item order.
Eigen::VectorXd pack_items(const std::vector<ItemParams>& items);

}  // namespace ifa
