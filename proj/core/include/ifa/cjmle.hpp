#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ifa/types.hpp"

namespace ifa {

/// Settings for constrained joint maximum likelihood.
struct CjmleConfig {
  /// Ball radius C for ||theta_i|| and ||beta_j||; <= 0 selects 5 * sqrt(K).
  double c_radius = 0.0;
  int max_iters = 500;
  /// Stop when the relative change of the joint log-likelihood falls below tol.
  double tol = 1e-7;
  /// Projected Fisher-scoring steps per block per outer iteration.
  int inner_steps = 5;
  std::size_t workers = 0;
  /// Centre/scale the fitted factors after convergence (skipped, and
  /// reported, when a factor column has zero variance).
  bool standardize = true;

  double radius(int k) const;
};

struct CjmleFit {
  PersonFactors thetas;
  std::vector<ItemParams> items;
  /// Joint log-likelihood at the start and after every outer iteration.
  std::vector<double> trajectory;
  bool converged = false;
  int iterations = 0;
  bool standardized = false;
  double radius = 0.0;
  std::vector<int> flagged_persons;
  std::vector<int> flagged_items;
};

/// Alternating projected maximization of the joint likelihood.
/// Without `start`, the spectral estimator supplies the initial values.
CjmleFit fit_cjmle(const Dataset& data, const ModelSpec& model, const CjmleConfig& config,
                   const QMatrix* q = nullptr, const StartValues* start = nullptr);

/// One person half-step: each row takes up to `inner_steps` projected
/// ascent steps on its own log-likelihood. Rows whose line search fails keep
/// their previous value and are appended to `flagged`.
PersonFactors update_person_block(const Dataset& data, const std::vector<ItemParams>& items,
                                  const PersonFactors& thetas, Link link,
                                  const CjmleConfig& config, std::vector<int>* flagged = nullptr);

/// One item half-step: each column maximizes its log-likelihood given theta
/// under the ball constraint. Items that end on the boundary or fail their
/// line search are appended to `flagged`.
std::vector<ItemParams> update_item_block(const Dataset& data, const PersonFactors& thetas,
                                          const std::vector<ItemParams>& items, Link link,
                                          const CjmleConfig& config, const QMatrix* q = nullptr,
                                          std::vector<int>* flagged = nullptr);

}  // namespace ifa
