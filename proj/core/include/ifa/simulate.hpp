#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ifa/types.hpp"

namespace ifa {

/// Generating law for a simulated panel.
struct SimSpec {
  int n = 1000;
  int j = 20;
  int k = 1;
  ModelKind kind = ModelKind::binary;
  Link link = Link::logit;
  /// Category count per item for graded/gpc models (binary uses 2).
  int categories = 4;
  /// Loadings uniform on [loading_low, loading_high] at Q-free positions.
  double loading_low = 0.5;
  double loading_high = 1.5;
  /// Binary intercepts uniform on [intercept_low, intercept_high].
  double intercept_low = -1.0;
  double intercept_high = 1.0;
  /// Graded thresholds are sorted uniform draws on this range; gpc
  /// intercepts are unsorted draws from it.
  double threshold_low = -1.5;
  double threshold_high = 1.5;
  /// Factor correlation; empty means the identity.
  Eigen::MatrixXd correlation;
  std::optional<QMatrix> q;
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct Simulation {
  Dataset data;
  PersonFactors thetas;
  std::vector<ItemParams> items;
  Eigen::MatrixXd correlation;
};

/// Draws items from the SimSpec ranges, then persons and responses.
Simulation simulate(const SimSpec& spec);

/// Responses for given persons and items; person i uses its own random
/// stream derived from (seed, i).
Dataset simulate_responses(const PersonFactors& thetas, const std::vector<ItemParams>& items, Link link,
                           std::uint64_t seed);

/// Mean over persons, items and categories of the squared difference of
/// category probabilities. For binary items this equals the mean squared
/// difference of P(Y = 1).
double prob_mse(const PersonFactors& true_thetas, const std::vector<ItemParams>& true_items,
                const PersonFactors& fitted_thetas, const std::vector<ItemParams>& fitted_items, Link link);

struct RecoveryReport {
  double prob_mse = 0.0;
  /// Least-squares aligned loading loss.
  double aligned_loading_loss = 0.0;
  /// Loading loss without alignment (meaningful for confirmatory fits).
  double q_loading_loss = 0.0;
  /// Per-factor correlation of true and aligned fitted theta.
  Eigen::VectorXd theta_correlation;
  double mean_theta_correlation() const;
};

/// Recovery metrics of a fit against the generating values. The fitted
/// thetas are mapped through the inverse of the loading alignment before
/// correlating.
RecoveryReport recovery_report(const PersonFactors& true_thetas, const std::vector<ItemParams>& true_items,
                               const PersonFactors& fitted_thetas, const std::vector<ItemParams>& fitted_items,
                               Link link);

}  // namespace ifa
