#pragma once

#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "ifa/types.hpp"

namespace ifa {

/// Weighted observations for one item: observation n is category
/// `categories[n]` seen at theta = points.row(rows[n]) with weight
/// `weights[n]` (unit weight when `weights` is empty).
struct ItemDesign {
  const Eigen::MatrixXd* points = nullptr;
  std::vector<int> rows;
  std::vector<int> categories;
  std::vector<double> weights;

  std::size_t size() const { return rows.size(); }
  double weight(std::size_t n) const { return weights.empty() ? 1.0 : weights[n]; }
};

struct ItemFitOptions {
  int max_steps = 50;
  /// Convergence threshold on max |gradient| / total weight.
  double grad_tol = 1e-8;
  int max_halvings = 30;
  /// Norm bound on (intercepts, loadings); infinity disables projection.
  double radius = std::numeric_limits<double>::infinity();
  /// Per-factor flags; empty means every loading is free.
  std::vector<bool> free_loadings;
};

struct ItemFitResult {
  ItemParams item;
  double objective = 0.0;
  int steps = 0;
  bool converged = false;
  /// The ball constraint was active at the final iterate.
  bool on_boundary = false;
  /// Line search could not improve the objective before the gradient test passed.
  bool line_search_failed = false;
};

/// sum_n w_n log P(y_n | theta_n; item).
double item_objective(const ItemParams& item, const ItemDesign& design, Link link);

/// Gradient and expected information of item_objective in (intercepts, loadings).
void item_gradient_information(const ItemParams& item, const ItemDesign& design, Link link,
                               Eigen::VectorXd& gradient, Eigen::MatrixXd& information);

/// Maximizes item_objective by projected Fisher scoring with step halving.
/// Each accepted step strictly increases the objective; masked loadings stay
/// exactly zero and graded thresholds stay ordered.
ItemFitResult fit_item(const ItemParams& start, const ItemDesign& design, Link link,
                       const ItemFitOptions& options);

/// Free-loading flags of row `item` of q, or all-free when q is null.
std::vector<bool> free_loading_flags(const QMatrix* q, int item, int k);

}  // namespace ifa
