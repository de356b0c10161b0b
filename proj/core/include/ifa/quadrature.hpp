#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ifa/types.hpp"

namespace ifa {

/// Largest factor count accepted by the tensor-product grid.
inline constexpr int kMaxQuadratureFactors = 3;

/// Gauss-Hermite nodes and weights for the standard normal density
/// (probabilists' convention); weights sum to 1.
void gauss_hermite(int points, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

/// Tensor-product grid for N(0, Sigma): nodes are L z with L the Cholesky
/// factor of Sigma and z on the standard grid.
struct QuadratureGrid {
  int points_per_dim = 0;
  Eigen::MatrixXd nodes;        ///< Q x K, one node per row, on the theta scale
  Eigen::VectorXd log_weights;  ///< log of normalized weights

  int size() const { return static_cast<int>(nodes.rows()); }
};

/// Throws std::invalid_argument when K exceeds kMaxQuadratureFactors.
QuadratureGrid make_quadrature_grid(const FactorConfig& factors, int points_per_dim = 21);

/// N x Q table of sum_j log f_j(y_ij | node_q), missing cells skipped.
Eigen::MatrixXd grid_log_likelihood(const Dataset& data, const std::vector<ItemParams>& items,
                                    Link link, const QuadratureGrid& grid);

/// sum_i log sum_q w_q prod_j f_j(y_ij | node_q), evaluated with log-sum-exp.
double log_marginal_likelihood(const Dataset& data, const std::vector<ItemParams>& items, Link link,
                               const QuadratureGrid& grid);

double log_marginal_likelihood(const Dataset& data, const std::vector<ItemParams>& items, Link link,
                               const FactorConfig& factors, int points_per_dim = 21);

}  // namespace ifa
