#include "ifa/quadrature.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "ifa/irf.hpp"

namespace ifa {

void gauss_hermite(int points, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  if (points < 1) throw std::invalid_argument("gauss_hermite: need at least one point");
  // Golub-Welsch on the Jacobi matrix of the monic probabilists' Hermite
  // recurrence He_{n+1} = x He_n - n He_{n-1}.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(points, points);
  for (int n = 1; n < points; ++n) {
    jacobi(n, n - 1) = std::sqrt(static_cast<double>(n));
    jacobi(n - 1, n) = jacobi(n, n - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  nodes = eig.eigenvalues();
  weights = eig.eigenvectors().row(0).transpose().array().square();
  weights /= weights.sum();
  // Exact symmetry removes rounding asymmetry in the eigen solver.
  for (int n = 0; n < points / 2; ++n) {
    const int m = points - 1 - n;
    const double x = 0.5 * (nodes[m] - nodes[n]);
    const double w = 0.5 * (weights[m] + weights[n]);
    nodes[n] = -x;
    nodes[m] = x;
    weights[n] = weights[m] = w;
  }
  if (points % 2 == 1) nodes[points / 2] = 0.0;
}

QuadratureGrid make_quadrature_grid(const FactorConfig& factors, int points_per_dim) {
  const int k = factors.k();
  if (k > kMaxQuadratureFactors) {
    throw std::invalid_argument("quadrature needs K <= " + std::to_string(kMaxQuadratureFactors) +
                                " (got K = " + std::to_string(k) +
                                "); use the stem or sa estimators for more factors");
  }
  if (points_per_dim < 1) throw std::invalid_argument("quadrature: points_per_dim must be positive");
  Eigen::VectorXd x;
  Eigen::VectorXd w;
  gauss_hermite(points_per_dim, x, w);

  int total = 1;
  for (int d = 0; d < k; ++d) total *= points_per_dim;
  QuadratureGrid grid;
  grid.points_per_dim = points_per_dim;
  Eigen::MatrixXd z(total, k);
  grid.log_weights.resize(total);
  for (int q = 0; q < total; ++q) {
    int rest = q;
    double log_w = 0.0;
    for (int d = k - 1; d >= 0; --d) {
      const int idx = rest % points_per_dim;
      rest /= points_per_dim;
      z(q, d) = x[idx];
      log_w += std::log(w[idx]);
    }
    grid.log_weights[q] = log_w;
  }
  grid.nodes = z * factors.cholesky().transpose();
  return grid;
}

Eigen::MatrixXd grid_log_likelihood(const Dataset& data, const std::vector<ItemParams>& items,
                                    Link link, const QuadratureGrid& grid) {
  if (static_cast<int>(items.size()) != data.n_items()) {
    throw std::invalid_argument("grid_log_likelihood: item count differs from the data");
  }
  const int q_count = grid.size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(data.n_persons(), q_count);
  for (int j = 0; j < data.n_items(); ++j) {
    const ItemParams& item = items[static_cast<std::size_t>(j)];
    if (item.factors() != grid.nodes.cols()) {
      throw std::invalid_argument("grid_log_likelihood: loading length differs from the grid dimension");
    }
    // Table of log P(c | node_q) for this item.
    Eigen::MatrixXd table(item.categories(), q_count);
    for (int q = 0; q < q_count; ++q) {
      const double s = grid.nodes.row(q).dot(item.loadings);
      for (int c = 0; c < item.categories(); ++c) table(c, q) = log_category_probability(item, c, s, link);
    }
    for (int i = 0; i < data.n_persons(); ++i) {
      const int y = data(i, j);
      if (y == kMissing) continue;
      if (y >= item.categories()) throw std::invalid_argument("grid_log_likelihood: category out of range");
      out.row(i) += table.row(y);
    }
  }
  return out;
}

namespace {

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

double log_marginal_likelihood(const Dataset& data, const std::vector<ItemParams>& items, Link link,
                               const QuadratureGrid& grid) {
  const Eigen::MatrixXd table = grid_log_likelihood(data, items, link, grid);
  double total = 0.0;
  for (int i = 0; i < data.n_persons(); ++i) {
    total += log_sum_exp(table.row(i).transpose() + grid.log_weights);
  }
  return total;
}

double log_marginal_likelihood(const Dataset& data, const std::vector<ItemParams>& items, Link link,
                               const FactorConfig& factors, int points_per_dim) {
  return log_marginal_likelihood(data, items, link, make_quadrature_grid(factors, points_per_dim));
}

}  // namespace ifa
