#include "ifa/likelihood.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "ifa/irf.hpp"

namespace ifa {

JointLogLikelihood log_joint_likelihood(const Dataset& data, const PersonFactors& thetas,
                                        const std::vector<ItemParams>& items, Link link) {
  if (thetas.rows() != data.n_persons()) {
    throw std::invalid_argument("log_joint_likelihood: theta rows " + std::to_string(thetas.rows()) +
                                " != persons " + std::to_string(data.n_persons()));
  }
  if (static_cast<int>(items.size()) != data.n_items()) {
    throw std::invalid_argument("log_joint_likelihood: item count mismatch");
  }
  for (const auto& item : items) {
    if (item.loadings.size() != thetas.cols()) {
      throw std::invalid_argument("log_joint_likelihood: factor count mismatch");
    }
    require_supported(item.kind, link);
  }
  for (int j = 0; j < data.n_items(); ++j) {
    if (items[static_cast<std::size_t>(j)].categories() != data.categories(j)) {
      throw std::invalid_argument("log_joint_likelihood: item " + std::to_string(j) +
                                  " category count differs from the data");
    }
  }

  const Eigen::MatrixXd scores = thetas * loading_matrix(items).transpose();
  JointLogLikelihood out;
  for (int j = 0; j < data.n_items(); ++j) {
    const auto& item = items[static_cast<std::size_t>(j)];
    for (int i = 0; i < data.n_persons(); ++i) {
      const int y = data(i, j);
      if (y == kMissing) continue;
      const double lp = log_category_probability(item, y, scores(i, j), link);
      if (lp == -std::numeric_limits<double>::infinity()) {
        ++out.zero_probability_cells;
      } else {
        out.value += lp;
      }
    }
  }
  if (out.zero_probability_cells > 0) out.value = -std::numeric_limits<double>::infinity();
  return out;
}

double person_log_likelihood(const Dataset& data, int person, const Eigen::VectorXd& theta,
                             const std::vector<ItemParams>& items, Link link) {
  double total = 0.0;
  for (int j = 0; j < data.n_items(); ++j) {
    const int y = data(person, j);
    if (y == kMissing) continue;
    const auto& item = items[static_cast<std::size_t>(j)];
    total += log_category_probability(item, y, item.loadings.dot(theta), link);
  }
  return total;
}

}  // namespace ifa
