#pragma once

#include <cstddef>
#include <vector>

#include "ifa/types.hpp"

namespace ifa {

/// Joint log-likelihood sum_i sum_j log f_j(y_ij | theta_i; beta_j) over
/// observed cells. When some observed category has probability exactly zero
/// the value is -infinity and `zero_probability_cells` counts the offenders.
struct JointLogLikelihood {
  double value = 0.0;
  std::size_t zero_probability_cells = 0;

  bool finite() const { return zero_probability_cells == 0; }
};

JointLogLikelihood log_joint_likelihood(const Dataset& data, const PersonFactors& thetas,
                                        const std::vector<ItemParams>& items, Link link);

/// Log-likelihood contribution of one person's responses at theta.
double person_log_likelihood(const Dataset& data, int person, const Eigen::VectorXd& theta,
                             const std::vector<ItemParams>& items, Link link);

}  // namespace ifa
