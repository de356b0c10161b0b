#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ifa/types.hpp"

namespace ifa {

/// Result of centring and scaling each factor column.
struct StandardizedFactors {
  PersonFactors thetas;
  Eigen::VectorXd location;
  Eigen::VectorXd scale;
};

/// Column-wise mean 0 / variance 1 (divisor N). Throws std::invalid_argument
/// when a column has zero variance.
StandardizedFactors standardize_factors(const PersonFactors& thetas);

/// Compensates item parameters for theta = location + scale * theta_std so
/// that every linear predictor is unchanged.
void absorb_standardization(std::vector<ItemParams>& items, const Eigen::VectorXd& location,
                            const Eigen::VectorXd& scale);

/// Least-squares alignment of an estimated loading matrix onto a reference.
///
/// `transform` is the K x K matrix H minimizing sum_j ||a*_j - H a_j||^2 and
/// `loss` is that minimum divided by J*K.
struct AlignmentResult {
  Eigen::MatrixXd transform;
  double loss = 0.0;
};

AlignmentResult align_loadings(const Eigen::MatrixXd& estimated, const Eigen::MatrixXd& reference);

/// Zeroes loadings where q(j, k) == 0; other entries are left untouched.
std::vector<ItemParams> apply_q_mask(std::vector<ItemParams> items, const QMatrix& q);

}  // namespace ifa
