#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ifa/types.hpp"

namespace ifa {

struct SpectralConfig {
  /// Probabilities are clipped to [clip, 1 - clip] before applying G^{-1}.
  double clip = 1e-4;
  /// Singular values above threshold_factor * sqrt(max(N, J)) are kept.
  double threshold_factor = 1.01;
};

/// Output of the singular-value-decomposition estimator.
struct SpectralFit {
  PersonFactors thetas;       ///< N x K, sqrt(N) * U
  Eigen::MatrixXd loadings;   ///< J x K, V D / sqrt(N)
  Eigen::VectorXd intercepts; ///< column means of G^{-1}(P-hat)
  Eigen::MatrixXd p_hat;      ///< clipped probability estimate
  int retained = 0;           ///< singular values kept in the denoising step

  // Ordinal bookkeeping; a binary fit has a single split.
  Eigen::MatrixXd split_intercepts;  ///< J x S, intercept of item j in split s
  std::vector<int> splits_per_item;  ///< distinct splits each item contributes
  std::vector<int> skipped_splits;   ///< 1-based split points that were constant
};

/// Full binary pipeline: SVD of the 0/1 matrix, singular value truncation,
/// clipping, G^{-1}, column centring and a rank-K SVD.
SpectralFit fit_svd_binary(const Dataset& data, int k, Link link, const SpectralConfig& config = {});

/// Steps after denoising: clip P-hat, map through G^{-1}, centre columns and
/// factor the result. Exposed so an exact probability matrix can be fed in.
SpectralFit spectral_from_probabilities(const Eigen::MatrixXd& p_hat, int k, Link link,
                                        const SpectralConfig& config = {});

/// Ordinal data: split s uses the indicator 1{y_ij >= min(s, t_j)}; item
/// loadings are averaged over the splits that are distinct for that item,
/// after aligning each split to the first usable one.
SpectralFit fit_svd_ordinal(const Dataset& data, int k, Link link, const SpectralConfig& config = {});

/// Starting values for the iterative estimators, translated to the target
/// model's parametrization. With a Q-matrix the factor solution is first
/// rotated toward the Q pattern. Falls back to a neutral start when the data
/// are too small for the spectral pipeline.
StartValues spectral_start(const Dataset& data, const ModelSpec& model, const QMatrix* q = nullptr,
                           const SpectralConfig& config = {});

}  // namespace ifa
