#pragma once

#include <Eigen/Dense>

#include "ifa/types.hpp"

namespace ifa {

// Item response functions.
//
// Every model depends on theta only through the linear score s = a' theta,
// so the kernels below take s and the item's intercepts. Partial derivatives
// are reported with respect to (intercepts..., s); the chain rule to theta
// (d/dtheta = d_s * a) and to loadings (d/da = d_s * theta) is applied by the
// wrappers.

/// Inverse link G.
double inverse_link(Link link, double x);
/// G'(x).
double inverse_link_density(Link link, double x);
/// log G(x), accurate in both tails.
double log_inverse_link(Link link, double x);
/// G^{-1}(p) for p in (0, 1).
double link_function(Link link, double p);

/// P(Y = c | s) for c = 0..t_j. Probabilities are not clamped.
Eigen::VectorXd category_probabilities(const ItemParams& item, double s, Link link);

/// log P(Y = y | s). Returns -infinity when the probability is exactly zero.
double log_category_probability(const ItemParams& item, int y, double s, Link link);

/// Gradient of log P(Y = y | s) with respect to (intercepts..., s).
struct LogProbGradient {
  double log_prob = 0.0;
  double d_score = 0.0;
  Eigen::VectorXd d_intercepts;
};
LogProbGradient log_probability_gradient(const ItemParams& item, int y, double s, Link link);

/// Scalar summary along the score coordinate, computed without allocation:
/// log P(Y = y | s), its s-derivative, and the expected information in s.
struct ScoreTerms {
  double log_prob = 0.0;
  double d_score = 0.0;
  double info_score = 0.0;
};
ScoreTerms score_terms(const ItemParams& item, int y, double s, Link link);

/// Expected information sum_c P_c v_c v_c' where v_c is the gradient of
/// log P_c with respect to (intercepts..., s). Size (t_j + 1) square; the
/// last row/column is the score coordinate.
Eigen::MatrixXd score_information(const ItemParams& item, double s, Link link);

/// Binary IRF G(d + a' theta).
double irf_binary(const Eigen::VectorXd& theta, const ItemParams& item, Link link);

/// Graded response category probability via cumulative differences.
double irf_graded(const Eigen::VectorXd& theta, const ItemParams& item, int category, Link link);

/// Generalized partial credit category probability (logistic only).
double irf_gpc(const Eigen::VectorXd& theta, const ItemParams& item, int category,
               Link link = Link::logit);

/// d/dtheta log f_j(y | theta; beta).
Eigen::VectorXd grad_wrt_theta(int y, const Eigen::VectorXd& theta, const ItemParams& item,
                               Link link);

/// d/dbeta log f_j(y | theta; beta) with beta = (intercepts, loadings).
Eigen::VectorXd grad_wrt_beta(int y, const Eigen::VectorXd& theta, const ItemParams& item,
                              Link link);

/// Throws std::invalid_argument for combinations the models do not define
/// (gpc with a probit link).
void require_supported(ModelKind kind, Link link);

}  // namespace ifa
