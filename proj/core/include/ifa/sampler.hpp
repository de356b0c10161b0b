#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "ifa/rng.hpp"
#include "ifa/types.hpp"

namespace ifa {

/// Draw from N(mean, 1) truncated to [0, inf) when positive_side, else (-inf, 0).
double sample_truncated_normal(double mean, bool positive_side, Rng& rng);

/// Draw from N(mean, 1) truncated to [lower, upper); either bound may be infinite.
double sample_truncated_normal(double mean, double lower, double upper, Rng& rng);

/// State of one person's posterior chain.
///
/// For probit items `latent_responses` holds the augmented responses: for a
/// binary item y* = d + a'theta + e with y = 1 iff y* >= 0; for a graded item
/// u = a'theta + e with category t iff -d_t <= u < -d_{t-1}.
struct ChainState {
  Eigen::VectorXd theta;
  Eigen::VectorXd latent_responses;
  Rng rng;
  std::uint64_t stream = 0;
  /// Adaptive offset on log(proposal_scale); zero means the configured scale.
  double log_scale_offset = 0.0;
  long proposals = 0;
  long acceptances = 0;

  // Log posterior of `theta` under the sampler identified by cache_owner.
  double cached_log_posterior = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t cache_owner = 0;

  double acceptance_rate() const {
    return proposals > 0 ? static_cast<double>(acceptances) / static_cast<double>(proposals) : 0.0;
  }
};

/// Chain for `person` driven by the stream (seed, person).
ChainState make_chain(std::uint64_t seed, std::uint64_t person, Eigen::VectorXd theta, int items);

struct MhConfig {
  double proposal_scale = 1.0;
  /// Robbins-Monro adaptation of the log scale toward 0.234 acceptance.
  bool adapt = false;
  double target_acceptance = 0.234;
};

/// Posterior sampler for theta_i given fixed item parameters and factor law.
/// Copies the item parameters and computes A'A once per parameter set.
class PosteriorSampler {
 public:
  PosteriorSampler(const std::vector<ItemParams>& items, Link link, const FactorConfig& factors);

  /// Blocked Gibbs sweep (probit items only): redraw every latent response,
  /// then theta from its exact multivariate normal full conditional.
  void gibbs_sweep(const Eigen::VectorXi& y_row, ChainState& state) const;

  /// One random-walk Metropolis step; returns whether the proposal was accepted.
  bool mh_step(const Eigen::VectorXi& y_row, ChainState& state, const MhConfig& config) const;

  /// Gibbs when every item is probit binary/graded, otherwise Metropolis.
  void step(const Eigen::VectorXi& y_row, ChainState& state, const MhConfig& config) const;

  double log_posterior(const Eigen::VectorXi& y_row, const Eigen::VectorXd& theta) const;

  bool uses_gibbs() const { return gibbs_; }
  const FactorConfig& factors() const { return factors_; }

 private:
  std::vector<ItemParams> items_;
  Link link_;
  FactorConfig factors_;
  Eigen::MatrixXd loadings_;
  Eigen::MatrixXd full_precision_;
  Eigen::LLT<Eigen::MatrixXd> full_precision_llt_;
  bool gibbs_ = false;
  std::uint64_t id_;
};

/// Single blocked Gibbs sweep; throws std::invalid_argument if an item is
/// not a probit binary/graded item.
ChainState gibbs_sweep_probit(const Eigen::VectorXi& y_row, const std::vector<ItemParams>& items,
                              const FactorConfig& factors, ChainState state);

/// Single Metropolis step for logit items. The adaptive offset in `state`
/// is updated when config.adapt is set.
ChainState mh_step_logit(const Eigen::VectorXi& y_row, const std::vector<ItemParams>& items,
                         const FactorConfig& factors, ChainState state, const MhConfig& config);

/// Metropolis acceptance probability min(1, exp(log_ratio)).
double mh_acceptance_probability(double log_ratio);

/// Robbins-Monro update of the adaptive scale after one proposal.
void adapt_proposal_scale(ChainState& state, bool accepted, const MhConfig& config);

}  // namespace ifa
