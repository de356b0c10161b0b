#include "ifa/sampler.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ifa/irf.hpp"
#include "ifa/normal.hpp"

namespace ifa {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kInverseCdfLimit = 6.0;

std::atomic<std::uint64_t> next_sampler_id{1};

// Z ~ N(0, 1) restricted to [a, b) with 0 <= a < b.
double upper_tail(double a, double b, Rng& rng) {
  if (a <= kInverseCdfLimit) {
    const double qa = normal_cdf(-a);
    const double qb = std::isinf(b) ? 0.0 : normal_cdf(-b);
    if (qa - qb > 1e-12 * qa) {
      const double v = qb + uniform_open(rng) * (qa - qb);
      return -normal_quantile(v);
    }
  }
  if (std::isfinite(b) && b * b - a * a < 2.0) {
    // Narrow interval: uniform proposal, acceptance >= exp(-1).
    for (;;) {
      const double z = a + (b - a) * uniform_open(rng);
      if (uniform_open(rng) <= std::exp(0.5 * (a * a - z * z))) return z;
    }
  }
  // Exponential rejection with the optimal rate (Robert, 1995).
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a - std::log(uniform_open(rng)) / rate;
    if (z >= b) continue;
    const double gap = z - rate;
    if (uniform_open(rng) <= std::exp(-0.5 * gap * gap)) return z;
  }
}

// Z ~ N(0, 1) restricted to [a, b).
double standard_truncated(double a, double b, Rng& rng) {
  if (!(a < b)) {
    if (a == b) return a;
    throw std::invalid_argument("truncated normal: empty interval");
  }
  if (a >= 0) return upper_tail(a, b, rng);
  if (b <= 0) return -upper_tail(-b, -a, rng);
  if (a < -kInverseCdfLimit && std::isinf(b)) {
    for (;;) {
      const double z = standard_normal(rng);
      if (z >= a) return z;
    }
  }
  if (b > kInverseCdfLimit && std::isinf(a)) {
    for (;;) {
      const double z = standard_normal(rng);
      if (z < b) return z;
    }
  }
  const double pa = normal_cdf(a);
  const double pb = normal_cdf(b);
  return normal_quantile(pa + uniform_open(rng) * (pb - pa));
}

bool is_gibbs_item(const ItemParams& item, Link link) {
  return link == Link::probit && (item.kind == ModelKind::binary || item.kind == ModelKind::graded);
}

}  // namespace

double standard_normal(Rng& rng) { return normal_quantile(uniform_open(rng)); }

double sample_truncated_normal(double mean, bool positive_side, Rng& rng) {
  return positive_side ? sample_truncated_normal(mean, 0.0, kInf, rng)
                       : sample_truncated_normal(mean, -kInf, 0.0, rng);
}

double sample_truncated_normal(double mean, double lower, double upper, Rng& rng) {
  return mean + standard_truncated(lower - mean, upper - mean, rng);
}

ChainState make_chain(std::uint64_t seed, std::uint64_t person, Eigen::VectorXd theta, int items) {
  ChainState state;
  state.theta = std::move(theta);
  state.latent_responses = Eigen::VectorXd::Zero(items);
  state.rng = make_stream(seed, person);
  state.stream = person;
  return state;
}

PosteriorSampler::PosteriorSampler(const std::vector<ItemParams>& items, Link link,
                                   const FactorConfig& factors)
    : items_(items), link_(link), factors_(factors), id_(next_sampler_id.fetch_add(1)) {
  loadings_ = items.empty() ? Eigen::MatrixXd::Zero(0, factors.k()) : loading_matrix(items);
  if (loadings_.cols() != factors.k()) {
    throw std::invalid_argument("PosteriorSampler: item factor count differs from the factor config");
  }
  for (const auto& item : items) require_supported(item.kind, link);
  gibbs_ = true;
  for (const auto& item : items) gibbs_ = gibbs_ && is_gibbs_item(item, link);
  full_precision_ = factors.precision() + loadings_.transpose() * loadings_;
  full_precision_llt_.compute(full_precision_);
}

double PosteriorSampler::log_posterior(const Eigen::VectorXi& y_row, const Eigen::VectorXd& theta) const {
  double value = -0.5 * theta.dot(factors_.precision() * theta);
  for (std::size_t j = 0; j < items_.size(); ++j) {
    const int y = y_row[static_cast<Eigen::Index>(j)];
    if (y == kMissing) continue;
    value += log_category_probability(items_[j], y, items_[j].loadings.dot(theta), link_);
  }
  return value;
}

void PosteriorSampler::gibbs_sweep(const Eigen::VectorXi& y_row, ChainState& state) const {
  if (!gibbs_) {
    throw std::invalid_argument("gibbs sweep needs probit binary or graded items");
  }
  const auto j_count = static_cast<Eigen::Index>(items_.size());
  if (state.latent_responses.size() != j_count) state.latent_responses = Eigen::VectorXd::Zero(j_count);

  // Step 1: latent responses given theta.
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(factors_.k());
  bool any_missing = false;
  for (Eigen::Index j = 0; j < j_count; ++j) {
    const int y = y_row[j];
    if (y == kMissing) {
      any_missing = true;
      continue;
    }
    const ItemParams& item = items_[static_cast<std::size_t>(j)];
    const double s = item.loadings.dot(state.theta);
    double residual;
    if (item.kind == ModelKind::binary) {
      const double latent = sample_truncated_normal(item.intercepts[0] + s, y == 1, state.rng);
      state.latent_responses[j] = latent;
      residual = latent - item.intercepts[0];
    } else {
      const int top = item.max_category();
      const double upper = y == 0 ? kInf : -item.intercepts[y - 1];
      const double lower = y == top ? -kInf : -item.intercepts[y];
      const double latent = sample_truncated_normal(s, lower, upper, state.rng);
      state.latent_responses[j] = latent;
      residual = latent;
    }
    rhs.noalias() += residual * item.loadings;
  }

  // Step 2: theta | latent ~ N(P^{-1} A'r, P^{-1}), P = Sigma^{-1} + A'A.
  Eigen::VectorXd z(factors_.k());
  for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = standard_normal(state.rng);
  if (!any_missing) {
    const Eigen::VectorXd mean = full_precision_llt_.solve(rhs);
    state.theta = mean + full_precision_llt_.matrixU().solve(z);
  } else {
    Eigen::MatrixXd precision = factors_.precision();
    for (Eigen::Index j = 0; j < j_count; ++j) {
      if (y_row[j] == kMissing) continue;
      precision.noalias() += loadings_.row(j).transpose() * loadings_.row(j);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    const Eigen::VectorXd mean = llt.solve(rhs);
    state.theta = mean + llt.matrixU().solve(z);
  }
  state.cache_owner = 0;
}

bool PosteriorSampler::mh_step(const Eigen::VectorXi& y_row, ChainState& state,
                               const MhConfig& config) const {
  if (config.proposal_scale <= 0) throw std::invalid_argument("MH proposal scale must be positive");
  if (state.cache_owner != id_ || std::isnan(state.cached_log_posterior)) {
    state.cached_log_posterior = log_posterior(y_row, state.theta);
    state.cache_owner = id_;
  }
  const double scale = config.proposal_scale * std::exp(state.log_scale_offset);
  Eigen::VectorXd proposal = state.theta;
  for (Eigen::Index k = 0; k < proposal.size(); ++k) proposal[k] += scale * standard_normal(state.rng);
  const double proposed = log_posterior(y_row, proposal);
  const double log_ratio = proposed - state.cached_log_posterior;
  const bool accept = uniform_open(state.rng) < mh_acceptance_probability(log_ratio);
  ++state.proposals;
  if (accept) {
    ++state.acceptances;
    state.theta = std::move(proposal);
    state.cached_log_posterior = proposed;
  }
  if (config.adapt) adapt_proposal_scale(state, accept, config);
  return accept;
}

void PosteriorSampler::step(const Eigen::VectorXi& y_row, ChainState& state, const MhConfig& config) const {
  if (gibbs_) {
    gibbs_sweep(y_row, state);
  } else {
    mh_step(y_row, state, config);
  }
}

double mh_acceptance_probability(double log_ratio) {
  if (std::isnan(log_ratio)) return 0.0;
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

void adapt_proposal_scale(ChainState& state, bool accepted, const MhConfig& config) {
  const double gain = 1.0 / std::pow(static_cast<double>(state.proposals) + 1.0, 0.6);
  state.log_scale_offset += gain * ((accepted ? 1.0 : 0.0) - config.target_acceptance);
}

ChainState gibbs_sweep_probit(const Eigen::VectorXi& y_row, const std::vector<ItemParams>& items,
                              const FactorConfig& factors, ChainState state) {
  for (const auto& item : items) {
    if (!is_gibbs_item(item, Link::probit)) {
      throw std::invalid_argument("gibbs_sweep_probit: gpc items have no latent normal form");
    }
  }
  PosteriorSampler sampler(items, Link::probit, factors);
  sampler.gibbs_sweep(y_row, state);
  return state;
}

ChainState mh_step_logit(const Eigen::VectorXi& y_row, const std::vector<ItemParams>& items,
                         const FactorConfig& factors, ChainState state, const MhConfig& config) {
  PosteriorSampler sampler(items, Link::logit, factors);
  state.cache_owner = 0;
  sampler.mh_step(y_row, state, config);
  return state;
}

}  // namespace ifa
