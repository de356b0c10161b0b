#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ifa/em.hpp"
#include "ifa/parallel.hpp"
#include "ifa/sampler.hpp"
#include "marginal_common.hpp"

namespace ifa {
namespace {

// One warm chain per person plus the cached response rows.
class ChainPool {
 public:
  ChainPool(const Dataset& data, int k, const ChainConfig& config) : config_(config) {
    const int n = data.n_persons();
    rows_.reserve(static_cast<std::size_t>(n));
    chains_.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      rows_.push_back(data.responses().row(i).transpose());
      chains_.push_back(make_chain(config.seed, static_cast<std::uint64_t>(i), Eigen::VectorXd::Zero(k),
                                   data.n_items()));
    }
  }

  int size() const { return static_cast<int>(chains_.size()); }

  int sweeps(const PosteriorSampler& sampler) const {
    if (config_.sweeps > 0) return config_.sweeps;
    return sampler.uses_gibbs() ? 1 : 5;
  }

  /// Advances every chain by `steps` sampler steps; Metropolis scales adapt
  /// only when `adapt` is set.
  void advance(const PosteriorSampler& sampler, int steps, bool adapt) {
    MhConfig mh = config_.mh;
    mh.adapt = mh.adapt && adapt;
    parallel_for(chains_.size(), config_.workers, [&](std::size_t i) {
      for (int s = 0; s < steps; ++s) sampler.step(rows_[i], chains_[i], mh);
    });
  }

  /// Current theta of every chain as an N x K matrix.
  PersonFactors current(int k) const {
    PersonFactors out(size(), k);
    for (int i = 0; i < size(); ++i) out.row(i) = chains_[static_cast<std::size_t>(i)].theta.transpose();
    return out;
  }

 private:
  ChainConfig config_;
  std::vector<Eigen::VectorXi> rows_;
  std::vector<ChainState> chains_;
};

// Stacks draws into one (N D) x K matrix; row d * N + i is draw d of person i.
Eigen::MatrixXd stack_draws(const std::vector<PersonFactors>& draws) {
  if (draws.empty()) throw std::invalid_argument("stochastic engines: no draws");
  const Eigen::Index n = draws.front().rows();
  Eigen::MatrixXd out(n * static_cast<Eigen::Index>(draws.size()), draws.front().cols());
  for (std::size_t d = 0; d < draws.size(); ++d) {
    if (draws[d].rows() != n || draws[d].cols() != out.cols()) {
      throw std::invalid_argument("stochastic engines: draws differ in shape");
    }
    out.middleRows(static_cast<Eigen::Index>(d) * n, n) = draws[d];
  }
  return out;
}

ItemDesign stacked_design(const Dataset& data, int j, const Eigen::MatrixXd& stacked, int draw_count,
                          double weight) {
  ItemDesign design;
  design.points = &stacked;
  const int n = data.n_persons();
  for (int d = 0; d < draw_count; ++d) {
    for (int i = 0; i < n; ++i) {
      const int y = data(i, j);
      if (y == kMissing) continue;
      design.rows.push_back(d * n + i);
      design.categories.push_back(y);
    }
  }
  if (weight != 1.0) design.weights.assign(design.rows.size(), weight);
  return design;
}

// Complete-data M step over stacked draws, each draw weighted 1 / D.
std::vector<ItemParams> complete_data_m_step(const Dataset& data, const std::vector<ItemParams>& items,
                                             Link link, const std::vector<PersonFactors>& draws,
                                             const QMatrix* q, std::size_t workers, const char* who) {
  const Eigen::MatrixXd stacked = stack_draws(draws);
  const int draw_count = static_cast<int>(draws.size());
  const int k = static_cast<int>(stacked.cols());
  std::vector<ItemParams> next(items.size());
  parallel_for(items.size(), workers, [&](std::size_t jj) {
    const int j = static_cast<int>(jj);
    const ItemDesign design = stacked_design(data, j, stacked, draw_count, 1.0 / draw_count);
    next[jj] = fit_item(items[jj], design, link, detail::m_step_options(q, j, k)).item;
  });
  detail::require_finite(next, who);
  return next;
}

Eigen::MatrixXd second_moment(const std::vector<PersonFactors>& draws) {
  const Eigen::Index k = draws.front().cols();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(k, k);
  double count = 0.0;
  for (const auto& d : draws) {
    s.noalias() += d.transpose() * d;
    count += static_cast<double>(d.rows());
  }
  return s / count;
}

bool ordered(const ItemParams& item) {
  if (item.kind != ModelKind::graded) return true;
  for (Eigen::Index t = 1; t < item.intercepts.size(); ++t) {
    if (item.intercepts[t] < item.intercepts[t - 1]) return false;
  }
  return true;
}

struct RunState {
  MarginalFit fit;
  Eigen::MatrixXd theta_sum;
  int theta_count = 0;
};

void start_run(RunState& run, const Dataset& data, const ModelSpec& model, const QMatrix* q,
               const std::vector<ItemParams>* start, const char* who) {
  detail::check_marginal_inputs(data, model, q, who);
  run.fit.items = detail::starting_items(data, model, q, start, who);
  run.fit.correlation = Eigen::MatrixXd::Identity(model.k, model.k);
  run.fit.trajectory.push_back(run.fit.items);
  run.fit.correlation_trace.push_back(run.fit.correlation);
  run.theta_sum = Eigen::MatrixXd::Zero(data.n_persons(), model.k);
}

void record(RunState& run) {
  run.fit.trajectory.push_back(run.fit.items);
  run.fit.correlation_trace.push_back(run.fit.correlation);
}

void finish_thetas(RunState& run, const PersonFactors& fallback) {
  run.fit.thetas = run.theta_count > 0 ? PersonFactors(run.theta_sum / run.theta_count) : fallback;
}

}  // namespace

int McemConfig::draws(int iteration) const {
  const double raw = std::ceil(draws_start * std::pow(draws_growth, std::max(0, iteration - 1)) - 1e-9);
  return static_cast<int>(std::clamp(raw, 1.0, static_cast<double>(std::max(1, draws_max))));
}

double SaConfig::gain_at(int t) const {
  if (gain) return gain(t);
  return t <= warmup ? 1.0 : 1.0 / static_cast<double>(t - warmup);
}

Eigen::VectorXd stochastic_gradient(const Dataset& data, const std::vector<ItemParams>& items, Link link,
                                    const std::vector<PersonFactors>& draws, const QMatrix* q) {
  const Eigen::MatrixXd stacked = stack_draws(draws);
  const int draw_count = static_cast<int>(draws.size());
  const double weight = 1.0 / (static_cast<double>(data.n_persons()) * draw_count);
  const int k = static_cast<int>(stacked.cols());
  Eigen::VectorXd out(pack_items(items).size());
  Eigen::Index at = 0;
  for (int j = 0; j < data.n_items(); ++j) {
    const ItemParams& item = items[static_cast<std::size_t>(j)];
    const ItemDesign design = stacked_design(data, j, stacked, draw_count, weight);
    Eigen::VectorXd gradient;
    Eigen::MatrixXd information;
    item_gradient_information(item, design, link, gradient, information);
    const std::vector<bool> free = free_loading_flags(q, j, k);
    for (int f = 0; f < k; ++f) {
      if (!free[static_cast<std::size_t>(f)]) gradient[item.max_category() + f] = 0.0;
    }
    out.segment(at, item.size()) = gradient;
    at += item.size();
  }
  return out;
}

MarginalFit fit_mcem(const Dataset& data, const ModelSpec& model, const McemConfig& config,
                     const QMatrix* q, const std::vector<ItemParams>* start) {
  if (config.max_iters < 1 || config.draws_start < 1 || config.draws_growth < 1.0) {
    throw std::invalid_argument("fit_mcem: need max_iters >= 1, draws_start >= 1, draws_growth >= 1");
  }
  RunState run;
  start_run(run, data, model, q, start, "fit_mcem");
  ChainPool pool(data, model.k, config.chain);
  const bool confirmatory = q != nullptr && model.k > 1;

  for (int it = 1; it <= config.max_iters; ++it) {
    const PosteriorSampler sampler(run.fit.items, model.link, FactorConfig(run.fit.correlation));
    const int sweeps = config.chain.sweeps > 0 ? config.chain.sweeps : 1;
    if (it == 1) pool.advance(sampler, config.chain.warmup_sweeps, true);
    const int draw_count = config.draws(it);
    std::vector<PersonFactors> draws;
    draws.reserve(static_cast<std::size_t>(draw_count));
    for (int d = 0; d < draw_count; ++d) {
      pool.advance(sampler, sweeps, it == 1);
      draws.push_back(pool.current(model.k));
    }
    run.fit.items = complete_data_m_step(data, run.fit.items, model.link, draws, q, config.chain.workers,
                                         "fit_mcem");
    if (confirmatory) run.fit.correlation = to_correlation(second_moment(draws));
    if (it == config.max_iters) {
      run.theta_sum.setZero();
      for (const auto& d : draws) run.theta_sum += d;
      run.theta_count = draw_count;
    }
    run.fit.iterations = it;
    record(run);
  }
  run.fit.converged = true;
  finish_thetas(run, pool.current(model.k));
  return run.fit;
}

MarginalFit fit_stem(const Dataset& data, const ModelSpec& model, const StemConfig& config, const QMatrix* q,
                     const std::vector<ItemParams>* start) {
  if (config.burn_in < 0 || config.burn_in >= config.total_iters) {
    throw std::invalid_argument("fit_stem: need 0 <= burn_in < total_iters");
  }
  RunState run;
  start_run(run, data, model, q, start, "fit_stem");
  ChainPool pool(data, model.k, config.chain);
  const bool confirmatory = q != nullptr && model.k > 1;

  for (int it = 1; it <= config.total_iters; ++it) {
    const bool burning = it <= config.burn_in;
    const PosteriorSampler sampler(run.fit.items, model.link, FactorConfig(run.fit.correlation));
    if (it == 1) pool.advance(sampler, config.chain.warmup_sweeps, true);
    pool.advance(sampler, pool.sweeps(sampler), burning);
    const std::vector<PersonFactors> draws{pool.current(model.k)};
    run.fit.items = complete_data_m_step(data, run.fit.items, model.link, draws, q, config.chain.workers,
                                         "fit_stem");
    if (confirmatory) run.fit.correlation = to_correlation(second_moment(draws));
    if (!burning) {
      run.theta_sum += draws.front();
      ++run.theta_count;
    }
    run.fit.iterations = it;
    record(run);
  }

  // Trajectory entry t holds the iterate after iteration t.
  const int first = config.burn_in + 2;
  const int last = config.total_iters + 1;
  run.fit.items = average_iterates(run.fit.trajectory, first, last);
  Eigen::MatrixXd corr = Eigen::MatrixXd::Zero(model.k, model.k);
  for (int t = first; t <= last; ++t) corr += run.fit.correlation_trace[static_cast<std::size_t>(t - 1)];
  run.fit.correlation = corr / static_cast<double>(last - first + 1);
  run.fit.converged = true;
  finish_thetas(run, pool.current(model.k));
  return run.fit;
}

MarginalFit fit_sa_mcmc(const Dataset& data, const ModelSpec& model, const SaConfig& config, const QMatrix* q,
                        const std::vector<ItemParams>* start) {
  if (config.total_iters < 1 || config.draws_per_iter < 1 || config.warmup < 0) {
    throw std::invalid_argument("fit_sa_mcmc: need total_iters >= 1, draws_per_iter >= 1, warmup >= 0");
  }
  RunState run;
  start_run(run, data, model, q, start, "fit_sa_mcmc");
  ChainPool pool(data, model.k, config.chain);
  const bool confirmatory = q != nullptr && model.k > 1;
  const int k = model.k;
  const double person_weight = 1.0 / static_cast<double>(data.n_persons());

  std::vector<Eigen::MatrixXd> gamma(run.fit.items.size());
  for (std::size_t j = 0; j < gamma.size(); ++j) {
    gamma[j] = Eigen::MatrixXd::Zero(run.fit.items[j].size(), run.fit.items[j].size());
  }
  Eigen::MatrixXd moment = run.fit.correlation;

  for (int t = 1; t <= config.total_iters; ++t) {
    const PosteriorSampler sampler(run.fit.items, model.link, FactorConfig(run.fit.correlation));
    const bool warming = t <= config.warmup;
    if (t == 1) pool.advance(sampler, config.chain.warmup_sweeps, true);
    std::vector<PersonFactors> draws;
    for (int d = 0; d < config.draws_per_iter; ++d) {
      pool.advance(sampler, pool.sweeps(sampler), warming);
      draws.push_back(pool.current(k));
    }
    const Eigen::MatrixXd stacked = stack_draws(draws);
    const double gain = config.gain_at(t);
    if (!(gain >= 0.0) || !std::isfinite(gain)) throw std::invalid_argument("fit_sa_mcmc: gain must be finite and >= 0");

    std::vector<ItemParams> next(run.fit.items.size());
    std::vector<Eigen::VectorXd> gradients(run.fit.items.size());
    std::vector<char> fallback(run.fit.items.size(), 0);
    parallel_for(run.fit.items.size(), config.chain.workers, [&](std::size_t jj) {
      const int j = static_cast<int>(jj);
      const ItemParams& item = run.fit.items[jj];
      const ItemDesign design = stacked_design(data, j, stacked, config.draws_per_iter,
                                               person_weight / config.draws_per_iter);
      Eigen::VectorXd h;
      Eigen::MatrixXd info;
      item_gradient_information(item, design, model.link, h, info);

      // Free coordinates: every intercept plus unmasked loadings.
      const std::vector<bool> free_load = free_loading_flags(q, j, k);
      std::vector<int> free_idx;
      for (int p = 0; p < item.max_category(); ++p) free_idx.push_back(p);
      for (int f = 0; f < k; ++f) {
        if (free_load[static_cast<std::size_t>(f)]) {
          free_idx.push_back(item.max_category() + f);
        } else {
          h[item.max_category() + f] = 0.0;
        }
      }
      gradients[jj] = h;

      Eigen::VectorXd direction = h;
      if (config.use_hessian) {
        gamma[jj] += gain * (info - gamma[jj]);
        const auto m = static_cast<Eigen::Index>(free_idx.size());
        Eigen::MatrixXd sub(m, m);
        Eigen::VectorXd rhs(m);
        for (Eigen::Index a = 0; a < m; ++a) {
          rhs[a] = h[free_idx[static_cast<std::size_t>(a)]];
          for (Eigen::Index b = 0; b < m; ++b) {
            sub(a, b) = gamma[jj](free_idx[static_cast<std::size_t>(a)], free_idx[static_cast<std::size_t>(b)]);
          }
        }
        Eigen::LLT<Eigen::MatrixXd> llt(sub);
        Eigen::VectorXd solved;
        if (llt.info() == Eigen::Success) solved = llt.solve(rhs);
        if (llt.info() == Eigen::Success && solved.allFinite()) {
          direction.setZero();
          for (Eigen::Index a = 0; a < m; ++a) direction[free_idx[static_cast<std::size_t>(a)]] = solved[a];
        } else {
          fallback[jj] = 1;
        }
      }

      Eigen::VectorXd step = gain * direction;
      const double norm = step.norm();
      if (norm > config.max_step) step *= config.max_step / norm;
      ItemParams candidate = item;
      for (int h_count = 0; h_count <= 30; ++h_count, step *= 0.5) {
        candidate.unpack(item.packed() + step);
        if (ordered(candidate)) break;
        candidate = item;
      }
      next[jj] = candidate;
    });
    detail::require_finite(next, "fit_sa_mcmc");
    run.fit.items = std::move(next);
    run.fit.hessian_fallbacks += static_cast<int>(std::count(fallback.begin(), fallback.end(), 1));
    run.fit.last_gradient.resize(pack_items(run.fit.items).size());
    Eigen::Index at = 0;
    for (const auto& g : gradients) {
      run.fit.last_gradient.segment(at, g.size()) = g;
      at += g.size();
    }

    if (confirmatory) {
      moment += gain * (second_moment(draws) - moment);
      run.fit.correlation = to_correlation(moment);
    }
    if (!warming) {
      for (const auto& d : draws) run.theta_sum += d;
      run.theta_count += config.draws_per_iter;
    }
    run.fit.iterations = t;
    record(run);
  }
  run.fit.converged = true;
  finish_thetas(run, pool.current(k));
  return run.fit;
}

}  // namespace ifa
