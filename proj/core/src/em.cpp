#include "ifa/em.hpp"

#include <cmath>
#include <stdexcept>

#include "ifa/parallel.hpp"
#include "ifa/quadrature.hpp"
#include "marginal_common.hpp"

namespace ifa {

Eigen::VectorXd pack_items(const std::vector<ItemParams>& items) {
  Eigen::Index total = 0;
  for (const auto& item : items) total += item.size();
  Eigen::VectorXd out(total);
  Eigen::Index at = 0;
  for (const auto& item : items) {
    out.segment(at, item.size()) = item.packed();
    at += item.size();
  }
  return out;
}

std::vector<ItemParams> average_iterates(const std::vector<std::vector<ItemParams>>& iterates, int first,
                                         int last) {
  if (first < 1 || last < first || last > static_cast<int>(iterates.size())) {
    throw std::invalid_argument("average_iterates: need 1 <= first <= last <= iterate count");
  }
  std::vector<ItemParams> mean = iterates[static_cast<std::size_t>(first - 1)];
  // Running mean, exact for a constant sequence.
  for (std::size_t j = 0; j < mean.size(); ++j) {
    Eigen::VectorXd m = mean[j].packed();
    for (int t = first + 1; t <= last; ++t) {
      m += (iterates[static_cast<std::size_t>(t - 1)][j].packed() - m) / static_cast<double>(t - first + 1);
    }
    mean[j].unpack(m);
  }
  return mean;
}

MarginalFit fit_em_quadrature(const Dataset& data, const ModelSpec& model, const EmConfig& config,
                              const QMatrix* q, const std::vector<ItemParams>* start) {
  detail::check_marginal_inputs(data, model, q, "fit_em_quadrature");
  if (model.k > kMaxQuadratureFactors) {
    throw std::invalid_argument("fit_em_quadrature: quadrature EM supports K <= 3 (got K = " +
                                std::to_string(model.k) + "); use the stem or sa estimators");
  }
  if (config.tol <= 0) throw std::invalid_argument("fit_em_quadrature: tol must be positive");

  MarginalFit fit;
  fit.items = detail::starting_items(data, model, q, start, "fit_em_quadrature");
  fit.correlation = Eigen::MatrixXd::Identity(model.k, model.k);
  fit.trajectory.push_back(fit.items);
  fit.correlation_trace.push_back(fit.correlation);
  const bool confirmatory = q != nullptr;
  const int n = data.n_persons();
  const int j_count = data.n_items();

  QuadratureGrid grid;
  Eigen::MatrixXd posterior;
  double previous = 0.0;
  for (int it = 0;; ++it) {
    // E step: posterior weights of every person on the grid.
    grid = make_quadrature_grid(FactorConfig(fit.correlation), config.points_per_dim);
    posterior = grid_log_likelihood(data, fit.items, model.link, grid);
    Eigen::VectorXd person_ll(n);
    parallel_for(static_cast<std::size_t>(n), config.workers, [&](std::size_t ii) {
      const auto i = static_cast<Eigen::Index>(ii);
      Eigen::VectorXd row = posterior.row(i).transpose() + grid.log_weights;
      const double m = row.maxCoeff();
      const double lse = m + std::log((row.array() - m).exp().sum());
      person_ll[i] = lse;
      posterior.row(i) = (row.array() - lse).exp().matrix().transpose();
    });
    const double ll = person_ll.sum();
    if (!std::isfinite(ll)) throw std::runtime_error("fit_em_quadrature: marginal log-likelihood is not finite");
    fit.loglik_trace.push_back(ll);
    if (it > 0 && std::abs(ll - previous) / std::max(1.0, std::abs(previous)) < config.tol) {
      fit.converged = true;
      break;
    }
    previous = ll;
    if (it == config.max_iters) break;

    // M step: weighted item fits on the grid nodes.
    std::vector<ItemParams> next(fit.items.size());
    parallel_for(static_cast<std::size_t>(j_count), config.workers, [&](std::size_t jj) {
      const int j = static_cast<int>(jj);
      const int cats = data.categories(j);
      Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(cats, grid.size());
      for (int i = 0; i < n; ++i) {
        const int y = data(i, j);
        if (y != kMissing) counts.row(y) += posterior.row(i);
      }
      ItemDesign design;
      design.points = &grid.nodes;
      for (int c = 0; c < cats; ++c) {
        for (int g = 0; g < grid.size(); ++g) {
          if (counts(c, g) <= 0.0) continue;
          design.rows.push_back(g);
          design.categories.push_back(c);
          design.weights.push_back(counts(c, g));
        }
      }
      next[jj] = fit_item(fit.items[jj], design, model.link, detail::m_step_options(q, j, model.k)).item;
    });
    detail::require_finite(next, "fit_em_quadrature");
    fit.items = std::move(next);

    if (confirmatory && model.k > 1) {
      Eigen::MatrixXd second = Eigen::MatrixXd::Zero(model.k, model.k);
      const Eigen::VectorXd node_mass = posterior.colwise().sum().transpose();
      for (int g = 0; g < grid.size(); ++g) {
        second.noalias() += node_mass[g] * grid.nodes.row(g).transpose() * grid.nodes.row(g);
      }
      fit.correlation = to_correlation(second / static_cast<double>(n));
    }
    fit.iterations = it + 1;
    fit.trajectory.push_back(fit.items);
    fit.correlation_trace.push_back(fit.correlation);
  }
  fit.marginal_loglik = fit.loglik_trace.back();
  fit.thetas = posterior * grid.nodes;
  return fit;
}

}  // namespace ifa
