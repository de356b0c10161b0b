#include "ifa/cjmle.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ifa/identify.hpp"
#include "ifa/irf.hpp"
#include "ifa/item_fit.hpp"
#include "ifa/likelihood.hpp"
#include "ifa/parallel.hpp"
#include "ifa/spectral.hpp"

namespace ifa {
namespace {

void project(Eigen::VectorXd& v, double radius) {
  const double norm = v.norm();
  if (norm > radius) v *= radius / norm;
}

double row_objective(const Dataset& data, int person, const Eigen::VectorXd& theta,
                     const std::vector<ItemParams>& items, Link link) {
  return person_log_likelihood(data, person, theta, items, link);
}

struct RowUpdate {
  Eigen::VectorXd theta;
  bool failed = false;
};

RowUpdate ascend_row(const Dataset& data, int person, const std::vector<ItemParams>& items,
                     Eigen::VectorXd theta, Link link, double radius, int steps) {
  const auto k = theta.size();
  project(theta, radius);
  RowUpdate out{theta, false};
  double value = row_objective(data, person, theta, items, link);
  Eigen::VectorXd gradient(k);
  Eigen::MatrixXd information(k, k);
  for (int step = 0; step < steps; ++step) {
    gradient.setZero();
    information.setZero();
    int observed = 0;
    for (int j = 0; j < data.n_items(); ++j) {
      const int y = data(person, j);
      if (y == kMissing) continue;
      ++observed;
      const auto& item = items[static_cast<std::size_t>(j)];
      const ScoreTerms st = score_terms(item, y, item.loadings.dot(out.theta), link);
      gradient.noalias() += st.d_score * item.loadings;
      information.selfadjointView<Eigen::Lower>().rankUpdate(item.loadings, st.info_score);
    }
    if (observed == 0 || gradient.cwiseAbs().maxCoeff() < 1e-10) break;
    information = information.selfadjointView<Eigen::Lower>();
    information.diagonal().array() += 1e-10 * (information.trace() / static_cast<double>(k) + 1.0);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(information);
    Eigen::VectorXd direction = ldlt.solve(gradient);
    if (ldlt.info() != Eigen::Success || !direction.allFinite()) direction = gradient;
    // Stop once the predicted gain is below rounding of the row objective;
    // on the sphere only the tangential part of the gradient counts.
    const double floor = 1e-13 * (1.0 + std::abs(value));
    if (out.theta.norm() < radius * (1.0 - 1e-9)) {
      if (0.5 * gradient.dot(direction) <= floor) break;
    } else {
      const Eigen::VectorXd u = out.theta.normalized();
      const double radial = gradient.dot(u);
      if (radial >= 0.0 &&
          0.5 * (gradient - radial * u).squaredNorm() / (information.trace() + 1e-300) <= floor) {
        break;
      }
    }

    auto search = [&](const Eigen::VectorXd& dir) {
      double scale = 1.0;
      for (int h = 0; h <= 40; ++h, scale *= 0.5) {
        Eigen::VectorXd candidate = out.theta + scale * dir;
        project(candidate, radius);
        const double cand_value = row_objective(data, person, candidate, items, link);
        if (std::isfinite(cand_value) && cand_value > value) {
          out.theta = std::move(candidate);
          value = cand_value;
          return true;
        }
      }
      return false;
    };
    bool accepted = search(direction);
    if (!accepted && out.theta.norm() >= radius * (1.0 - 1e-9)) {
      // Projected scoring can stall on the sphere; try projected gradient.
      accepted = search(gradient / (information.trace() + 1e-12));
    }
    if (!accepted) {
      // At the constrained optimum no projected step can improve; only flag
      // rows that still carry an interior gradient.
      const bool interior = out.theta.norm() < radius * (1.0 - 1e-9);
      out.failed = interior && gradient.cwiseAbs().maxCoeff() > 1e-6;
      break;
    }
  }
  return out;
}

void check_inputs(const Dataset& data, const ModelSpec& model) {
  if (model.k < 1) throw std::invalid_argument("fit_cjmle: K must be at least 1");
  require_supported(model.kind, model.link);
  if (model.kind == ModelKind::binary && !data.is_binary()) {
    throw std::invalid_argument("fit_cjmle: binary model requested for data with more than two categories");
  }
}

}  // namespace

double CjmleConfig::radius(int k) const {
  return c_radius > 0 ? c_radius : 5.0 * std::sqrt(static_cast<double>(k));
}

PersonFactors update_person_block(const Dataset& data, const std::vector<ItemParams>& items,
                                  const PersonFactors& thetas, Link link,
                                  const CjmleConfig& config, std::vector<int>* flagged) {
  if (thetas.rows() != data.n_persons()) {
    throw std::invalid_argument("update_person_block: theta rows differ from person count");
  }
  const double radius = config.radius(static_cast<int>(thetas.cols()));
  PersonFactors next(thetas.rows(), thetas.cols());
  std::vector<char> failed(static_cast<std::size_t>(thetas.rows()), 0);
  parallel_for(static_cast<std::size_t>(thetas.rows()), config.workers, [&](std::size_t i) {
    const int row = static_cast<int>(i);
    RowUpdate up = ascend_row(data, row, items, thetas.row(row).transpose(), link, radius,
                              config.inner_steps);
    next.row(row) = up.theta.transpose();
    failed[i] = up.failed ? 1 : 0;
  });
  if (flagged != nullptr) {
    for (std::size_t i = 0; i < failed.size(); ++i) {
      if (failed[i]) flagged->push_back(static_cast<int>(i));
    }
  }
  return next;
}

std::vector<ItemParams> update_item_block(const Dataset& data, const PersonFactors& thetas,
                                          const std::vector<ItemParams>& items, Link link,
                                          const CjmleConfig& config, const QMatrix* q,
                                          std::vector<int>* flagged) {
  if (static_cast<int>(items.size()) != data.n_items()) {
    throw std::invalid_argument("update_item_block: item count differs from the data");
  }
  const int k = static_cast<int>(thetas.cols());
  ItemFitOptions base;
  base.max_steps = config.inner_steps;
  base.radius = config.radius(k);
  base.grad_tol = 1e-10;

  std::vector<ItemParams> next(items.size());
  std::vector<char> flags(items.size(), 0);
  parallel_for(items.size(), config.workers, [&](std::size_t jj) {
    const int j = static_cast<int>(jj);
    ItemDesign design;
    design.points = &thetas;
    for (int i = 0; i < data.n_persons(); ++i) {
      const int y = data(i, j);
      if (y == kMissing) continue;
      design.rows.push_back(i);
      design.categories.push_back(y);
    }
    ItemFitOptions options = base;
    options.free_loadings = free_loading_flags(q, j, k);
    const ItemFitResult fit = fit_item(items[jj], design, link, options);
    next[jj] = fit.item;
    flags[jj] = (fit.on_boundary || fit.line_search_failed) ? 1 : 0;
  });
  if (flagged != nullptr) {
    for (std::size_t j = 0; j < flags.size(); ++j) {
      if (flags[j]) flagged->push_back(static_cast<int>(j));
    }
  }
  return next;
}

CjmleFit fit_cjmle(const Dataset& data, const ModelSpec& model, const CjmleConfig& config,
                   const QMatrix* q, const StartValues* start) {
  data.require_coverage();
  check_inputs(data, model);
  if (config.tol <= 0) throw std::invalid_argument("fit_cjmle: tol must be positive");
  if (q != nullptr && (q->n_items() != data.n_items() || q->k() != model.k)) {
    throw std::invalid_argument("fit_cjmle: Q-matrix shape does not match J x K");
  }

  CjmleFit fit;
  fit.radius = config.radius(model.k);
  StartValues init = start != nullptr ? *start : spectral_start(data, model, q);
  if (init.thetas.rows() != data.n_persons() || init.thetas.cols() != model.k ||
      static_cast<int>(init.items.size()) != data.n_items()) {
    throw std::invalid_argument("fit_cjmle: starting values have the wrong shape");
  }
  for (auto& item : init.items) {
    if (item.kind != model.kind) throw std::invalid_argument("fit_cjmle: start item kind mismatch");
    validate_item(item);
  }
  if (q != nullptr) init.items = apply_q_mask(std::move(init.items), *q);
  for (Eigen::Index i = 0; i < init.thetas.rows(); ++i) {
    Eigen::VectorXd row = init.thetas.row(i).transpose();
    project(row, fit.radius);
    init.thetas.row(i) = row.transpose();
  }
  for (auto& item : init.items) {
    Eigen::VectorXd beta = item.packed();
    project(beta, fit.radius);
    item.unpack(beta);
  }

  fit.thetas = std::move(init.thetas);
  fit.items = std::move(init.items);
  const JointLogLikelihood ll0 = log_joint_likelihood(data, fit.thetas, fit.items, model.link);
  fit.trajectory.push_back(ll0.value);

  double previous = ll0.value;
  for (int it = 1; it <= config.max_iters; ++it) {
    std::vector<int> rows;
    std::vector<int> cols;
    fit.thetas = update_person_block(data, fit.items, fit.thetas, model.link, config, &rows);
    fit.items = update_item_block(data, fit.thetas, fit.items, model.link, config, q, &cols);
    fit.flagged_persons = std::move(rows);
    fit.flagged_items = std::move(cols);

    const JointLogLikelihood ll = log_joint_likelihood(data, fit.thetas, fit.items, model.link);
    if (!ll.finite() || !std::isfinite(ll.value)) {
      throw std::runtime_error("fit_cjmle: joint log-likelihood is not finite at iteration " +
                               std::to_string(it));
    }
    fit.trajectory.push_back(ll.value);
    fit.iterations = it;
    const double change = std::abs(ll.value - previous) / std::max(1.0, std::abs(previous));
    previous = ll.value;
    if (change < config.tol) {
      fit.converged = true;
      break;
    }
  }

  if (config.standardize && fit.thetas.rows() > 1) {
    try {
      StandardizedFactors sf = standardize_factors(fit.thetas);
      absorb_standardization(fit.items, sf.location, sf.scale);
      fit.thetas = std::move(sf.thetas);
      fit.standardized = true;
    } catch (const std::invalid_argument&) {
      fit.standardized = false;
    }
  }
  return fit;
}

}  // namespace ifa
