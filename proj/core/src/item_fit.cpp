#include "ifa/item_fit.hpp"

#include <cmath>
#include <stdexcept>

#include "ifa/irf.hpp"

namespace ifa {
namespace {

bool thresholds_ordered(const ItemParams& item) {
  if (item.kind != ModelKind::graded) return true;
  for (Eigen::Index t = 1; t < item.intercepts.size(); ++t) {
    if (item.intercepts[t] < item.intercepts[t - 1]) return false;
  }
  return true;
}

// Scales beta onto the ball of the given radius when it lies outside.
bool project_to_ball(Eigen::VectorXd& beta, double radius) {
  if (!std::isfinite(radius)) return false;
  const double norm = beta.norm();
  if (norm <= radius) return false;
  beta *= radius / norm;
  return true;
}

std::vector<Eigen::Index> free_indices(const ItemParams& item, const std::vector<bool>& free_loadings) {
  std::vector<Eigen::Index> idx;
  const Eigen::Index t = item.intercepts.size();
  for (Eigen::Index i = 0; i < t; ++i) idx.push_back(i);
  for (Eigen::Index k = 0; k < item.loadings.size(); ++k) {
    if (free_loadings.empty() || free_loadings[static_cast<std::size_t>(k)]) idx.push_back(t + k);
  }
  return idx;
}

}  // namespace

std::vector<bool> free_loading_flags(const QMatrix* q, int item, int k) {
  std::vector<bool> flags(static_cast<std::size_t>(k), true);
  if (q == nullptr) return flags;
  for (int f = 0; f < k; ++f) flags[static_cast<std::size_t>(f)] = q->free(item, f);
  return flags;
}

double item_objective(const ItemParams& item, const ItemDesign& design, Link link) {
  const Eigen::MatrixXd& points = *design.points;
  double total = 0.0;
  for (std::size_t n = 0; n < design.size(); ++n) {
    const double w = design.weight(n);
    if (w == 0.0) continue;
    const double s = points.row(design.rows[n]).dot(item.loadings);
    total += w * log_category_probability(item, design.categories[n], s, link);
  }
  return total;
}

void item_gradient_information(const ItemParams& item, const ItemDesign& design, Link link,
                               Eigen::VectorXd& gradient, Eigen::MatrixXd& information) {
  const Eigen::MatrixXd& points = *design.points;
  const Eigen::Index t = item.intercepts.size();
  const Eigen::Index k = item.loadings.size();
  const Eigen::Index p = t + k;
  gradient.setZero(p);
  information.setZero(p, p);

  if (item.kind == ModelKind::binary) {
    Eigen::VectorXd x(p);
    for (std::size_t n = 0; n < design.size(); ++n) {
      const double w = design.weight(n);
      if (w == 0.0) continue;
      const auto theta = points.row(design.rows[n]);
      const ScoreTerms st = score_terms(item, design.categories[n], theta.dot(item.loadings), link);
      x[0] = 1.0;
      x.tail(k) = theta.transpose();
      gradient.noalias() += (w * st.d_score) * x;
      information.selfadjointView<Eigen::Lower>().rankUpdate(x, w * st.info_score);
    }
    information = information.selfadjointView<Eigen::Lower>();
    return;
  }

  for (std::size_t n = 0; n < design.size(); ++n) {
    const double w = design.weight(n);
    if (w == 0.0) continue;
    const Eigen::VectorXd theta = points.row(design.rows[n]).transpose();
    const double s = theta.dot(item.loadings);
    const LogProbGradient g = log_probability_gradient(item, design.categories[n], s, link);
    gradient.head(t) += w * g.d_intercepts;
    gradient.tail(k) += (w * g.d_score) * theta;
    const Eigen::MatrixXd m = score_information(item, s, link);
    information.topLeftCorner(t, t) += w * m.topLeftCorner(t, t);
    const Eigen::MatrixXd cross = w * m.col(t).head(t) * theta.transpose();
    information.topRightCorner(t, k) += cross;
    information.bottomLeftCorner(k, t) += cross.transpose();
    information.bottomRightCorner(k, k) += (w * m(t, t)) * theta * theta.transpose();
  }
}

namespace {

constexpr double kDecrementTol = 1e-13;

// First-order optimality: small gradient in the interior, or on the sphere a
// gradient that points outward with a small tangential part. The tangential
// part also counts as converged once its predicted gain is below rounding.
bool kkt_satisfied(const ItemParams& item, const std::vector<Eigen::Index>& free, const Eigen::VectorXd& g,
                   const Eigen::MatrixXd& information, double objective, bool on_boundary,
                   double total_weight, double tol) {
  if (!on_boundary) return g.cwiseAbs().maxCoeff() / total_weight < tol;
  const Eigen::VectorXd beta = item.packed();
  Eigen::VectorXd u(g.size());
  for (Eigen::Index a = 0; a < g.size(); ++a) u[a] = beta[free[static_cast<std::size_t>(a)]];
  const double norm = u.norm();
  if (norm == 0.0) return false;
  u /= norm;
  const double radial = g.dot(u);
  if (radial < 0.0) return false;
  const Eigen::VectorXd tangential = g - radial * u;
  if (tangential.cwiseAbs().maxCoeff() / total_weight < tol) return true;
  const double predicted = 0.5 * tangential.squaredNorm() / (information.trace() + 1e-300);
  return predicted <= kDecrementTol * (1.0 + std::abs(objective));
}

}  // namespace

ItemFitResult fit_item(const ItemParams& start, const ItemDesign& design, Link link,
                       const ItemFitOptions& options) {
  if (design.points == nullptr) throw std::invalid_argument("fit_item: design has no points");
  if (design.categories.size() != design.rows.size() ||
      (!design.weights.empty() && design.weights.size() != design.rows.size())) {
    throw std::invalid_argument("fit_item: design arrays disagree in length");
  }
  require_supported(start.kind, link);

  ItemFitResult result;
  result.item = start;
  for (Eigen::Index k = 0; k < result.item.loadings.size(); ++k) {
    if (!options.free_loadings.empty() && !options.free_loadings[static_cast<std::size_t>(k)]) {
      result.item.loadings[k] = 0.0;
    }
  }
  {
    Eigen::VectorXd beta = result.item.packed();
    result.on_boundary = project_to_ball(beta, options.radius);
    result.item.unpack(beta);
  }

  double total_weight = 0.0;
  for (std::size_t n = 0; n < design.size(); ++n) total_weight += design.weight(n);
  if (total_weight <= 0.0) {
    result.converged = true;
    return result;
  }

  const std::vector<Eigen::Index> free = free_indices(result.item, options.free_loadings);
  const auto nf = static_cast<Eigen::Index>(free.size());
  result.objective = item_objective(result.item, design, link);

  Eigen::VectorXd gradient;
  Eigen::MatrixXd information;
  Eigen::VectorXd g_free(nf);
  Eigen::MatrixXd i_free(nf, nf);

  for (int step = 0; step < options.max_steps; ++step) {
    item_gradient_information(result.item, design, link, gradient, information);
    for (Eigen::Index a = 0; a < nf; ++a) {
      g_free[a] = gradient[free[static_cast<std::size_t>(a)]];
      for (Eigen::Index b = 0; b < nf; ++b) {
        i_free(a, b) = information(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
      }
    }
    if (kkt_satisfied(result.item, free, g_free, i_free, result.objective, result.on_boundary, total_weight,
                      options.grad_tol)) {
      result.converged = true;
      break;
    }

    const double ridge = 1e-10 * (i_free.trace() / static_cast<double>(nf) + 1.0);
    i_free.diagonal().array() += ridge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(i_free);
    Eigen::VectorXd direction = ldlt.solve(g_free);
    if (ldlt.info() != Eigen::Success || !direction.allFinite()) direction = g_free / (total_weight + 1.0);

    // Newton decrement below rounding of the objective: further steps could
    // only be accepted or rejected by floating-point noise.
    if (!result.on_boundary && 0.5 * g_free.dot(direction) <= kDecrementTol * (1.0 + std::abs(result.objective))) {
      result.converged = true;
      break;
    }

    const Eigen::VectorXd beta0 = result.item.packed();
    bool accepted = false;
    auto search = [&](const Eigen::VectorXd& dir) {
      double scale = 1.0;
      for (int h = 0; h <= options.max_halvings; ++h, scale *= 0.5) {
        Eigen::VectorXd beta = beta0;
        for (Eigen::Index a = 0; a < nf; ++a) beta[free[static_cast<std::size_t>(a)]] += scale * dir[a];
        const bool clipped = project_to_ball(beta, options.radius);
        ItemParams candidate = result.item;
        candidate.unpack(beta);
        if (!thresholds_ordered(candidate)) continue;
        const double value = item_objective(candidate, design, link);
        if (std::isfinite(value) && value > result.objective) {
          result.item = std::move(candidate);
          result.objective = value;
          result.on_boundary = clipped;
          return true;
        }
      }
      return false;
    };
    accepted = search(direction);
    if (!accepted && result.on_boundary) {
      // The projected scoring step need not ascend along the sphere; fall
      // back to projected gradient ascent scaled by the information.
      accepted = search(g_free / (i_free.trace() + 1e-12));
    }
    ++result.steps;
    if (!accepted) {
      // No ascent direction left: either at the (possibly constrained)
      // optimum to machine precision, or a genuine failure.
      result.converged = result.on_boundary ||
                         g_free.cwiseAbs().maxCoeff() / total_weight < 1e-6;
      result.line_search_failed = !result.converged;
      break;
    }
    if (result.converged) break;
  }
  return result;
}

}  // namespace ifa
