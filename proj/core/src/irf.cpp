#include "ifa/irf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ifa/normal.hpp"

namespace ifa {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_logistic(double x) {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

// G'(x) / G(x).
double density_ratio(Link link, double x) {
  return link == Link::logit ? logistic(-x) : inverse_mills(x);
}

// G(b) - G(a) for a <= b, taking the upper tails when both points are large.
double interval_mass(Link link, double a, double b) {
  if (a + b > 0) return inverse_link(link, -a) - inverse_link(link, -b);
  return inverse_link(link, b) - inverse_link(link, a);
}

void check_category(const ItemParams& item, int y) {
  if (y < 0 || y > item.max_category()) {
    throw std::invalid_argument("category " + std::to_string(y) + " outside 0.." +
                                std::to_string(item.max_category()));
  }
}

void check_theta(const Eigen::VectorXd& theta, const ItemParams& item) {
  if (theta.size() != item.loadings.size()) {
    throw std::invalid_argument("theta has " + std::to_string(theta.size()) +
                                " entries but item has " + std::to_string(item.loadings.size()) +
                                " loadings");
  }
}

double gpc_log_normalizer(const ItemParams& item, double s) {
  double logit = 0.0;
  double top = 0.0;
  for (Eigen::Index t = 0; t < item.intercepts.size(); ++t) {
    logit += item.intercepts[t] + s;
    top = std::max(top, logit);
  }
  double sum = std::exp(-top);
  logit = 0.0;
  for (Eigen::Index t = 0; t < item.intercepts.size(); ++t) {
    logit += item.intercepts[t] + s;
    sum += std::exp(logit - top);
  }
  return top + std::log(sum);
}

double gpc_logit(const ItemParams& item, int c, double s) {
  double logit = 0.0;
  for (int t = 0; t < c; ++t) logit += item.intercepts[t] + s;
  return logit;
}

}  // namespace

double inverse_link(Link link, double x) {
  return link == Link::logit ? logistic(x) : normal_cdf(x);
}

double inverse_link_density(Link link, double x) {
  if (link == Link::logit) return logistic(x) * logistic(-x);
  return normal_pdf(x);
}

double log_inverse_link(Link link, double x) {
  return link == Link::logit ? log_logistic(x) : log_normal_cdf(x);
}

double link_function(Link link, double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("link_function: p outside (0, 1)");
  return link == Link::logit ? std::log(p / (1.0 - p)) : normal_quantile(p);
}

void require_supported(ModelKind kind, Link link) {
  if (kind == ModelKind::gpc && link != Link::logit) {
    throw std::invalid_argument("the generalized partial credit model is defined for the logit link only");
  }
}

Eigen::VectorXd category_probabilities(const ItemParams& item, double s, Link link) {
  const int top = item.max_category();
  Eigen::VectorXd p(top + 1);
  switch (item.kind) {
    case ModelKind::binary: {
      const double eta = item.intercepts[0] + s;
      p[0] = inverse_link(link, -eta);
      p[1] = inverse_link(link, eta);
      break;
    }
    case ModelKind::graded: {
      p[0] = inverse_link(link, item.intercepts[0] + s);
      for (int t = 1; t < top; ++t) {
        p[t] = interval_mass(link, item.intercepts[t - 1] + s, item.intercepts[t] + s);
      }
      p[top] = inverse_link(link, -(item.intercepts[top - 1] + s));
      break;
    }
    case ModelKind::gpc: {
      require_supported(item.kind, link);
      const double lse = gpc_log_normalizer(item, s);
      double logit = 0.0;
      p[0] = std::exp(-lse);
      for (int t = 1; t <= top; ++t) {
        logit += item.intercepts[t - 1] + s;
        p[t] = std::exp(logit - lse);
      }
      break;
    }
  }
  return p;
}

double log_category_probability(const ItemParams& item, int y, double s, Link link) {
  switch (item.kind) {
    case ModelKind::binary: {
      const double eta = item.intercepts[0] + s;
      return log_inverse_link(link, y == 1 ? eta : -eta);
    }
    case ModelKind::graded: {
      const int top = item.max_category();
      if (y == 0) return log_inverse_link(link, item.intercepts[0] + s);
      if (y == top) return log_inverse_link(link, -(item.intercepts[top - 1] + s));
      const double mass = interval_mass(link, item.intercepts[y - 1] + s, item.intercepts[y] + s);
      return mass > 0 ? std::log(mass) : -kInf;
    }
    case ModelKind::gpc:
      require_supported(item.kind, link);
      return gpc_logit(item, y, s) - gpc_log_normalizer(item, s);
  }
  return -kInf;
}

ScoreTerms score_terms(const ItemParams& item, int y, double s, Link link) {
  ScoreTerms out;
  switch (item.kind) {
    case ModelKind::binary: {
      const double eta = item.intercepts[0] + s;
      if (y == 1) {
        out.log_prob = log_inverse_link(link, eta);
        out.d_score = density_ratio(link, eta);
      } else {
        out.log_prob = log_inverse_link(link, -eta);
        out.d_score = -density_ratio(link, -eta);
      }
      out.info_score = link == Link::logit ? logistic(eta) * logistic(-eta)
                                           : inverse_mills(eta) * inverse_mills(-eta);
      return out;
    }
    case ModelKind::graded: {
      const int top = item.max_category();
      // d/ds P_c = g(x_c) - g(x_{c-1}) with g vanishing at the open ends.
      double g_prev = 0.0;
      for (int c = 0; c <= top; ++c) {
        const double g_cur = c < top ? inverse_link_density(link, item.intercepts[c] + s) : 0.0;
        double mass;
        if (c == 0) {
          mass = inverse_link(link, item.intercepts[0] + s);
        } else if (c == top) {
          mass = inverse_link(link, -(item.intercepts[top - 1] + s));
        } else {
          mass = interval_mass(link, item.intercepts[c - 1] + s, item.intercepts[c] + s);
        }
        const double dp = g_cur - g_prev;
        if (mass > 0) out.info_score += dp * dp / mass;
        g_prev = g_cur;
      }
      if (y == 0) {
        const double x0 = item.intercepts[0] + s;
        out.log_prob = log_inverse_link(link, x0);
        out.d_score = density_ratio(link, x0);
      } else if (y == top) {
        const double x = item.intercepts[top - 1] + s;
        out.log_prob = log_inverse_link(link, -x);
        out.d_score = -density_ratio(link, -x);
      } else {
        const double lo = item.intercepts[y - 1] + s;
        const double hi = item.intercepts[y] + s;
        const double mass = interval_mass(link, lo, hi);
        out.log_prob = mass > 0 ? std::log(mass) : -kInf;
        out.d_score = (inverse_link_density(link, hi) - inverse_link_density(link, lo)) / mass;
      }
      return out;
    }
    case ModelKind::gpc: {
      require_supported(item.kind, link);
      const int top = item.max_category();
      const double lse = gpc_log_normalizer(item, s);
      double logit = 0.0;
      double mean = 0.0;
      double second = 0.0;
      for (int c = 1; c <= top; ++c) {
        logit += item.intercepts[c - 1] + s;
        const double p = std::exp(logit - lse);
        mean += c * p;
        second += static_cast<double>(c) * c * p;
      }
      out.log_prob = gpc_logit(item, y, s) - lse;
      out.d_score = y - mean;
      out.info_score = std::max(0.0, second - mean * mean);
      return out;
    }
  }
  return out;
}

LogProbGradient log_probability_gradient(const ItemParams& item, int y, double s, Link link) {
  check_category(item, y);
  LogProbGradient out;
  const int top = item.max_category();
  out.d_intercepts = Eigen::VectorXd::Zero(top);
  switch (item.kind) {
    case ModelKind::binary: {
      const ScoreTerms st = score_terms(item, y, s, link);
      out.log_prob = st.log_prob;
      out.d_score = st.d_score;
      out.d_intercepts[0] = st.d_score;
      return out;
    }
    case ModelKind::graded: {
      if (y == 0) {
        const double x0 = item.intercepts[0] + s;
        out.log_prob = log_inverse_link(link, x0);
        out.d_intercepts[0] = density_ratio(link, x0);
        out.d_score = out.d_intercepts[0];
      } else if (y == top) {
        const double x = item.intercepts[top - 1] + s;
        out.log_prob = log_inverse_link(link, -x);
        out.d_intercepts[top - 1] = -density_ratio(link, -x);
        out.d_score = out.d_intercepts[top - 1];
      } else {
        const double lo = item.intercepts[y - 1] + s;
        const double hi = item.intercepts[y] + s;
        const double mass = interval_mass(link, lo, hi);
        out.log_prob = mass > 0 ? std::log(mass) : -kInf;
        out.d_intercepts[y] = inverse_link_density(link, hi) / mass;
        out.d_intercepts[y - 1] = -inverse_link_density(link, lo) / mass;
        out.d_score = out.d_intercepts[y] + out.d_intercepts[y - 1];
      }
      return out;
    }
    case ModelKind::gpc: {
      require_supported(item.kind, link);
      const Eigen::VectorXd p = category_probabilities(item, s, link);
      out.log_prob = gpc_logit(item, y, s) - gpc_log_normalizer(item, s);
      double mean = 0.0;
      for (int c = 1; c <= top; ++c) mean += c * p[c];
      out.d_score = y - mean;
      // d/dd_v log P_y = 1{v <= y} - P(Y >= v).
      double tail = 0.0;
      for (int v = top; v >= 1; --v) {
        tail += p[v];
        out.d_intercepts[v - 1] = (v <= y ? 1.0 : 0.0) - tail;
      }
      return out;
    }
  }
  return out;
}

Eigen::MatrixXd score_information(const ItemParams& item, double s, Link link) {
  const int top = item.max_category();
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(top + 1, top + 1);
  if (item.kind == ModelKind::binary) {
    info.setConstant(score_terms(item, 1, s, link).info_score);
    return info;
  }
  const Eigen::VectorXd p = category_probabilities(item, s, link);
  Eigen::VectorXd v(top + 1);
  for (int c = 0; c <= top; ++c) {
    if (!(p[c] > 0)) continue;
    const LogProbGradient g = log_probability_gradient(item, c, s, link);
    v.head(top) = g.d_intercepts;
    v[top] = g.d_score;
    info.noalias() += p[c] * v * v.transpose();
  }
  return info;
}

double irf_binary(const Eigen::VectorXd& theta, const ItemParams& item, Link link) {
  if (item.kind != ModelKind::binary || item.intercepts.size() != 1) {
    throw std::invalid_argument("irf_binary requires a binary item");
  }
  check_theta(theta, item);
  return inverse_link(link, item.intercepts[0] + item.loadings.dot(theta));
}

double irf_graded(const Eigen::VectorXd& theta, const ItemParams& item, int category, Link link) {
  if (item.kind != ModelKind::graded) throw std::invalid_argument("irf_graded requires a graded item");
  validate_item(item);
  check_theta(theta, item);
  check_category(item, category);
  return category_probabilities(item, item.loadings.dot(theta), link)[category];
}

double irf_gpc(const Eigen::VectorXd& theta, const ItemParams& item, int category, Link link) {
  if (item.kind != ModelKind::gpc) throw std::invalid_argument("irf_gpc requires a gpc item");
  require_supported(item.kind, link);
  check_theta(theta, item);
  check_category(item, category);
  return category_probabilities(item, item.loadings.dot(theta), link)[category];
}

Eigen::VectorXd grad_wrt_theta(int y, const Eigen::VectorXd& theta, const ItemParams& item,
                               Link link) {
  check_theta(theta, item);
  check_category(item, y);
  require_supported(item.kind, link);
  const ScoreTerms st = score_terms(item, y, item.loadings.dot(theta), link);
  return st.d_score * item.loadings;
}

Eigen::VectorXd grad_wrt_beta(int y, const Eigen::VectorXd& theta, const ItemParams& item,
                              Link link) {
  check_theta(theta, item);
  require_supported(item.kind, link);
  const LogProbGradient g = log_probability_gradient(item, y, item.loadings.dot(theta), link);
  Eigen::VectorXd out(item.size());
  out << g.d_intercepts, g.d_score * theta;
  return out;
}

}  // namespace ifa
