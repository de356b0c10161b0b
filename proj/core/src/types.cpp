#include "ifa/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ifa {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::binary: return "binary";
    case ModelKind::graded: return "graded";
    case ModelKind::gpc: return "gpc";
  }
  return "unknown";
}

std::string_view to_string(Link link) {
  return link == Link::logit ? "logit" : "probit";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "binary" || name == "2pl" || name == "m2pl") return ModelKind::binary;
  if (name == "graded" || name == "grm") return ModelKind::graded;
  if (name == "gpc" || name == "gpcm") return ModelKind::gpc;
  throw std::invalid_argument("unknown model kind '" + std::string(name) + "'");
}

Link parse_link(std::string_view name) {
  if (name == "logit") return Link::logit;
  if (name == "probit") return Link::probit;
  throw std::invalid_argument("unknown link '" + std::string(name) + "'");
}

Eigen::VectorXd ItemParams::packed() const {
  Eigen::VectorXd beta(size());
  beta << intercepts, loadings;
  return beta;
}

void ItemParams::unpack(const Eigen::VectorXd& beta) {
  if (beta.size() != size()) {
    throw std::invalid_argument("ItemParams::unpack: size mismatch");
  }
  intercepts = beta.head(intercepts.size());
  loadings = beta.tail(loadings.size());
}

void validate_item(const ItemParams& item) {
  if (item.intercepts.size() < 1) {
    throw std::invalid_argument("item needs at least one intercept");
  }
  if (item.kind == ModelKind::binary && item.intercepts.size() != 1) {
    throw std::invalid_argument("binary item must have exactly one intercept");
  }
  if (item.loadings.size() < 1) {
    throw std::invalid_argument("item needs at least one loading");
  }
  if (!item.intercepts.allFinite() || !item.loadings.allFinite()) {
    throw std::invalid_argument("item parameters must be finite");
  }
  if (item.kind == ModelKind::graded) {
    for (Eigen::Index t = 1; t < item.intercepts.size(); ++t) {
      if (item.intercepts[t] < item.intercepts[t - 1]) {
        throw std::invalid_argument(
            "graded thresholds must be non-decreasing (d_j0 <= d_j1 <= ...)");
      }
    }
  }
}

Eigen::MatrixXd loading_matrix(const std::vector<ItemParams>& items) {
  if (items.empty()) return {};
  const auto k = items.front().loadings.size();
  Eigen::MatrixXd a(static_cast<Eigen::Index>(items.size()), k);
  for (std::size_t j = 0; j < items.size(); ++j) {
    if (items[j].loadings.size() != k) {
      throw std::invalid_argument("items disagree on the number of factors");
    }
    a.row(static_cast<Eigen::Index>(j)) = items[j].loadings.transpose();
  }
  return a;
}

Dataset::Dataset(Eigen::MatrixXi responses, std::vector<int> categories)
    : responses_(std::move(responses)), categories_(std::move(categories)) {
  if (static_cast<Eigen::Index>(categories_.size()) != responses_.cols()) {
    throw std::invalid_argument("Dataset: categories length must equal item count");
  }
  for (std::size_t j = 0; j < categories_.size(); ++j) {
    if (categories_[j] < 2) {
      throw std::invalid_argument("Dataset: item " + std::to_string(j) +
                                  " needs at least 2 categories");
    }
  }
  for (Eigen::Index j = 0; j < responses_.cols(); ++j) {
    const int top = categories_[static_cast<std::size_t>(j)] - 1;
    for (Eigen::Index i = 0; i < responses_.rows(); ++i) {
      const int y = responses_(i, j);
      if (y != kMissing && (y < 0 || y > top)) {
        throw std::invalid_argument("Dataset: response " + std::to_string(y) + " at row " +
                                    std::to_string(i) + ", column " + std::to_string(j) +
                                    " outside 0.." + std::to_string(top));
      }
    }
  }
}

Dataset Dataset::from_responses(Eigen::MatrixXi responses) {
  std::vector<int> cats(static_cast<std::size_t>(responses.cols()), 2);
  for (Eigen::Index j = 0; j < responses.cols(); ++j) {
    int top = 1;
    for (Eigen::Index i = 0; i < responses.rows(); ++i) top = std::max(top, responses(i, j));
    cats[static_cast<std::size_t>(j)] = top + 1;
  }
  return Dataset(std::move(responses), std::move(cats));
}

bool Dataset::is_binary() const {
  return std::all_of(categories_.begin(), categories_.end(), [](int c) { return c == 2; });
}

int Dataset::max_categories() const {
  return categories_.empty() ? 0 : *std::max_element(categories_.begin(), categories_.end());
}

void Dataset::require_coverage() const {
  if (responses_.rows() == 0 || responses_.cols() == 0) {
    throw std::invalid_argument("Dataset: empty response matrix");
  }
  for (Eigen::Index i = 0; i < responses_.rows(); ++i) {
    if ((responses_.row(i).array() == kMissing).all()) {
      throw std::invalid_argument("Dataset: row " + std::to_string(i) + " has no observed response");
    }
  }
  for (Eigen::Index j = 0; j < responses_.cols(); ++j) {
    if ((responses_.col(j).array() == kMissing).all()) {
      throw std::invalid_argument("Dataset: column " + std::to_string(j) +
                                  " has no observed response");
    }
  }
}

FactorConfig::FactorConfig(int k) : FactorConfig(Eigen::MatrixXd::Identity(k, k)) {}

FactorConfig::FactorConfig(Eigen::MatrixXd correlation) : correlation_(std::move(correlation)) {
  if (correlation_.rows() < 1 || correlation_.rows() != correlation_.cols()) {
    throw std::invalid_argument("FactorConfig: correlation must be square with K >= 1");
  }
  if (!correlation_.allFinite()) {
    throw std::invalid_argument("FactorConfig: non-finite correlation");
  }
  if ((correlation_ - correlation_.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("FactorConfig: correlation must be symmetric");
  }
  if ((correlation_.diagonal().array() - 1.0).abs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("FactorConfig: correlation must have unit diagonal");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(correlation_);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("FactorConfig: correlation is not positive definite");
  }
  cholesky_ = llt.matrixL();
  precision_ = llt.solve(Eigen::MatrixXd::Identity(correlation_.rows(), correlation_.cols()));
}

Eigen::MatrixXd to_correlation(const Eigen::MatrixXd& covariance) {
  const Eigen::VectorXd inv_sd = covariance.diagonal().array().sqrt().inverse();
  Eigen::MatrixXd r = inv_sd.asDiagonal() * covariance * inv_sd.asDiagonal();
  r = 0.5 * (r + r.transpose());
  r.diagonal().setOnes();
  return r;
}

QMatrix::QMatrix(Eigen::MatrixXi entries) : entries_(std::move(entries)) {
  for (Eigen::Index j = 0; j < entries_.rows(); ++j) {
    bool any = false;
    for (Eigen::Index k = 0; k < entries_.cols(); ++k) {
      const int q = entries_(j, k);
      if (q != 0 && q != 1) {
        throw std::invalid_argument("QMatrix: entries must be 0 or 1");
      }
      any = any || q == 1;
    }
    if (!any) {
      throw std::invalid_argument("QMatrix: row " + std::to_string(j) + " has no free loading");
    }
  }
}

QMatrix QMatrix::all_ones(int items, int k) {
  return QMatrix(Eigen::MatrixXi::Ones(items, k));
}

bool QMatrix::all_free() const { return (entries_.array() == 1).all(); }

}  // namespace ifa
