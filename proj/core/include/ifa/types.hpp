#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ifa {

/// Code stored in a response matrix for a cell with no observation.
inline constexpr int kMissing = -1;

enum class ModelKind { binary, graded, gpc };
enum class Link { logit, probit };

std::string_view to_string(ModelKind kind);
std::string_view to_string(Link link);
ModelKind parse_model_kind(std::string_view name);
Link parse_link(std::string_view name);

/// N x K matrix of person factors, one row per person.
using PersonFactors = Eigen::MatrixXd;

/// Model family shared by every item of a fit.
struct ModelSpec {
  ModelKind kind = ModelKind::binary;
  Link link = Link::logit;
  int k = 1;
};

/// Parameters of a single item.
///
/// Intercept layout by model:
///   binary: (d_j), one entry;
///   graded: (d_j0, ..., d_j,t-1), cumulative thresholds, non-decreasing;
///   gpc:    (d_j1, ..., d_jt), adjacent-category intercepts.
struct ItemParams {
  ModelKind kind = ModelKind::binary;
  Eigen::VectorXd intercepts;
  Eigen::VectorXd loadings;

  int categories() const { return static_cast<int>(intercepts.size()) + 1; }
  int max_category() const { return static_cast<int>(intercepts.size()); }
  int factors() const { return static_cast<int>(loadings.size()); }
  int size() const { return static_cast<int>(intercepts.size() + loadings.size()); }

  /// (intercepts, loadings) stacked into one vector.
  Eigen::VectorXd packed() const;
  void unpack(const Eigen::VectorXd& beta);
};

/// Throws std::invalid_argument when the item is malformed (wrong intercept
/// count for its kind, non-finite entries, graded thresholds out of order).
void validate_item(const ItemParams& item);

/// J x K matrix whose rows are the item loading vectors.
Eigen::MatrixXd loading_matrix(const std::vector<ItemParams>& items);

/// Person and item values used to start an estimator.
struct StartValues {
  PersonFactors thetas;
  std::vector<ItemParams> items;
};

/// Observed categorical responses.
///
/// Entries are category codes 0..categories[j]-1 or kMissing.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Eigen::MatrixXi responses, std::vector<int> categories);

  /// Infers each item's category count as max(observed code) + 1, at least 2.
  static Dataset from_responses(Eigen::MatrixXi responses);

  int n_persons() const { return static_cast<int>(responses_.rows()); }
  int n_items() const { return static_cast<int>(responses_.cols()); }
  int categories(int item) const { return categories_[static_cast<std::size_t>(item)]; }
  const std::vector<int>& categories() const { return categories_; }
  const Eigen::MatrixXi& responses() const { return responses_; }

  int operator()(int person, int item) const { return responses_(person, item); }
  bool missing(int person, int item) const { return responses_(person, item) == kMissing; }
  bool is_binary() const;
  int max_categories() const;

  /// Throws std::invalid_argument if some row or column has no observation.
  /// Estimators call this on entry; lower-level likelihood code tolerates
  /// empty rows.
  void require_coverage() const;

 private:
  Eigen::MatrixXi responses_;
  std::vector<int> categories_;
};

/// Latent factor distribution N(0, correlation) with unit diagonal.
class FactorConfig {
 public:
  explicit FactorConfig(int k);
  explicit FactorConfig(Eigen::MatrixXd correlation);

  int k() const { return static_cast<int>(correlation_.rows()); }
  const Eigen::MatrixXd& correlation() const { return correlation_; }
  /// Lower Cholesky factor of the correlation matrix.
  const Eigen::MatrixXd& cholesky() const { return cholesky_; }
  const Eigen::MatrixXd& precision() const { return precision_; }

 private:
  Eigen::MatrixXd correlation_;
  Eigen::MatrixXd cholesky_;
  Eigen::MatrixXd precision_;
};

/// Rescales a symmetric positive-definite matrix to unit diagonal.
Eigen::MatrixXd to_correlation(const Eigen::MatrixXd& covariance);

/// J x K binary design matrix; q(j, k) == 0 pins loading a_jk at zero.
class QMatrix {
 public:
  QMatrix() = default;
  explicit QMatrix(Eigen::MatrixXi entries);

  static QMatrix all_ones(int items, int k);

  int n_items() const { return static_cast<int>(entries_.rows()); }
  int k() const { return static_cast<int>(entries_.cols()); }
  bool free(int item, int factor) const { return entries_(item, factor) != 0; }
  const Eigen::MatrixXi& entries() const { return entries_; }
  bool all_free() const;

 private:
  Eigen::MatrixXi entries_;
};

}  // namespace ifa
