#include "ifa/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ifa/identify.hpp"
#include "ifa/irf.hpp"

namespace ifa {
namespace {

void check_shape(Eigen::Index n, Eigen::Index j, int k) {
  if (k < 1) throw std::invalid_argument("spectral: K must be at least 1");
  if (n < k + 1 || j < k + 1) {
    throw std::invalid_argument("spectral: need N, J >= K + 1 (got N = " + std::to_string(n) +
                                ", J = " + std::to_string(j) + ", K = " + std::to_string(k) + ")");
  }
}

// Binary pipeline on an indicator matrix; unobserved cells hold 0 and the
// reconstruction is rescaled by the observed fraction.
SpectralFit fit_indicator_matrix(const Eigen::MatrixXd& y, double observed_fraction, int k,
                                 Link link, const SpectralConfig& config) {
  const Eigen::Index n = y.rows();
  const Eigen::Index j = y.cols();
  check_shape(n, j, k);

  Eigen::BDCSVD<Eigen::MatrixXd> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double tau = config.threshold_factor *
                     std::sqrt(static_cast<double>(std::max(n, j)) * observed_fraction);
  Eigen::Index kept = 0;
  while (kept < sv.size() && sv[kept] > tau) ++kept;
  kept = std::min<Eigen::Index>(std::max<Eigen::Index>(kept, k + 1), sv.size());

  const double tiny = sv.size() > 0 ? sv[0] * 1e-12 : 0.0;
  Eigen::Index nonzero = 0;
  while (nonzero < sv.size() && sv[nonzero] > tiny) ++nonzero;
  if (nonzero < k) {
    throw std::invalid_argument("spectral: only " + std::to_string(nonzero) +
                                " nonzero singular values, fewer than K = " + std::to_string(k));
  }

  Eigen::MatrixXd p_hat = svd.matrixU().leftCols(kept) * sv.head(kept).asDiagonal() *
                          svd.matrixV().leftCols(kept).transpose();
  p_hat /= observed_fraction;
  SpectralFit fit = spectral_from_probabilities(p_hat, k, link, config);
  fit.retained = static_cast<int>(kept);
  return fit;
}

Eigen::MatrixXd indicator(const Dataset& data, int split, double& observed_fraction) {
  const int n = data.n_persons();
  const int j = data.n_items();
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, j);
  long observed = 0;
  for (int c = 0; c < j; ++c) {
    const int cut = std::min(split, data.categories(c) - 1);
    for (int r = 0; r < n; ++r) {
      const int v = data(r, c);
      if (v == kMissing) continue;
      ++observed;
      y(r, c) = v >= cut ? 1.0 : 0.0;
    }
  }
  observed_fraction = static_cast<double>(observed) / (static_cast<double>(n) * j);
  return y;
}

bool all_columns_constant(const Eigen::MatrixXd& y, const Dataset& data) {
  for (int c = 0; c < data.n_items(); ++c) {
    bool seen0 = false;
    bool seen1 = false;
    for (int r = 0; r < data.n_persons(); ++r) {
      if (data.missing(r, c)) continue;
      (y(r, c) > 0.5 ? seen1 : seen0) = true;
    }
    if (seen0 && seen1) return false;
  }
  return true;
}

// Rotates the factor solution toward the 0/1 pattern of q and rescales the
// factors to unit variance, so masking the loadings afterwards keeps most of
// the signal and each factor has the sign of its pattern column.
void rotate_toward_pattern(SpectralFit& fit, const QMatrix& q) {
  Eigen::MatrixXd h;
  try {
    h = align_loadings(fit.loadings, q.entries().cast<double>()).transform;
  } catch (const std::invalid_argument&) {
    return;
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(h);
  if (!lu.isInvertible()) return;
  fit.loadings = fit.loadings * h.transpose();
  fit.thetas = fit.thetas * lu.inverse();
  const double n = static_cast<double>(fit.thetas.rows());
  for (Eigen::Index k = 0; k < fit.thetas.cols(); ++k) {
    const double scale = std::sqrt(fit.thetas.col(k).squaredNorm() / n);
    if (!(scale > 0.0)) continue;
    fit.thetas.col(k) /= scale;
    fit.loadings.col(k) *= scale;
  }
}

}  // namespace

SpectralFit spectral_from_probabilities(const Eigen::MatrixXd& p_hat, int k, Link link,
                                        const SpectralConfig& config) {
  const Eigen::Index n = p_hat.rows();
  const Eigen::Index j = p_hat.cols();
  check_shape(n, j, k);

  SpectralFit fit;
  fit.p_hat = p_hat.cwiseMax(config.clip).cwiseMin(1.0 - config.clip);
  Eigen::MatrixXd m = fit.p_hat.unaryExpr([link](double p) { return link_function(link, p); });
  fit.intercepts = m.colwise().mean().transpose();
  m.rowwise() -= fit.intercepts.transpose();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double root_n = std::sqrt(static_cast<double>(n));
  fit.thetas = root_n * svd.matrixU().leftCols(k);
  fit.loadings = svd.matrixV().leftCols(k) * svd.singularValues().head(k).asDiagonal() / root_n;
  for (int c = 0; c < k; ++c) {
    if (fit.loadings.col(c).sum() < 0) {
      fit.loadings.col(c) *= -1.0;
      fit.thetas.col(c) *= -1.0;
    }
  }
  fit.retained = static_cast<int>(std::min(n, j));
  fit.split_intercepts = fit.intercepts;
  fit.splits_per_item.assign(static_cast<std::size_t>(j), 1);
  return fit;
}

SpectralFit fit_svd_binary(const Dataset& data, int k, Link link, const SpectralConfig& config) {
  if (!data.is_binary()) throw std::invalid_argument("fit_svd_binary: data are not binary");
  double observed = 1.0;
  const Eigen::MatrixXd y = indicator(data, 1, observed);
  return fit_indicator_matrix(y, observed, k, link, config);
}

SpectralFit fit_svd_ordinal(const Dataset& data, int k, Link link, const SpectralConfig& config) {
  const int splits = data.max_categories() - 1;
  const int j = data.n_items();
  std::vector<SpectralFit> fits(static_cast<std::size_t>(splits));
  std::vector<bool> usable(static_cast<std::size_t>(splits), false);
  std::vector<int> skipped;
  for (int s = 1; s <= splits; ++s) {
    double observed = 1.0;
    const Eigen::MatrixXd y = indicator(data, s, observed);
    if (all_columns_constant(y, data)) {
      skipped.push_back(s);
      continue;
    }
    fits[static_cast<std::size_t>(s - 1)] = fit_indicator_matrix(y, observed, k, link, config);
    usable[static_cast<std::size_t>(s - 1)] = true;
  }
  const auto ref_it = std::find(usable.begin(), usable.end(), true);
  if (ref_it == usable.end()) throw std::invalid_argument("fit_svd_ordinal: every split is constant");
  const auto ref = static_cast<std::size_t>(ref_it - usable.begin());

  SpectralFit out = fits[ref];
  out.skipped_splits = skipped;
  out.split_intercepts = Eigen::MatrixXd::Zero(j, splits);
  out.splits_per_item.assign(static_cast<std::size_t>(j), 0);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(j, k);
  for (std::size_t s = 0; s < fits.size(); ++s) {
    if (!usable[s]) continue;
    Eigen::MatrixXd aligned = fits[s].loadings;
    if (s != ref) aligned = fits[s].loadings * align_loadings(fits[s].loadings, fits[ref].loadings).transform.transpose();
    out.split_intercepts.col(static_cast<Eigen::Index>(s)) = fits[s].intercepts;
    for (int c = 0; c < j; ++c) {
      if (static_cast<int>(s) + 1 > data.categories(c) - 1) continue;
      sum.row(c) += aligned.row(c);
      ++out.splits_per_item[static_cast<std::size_t>(c)];
    }
  }
  for (int c = 0; c < j; ++c) {
    const int count = out.splits_per_item[static_cast<std::size_t>(c)];
    if (count > 0) out.loadings.row(c) = sum.row(c) / count;
  }
  return out;
}

StartValues spectral_start(const Dataset& data, const ModelSpec& model, const QMatrix* q,
                           const SpectralConfig& config) {
  if (q != nullptr && (q->n_items() != data.n_items() || q->k() != model.k)) {
    throw std::invalid_argument("spectral_start: Q-matrix shape does not match J x K");
  }
  const int n = data.n_persons();
  const int j = data.n_items();
  const int k = model.k;
  StartValues start;
  start.items.resize(static_cast<std::size_t>(j));

  SpectralFit fit;
  bool have_fit = false;
  try {
    fit = data.is_binary() ? fit_svd_binary(data, k, model.link, config)
                           : fit_svd_ordinal(data, k, model.link, config);
    have_fit = fit.loadings.allFinite() && fit.thetas.allFinite();
  } catch (const std::invalid_argument&) {
    have_fit = false;
  }

  if (have_fit) {
    if (q != nullptr) rotate_toward_pattern(fit, *q);
    start.thetas = fit.thetas;
  } else {
    start.thetas = Eigen::MatrixXd::Zero(n, k);
  }

  for (int c = 0; c < j; ++c) {
    const int cats = data.categories(c);
    std::vector<double> counts(static_cast<std::size_t>(cats), 0.5);
    double total = 0.5 * cats;
    for (int r = 0; r < n; ++r) {
      const int v = data(r, c);
      if (v == kMissing) continue;
      counts[static_cast<std::size_t>(v)] += 1.0;
      total += 1.0;
    }
    ItemParams& item = start.items[static_cast<std::size_t>(c)];
    item.kind = model.kind;
    item.loadings = have_fit ? Eigen::VectorXd(fit.loadings.row(c).transpose())
                             : Eigen::VectorXd::Constant(k, 0.5 / std::sqrt(static_cast<double>(k)));
    switch (model.kind) {
      case ModelKind::binary: {
        item.intercepts.resize(1);
        item.intercepts[0] = have_fit ? fit.intercepts[c]
                                      : link_function(model.link, counts[1] / total);
        break;
      }
      case ModelKind::graded: {
        // P(Y >= s) ~ G(c_s + b'theta) means P(Y <= s-1) = G(-c_s - b'theta).
        item.loadings = -item.loadings;
        item.intercepts.resize(cats - 1);
        double cumulative = 0.0;
        for (int t = 0; t < cats - 1; ++t) {
          cumulative += counts[static_cast<std::size_t>(t)];
          item.intercepts[t] = (have_fit && fit.split_intercepts.cols() > t)
                                   ? -fit.split_intercepts(c, t)
                                   : link_function(model.link, cumulative / total);
        }
        std::sort(item.intercepts.data(), item.intercepts.data() + item.intercepts.size());
        break;
      }
      case ModelKind::gpc: {
        item.intercepts.resize(cats - 1);
        for (int t = 1; t < cats; ++t) {
          item.intercepts[t - 1] = std::log(counts[static_cast<std::size_t>(t)] /
                                            counts[static_cast<std::size_t>(t - 1)]);
        }
        break;
      }
    }
  }
  return start;
}

}  // namespace ifa
