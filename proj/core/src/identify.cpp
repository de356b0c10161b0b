#include "ifa/identify.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ifa {

StandardizedFactors standardize_factors(const PersonFactors& thetas) {
  if (thetas.rows() == 0) throw std::invalid_argument("standardize_factors: no rows");
  const double n = static_cast<double>(thetas.rows());
  StandardizedFactors out;
  out.location = thetas.colwise().mean().transpose();
  const Eigen::MatrixXd centred = thetas.rowwise() - out.location.transpose();
  out.scale = (centred.colwise().squaredNorm() / n).transpose().cwiseSqrt();
  for (Eigen::Index k = 0; k < out.scale.size(); ++k) {
    if (!(out.scale[k] > 0) || !std::isfinite(out.scale[k])) {
      throw std::invalid_argument("standardize_factors: column " + std::to_string(k) +
                                  " has zero variance");
    }
  }
  out.thetas = centred * out.scale.cwiseInverse().asDiagonal();
  return out;
}

void absorb_standardization(std::vector<ItemParams>& items, const Eigen::VectorXd& location,
                            const Eigen::VectorXd& scale) {
  // d + a'theta = (d + a'location) + (scale .* a)'theta_std
  for (auto& item : items) {
    const double shift = item.loadings.dot(location);
    item.intercepts.array() += shift;
    item.loadings = item.loadings.cwiseProduct(scale);
  }
}

AlignmentResult align_loadings(const Eigen::MatrixXd& estimated, const Eigen::MatrixXd& reference) {
  if (estimated.rows() != reference.rows() || estimated.cols() != reference.cols()) {
    throw std::invalid_argument("align_loadings: matrices must have equal shape");
  }
  const Eigen::Index j = estimated.rows();
  const Eigen::Index k = estimated.cols();
  if (j < k) throw std::invalid_argument("align_loadings: need J >= K");

  // min_H ||A* - Â H'||_F^2; H' solves the normal equations (Â'Â) H' = Â'A*.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(estimated);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) {
    throw std::invalid_argument("align_loadings: estimated loadings are rank deficient (rank " +
                                std::to_string(qr.rank()) + " < K = " + std::to_string(k) + ")");
  }
  const Eigen::MatrixXd h_t = qr.solve(reference);
  AlignmentResult out;
  out.transform = h_t.transpose();
  out.loss = (reference - estimated * h_t).squaredNorm() / static_cast<double>(j * k);
  return out;
}

std::vector<ItemParams> apply_q_mask(std::vector<ItemParams> items, const QMatrix& q) {
  if (static_cast<int>(items.size()) != q.n_items()) {
    throw std::invalid_argument("apply_q_mask: Q-matrix rows differ from item count");
  }
  for (std::size_t j = 0; j < items.size(); ++j) {
    auto& a = items[j].loadings;
    if (a.size() != q.k()) throw std::invalid_argument("apply_q_mask: factor count mismatch");
    for (Eigen::Index k = 0; k < a.size(); ++k) {
      if (!q.free(static_cast<int>(j), static_cast<int>(k))) a[k] = 0.0;
    }
  }
  return items;
}

}  // namespace ifa
