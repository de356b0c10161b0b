#include <random>

#include <gtest/gtest.h>

#include "ifa/identify.hpp"
#include "test_util.hpp"

namespace {

using namespace ifa;

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = z(rng);
  return m;
}

double unaligned_loss(const Eigen::MatrixXd& est, const Eigen::MatrixXd& ref) {
  return (est - ref).squaredNorm() / static_cast<double>(ref.size());
}

TEST(Standardize, AlreadyStandardizedUnchanged) {
  std::mt19937_64 rng(1);
  const auto once = standardize_factors(random_matrix(rng, 50, 3));
  const auto twice = standardize_factors(once.thetas);
  EXPECT_LT((twice.thetas - once.thetas).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(twice.location.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((twice.scale.array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(Standardize, TwoPointExamples) {
  PersonFactors symmetric(2, 1);
  symmetric << -1, 1;
  const auto s = standardize_factors(symmetric);
  EXPECT_EQ(s.thetas, symmetric);

  PersonFactors shifted(2, 1);
  shifted << 0, 2;
  const auto t = standardize_factors(shifted);
  EXPECT_DOUBLE_EQ(t.thetas(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(t.thetas(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(t.location[0], 1.0);
  EXPECT_DOUBLE_EQ(t.scale[0], 1.0);
}

TEST(Standardize, ZeroVarianceRejected) {
  PersonFactors constant = PersonFactors::Constant(5, 2, 0.3);
  constant.col(0) << 1, 2, 3, 4, 5;
  EXPECT_THROW(standardize_factors(constant), std::invalid_argument);
}

TEST(Standardize, AbsorbKeepsLinearPredictors) {
  std::mt19937_64 rng(2);
  const PersonFactors thetas = random_matrix(rng, 30, 2) * 1.7;
  std::vector<ItemParams> items(4);
  for (auto& item : items) item = ifa::testing::random_item(rng, ModelKind::graded, 3, 2);
  const auto before = items;
  const auto s = standardize_factors(thetas);
  absorb_standardization(items, s.location, s.scale);
  for (std::size_t j = 0; j < items.size(); ++j) {
    for (int i = 0; i < thetas.rows(); ++i) {
      const double old_eta = before[j].loadings.dot(thetas.row(i).transpose()) + before[j].intercepts[1];
      const double new_eta = items[j].loadings.dot(s.thetas.row(i).transpose()) + items[j].intercepts[1];
      EXPECT_NEAR(old_eta, new_eta, 1e-12);
    }
  }
}

TEST(Align, IdentityCase) {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd a = random_matrix(rng, 10, 3);
  const auto r = align_loadings(a, a);
  EXPECT_LT((r.transform - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT(r.loss, 1e-20);
}

TEST(Align, ExactRotationRecovered) {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd ref = random_matrix(rng, 12, 3);
  const Eigen::MatrixXd rot = random_matrix(rng, 3, 3) + 2.0 * Eigen::MatrixXd::Identity(3, 3);
  EXPECT_LT(align_loadings(ref * rot, ref).loss, 1e-10);
}

// Plain gradient descent on the convex loss, independent of the normal equations.
TEST(Align, MatchesIterativeOptimizer) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::MatrixXd est = random_matrix(rng, 6, 2);
    const Eigen::MatrixXd ref = random_matrix(rng, 6, 2);
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(2, 2);
    const double step = 0.5 / (est.transpose() * est).eigenvalues().real().maxCoeff();
    for (int it = 0; it < 20000; ++it) {
      const Eigen::MatrixXd residual = ref - est * h.transpose();  // rows a*_j - H a_j
      h += step * residual.transpose() * est;
    }
    const double oracle = (ref - est * h.transpose()).squaredNorm() / 12.0;
    EXPECT_NEAR(align_loadings(est, ref).loss, oracle, 1e-6);
  }
}

TEST(Align, RankDeficientRejected) {
  Eigen::MatrixXd est(4, 2);
  est << 1, 2, 2, 4, 3, 6, 4, 8;
  EXPECT_THROW(align_loadings(est, est), std::invalid_argument);
}

TEST(Align, InvariantUnderPostmultiplication) {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::MatrixXd est = random_matrix(rng, 15, 3);
    const Eigen::MatrixXd ref = random_matrix(rng, 15, 3);
    const Eigen::MatrixXd r = random_matrix(rng, 3, 3) + 3.0 * Eigen::MatrixXd::Identity(3, 3);
    EXPECT_NEAR(align_loadings(est, ref).loss, align_loadings(est * r, ref).loss, 1e-8);
  }
}

TEST(Align, NeverWorseThanUnaligned) {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::MatrixXd ref = random_matrix(rng, 8, 2);
    const Eigen::MatrixXd est = ref + 0.3 * random_matrix(rng, 8, 2);
    EXPECT_LE(align_loadings(est, ref).loss, unaligned_loss(est, ref) + 1e-14);
  }
}

TEST(QMask, Examples) {
  std::mt19937_64 rng(8);
  std::vector<ItemParams> items(3);
  for (auto& item : items) item = ifa::testing::random_item(rng, ModelKind::binary, 2, 2);
  const auto same = apply_q_mask(items, QMatrix::all_ones(3, 2));
  for (std::size_t j = 0; j < items.size(); ++j) EXPECT_EQ(same[j].loadings, items[j].loadings);

  items[1].loadings[0] = 0.7;
  Eigen::MatrixXi entries(3, 2);
  entries << 1, 1, 0, 1, 1, 0;
  const auto masked = apply_q_mask(items, QMatrix(entries));
  EXPECT_EQ(masked[1].loadings[0], 0.0);
  EXPECT_EQ(masked[1].loadings[1], items[1].loadings[1]);
  EXPECT_EQ(masked[2].loadings[1], 0.0);
}

}  // namespace
