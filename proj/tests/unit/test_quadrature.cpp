#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ifa/irf.hpp"
#include "ifa/likelihood.hpp"
#include "ifa/quadrature.hpp"
#include "test_util.hpp"

namespace {

using namespace ifa;

TEST(GaussHermite, NormalMomentsAreExact) {
  for (const int points : {5, 21, 41}) {
    Eigen::VectorXd z;
    Eigen::VectorXd w;
    gauss_hermite(points, z, w);
    EXPECT_NEAR(w.sum(), 1.0, 1e-14);
    EXPECT_NEAR(w.dot(z), 0.0, 1e-14);
    EXPECT_NEAR(w.dot(z.cwiseAbs2()), 1.0, 1e-13);
    EXPECT_NEAR(w.dot(z.array().pow(4).matrix()), 3.0, 1e-12);
    if (points >= 4) EXPECT_NEAR(w.dot(z.array().pow(6).matrix()), 15.0, 1e-11);
    for (Eigen::Index q = 0; q < z.size(); ++q) EXPECT_NEAR(z[q], -z[z.size() - 1 - q], 1e-13);
  }
}

TEST(Grid, WeightsSumToOneAndMatchCovariance) {
  Eigen::Matrix3d corr;
  corr << 1.0, 0.4, -0.2, 0.4, 1.0, 0.3, -0.2, 0.3, 1.0;
  for (int k = 1; k <= 3; ++k) {
    const FactorConfig factors{Eigen::MatrixXd(corr.topLeftCorner(k, k))};
    const QuadratureGrid grid = make_quadrature_grid(factors, 11);
    ASSERT_EQ(grid.size(), static_cast<int>(std::pow(11, k)));
    const Eigen::VectorXd w = grid.log_weights.array().exp();
    EXPECT_NEAR(w.sum(), 1.0, 1e-10);
    const Eigen::MatrixXd second = grid.nodes.transpose() * w.asDiagonal() * grid.nodes;
    EXPECT_LT((second - factors.correlation()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Grid, MoreThanThreeFactorsRejected) {
  try {
    make_quadrature_grid(FactorConfig(4));
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("stem"), std::string::npos);
  }
}

TEST(MarginalLikelihood, ZeroLoadingsEqualJointAtAnyTheta) {
  std::mt19937_64 rng(1);
  const int n = 30;
  const int j = 6;
  std::vector<ItemParams> items;
  for (int c = 0; c < j; ++c) {
    ItemParams item = ifa::testing::random_item(rng, ModelKind::graded, 3, 2);
    item.loadings.setZero();
    items.push_back(item);
  }
  Eigen::MatrixXi y(n, j);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < j; ++c) y(i, c) = static_cast<int>(rng() % 3);
  y(0, 2) = kMissing;
  const Dataset data(y, std::vector<int>(j, 3));
  const PersonFactors thetas = PersonFactors::Random(n, 2) * 3.0;
  const double joint = log_joint_likelihood(data, thetas, items, Link::probit).value;
  EXPECT_NEAR(log_marginal_likelihood(data, items, Link::probit, FactorConfig(2), 7), joint, 1e-10);
}

TEST(MarginalLikelihood, SingleItemMatchesSimpson) {
  ItemParams item;
  item.intercepts = Eigen::VectorXd::Constant(1, 0.3);
  item.loadings = Eigen::VectorXd::Constant(1, 1.2);
  Eigen::MatrixXi y(1, 1);
  y << 1;
  const Dataset data(y, {2});
  const auto integrand = [&](double t) {
    return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI) * irf_binary(Eigen::VectorXd::Constant(1, t), item, Link::logit);
  };
  const double oracle = std::log(ifa::testing::simpson(integrand, -12.0, 12.0, 20000));
  EXPECT_NEAR(log_marginal_likelihood(data, {item}, Link::logit, FactorConfig(1), 21), oracle, 1e-8);
}

TEST(MarginalLikelihood, GridRefinementIsStable) {
  std::mt19937_64 rng(2);
  std::vector<ItemParams> items;
  for (int c = 0; c < 5; ++c) {
    ItemParams item = ifa::testing::random_item(rng, ModelKind::binary, 2, 1);
    item.loadings *= 0.6;
    items.push_back(item);
  }
  Eigen::MatrixXi y(4, 5);
  for (int i = 0; i < 4; ++i)
    for (int c = 0; c < 5; ++c) y(i, c) = static_cast<int>(rng() % 2);
  const Dataset data(y, std::vector<int>(5, 2));
  const double coarse = log_marginal_likelihood(data, items, Link::probit, FactorConfig(1), 21);
  const double fine = log_marginal_likelihood(data, items, Link::probit, FactorConfig(1), 41);
  EXPECT_LT(std::abs(coarse - fine), 1e-8);
}

TEST(MarginalLikelihood, TableRowsSumPerPerson) {
  std::mt19937_64 rng(3);
  std::vector<ItemParams> items;
  for (int c = 0; c < 3; ++c) items.push_back(ifa::testing::random_item(rng, ModelKind::gpc, 3, 2));
  Eigen::MatrixXi y(4, 3);
  y << 0, 1, 2, 2, kMissing, 0, 1, 1, 1, 0, 0, 0;
  const Dataset data(y, {3, 3, 3});
  const QuadratureGrid grid = make_quadrature_grid(FactorConfig(2), 5);
  const Eigen::MatrixXd table = grid_log_likelihood(data, items, Link::logit, grid);
  for (int q = 0; q < grid.size(); ++q) {
    for (int i = 0; i < 4; ++i) {
      EXPECT_NEAR(table(i, q), person_log_likelihood(data, i, grid.nodes.row(q).transpose(), items, Link::logit), 1e-12);
    }
  }
}

}  // namespace
