#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "ifa/identify.hpp"
#include "ifa/irf.hpp"
#include "ifa/normal.hpp"
#include "ifa/simulate.hpp"
#include "test_util.hpp"

namespace {

using namespace ifa;

ItemParams binary_item(double d, Eigen::VectorXd a) {
  ItemParams item;
  item.intercepts = Eigen::VectorXd::Constant(1, d);
  item.loadings = std::move(a);
  return item;
}

TEST(Simulate, SymmetricCoin) {
  const Dataset data = simulate_responses(PersonFactors::Zero(100000, 1), {binary_item(0.0, Eigen::VectorXd::Zero(1))},
                                          Link::logit, 1);
  EXPECT_NEAR(data.responses().cast<double>().mean(), 0.5, 0.005);
}

TEST(Simulate, SameSeedSameData) {
  SimSpec spec;
  spec.n = 300;
  spec.j = 12;
  spec.k = 2;
  spec.kind = ModelKind::gpc;
  spec.seed = 77;
  const Simulation a = simulate(spec);
  const Simulation b = simulate(spec);
  EXPECT_EQ(a.data.responses(), b.data.responses());
  EXPECT_EQ(a.thetas, b.thetas);
  spec.seed = 78;
  EXPECT_NE(simulate(spec).data.responses(), a.data.responses());
}

TEST(Simulate, ProbitCompoundMarginal) {
  for (const double d : {0.0, 1.0}) {
    SimSpec spec;
    spec.n = 100000;
    spec.j = 1;
    spec.link = Link::probit;
    spec.loading_low = spec.loading_high = 1.0;
    spec.intercept_low = spec.intercept_high = d;
    spec.seed = 3;
    const Simulation sim = simulate(spec);
    EXPECT_NEAR(sim.data.responses().cast<double>().mean(), normal_cdf(d / std::sqrt(2.0)), 0.005);
  }
}

TEST(Simulate, FactorCorrelationAndQPattern) {
  SimSpec spec;
  spec.n = 20000;
  spec.j = 6;
  spec.k = 2;
  Eigen::MatrixXd corr(2, 2);
  corr << 1.0, -0.5, -0.5, 1.0;
  spec.correlation = corr;
  Eigen::MatrixXi q(6, 2);
  q << 1, 0, 1, 0, 1, 1, 0, 1, 0, 1, 1, 1;
  spec.q = QMatrix(q);
  const Simulation sim = simulate(spec);
  const Eigen::MatrixXd cov = sim.thetas.transpose() * sim.thetas / 20000.0;
  EXPECT_LT((cov - corr).cwiseAbs().maxCoeff(), 0.03);
  for (int j = 0; j < 6; ++j)
    for (int k = 0; k < 2; ++k) EXPECT_EQ(sim.items[static_cast<std::size_t>(j)].loadings[k] != 0.0, q(j, k) == 1);
}

TEST(Simulate, InvalidSpecRejected) {
  SimSpec spec;
  spec.k = 2;
  spec.correlation = Eigen::MatrixXd::Constant(2, 2, 1.0);
  EXPECT_THROW(simulate(spec), std::invalid_argument);
  SimSpec probit_gpc;
  probit_gpc.kind = ModelKind::gpc;
  probit_gpc.link = Link::probit;
  EXPECT_THROW(simulate(probit_gpc), std::invalid_argument);
  SimSpec reversed;
  reversed.loading_low = 2.0;
  reversed.loading_high = 1.0;
  EXPECT_THROW(simulate(reversed), std::invalid_argument);
}

// Given theta, residuals of neighbouring items are uncorrelated.
TEST(Simulate, LocalIndependence) {
  SimSpec spec;
  spec.n = 40000;
  spec.j = 6;
  spec.k = 2;
  spec.kind = ModelKind::graded;
  spec.seed = 4;
  const Simulation sim = simulate(spec);
  for (int j = 0; j + 1 < spec.j; ++j) {
    Eigen::VectorXd r0(spec.n);
    Eigen::VectorXd r1(spec.n);
    for (int i = 0; i < spec.n; ++i) {
      const Eigen::VectorXd theta = sim.thetas.row(i).transpose();
      for (int side = 0; side < 2; ++side) {
        const ItemParams& item = sim.items[static_cast<std::size_t>(j + side)];
        const Eigen::VectorXd p = category_probabilities(item, item.loadings.dot(theta), Link::logit);
        double expected = 0.0;
        for (Eigen::Index t = 0; t < p.size(); ++t) expected += static_cast<double>(t) * p[t];
        (side == 0 ? r0 : r1)[i] = sim.data(i, j + side) - expected;
      }
    }
    const double corr = r0.dot(r1) / std::sqrt(r0.squaredNorm() * r1.squaredNorm());
    EXPECT_LT(std::abs(corr), 4.0 / std::sqrt(spec.n)) << "items " << j << ", " << j + 1;
  }
}

TEST(ProbMse, Examples) {
  std::mt19937_64 rng(5);
  const PersonFactors thetas = PersonFactors::Random(50, 1);
  std::vector<ItemParams> truth{binary_item(0.0, Eigen::VectorXd::Zero(1)), binary_item(0.0, Eigen::VectorXd::Zero(1))};
  EXPECT_EQ(prob_mse(thetas, truth, thetas, truth, Link::logit), 0.0);
  std::vector<ItemParams> shifted{binary_item(link_function(Link::logit, 0.6), Eigen::VectorXd::Zero(1)),
                                  binary_item(link_function(Link::logit, 0.4), Eigen::VectorXd::Zero(1))};
  EXPECT_NEAR(prob_mse(thetas, truth, thetas, shifted, Link::logit), 0.01, 1e-15);
}

TEST(ProbMse, InvariantUnderFactorTransform) {
  SimSpec spec;
  spec.n = 200;
  spec.j = 10;
  spec.k = 3;
  spec.kind = ModelKind::graded;
  const Simulation sim = simulate(spec);
  Eigen::Matrix3d h;
  h << 1.2, 0.3, -0.4, 0.1, 0.9, 0.2, -0.5, 0.0, 1.1;
  const PersonFactors thetas = sim.thetas * h.transpose();
  std::vector<ItemParams> items = sim.items;
  for (auto& item : items) item.loadings = h.inverse().transpose() * item.loadings;
  const Simulation other = [&] {
    SimSpec s2 = spec;
    s2.seed = 9;
    return simulate(s2);
  }();
  const double base = prob_mse(sim.thetas, sim.items, other.thetas, other.items, Link::logit);
  EXPECT_LT(prob_mse(sim.thetas, sim.items, thetas, items, Link::logit), 1e-10);
  EXPECT_NEAR(prob_mse(other.thetas, other.items, thetas, items, Link::logit), base, 1e-10);
}

TEST(RecoveryReport, TruthAgainstItself) {
  SimSpec spec;
  spec.n = 300;
  spec.j = 15;
  spec.k = 2;
  const Simulation sim = simulate(spec);
  const RecoveryReport r = recovery_report(sim.thetas, sim.items, sim.thetas, sim.items, Link::logit);
  EXPECT_EQ(r.prob_mse, 0.0);
  EXPECT_LT(r.aligned_loading_loss, 1e-20);
  EXPECT_EQ(r.q_loading_loss, 0.0);
  EXPECT_NEAR(r.mean_theta_correlation(), 1.0, 1e-12);
}

TEST(RecoveryReport, TransformedFitAlignsExactly) {
  SimSpec spec;
  spec.n = 300;
  spec.j = 15;
  spec.k = 2;
  const Simulation sim = simulate(spec);
  Eigen::Matrix2d r;
  r << 0.8, 0.5, -0.3, 1.1;
  std::vector<ItemParams> items = sim.items;
  for (auto& item : items) item.loadings = r.transpose() * item.loadings;
  const PersonFactors thetas = sim.thetas * r.transpose().inverse();
  const RecoveryReport rep = recovery_report(sim.thetas, sim.items, thetas, items, Link::logit);
  EXPECT_LT(rep.aligned_loading_loss, 1e-12);
  EXPECT_GT(rep.q_loading_loss, 0.01);
  EXPECT_LT(rep.prob_mse, 1e-20);
  EXPECT_NEAR(rep.mean_theta_correlation(), 1.0, 1e-10);
}

TEST(RecoveryReport, AlignedLossMatchesOptimizer) {
  SimSpec spec;
  spec.n = 100;
  spec.j = 12;
  spec.k = 2;
  const Simulation truth = simulate(spec);
  spec.seed = 2;
  const Simulation fit = simulate(spec);
  const Eigen::MatrixXd est = loading_matrix(fit.items);
  const Eigen::MatrixXd ref = loading_matrix(truth.items);
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(2, 2);
  const double step = 0.5 / (est.transpose() * est).eigenvalues().real().maxCoeff();
  for (int it = 0; it < 50000; ++it) h += step * (ref - est * h.transpose()).transpose() * est;
  const double oracle = (ref - est * h.transpose()).squaredNorm() / static_cast<double>(ref.size());
  const RecoveryReport rep = recovery_report(truth.thetas, truth.items, fit.thetas, fit.items, Link::logit);
  EXPECT_NEAR(rep.aligned_loading_loss, oracle, 0.1 * oracle);
}

TEST(RecoveryReport, SymmetricUnderRowPermutation) {
  SimSpec spec;
  spec.n = 80;
  spec.j = 8;
  spec.k = 2;
  const Simulation truth = simulate(spec);
  spec.seed = 3;
  const Simulation fit = simulate(spec);
  std::vector<int> order(80);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), std::mt19937_64(4));
  PersonFactors pt(80, 2);
  PersonFactors pf(80, 2);
  for (int i = 0; i < 80; ++i) {
    pt.row(i) = truth.thetas.row(order[i]);
    pf.row(i) = fit.thetas.row(order[i]);
  }
  const RecoveryReport a = recovery_report(truth.thetas, truth.items, fit.thetas, fit.items, Link::logit);
  const RecoveryReport b = recovery_report(pt, truth.items, pf, fit.items, Link::logit);
  EXPECT_NEAR(a.prob_mse, b.prob_mse, 1e-15);
  EXPECT_EQ(a.aligned_loading_loss, b.aligned_loading_loss);
  EXPECT_LT((a.theta_correlation - b.theta_correlation).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RecoveryReport, DimensionMismatchRejected) {
  SimSpec spec;
  spec.n = 20;
  spec.j = 5;
  const Simulation sim = simulate(spec);
  std::vector<ItemParams> fewer(sim.items.begin(), sim.items.end() - 1);
  EXPECT_THROW(recovery_report(sim.thetas, sim.items, sim.thetas, fewer, Link::logit), std::invalid_argument);
}

}  // namespace
