#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ifa/irf.hpp"
#include "ifa/item_fit.hpp"
#include "test_util.hpp"

namespace {

using namespace ifa;
using ifa::testing::central_difference;
using ifa::testing::random_item;
using ifa::testing::random_vector;

struct Sample {
  Eigen::MatrixXd points;
  ItemDesign design;
};

Sample draw_sample(std::mt19937_64& rng, const ItemParams& truth, Link link, int n) {
  Sample s;
  std::normal_distribution<double> z;
  s.points.resize(n, truth.factors());
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < truth.factors(); ++k) s.points(i, k) = z(rng);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd p = category_probabilities(truth, truth.loadings.dot(s.points.row(i).transpose()), link);
    double u = ifa::testing::unif(rng, 0, 1);
    int y = 0;
    while (y < p.size() - 1 && u > p[y]) u -= p[y++];
    s.design.rows.push_back(i);
    s.design.categories.push_back(y);
  }
  s.design.points = &s.points;
  return s;
}

ItemParams neutral(const ItemParams& like) {
  ItemParams start = like;
  start.loadings.setConstant(0.1);
  for (Eigen::Index t = 0; t < start.intercepts.size(); ++t) {
    start.intercepts[t] = like.kind == ModelKind::graded ? -1.0 + t : 0.0;
  }
  return start;
}

// The maximizer is checked without the analytic gradient: the central
// difference of the objective vanishes and random perturbations never improve it.
TEST(FitItem, ReachesStationaryMaximum) {
  std::mt19937_64 rng(1);
  const std::pair<ModelKind, Link> cases[] = {{ModelKind::binary, Link::logit},
                                              {ModelKind::binary, Link::probit},
                                              {ModelKind::graded, Link::logit},
                                              {ModelKind::gpc, Link::logit}};
  for (const auto& [kind, link] : cases) {
    const ItemParams truth = random_item(rng, kind, 3, 2);
    const Sample s = draw_sample(rng, truth, link, 800);
    const ItemFitResult r = fit_item(neutral(truth), s.design, link, {});
    ASSERT_TRUE(r.converged);
    const auto f = [&](const Eigen::VectorXd& beta) {
      ItemParams probe = r.item;
      probe.unpack(beta);
      return item_objective(probe, s.design, link);
    };
    const Eigen::VectorXd fd = central_difference(f, r.item.packed(), 1e-4);
    EXPECT_LT(fd.cwiseAbs().maxCoeff() / 800.0, 1e-6);
    for (int rep = 0; rep < 50; ++rep) {
      EXPECT_LE(f(r.item.packed() + random_vector(rng, r.item.size(), -0.02, 0.02)), r.objective + 1e-9);
    }
  }
}

TEST(FitItem, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  const ItemParams truth = random_item(rng, ModelKind::graded, 4, 2);
  Sample s = draw_sample(rng, truth, Link::probit, 200);
  s.design.weights.assign(200, 0.0);
  for (auto& w : s.design.weights) w = ifa::testing::unif(rng, 0.1, 2.0);
  Eigen::VectorXd g;
  Eigen::MatrixXd info;
  item_gradient_information(truth, s.design, Link::probit, g, info);
  const auto f = [&](const Eigen::VectorXd& beta) {
    ItemParams probe = truth;
    probe.unpack(beta);
    return item_objective(probe, s.design, Link::probit);
  };
  EXPECT_LT(ifa::testing::relative_error(g, central_difference(f, truth.packed())), 1e-6);
  EXPECT_GT(info.ldlt().vectorD().minCoeff(), 0.0);
}

TEST(FitItem, MaskedLoadingsStayZero) {
  std::mt19937_64 rng(3);
  const ItemParams truth = random_item(rng, ModelKind::binary, 2, 3);
  const Sample s = draw_sample(rng, truth, Link::logit, 500);
  ItemFitOptions options;
  options.free_loadings = {true, false, true};
  ItemParams start = neutral(truth);
  start.loadings[1] = 0.0;
  const ItemFitResult r = fit_item(start, s.design, Link::logit, options);
  EXPECT_EQ(r.item.loadings[1], 0.0);
}

TEST(FitItem, BallConstraintRespected) {
  std::mt19937_64 rng(4);
  ItemParams truth = random_item(rng, ModelKind::binary, 2, 1);
  truth.loadings[0] = 3.0;
  truth.intercepts[0] = 1.0;
  const Sample s = draw_sample(rng, truth, Link::logit, 500);
  ItemFitOptions options;
  options.radius = 1.0;
  const ItemFitResult r = fit_item(neutral(truth), s.design, Link::logit, options);
  EXPECT_LE(r.item.packed().norm(), 1.0 + 1e-12);
  EXPECT_TRUE(r.on_boundary);
  // Brute force over the circle of radius 1.
  double best = -std::numeric_limits<double>::infinity();
  for (int step = 0; step < 20000; ++step) {
    const double angle = 2.0 * M_PI * step / 20000.0;
    ItemParams probe = truth;
    probe.intercepts[0] = std::cos(angle);
    probe.loadings[0] = std::sin(angle);
    best = std::max(best, item_objective(probe, s.design, Link::logit));
  }
  EXPECT_NEAR(r.objective, best, 1e-4) << r.item.packed().transpose() << " steps " << r.steps << " conv " << r.converged;
}

TEST(FitItem, GradedThresholdsStayOrdered) {
  std::mt19937_64 rng(5);
  ItemParams truth = random_item(rng, ModelKind::graded, 4, 1);
  truth.intercepts << -0.2, -0.1, 0.0;
  const Sample s = draw_sample(rng, truth, Link::logit, 150);
  const ItemFitResult r = fit_item(neutral(truth), s.design, Link::logit, {});
  for (Eigen::Index t = 1; t < r.item.intercepts.size(); ++t) {
    EXPECT_LE(r.item.intercepts[t - 1], r.item.intercepts[t]);
  }
}

TEST(FreeLoadingFlags, NullQIsAllFree) {
  const auto flags = free_loading_flags(nullptr, 0, 3);
  ASSERT_EQ(flags.size(), 3u);
  for (bool f : flags) EXPECT_TRUE(f);
}

}  // namespace
