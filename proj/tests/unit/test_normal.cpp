#include <cmath>

#include <gtest/gtest.h>

#include "ifa/normal.hpp"

namespace {

// x, Phi(x), log Phi(x) to 20 digits (mpmath, 40-digit working precision).
struct Reference {
  double x;
  double cdf;
  double log_cdf;
};

constexpr Reference kReference[] = {
    {-37.5, 4.6053530095819548438e-308, -707.66898931750719107},
    {-30.0, 4.9067139271481870595e-198, -454.32124395634319711},
    {-20.0, 2.7536241186062336951e-89, -203.91715537109726394},
    {-10.0, 7.619853024160526066e-24, -53.231285150512470578},
    {-8.0, 6.2209605742717841235e-16, -35.013437159914549896},
    {-5.0, 2.8665157187919391167e-7, -15.064998393988725736},
    {-2.5, 6.209665325776135167e-3, -5.0816482772786904984},
    {-1.0, 1.5865525393145705141e-1, -1.8410216450092635058},
    {-0.3, 3.8208857781104736693e-1, -0.96210281816885065666},
    {0.0, 5.0e-1, -0.69314718055994530942},
    {0.7, 7.5803634777692697138e-1, -0.277023942277131263},
    {1.5, 9.33192798731141934e-1, -0.069143455612233982993},
    {3.0, 9.9865010196836990547e-1, -0.0013508099647481937988},
    {5.0, 9.9999971334842812081e-1, -2.8665161296376359338e-7},
    {8.0, 9.999999999999993779e-1, -6.2209605742717860585e-16},
};

TEST(Normal, CdfAbsoluteErrorBelowTwoUlpAtOne) {
  for (const auto& r : kReference) {
    EXPECT_LE(std::abs(ifa::normal_cdf(r.x) - r.cdf), 2e-16) << "x = " << r.x;
  }
}

TEST(Normal, CdfRelativeErrorInLowerTail) {
  for (const auto& r : kReference) {
    if (r.x < 0) EXPECT_NEAR(ifa::normal_cdf(r.x) / r.cdf, 1.0, 1e-13) << "x = " << r.x;
  }
}

TEST(Normal, LogCdfMatchesReference) {
  for (const auto& r : kReference) {
    EXPECT_NEAR(ifa::log_normal_cdf(r.x), r.log_cdf, 1e-13 * std::max(1.0, std::abs(r.log_cdf))) << "x = " << r.x;
  }
  // Beyond double range Phi underflows; log Phi ~ -x^2/2 - log(-x) - log(sqrt(2 pi)).
  const double x = -60.0;
  EXPECT_NEAR(ifa::log_normal_cdf(x), -0.5 * x * x - std::log(-x) - 0.5 * std::log(2 * M_PI), 1e-3);
}

TEST(Normal, QuantileMatchesReference) {
  EXPECT_NEAR(ifa::normal_quantile(1e-20), -9.2623400897984075796, 1e-13);
  EXPECT_NEAR(ifa::normal_quantile(1e-5), -4.2648907939228246102, 1e-13);
  EXPECT_NEAR(ifa::normal_quantile(0.025), -1.9599639845400542118, 1e-14);
  EXPECT_NEAR(ifa::normal_quantile(0.3), -0.52440051270804081597, 1e-14);
  EXPECT_EQ(ifa::normal_quantile(0.5), 0.0);
  EXPECT_NEAR(ifa::normal_quantile(0.8), 0.8416212335729143638, 1e-14);
  EXPECT_NEAR(ifa::normal_quantile(0.975), 1.9599639845400538556, 1e-14);
}

TEST(Normal, QuantileInvertsCdf) {
  // Above 5 the cdf is within a few ulp of 1 and cannot be inverted.
  for (double x = -30.0; x <= 5.0; x += 0.25) {
    EXPECT_NEAR(ifa::normal_quantile(ifa::normal_cdf(x)), x, 1e-9) << "x = " << x;
  }
}

TEST(Normal, InverseMillsFiniteEverywhere) {
  for (double x = -50.0; x <= 50.0; x += 0.5) {
    const double m = ifa::inverse_mills(x);
    EXPECT_TRUE(std::isfinite(m));
    // phi underflows to zero beyond x ~ 38.6.
    if (x < 38.0) EXPECT_GT(m, 0.0);
  }
  // phi(x)/Phi(x) ~ -x for very negative x.
  EXPECT_NEAR(ifa::inverse_mills(-40.0) / 40.0, 1.0, 1e-3);
}

}  // namespace
