#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "superfractal/stable_density.hpp"

using namespace superfractal;

namespace {
constexpr double kPi = std::numbers::pi;
double gauss(double x) { return std::exp(-x * x / 4.0) / std::sqrt(4.0 * kPi); }
double cauchy(double x) { return 1.0 / (kPi * (1.0 + x * x)); }
}  // namespace

TEST(UnitStable, GaussianClosedForm) {
  auto d = UnitStableDensity::get(2.0);
  for (double x = -20; x <= 20; x += 0.37) {
    EXPECT_NEAR(d->pdf(x), gauss(x), 1e-13) << x;
    EXPECT_NEAR(d->dpdf(x), -x / 2.0 * gauss(x), 1e-12) << x;
    EXPECT_NEAR(d->cdf(x), 0.5 * std::erfc(-x / 2.0), 1e-12) << x;
  }
}

TEST(UnitStable, CauchyClosedForm) {
  auto d = UnitStableDensity::get(1.0);
  for (double x = -200; x <= 200; x += 0.731) {
    EXPECT_NEAR(d->pdf(x), cauchy(x), 1e-12) << x;
    EXPECT_NEAR(d->dpdf(x), -2 * x / (kPi * std::pow(1 + x * x, 2)), 1e-11) << x;
    EXPECT_NEAR(d->cdf(x), 0.5 + std::atan(x) / kPi, 1e-11) << x;
  }
}

TEST(UnitStable, NormalizedAndContinuousAtSwitch) {
  for (double a : {1.1, 1.3, 1.6, 1.8}) {
    auto d = UnitStableDensity::get(a);
    double xs = d->switch_point();
    EXPECT_NEAR(d->pdf(xs - 1e-9), d->pdf(xs + 1e-9), 1e-9 * d->pdf(xs));
    EXPECT_NEAR(d->cdf(0.0), 0.5, 1e-12);
    EXPECT_NEAR(d->mass(-1e6, 1e6), 1.0 - 2.0 * d->series_ccdf(1e6), 1e-12);
  }
}

TEST(UnitStable, DensityAtOriginMatchesGammaFormula) {
  // p(0) = Gamma(1 + 1/alpha) / pi.
  for (double a : {1.2, 1.5, 1.6, 1.9}) {
    auto d = UnitStableDensity::get(a);
    EXPECT_NEAR(d->pdf(0.0), std::tgamma(1.0 + 1.0 / a) / kPi, 1e-12);
  }
}

TEST(UnitStable, DerivativeMatchesFiniteDifference) {
  auto d = UnitStableDensity::get(1.6);
  for (double x : {0.1, 0.7, 2.3, 9.0, 63.9, 70.0}) {
    double h = 1e-4;
    double fd = (d->pdf(x + h) - d->pdf(x - h)) / (2 * h);
    EXPECT_NEAR(d->dpdf(x), fd, 1e-8 * (1 + std::fabs(fd)));
  }
}
