#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "support.hpp"
#include "ttsc/mixture.hpp"
#include "ttsc/weibull.hpp"

namespace ttsc {
namespace {

const WeibullParams kHigh{2.0, 0.8};
const WeibullParams kLow{1.5, 0.1};

TEST(Weibull, PdfExamples) {
  EXPECT_NEAR(weibull_pdf(1.0, {1.0, 1.0}), 0.367879, 1e-6);
  EXPECT_NEAR(weibull_pdf(1.0, {2.0, 1.0}), 0.735759, 1e-6);
  for (double k : {0.5, 1.0, 3.7}) {
    for (double lam : {0.1, 0.8, 2.0}) {
      EXPECT_NEAR(weibull_pdf(lam, {k, lam}), k / lam * std::exp(-1.0), 1e-12);
    }
  }
  EXPECT_THROW(weibull_pdf(0.0, {1.0, 1.0}), Error);
}

TEST(Weibull, LogPdfAgreesWithPdf) {
  for (double x : {1e-3, 0.1, 0.5, 2.0}) {
    for (WeibullParams w : {WeibullParams{0.7, 0.3}, kHigh, kLow}) {
      EXPECT_NEAR(std::exp(weibull_log_pdf(x, w)), weibull_pdf(x, w), 1e-12 * (1 + weibull_pdf(x, w)));
    }
  }
}

TEST(Weibull, MeanMatchesQuadrature) {
  for (WeibullParams w : {kHigh, kLow, WeibullParams{3.0, 1.2}}) {
    auto f = [&](double x) { return x > 0 ? x * weibull_pdf(x, w) : 0.0; };
    const double m = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-12);
    EXPECT_NEAR(weibull_mean(w), m, 1e-9);
  }
}

TEST(Mixture, PdfIntegratesToOne) {
  const auto d = testing::mixture_draws(128, 1, kHigh, kLow, 0.5);
  const MixtureFit fit = fit_mixture(d.x);
  auto f = [&](double x) { return x > 0 ? mixture_pdf(x, fit) : 0.0; };
  const double total = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-12);
  EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(Mixture, RecoversGeneratingComponents) {
  MixtureFit truth;
  truth.comp1 = kHigh;
  truth.comp2 = kLow;
  double total = 0.0;
  const int seeds = 20;
  for (int seed = 1; seed <= seeds; ++seed) {
    const auto d = testing::mixture_draws(128, seed, kHigh, kLow, 0.5);
    const MixtureFit fit = fit_mixture(d.x);
    std::size_t agree = 0, bayes = 0;
    for (std::size_t i = 0; i < d.x.size(); ++i) {
      agree += (p_high(d.x[i], fit) >= 0.5 ? 1 : 2) == d.component[i];
      bayes += (p_high(d.x[i], truth) >= 0.5 ? 1 : 2) == d.component[i];
    }
    // The true-parameter posterior itself misclassifies the overlap.
    EXPECT_GE(agree + 8, bayes) << "seed " << seed;
    total += static_cast<double>(agree) / d.x.size();
    const double truth_ll = mixture_log_likelihood(d.x, kHigh, kLow, 0.5);
    EXPECT_GE(fit.loglik, truth_ll - 0.01 * d.x.size()) << "seed " << seed;
    EXPECT_GT(weibull_mean(fit.high()), 0.4);
    EXPECT_LT(weibull_mean(fit.low()), 0.2);
  }
  EXPECT_GE(total / seeds, 0.9);
}

TEST(Mixture, LoglikMatchesReportedValue) {
  const auto d = testing::mixture_draws(64, 8, kHigh, kLow, 0.5);
  const MixtureFit fit = fit_mixture(d.x);
  double ll = 0.0;
  for (double x : d.x) ll += std::log(mixture_pdf(x, fit));
  EXPECT_NEAR(fit.loglik, ll, 1e-9 * std::abs(ll));
}

// Single-Weibull MLE by a fine scan of the shape; the scale is closed form.
double single_weibull_loglik(const std::vector<double>& x) {
  double best = -std::numeric_limits<double>::infinity();
  for (double k = 0.05; k <= 30.0; k *= 1.0005) {
    double s = 0.0;
    for (double v : x) s += std::pow(v, k);
    const double lam = std::pow(s / x.size(), 1.0 / k);
    double ll = 0.0;
    for (double v : x) ll += weibull_log_pdf(v, {k, lam});
    best = std::max(best, ll);
  }
  return best;
}

TEST(Mixture, SingleComponentDataStillFitsWell) {
  for (std::uint64_t seed : {10u, 11u, 12u}) {
    const auto d = testing::mixture_draws(100, seed, {2.5, 0.4}, {2.5, 0.4}, 0.5);
    const MixtureFit fit = fit_mixture(d.x);
    EXPECT_TRUE(fit.comp1.valid());
    EXPECT_TRUE(fit.comp2.valid());
    EXPECT_GE(fit.w1, 0.2 - 1e-15);
    EXPECT_LE(fit.w1, 0.8 + 1e-15);
    EXPECT_GE(fit.loglik, single_weibull_loglik(d.x) - 1e-6 * d.x.size());
  }
}

TEST(Mixture, WeightsAlwaysWithinBounds) {
  FitConfig cfg;
  cfg.weight_min = 0.3;
  cfg.weight_max = 0.7;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto d = testing::mixture_draws(40, seed, kHigh, kLow, 0.9);
    const MixtureFit fit = fit_mixture(d.x, cfg);
    EXPECT_GE(fit.w1, 0.3 - 1e-15);
    EXPECT_LE(fit.w1, 0.7 + 1e-15);
    EXPECT_NEAR(fit.w1 + fit.w2, 1.0, 1e-15);
  }
}

TEST(Mixture, DegenerateInputs) {
  const std::vector<double> three{0.1, 0.2, 0.3};
  try {
    fit_mixture(three);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFitDegenerate);
  }
  const std::vector<double> same(10, 0.25);
  EXPECT_THROW(fit_mixture(same), Error);
  const std::vector<double> bad{0.1, 0.2, 0.0, 0.4};
  try {
    fit_mixture(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDomainError);
  }
}

TEST(Mixture, BadConfigRejected) {
  FitConfig cfg;
  cfg.weight_min = 0.3;  // weight_max stays 0.8: not symmetric
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(PHigh, IdenticalComponentsGiveHalf) {
  MixtureFit fit;
  fit.comp1 = fit.comp2 = kHigh;
  fit.w1 = fit.w2 = 0.5;
  for (double x : {1e-5, 0.1, 0.8, 3.0}) EXPECT_DOUBLE_EQ(p_high(x, fit), 0.5);
}

TEST(PHigh, FittedExampleLimits) {
  const auto d = testing::mixture_draws(128, 1, kHigh, kLow, 0.5);
  const MixtureFit fit = fit_mixture(d.x);
  EXPECT_GT(p_high(weibull_mean(fit.high()), fit), 0.5);
  EXPECT_LT(p_high(1e-6, fit), 1e-3);
}

TEST(PHigh, SpikyLowComponentDominatesNearZero) {
  MixtureFit fit;
  fit.comp1 = kHigh;
  fit.comp2 = {0.8, 0.05};
  fit.w1 = fit.w2 = 0.5;
  fit.high_index = 1;
  EXPECT_LT(p_high(1e-6, fit), 1e-6);
  EXPECT_GT(p_high(0.8, fit), 0.99);
}

TEST(PHigh, InUnitIntervalEvenWhenDensitiesUnderflow) {
  MixtureFit fit;
  fit.comp1 = {50.0, 0.5};
  fit.comp2 = {50.0, 0.1};
  fit.high_index = 1;
  for (double x : {1e-9, 0.3, 5.0, 100.0}) {
    const double v = p_high(x, fit);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(p_high(100.0, fit), 1.0);
}

}  // namespace
}  // namespace ttsc
