#pragma once

// Two-component Weibull mixture fitted by bounded maximum likelihood.
//
// The optimizer is an EM alternation: responsibilities in the E-step, then
// a per-component weighted Weibull MLE (1-D root find on the shape, closed
// form scale) and a mixing weight projected onto [weight_min, weight_max].
// Each M-step is the exact constrained maximizer, so the log-likelihood is
// non-decreasing across iterations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "ttsc/error.hpp"
#include "ttsc/weibull.hpp"

namespace ttsc {

struct FitConfig {
  double weight_min = 0.2;
  double weight_max = 0.8;
  int max_iterations = 200;
  double tolerance = 1e-8;
  // Shape box. The upper bound keeps a component from collapsing onto a
  // single repeated value, where the likelihood is unbounded.
  double shape_min = 0.05;
  double shape_max = 100.0;

  void validate() const {
    if (!(weight_min > 0.0 && weight_min <= 0.5 && weight_max >= 0.5 && weight_max < 1.0 &&
          std::abs(weight_min + weight_max - 1.0) < 1e-12)) {
      throw Error(ErrorCode::kConfigError,
                  "weight bounds must be symmetric, [w, 1 - w] with 0 < w <= 0.5");
    }
    if (max_iterations < 1) throw Error(ErrorCode::kConfigError, "max_iterations must be >= 1");
    if (!(tolerance > 0.0)) throw Error(ErrorCode::kConfigError, "tolerance must be > 0");
    if (!(shape_min > 0.0 && shape_max > shape_min)) {
      throw Error(ErrorCode::kConfigError, "shape bounds must satisfy 0 < shape_min < shape_max");
    }
  }
};

struct MixtureFit {
  WeibullParams comp1;
  WeibullParams comp2;
  double w1 = 0.5;
  double w2 = 0.5;
  int high_index = 1;  // 1 or 2: component with the larger mean
  double loglik = -std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;

  const WeibullParams& high() const { return high_index == 1 ? comp1 : comp2; }
  const WeibullParams& low() const { return high_index == 1 ? comp2 : comp1; }
  double high_weight() const { return high_index == 1 ? w1 : w2; }
  double low_weight() const { return high_index == 1 ? w2 : w1; }
};

inline double mixture_pdf(double x, const MixtureFit& fit) {
  return fit.w1 * weibull_pdf(x, fit.comp1) + fit.w2 * weibull_pdf(x, fit.comp2);
}

namespace detail {

inline double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

// Robust log density: -inf instead of NaN when (x/lambda)^k overflows.
inline double safe_log_pdf(double x, const WeibullParams& p) {
  const double v = weibull_log_pdf(x, p);
  return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
}

inline double mixture_loglik(std::span<const double> data, const WeibullParams& c1,
                             const WeibullParams& c2, double w1) {
  const double lw1 = std::log(w1);
  const double lw2 = std::log1p(-w1);
  double ll = 0.0;
  for (double x : data) ll += log_add(lw1 + safe_log_pdf(x, c1), lw2 + safe_log_pdf(x, c2));
  return ll;
}

template <typename F>
double solve_increasing(F f, double lo, double hi) {
  const double flo = f(lo);
  const double fhi = f(hi);
  if (std::isnan(flo) || std::isnan(fhi)) {
    throw Error(ErrorCode::kFitDegenerate, "likelihood equation is not finite on the shape box");
  }
  if (flo >= 0.0) return lo;
  if (fhi <= 0.0) return hi;
  boost::uintmax_t max_iter = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(52);
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, max_iter);
  return 0.5 * (a + b);
}

/// Weighted Weibull MLE over a shape box. `weights` need not be normalized.
inline WeibullParams weighted_weibull_mle(std::span<const double> data,
                                          std::span<const double> weights,
                                          const FitConfig& config) {
  double wsum = 0.0;
  double wlog = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    wsum += weights[i];
    wlog += weights[i] * std::log(data[i]);
  }
  const double mean_log = wlog / wsum;

  // Stabilized sums S0 = sum w x^k, S1 = sum w x^k ln x, scaled by exp(-k max ln x).
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (weights[i] > 0.0) max_log = std::max(max_log, std::log(data[i]));
  }
  auto sums = [&](double k) {
    double s0 = 0.0, s1 = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!(weights[i] > 0.0)) continue;  // 0 * inf would poison the sums
      const double lx = std::log(data[i]);
      const double t = weights[i] * std::exp(k * (lx - max_log));
      s0 += t;
      s1 += t * lx;
    }
    return std::pair{s0, s1};
  };
  auto score = [&](double k) {
    const auto [s0, s1] = sums(k);
    return s1 / s0 - 1.0 / k - mean_log;
  };
  const double k = solve_increasing(score, config.shape_min, config.shape_max);
  const double s0 = sums(k).first;
  // lambda^k = S0 / wsum, with S0 rescaled back by exp(k max ln x).
  const double log_scale = (std::log(s0 / wsum) + k * max_log) / k;
  return WeibullParams{k, std::exp(log_scale)};
}

/// Method-of-moments Weibull from a sample mean and standard deviation.
inline WeibullParams weibull_moments(double mean, double sd, const FitConfig& config) {
  double k = config.shape_max;
  const double cv = sd / mean;
  if (cv > 1e-12) {
    auto cv_gap = [cv](double shape) {
      const double g1 = std::tgamma(1.0 + 1.0 / shape);
      const double g2 = std::tgamma(1.0 + 2.0 / shape);
      // Decreasing in shape; negate so the solver sees an increasing function.
      return -(std::sqrt(std::max(g2 / (g1 * g1) - 1.0, 0.0)) - cv);
    };
    k = solve_increasing(cv_gap, config.shape_min, config.shape_max);
  }
  return WeibullParams{k, mean / std::tgamma(1.0 + 1.0 / k)};
}

inline WeibullParams moments_of(std::span<const double> xs, const FitConfig& config) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var = xs.size() > 1 ? var / (n - 1.0) : 0.0;
  return weibull_moments(mean, std::sqrt(var), config);
}

inline int high_component(const WeibullParams& c1, const WeibullParams& c2) {
  const double m1 = weibull_mean(c1);
  const double m2 = weibull_mean(c2);
  if (m1 != m2) return m1 > m2 ? 1 : 2;
  return c1.scale >= c2.scale ? 1 : 2;
}

}  // namespace detail

/// Log-likelihood of `data` under an arbitrary parameter set.
inline double mixture_log_likelihood(std::span<const double> data, const WeibullParams& c1,
                                     const WeibullParams& c2, double w1) {
  return detail::mixture_loglik(data, c1, c2, w1);
}

inline double mixture_log_likelihood(std::span<const double> data, const MixtureFit& fit) {
  return detail::mixture_loglik(data, fit.comp1, fit.comp2, fit.w1);
}

/// Fits w1 W(k1, l1) + w2 W(k2, l2) to positive data.
///
/// Initialization is fixed: split the sorted data at its median, fit each
/// half by method of moments, start from equal weights. Throws
/// FitDegenerate with fewer than 4 points or fewer than 2 distinct values.
/// When the iteration cap is hit the best iterate is returned with
/// converged == false.
inline MixtureFit fit_mixture(std::span<const double> data, const FitConfig& config = {}) {
  config.validate();
  for (double x : data) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw Error(ErrorCode::kDomainError, "mixture data must be finite and > 0");
    }
  }
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.size() < 4) throw Error(ErrorCode::kFitDegenerate, "need at least 4 data points");
  if (sorted.front() == sorted.back()) {
    throw Error(ErrorCode::kFitDegenerate, "need at least 2 distinct values");
  }

  const std::size_t half = sorted.size() / 2;
  WeibullParams c1 = detail::moments_of(std::span(sorted).first(half), config);
  WeibullParams c2 = detail::moments_of(std::span(sorted).subspan(half), config);
  double w1 = 0.5;

  const std::size_t n = data.size();
  std::vector<double> r1(n), r2(n);
  double ll = detail::mixture_loglik(data, c1, c2, w1);

  MixtureFit best{c1, c2, w1, 1.0 - w1, 1, ll, false, 0};  // best iterate so far
  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    const double lw1 = std::log(w1);
    const double lw2 = std::log1p(-w1);
    double r1_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = lw1 + detail::safe_log_pdf(data[i], c1);
      const double b = lw2 + detail::safe_log_pdf(data[i], c2);
      const double denom = detail::log_add(a, b);
      if (denom == -std::numeric_limits<double>::infinity()) {
        r1[i] = w1;  // both densities vanish; fall back to the prior
      } else {
        r1[i] = std::exp(a - denom);
      }
      r2[i] = 1.0 - r1[i];
      r1_sum += r1[i];
    }

    w1 = std::clamp(r1_sum / static_cast<double>(n), config.weight_min, config.weight_max);
    if (r1_sum > 1e-12) c1 = detail::weighted_weibull_mle(data, r1, config);
    if (static_cast<double>(n) - r1_sum > 1e-12) c2 = detail::weighted_weibull_mle(data, r2, config);

    const double next = detail::mixture_loglik(data, c1, c2, w1);
    if (next > best.loglik) {
      best = MixtureFit{c1, c2, w1, 1.0 - w1, 1, next, false, iter};
    }
    const bool done = std::abs(next - ll) <= config.tolerance * std::max(1.0, std::abs(ll));
    ll = next;
    if (done) {
      best.converged = true;
      break;
    }
  }
  best.high_index = detail::high_component(best.comp1, best.comp2);
  return best;
}

/// Posterior probability that x was drawn from the high component.
inline double p_high(double x, const MixtureFit& fit) {
  if (!(x > 0.0)) throw Error(ErrorCode::kDomainError, "p_high needs x > 0");
  const double a = std::log(fit.high_weight()) + detail::safe_log_pdf(x, fit.high());
  const double b = std::log(fit.low_weight()) + detail::safe_log_pdf(x, fit.low());
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (a == kNegInf && b == kNegInf) {
    return x >= weibull_mean(fit.high()) ? 1.0 : 0.0;
  }
  if (a == std::numeric_limits<double>::infinity() && b == a) return 0.5;
  return 1.0 / (1.0 + std::exp(b - a));
}

}  // namespace ttsc
