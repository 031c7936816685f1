#pragma once

// Closed-form reasoning-error decompositions and their empirical
// counterparts. "Estimation error" here is always the part of the
// reasoning error E[(phat - I)^2] left after subtracting the model error
// (p - I)^2; for biased estimators it can be negative.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

#include "ttsc/error.hpp"
#include "ttsc/oracle.hpp"
#include "ttsc/paths.hpp"
#include "ttsc/random.hpp"

namespace ttsc {

struct ErrorBreakdown {
  double estimation_error = 0.0;  // signed
  double model_error = 0.0;
  double total = 0.0;
};

namespace detail {

inline void require_probability(double p, std::string_view what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::kDomainError, std::string(what) + " must lie in [0, 1]");
  }
}

inline ErrorBreakdown breakdown(double estimation, double p, bool is_correct) {
  const double ind = is_correct ? 1.0 : 0.0;
  const double model = (p - ind) * (p - ind);
  return ErrorBreakdown{estimation, model, estimation + model};
}

}  // namespace detail

/// Self-consistency: p(1 - p) / n + (p - I)^2. Exact (SC is unbiased).
inline ErrorBreakdown sc_closed_form(double p, std::size_t n, bool is_correct) {
  detail::require_probability(p, "p");
  if (n == 0) throw Error(ErrorCode::kInvalidSampleSize, "n must be >= 1");
  return detail::breakdown(p * (1.0 - p) / static_cast<double>(n), p, is_correct);
}

/// Perplexity on one path: (1 - p)^n p (2I - p) + (p - I)^2. Exact.
inline ErrorBreakdown ppl_closed_form(double p_path, std::size_t n, bool is_correct) {
  detail::require_probability(p_path, "p_path");
  if (n == 0) throw Error(ErrorCode::kInvalidSampleSize, "n must be >= 1");
  const double ind = is_correct ? 1.0 : 0.0;
  const double miss = std::pow(1.0 - p_path, static_cast<double>(n));
  return detail::breakdown(miss * p_path * (2.0 * ind - p_path), p_path, is_correct);
}

/// Perplexity consistency with alpha = 1 - p/k, in the published form
///   alpha^n p (2I - (1 + alpha^n) p) + (p - I)^2.
/// This form uses Var(phat) where E[(phat - p)^2] belongs and so omits the
/// squared bias; pc_exact_form gives the exact value for k equally likely
/// paths per answer. The two share the leading alpha^n rate.
inline ErrorBreakdown pc_closed_form(double p_answer, std::size_t k, std::size_t n,
                                     bool is_correct) {
  detail::require_probability(p_answer, "p_answer");
  if (k == 0 || p_answer / static_cast<double>(k) > 1.0) {
    throw Error(ErrorCode::kDomainError, "need k >= 1 and p/k <= 1");
  }
  if (n == 0) throw Error(ErrorCode::kInvalidSampleSize, "n must be >= 1");
  const double ind = is_correct ? 1.0 : 0.0;
  const double alpha = 1.0 - p_answer / static_cast<double>(k);
  const double an = std::pow(alpha, static_cast<double>(n));
  return detail::breakdown(an * p_answer * (2.0 * ind - (1.0 + an) * p_answer), p_answer,
                           is_correct);
}

/// Exact PC decomposition when the answer's mass is split over k paths of
/// probability q = p/k each:
///   alpha^n p (2I - (2k - 1) p / k) + (k - 1) p^2 (1 - 2q)^n / k + (p - I)^2.
/// Derived from E[D] and E[D^2] of the number D of distinct answer paths
/// seen in n draws. Reduces to ppl_closed_form at k = 1.
inline ErrorBreakdown pc_exact_form(double p_answer, std::size_t k, std::size_t n,
                                    bool is_correct) {
  detail::require_probability(p_answer, "p_answer");
  if (k == 0) throw Error(ErrorCode::kDomainError, "need k >= 1");
  if (n == 0) throw Error(ErrorCode::kInvalidSampleSize, "n must be >= 1");
  const double ind = is_correct ? 1.0 : 0.0;
  const double kd = static_cast<double>(k);
  const double q = p_answer / kd;
  const double nd = static_cast<double>(n);
  const double an = std::pow(1.0 - q, nd);
  const double bn = std::pow(1.0 - 2.0 * q, nd);
  const double est = an * p_answer * (2.0 * ind - (2.0 * kd - 1.0) * p_answer / kd) +
                     (kd - 1.0) * p_answer * p_answer * bn / kd;
  return detail::breakdown(est, p_answer, is_correct);
}

enum class ConvergenceRegime { kExponential, kLinear };

inline std::string_view to_string(ConvergenceRegime r) {
  return r == ConvergenceRegime::kLinear ? "linear" : "exponential";
}

struct DegenerationDiagnostic {
  double alpha_n = 1.0;        // (1 - p)^n
  double linear_approx = 1.0;  // 1 / (1 + n p)
  double ratio = 1.0;          // alpha_n / linear_approx
  ConvergenceRegime regime = ConvergenceRegime::kLinear;
};

/// For k = 1: when n p << 1, (1 - p)^n ~ 1/(1 + n p) and the PC rate is
/// effectively linear. Regime is linear when the ratio is within 5%.
inline DegenerationDiagnostic degeneration_diagnostic(double p, std::size_t n) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::kDomainError, "p must lie in (0, 1)");
  DegenerationDiagnostic d;
  d.alpha_n = std::pow(1.0 - p, static_cast<double>(n));
  d.linear_approx = 1.0 / (1.0 + static_cast<double>(n) * p);
  d.ratio = d.alpha_n / d.linear_approx;
  d.regime = (d.ratio >= 0.95 && d.ratio <= 1.05) ? ConvergenceRegime::kLinear
                                                   : ConvergenceRegime::kExponential;
  return d;
}

/// Probability that pruning reaches the optimal error reduction:
///   1 - exp(-2 k_hat k^2 (1 - tau / (1 - alpha))^2),
/// or 0 when tau > 1 - alpha, where the statement is vacuous.
inline double hoeffding_bound(std::size_t k, std::size_t k_hat, double alpha, double tau) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::kDomainError, "alpha must lie in (0, 1)");
  if (!(tau > 0.0)) throw Error(ErrorCode::kDomainError, "tau must be > 0");
  if (tau > 1.0 - alpha) return 0.0;
  const double gap = 1.0 - tau / (1.0 - alpha);
  const double kd = static_cast<double>(k);
  const double v = 1.0 - std::exp(-2.0 * static_cast<double>(k_hat) * kd * kd * gap * gap);
  return std::clamp(v, 0.0, 1.0);
}

struct PruneFailureStats {
  std::size_t trials = 0;
  std::size_t eligible_trials = 0;  // trials that sampled the correct answer
  std::size_t failures = 0;
  double rate = 0.0;                // failures / eligible_trials
  double stderr_rate = 0.0;         // binomial standard error of rate
  double mean_failure_bound = 0.0;  // mean of 1 - hoeffding_bound(k, k_hat, ...) over eligible trials
  std::size_t k = 0;
  double alpha = 0.0;
  double tau = 0.0;
};

/// Monte Carlo of the threshold event behind hoeffding_bound. For the
/// correct answer y (k oracle paths, alpha = 1 - p(y)/k), each trial draws
/// n paths; with k_hat >= 1 draws landing on y, the trial fails when the
/// mean probability of those draws is below tau.
inline PruneFailureStats empirical_prune_failure_rate(const OracleSpec& oracle, std::size_t n,
                                                      std::size_t trials, std::uint64_t seed,
                                                      double tau) {
  if (trials == 0) throw Error(ErrorCode::kInvalidSampleSize, "trials must be >= 1");
  if (n == 0) throw Error(ErrorCode::kInvalidSampleSize, "n must be >= 1");
  oracle.validate();
  PruneFailureStats s;
  s.trials = trials;
  s.tau = tau;
  for (const auto& a : oracle.path_answers) s.k += (a == oracle.truth) ? 1 : 0;
  if (s.k == 0) throw Error(ErrorCode::kDomainError, "oracle never produces the correct answer");
  const double p_truth = true_answer_prob(oracle, oracle.truth);
  s.alpha = 1.0 - p_truth / static_cast<double>(s.k);

  const CategoricalSampler sampler(oracle.path_probs);
  std::vector<bool> is_correct(oracle.num_paths());
  for (std::size_t i = 0; i < oracle.num_paths(); ++i) is_correct[i] = oracle.path_answers[i] == oracle.truth;

  double bound_sum = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, t));
    std::size_t k_hat = 0;
    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t d = sampler(rng);
      if (is_correct[d]) {
        ++k_hat;
        mass += oracle.path_probs[d];
      }
    }
    if (k_hat == 0) continue;
    ++s.eligible_trials;
    if (mass / static_cast<double>(k_hat) < tau) ++s.failures;
    bound_sum += s.alpha > 0.0 ? 1.0 - hoeffding_bound(s.k, k_hat, s.alpha, tau) : 1.0;
  }
  if (s.eligible_trials > 0) {
    const double m = static_cast<double>(s.eligible_trials);
    s.rate = static_cast<double>(s.failures) / m;
    s.stderr_rate = std::sqrt(s.rate * (1.0 - s.rate) / m);
    s.mean_failure_bound = bound_sum / m;
  }
  return s;
}

/// One path of an idealized (n -> infinity) instance.
struct IdealPath {
  double prob = 0.0;
  AnswerLabel answer;
};

struct IdealInstance {
  std::vector<IdealPath> paths;
  AnswerLabel truth;
};

struct ModelErrorComparison {
  double sc_model_error = 0.0;
  double ppl_model_error = 0.0;
  std::size_t correct_paths = 0;
};

/// SC model error sums (answer mass - I)^2 over answers; PPL sums
/// (path prob - I)^2 over paths. Requires every incorrect path to carry a
/// distinct answer; under that assumption SC <= PPL, strictly once two or
/// more paths share the correct answer.
inline ModelErrorComparison model_error_comparison(const IdealInstance& instance) {
  double total = 0.0;
  for (const auto& p : instance.paths) {
    if (!(p.prob > 0.0 && p.prob <= 1.0)) throw Error(ErrorCode::kDomainError, "path probability outside (0, 1]");
    total += p.prob;
  }
  if (total > 1.0 + 1e-12) throw Error(ErrorCode::kDomainError, "path probabilities exceed 1");

  std::vector<const AnswerLabel*> wrong;
  ModelErrorComparison out;
  double correct_mass = 0.0;
  for (const auto& p : instance.paths) {
    const bool ok = p.answer == instance.truth;
    if (ok) {
      ++out.correct_paths;
      correct_mass += p.prob;
      out.ppl_model_error += (p.prob - 1.0) * (p.prob - 1.0);
    } else {
      for (const AnswerLabel* w : wrong) {
        if (*w == p.answer) {
          throw Error(ErrorCode::kAssumptionError,
                      "incorrect answer '" + p.answer.canonical + "' appears on more than one path");
        }
      }
      wrong.push_back(&p.answer);
      out.ppl_model_error += p.prob * p.prob;
      out.sc_model_error += p.prob * p.prob;
    }
  }
  if (out.correct_paths > 0) out.sc_model_error += (correct_mass - 1.0) * (correct_mass - 1.0);
  return out;
}

enum class RateScale {
  kLogLog,   // log err = a + slope * log n   (polynomial rate)
  kSemiLog,  // log err = a + slope * n       (exponential rate)
};

struct RateFit {
  std::vector<double> ns;
  std::vector<double> errors;
  RateScale scale = RateScale::kLogLog;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS residual in log space
};

inline RateFit fit_rate(std::span<const double> ns, std::span<const double> errors, RateScale scale) {
  if (ns.size() != errors.size() || ns.size() < 4) {
    throw Error(ErrorCode::kDomainError, "rate fit needs at least 4 (n, error) pairs");
  }
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (i > 0 && !(ns[i] > ns[i - 1])) throw Error(ErrorCode::kDomainError, "n must be strictly increasing");
    if (!(errors[i] > 0.0)) throw Error(ErrorCode::kDomainError, "errors must be > 0 for a log fit");
  }
  RateFit fit;
  fit.ns.assign(ns.begin(), ns.end());
  fit.errors.assign(errors.begin(), errors.end());
  fit.scale = scale;
  const std::size_t m = ns.size();
  std::vector<double> xs(m), ys(m);
  for (std::size_t i = 0; i < m; ++i) {
    xs[i] = scale == RateScale::kLogLog ? std::log(ns[i]) : ns[i];
    ys[i] = std::log(errors[i]);
  }
  const double md = static_cast<double>(m);
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / md;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / md;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / md);
  return fit;
}

}  // namespace ttsc
