#pragma once

// Test-side builders and independent reference computations.

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ttsc/oracle.hpp"
#include "ttsc/paths.hpp"
#include "ttsc/random.hpp"
#include "ttsc/weibull.hpp"

namespace ttsc::testing {

inline AnswerLabel label(const std::string& s) { return AnswerLabel::from_raw(s); }

inline ReasoningPath path(const std::string& text, double prob, const std::string& answer) {
  return ReasoningPath::with_probability(text, prob, label(answer));
}

inline SampleBatch batch(std::vector<ReasoningPath> paths, std::string id = "q") {
  return SampleBatch{std::move(id), std::move(paths)};
}

/// Batch whose answers are given; each path is distinct with prob 0.1.
inline SampleBatch votes(const std::vector<std::string>& answers) {
  SampleBatch b{"q", {}};
  for (std::size_t i = 0; i < answers.size(); ++i) {
    b.paths.push_back(path("t" + std::to_string(i), 0.1, answers[i]));
  }
  return b;
}

inline OracleSpec oracle(std::vector<double> probs, const std::vector<std::string>& answers,
                         const std::string& truth) {
  OracleSpec o;
  o.path_probs = std::move(probs);
  for (const auto& a : answers) o.path_answers.push_back(label(a));
  o.truth = label(truth);
  return o;
}

/// Oracle with k equal paths on answer "a" (total p) and the rest on "b".
inline OracleSpec split_oracle(double p, std::size_t k, bool a_is_truth = true) {
  std::vector<double> probs(k, p / static_cast<double>(k));
  std::vector<std::string> answers(k, "a");
  if (p < 1.0) {
    probs.push_back(1.0 - p);
    answers.push_back("b");
  }
  return oracle(probs, answers, a_is_truth ? "a" : "b");
}

inline double binomial_pmf(std::size_t n, std::size_t j, double p) {
  const double logc = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0);
  if (p == 0.0) return j == 0 ? 1.0 : 0.0;
  if (p == 1.0) return j == n ? 1.0 : 0.0;
  return std::exp(logc + j * std::log(p) + (n - j) * std::log1p(-p));
}

/// Inverse-CDF Weibull draw.
inline double weibull_draw(Rng& rng, const WeibullParams& w) {
  return w.scale * std::pow(-std::log1p(-uniform01(rng)), 1.0 / w.shape);
}

struct LabelledDraws {
  std::vector<double> x;
  std::vector<int> component;  // 1 or 2
};

/// n draws from w1 W(c1) + (1 - w1) W(c2).
inline LabelledDraws mixture_draws(std::size_t n, std::uint64_t seed, const WeibullParams& c1,
                                   const WeibullParams& c2, double w1) {
  Rng rng(seed);
  LabelledDraws d;
  for (std::size_t i = 0; i < n; ++i) {
    const bool first = uniform01(rng) < w1;
    d.x.push_back(weibull_draw(rng, first ? c1 : c2));
    d.component.push_back(first ? 1 : 2);
  }
  return d;
}

}  // namespace ttsc::testing
