#pragma once

// A synthetic sampler with a known, finite path distribution. Every path
// carries its exact probability, so estimator expectations can be computed
// by exhaustive enumeration or by seeded Monte Carlo.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttsc/error.hpp"
#include "ttsc/estimators.hpp"
#include "ttsc/paths.hpp"
#include "ttsc/random.hpp"

namespace ttsc {

struct OracleSpec {
  std::vector<double> path_probs;
  std::vector<AnswerLabel> path_answers;
  AnswerLabel truth;

  std::size_t num_paths() const { return path_probs.size(); }

  void validate() const {
    if (path_probs.empty()) throw Error(ErrorCode::kDomainError, "oracle has no paths");
    if (path_probs.size() != path_answers.size()) {
      throw Error(ErrorCode::kDomainError, "path_probs and path_answers differ in length");
    }
    double sum = 0.0;
    for (double p : path_probs) {
      if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorCode::kDomainError, "path probability outside (0, 1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw Error(ErrorCode::kDomainError, "path probabilities sum to " + std::to_string(sum));
    }
  }

  /// Identity of abstract path i; dedup compares these strings.
  static std::string path_key(std::size_t i) { return "path-" + std::to_string(i); }

  ReasoningPath path(std::size_t i) const {
    return ReasoningPath::with_probability(path_key(i), path_probs[i], path_answers[i]);
  }
};

inline double true_answer_prob(const OracleSpec& oracle, const AnswerLabel& answer) {
  double p = 0.0;
  for (std::size_t i = 0; i < oracle.num_paths(); ++i) {
    if (oracle.path_answers[i] == answer) p += oracle.path_probs[i];
  }
  return p;
}

/// Reusable i.i.d. sampler; paths are materialized once.
class OracleSampler {
 public:
  explicit OracleSampler(const OracleSpec& oracle) : sampler_(oracle.path_probs) {
    oracle.validate();
    paths_.reserve(oracle.num_paths());
    for (std::size_t i = 0; i < oracle.num_paths(); ++i) paths_.push_back(oracle.path(i));
  }

  SampleBatch draw(std::size_t n, Rng& rng, std::string problem_id = "oracle") const {
    if (n == 0) throw Error(ErrorCode::kInvalidSampleSize, "n must be >= 1");
    SampleBatch batch{std::move(problem_id), {}};
    batch.paths.reserve(n);
    for (std::size_t i = 0; i < n; ++i) batch.paths.push_back(paths_[sampler_(rng)]);
    return batch;
  }

  SampleBatch from_indices(std::span<const std::size_t> draws) const {
    SampleBatch batch{"oracle", {}};
    batch.paths.reserve(draws.size());
    for (std::size_t d : draws) batch.paths.push_back(paths_[d]);
    return batch;
  }

 private:
  CategoricalSampler sampler_;
  std::vector<ReasoningPath> paths_;
};

inline SampleBatch sample_batch(const OracleSpec& oracle, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::kInvalidSampleSize, "n must be >= 1");
  Rng rng(seed);
  return OracleSampler(oracle).draw(n, rng);
}

/// What an estimator is scored on: an answer (SC/PC/RPC) or a path (PPL).
struct EstimatorTarget {
  enum class Kind { kAnswer, kPath };
  Kind kind = Kind::kAnswer;
  AnswerLabel answer;
  std::size_t path_index = 0;

  static EstimatorTarget of_answer(AnswerLabel a) { return {Kind::kAnswer, std::move(a), 0}; }
  static EstimatorTarget of_path(std::size_t i) { return {Kind::kPath, {}, i}; }

  /// Ground-truth confidence p of the target.
  double true_value(const OracleSpec& oracle) const {
    return kind == Kind::kAnswer ? true_answer_prob(oracle, answer) : oracle.path_probs.at(path_index);
  }
  /// Correctness indicator of the target.
  double indicator(const OracleSpec& oracle) const {
    const AnswerLabel& a = kind == Kind::kAnswer ? answer : oracle.path_answers.at(path_index);
    return a == oracle.truth ? 1.0 : 0.0;
  }
};

/// Estimated confidence of a fixed target on one batch.
using EstimatorFunctional = std::function<double(const SampleBatch&)>;

inline EstimatorFunctional make_estimator_functional(EstimatorKind kind, EstimatorTarget target,
                                                     EstimatorOptions options = {}) {
  if (target.kind == EstimatorTarget::Kind::kPath) {
    std::string key = OracleSpec::path_key(target.path_index);
    return [kind, key, options](const SampleBatch& batch) {
      const ConfidenceMap conf = estimate(kind, batch, options);
      return conf.per_path() ? conf.value_of_path(key) : 0.0;
    };
  }
  return [kind, answer = std::move(target.answer), options](const SampleBatch& batch) {
    return estimate(kind, batch, options).value_of(answer);
  };
}

/// Squared-error moments of an estimator around the truth p and the
/// correctness indicator I:
///   mse        E[(phat - p)^2]
///   reasoning  E[(phat - I)^2]
///   model      (p - I)^2
///   cross      2 (p - I) E[phat - p]      (zero for unbiased estimators)
///   excess     reasoning - model = mse + cross
struct ErrorMoments {
  double true_value = 0.0;
  double indicator = 0.0;
  double mean = 0.0;
  double second_moment = 0.0;
  double mse = 0.0;
  double reasoning_error = 0.0;
  double model_error = 0.0;
  double cross_term = 0.0;
  double excess_error = 0.0;
};

struct OutcomeEnumeration {
  std::vector<double> outcome_probs;   // filled only when requested
  std::vector<double> outcome_values;
  double total_probability = 0.0;
  ErrorMoments moments;
};

inline constexpr std::uint64_t kMaxEnumerationOutcomes = 10'000'000;

namespace detail {

inline ErrorMoments finish_moments(double p, double ind, double mean, double second, double mse,
                                   double reasoning) {
  ErrorMoments m;
  m.true_value = p;
  m.indicator = ind;
  m.mean = mean;
  m.second_moment = second;
  m.mse = mse;
  m.reasoning_error = reasoning;
  m.model_error = (p - ind) * (p - ind);
  m.cross_term = 2.0 * (p - ind) * (mean - p);
  m.excess_error = reasoning - m.model_error;
  return m;
}

}  // namespace detail

inline std::uint64_t outcome_count(std::size_t paths, std::size_t n) {
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < n; ++i) {
    count *= paths;
    if (count > kMaxEnumerationOutcomes) return std::numeric_limits<std::uint64_t>::max();
  }
  return count;
}

/// Exact moments over all M^n ordered outcomes, each weighted by the
/// product of its path probabilities.
inline OutcomeEnumeration exact_estimator_moments(const OracleSpec& oracle, std::size_t n,
                                                  const EstimatorFunctional& estimator,
                                                  const EstimatorTarget& target,
                                                  bool keep_outcomes = false) {
  oracle.validate();
  if (n == 0) throw Error(ErrorCode::kInvalidSampleSize, "n must be >= 1");
  const std::size_t m = oracle.num_paths();
  if (outcome_count(m, n) > kMaxEnumerationOutcomes) {
    throw Error(ErrorCode::kEnumerationTooLarge,
                std::to_string(m) + "^" + std::to_string(n) + " outcomes exceed the cap");
  }
  const OracleSampler sampler(oracle);
  const double p = target.true_value(oracle);
  const double ind = target.indicator(oracle);

  OutcomeEnumeration out;
  std::vector<std::size_t> draws(n, 0);
  double mean = 0.0, second = 0.0, mse = 0.0, reasoning = 0.0;
  while (true) {
    double weight = 1.0;
    for (std::size_t d : draws) weight *= oracle.path_probs[d];
    const double v = estimator(sampler.from_indices(draws));
    out.total_probability += weight;
    mean += weight * v;
    second += weight * v * v;
    mse += weight * (v - p) * (v - p);
    reasoning += weight * (v - ind) * (v - ind);
    if (keep_outcomes) {
      out.outcome_probs.push_back(weight);
      out.outcome_values.push_back(v);
    }
    std::size_t pos = 0;  // odometer increment
    while (pos < n && ++draws[pos] == m) draws[pos++] = 0;
    if (pos == n) break;
  }
  out.moments = detail::finish_moments(p, ind, mean, second, mse, reasoning);
  return out;
}

struct MonteCarloMoments {
  ErrorMoments moments;
  std::size_t trials = 0;
  double mse_stderr = 0.0;
  double reasoning_stderr = 0.0;
  std::size_t nonzero_mse_trials = 0;  // trials with phat != p
};

/// Seeded Monte Carlo counterpart of exact_estimator_moments. Trial t uses
/// the stream derive_seed(seed, t), so results do not depend on scheduling.
inline MonteCarloMoments monte_carlo_moments(const OracleSpec& oracle, std::size_t n,
                                             const EstimatorFunctional& estimator,
                                             const EstimatorTarget& target, std::size_t trials,
                                             std::uint64_t seed) {
  if (trials == 0) throw Error(ErrorCode::kInvalidSampleSize, "trials must be >= 1");
  const OracleSampler sampler(oracle);
  const double p = target.true_value(oracle);
  const double ind = target.indicator(oracle);
  double mean = 0.0, second = 0.0, mse = 0.0, mse_sq = 0.0, reasoning = 0.0, reasoning_sq = 0.0;
  MonteCarloMoments out;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, t));
    const double v = estimator(sampler.draw(n, rng));
    const double e = (v - p) * (v - p);
    const double r = (v - ind) * (v - ind);
    mean += v;
    second += v * v;
    mse += e;
    mse_sq += e * e;
    reasoning += r;
    reasoning_sq += r * r;
    if (v != p) ++out.nonzero_mse_trials;
  }
  const double nt = static_cast<double>(trials);
  auto stderr_of = [nt](double s, double s2) {
    if (nt < 2.0) return 0.0;
    const double var = std::max(0.0, (s2 - s * s / nt) / (nt - 1.0));
    return std::sqrt(var / nt);
  };
  out.trials = trials;
  out.moments = detail::finish_moments(p, ind, mean / nt, second / nt, mse / nt, reasoning / nt);
  out.mse_stderr = stderr_of(mse, mse_sq);
  out.reasoning_stderr = stderr_of(reasoning, reasoning_sq);
  return out;
}

// JSON document: {"path_probs": [...], "path_answers": [...], "truth": "..."}.
// Answers may also be objects {"answer": "...", "class_id": 3}.

namespace detail {

inline AnswerLabel answer_from_json(const nlohmann::json& j) {
  if (j.is_string()) return AnswerLabel::from_raw(j.get<std::string>());
  if (j.is_object()) {
    std::optional<std::int64_t> cid;
    if (j.contains("class_id") && !j.at("class_id").is_null()) cid = j.at("class_id").get<std::int64_t>();
    return AnswerLabel::from_raw(j.value("answer", std::string{}), cid);
  }
  throw Error(ErrorCode::kParseError, "answer must be a string or object");
}

inline nlohmann::json answer_to_json(const AnswerLabel& a) {
  if (!a.class_id) return a.canonical;
  return nlohmann::json{{"answer", a.canonical}, {"class_id", *a.class_id}};
}

}  // namespace detail

inline OracleSpec oracle_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw Error(ErrorCode::kParseError, "oracle must be a JSON object");
    for (const auto& [key, _] : j.items()) {
      if (key != "path_probs" && key != "path_answers" && key != "truth") {
        throw Error(ErrorCode::kParseError, "unknown oracle key '" + key + "'");
      }
    }
    OracleSpec spec;
    spec.path_probs = j.at("path_probs").get<std::vector<double>>();
    for (const auto& a : j.at("path_answers")) spec.path_answers.push_back(detail::answer_from_json(a));
    spec.truth = detail::answer_from_json(j.at("truth"));
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("oracle: ") + e.what());
  }
}

inline nlohmann::json oracle_to_json(const OracleSpec& spec) {
  nlohmann::json answers = nlohmann::json::array();
  for (const auto& a : spec.path_answers) answers.push_back(detail::answer_to_json(a));
  return {{"path_probs", spec.path_probs},
          {"path_answers", answers},
          {"truth", detail::answer_to_json(spec.truth)}};
}

/// Reads one oracle object or an array of them (a problem suite).
inline std::vector<OracleSpec> load_oracles(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open oracle file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, "oracle file '" + path + "': " + e.what());
  }
  std::vector<OracleSpec> out;
  if (j.is_array()) {
    for (const auto& item : j) out.push_back(oracle_from_json(item));
  } else {
    out.push_back(oracle_from_json(j));
  }
  if (out.empty()) throw Error(ErrorCode::kEmptyInput, "oracle file '" + path + "' holds no oracles");
  return out;
}

}  // namespace ttsc
