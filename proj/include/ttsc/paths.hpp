#pragma once

// Sampled reasoning paths, answer labels, and the confidence maps that
// estimators produce over them.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ttsc/error.hpp"

namespace ttsc {

/// How a token log-probability sequence is turned into a path probability.
enum class ProbMode {
  kJoint,             ///< exp(sum of logprobs)
  kLengthNormalized,  ///< exp(mean of logprobs), i.e. inverse perplexity
};

inline std::string_view to_string(ProbMode mode) {
  return mode == ProbMode::kJoint ? "joint" : "length_normalized";
}

inline ProbMode parse_prob_mode(std::string_view name) {
  if (name == "joint") return ProbMode::kJoint;
  if (name == "length_normalized") return ProbMode::kLengthNormalized;
  throw Error(ErrorCode::kConfigError, "unknown probability mode '" + std::string(name) + "'");
}

inline constexpr double kMinPathProb = 1e-300;

inline double derive_path_prob(std::span<const double> token_logprobs, ProbMode mode) {
  if (token_logprobs.empty()) {
    throw Error(ErrorCode::kInvalidPath, "token log-probability sequence is empty");
  }
  const double sum = std::accumulate(token_logprobs.begin(), token_logprobs.end(), 0.0);
  const double exponent =
      mode == ProbMode::kJoint ? sum : sum / static_cast<double>(token_logprobs.size());
  return std::clamp(std::exp(exponent), kMinPathProb, 1.0);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Trim whitespace, unwrap a surrounding \boxed{...}, and ASCII case-fold.
inline std::string canonicalize_answer(std::string_view raw) {
  std::string_view s = detail::trim(raw);
  constexpr std::string_view kBoxed = "\\boxed{";
  while (s.size() > kBoxed.size() && s.substr(0, kBoxed.size()) == kBoxed && s.back() == '}') {
    s = detail::trim(s.substr(kBoxed.size(), s.size() - kBoxed.size() - 1));
  }
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

/// Final answer g(t). Precomputed equivalence classes override string match.
struct AnswerLabel {
  std::string canonical;
  std::optional<std::int64_t> class_id;

  static AnswerLabel from_raw(std::string_view raw,
                              std::optional<std::int64_t> class_id = std::nullopt) {
    return AnswerLabel{canonicalize_answer(raw), class_id};
  }

  friend bool operator==(const AnswerLabel& a, const AnswerLabel& b) {
    if (a.class_id && b.class_id) return *a.class_id == *b.class_id;
    return a.canonical == b.canonical;
  }
};

/// One sampled path. Immutable once built.
class ReasoningPath {
 public:
  /// Ingested path: probability derived from the token log-probabilities.
  static ReasoningPath from_logprobs(std::string text, std::vector<double> token_logprobs,
                                     AnswerLabel answer, ProbMode mode,
                                     std::optional<double> ext_score = std::nullopt) {
    for (double lp : token_logprobs) {
      if (!(lp <= 0.0)) throw Error(ErrorCode::kInvalidPath, "token log-probability must be <= 0");
    }
    const double prob = derive_path_prob(token_logprobs, mode);
    return ReasoningPath(std::move(text), std::move(token_logprobs), std::move(answer), prob,
                         ext_score);
  }

  /// Path with a known exact probability (synthetic oracle paths).
  static ReasoningPath with_probability(std::string text, double prob, AnswerLabel answer) {
    if (!(prob > 0.0 && prob <= 1.0)) {
      throw Error(ErrorCode::kInvalidPath, "path probability must lie in (0, 1]");
    }
    return ReasoningPath(std::move(text), {}, std::move(answer), prob, std::nullopt);
  }

  const std::string& text() const { return text_; }
  std::span<const double> token_logprobs() const { return token_logprobs_; }
  const AnswerLabel& answer() const { return answer_; }
  std::optional<double> ext_score() const { return ext_score_; }
  double path_prob() const { return path_prob_; }

 private:
  ReasoningPath(std::string text, std::vector<double> logprobs, AnswerLabel answer, double prob,
                std::optional<double> ext_score)
      : text_(std::move(text)),
        token_logprobs_(std::move(logprobs)),
        answer_(std::move(answer)),
        ext_score_(ext_score),
        path_prob_(prob) {
    if (answer_.canonical.empty() && !answer_.class_id) {
      throw Error(ErrorCode::kInvalidPath, "answer label is empty");
    }
  }

  std::string text_;
  std::vector<double> token_logprobs_;
  AnswerLabel answer_;
  std::optional<double> ext_score_;
  double path_prob_;
};

inline double derive_path_prob(const ReasoningPath& path, ProbMode mode) {
  return derive_path_prob(path.token_logprobs(), mode);
}

/// The n paths sampled for one problem, in sampling order.
struct SampleBatch {
  std::string problem_id;
  std::vector<ReasoningPath> paths;

  std::size_t size() const { return paths.size(); }
  bool empty() const { return paths.empty(); }
};

/// Positions (into `paths`) of the first occurrence of each distinct text.
inline std::vector<std::size_t> unique_path_indices(std::span<const ReasoningPath> paths) {
  std::vector<std::size_t> out;
  std::unordered_set<std::string_view> seen;
  seen.reserve(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (seen.insert(paths[i].text()).second) out.push_back(i);
  }
  return out;
}

inline std::vector<ReasoningPath> unique_paths(std::span<const ReasoningPath> paths) {
  std::vector<ReasoningPath> out;
  for (std::size_t i : unique_path_indices(paths)) out.push_back(paths[i]);
  return out;
}

inline std::vector<ReasoningPath> unique_paths(const SampleBatch& batch) {
  return unique_paths(std::span<const ReasoningPath>(batch.paths));
}

struct AnswerGroup {
  AnswerLabel label;
  std::vector<std::size_t> members;  // indices into the grouped sequence
};

/// Partition by answer; groups appear in order of their first member.
inline std::vector<AnswerGroup> group_by_answer(std::span<const ReasoningPath> paths) {
  std::vector<AnswerGroup> groups;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const AnswerGroup& g) { return g.label == paths[i].answer(); });
    if (it == groups.end()) {
      groups.push_back(AnswerGroup{paths[i].answer(), {i}});
    } else {
      it->members.push_back(i);
    }
  }
  return groups;
}

enum class EstimatorKind { kSC, kPPL, kPC, kRPC };

inline std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kSC: return "SC";
    case EstimatorKind::kPPL: return "PPL";
    case EstimatorKind::kPC: return "PC";
    case EstimatorKind::kRPC: return "RPC";
  }
  return "?";
}

inline EstimatorKind parse_estimator_kind(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "SC") return EstimatorKind::kSC;
  if (upper == "PPL") return EstimatorKind::kPPL;
  if (upper == "PC") return EstimatorKind::kPC;
  if (upper == "RPC") return EstimatorKind::kRPC;
  throw Error(ErrorCode::kConfigError, "unknown estimator '" + std::string(name) + "'");
}

struct ConfidenceEntry {
  AnswerLabel answer;
  std::optional<std::string> path_key;  // set for per-path (PPL) maps
  double value = 0.0;
  std::size_t first_index = 0;  // first occurrence in sampling order
};

/// Estimated confidence per answer (or per unique path for PPL).
class ConfidenceMap {
 public:
  ConfidenceMap() = default;
  ConfidenceMap(EstimatorKind kind, std::vector<ConfidenceEntry> entries)
      : kind_(kind), entries_(std::move(entries)) {}

  EstimatorKind kind() const { return kind_; }
  std::span<const ConfidenceEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool per_path() const { return !entries_.empty() && entries_.front().path_key.has_value(); }

  /// Confidence of `answer`; 0 when unobserved. For per-path maps this is
  /// the best path yielding `answer`, which is what selection would report.
  double value_of(const AnswerLabel& answer) const {
    double best = 0.0;
    for (const auto& e : entries_) {
      if (e.answer == answer) {
        if (!e.path_key) return e.value;
        best = std::max(best, e.value);
      }
    }
    return best;
  }

  /// Confidence of the unique path with identity `key`; 0 when unsampled.
  double value_of_path(std::string_view key) const {
    for (const auto& e : entries_) {
      if (e.path_key && *e.path_key == key) return e.value;
    }
    return 0.0;
  }

  double total() const {
    double s = 0.0;
    for (const auto& e : entries_) s += e.value;
    return s;
  }

 private:
  EstimatorKind kind_ = EstimatorKind::kSC;
  std::vector<ConfidenceEntry> entries_;
};

struct Selection {
  AnswerLabel answer;
  double confidence = 0.0;
  std::optional<std::string> path_key;
};

/// Best-of-N: highest confidence, ties to the earliest sampled candidate.
inline Selection select_answer(const ConfidenceMap& conf) {
  if (conf.empty()) throw Error(ErrorCode::kNoCandidates, "confidence map is empty");
  const ConfidenceEntry* best = nullptr;
  for (const auto& e : conf.entries()) {
    if (best == nullptr || e.value > best->value ||
        (e.value == best->value && e.first_index < best->first_index)) {
      best = &e;
    }
  }
  return Selection{best->answer, best->value, best->path_key};
}

}  // namespace ttsc
