#pragma once

// Confidence estimators over a batch of sampled paths:
//   SC   vote fraction per answer
//   PPL  raw probability per unique path (unsampled paths implicitly 0)
//   PC   sum of unique-path probabilities per answer
//   RPC  PC over the paths that survive reasoning pruning

#include <span>
#include <utility>
#include <vector>

#include "ttsc/error.hpp"
#include "ttsc/paths.hpp"
#include "ttsc/pruning.hpp"

namespace ttsc {

struct EstimatorOptions {
  FitConfig fit;
};

namespace detail {

inline void require_nonempty(const SampleBatch& batch) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyBatch, "batch '" + batch.problem_id + "' is empty");
}

// Per-answer sums of path_prob over `indices` (positions in batch.paths).
inline std::vector<ConfidenceEntry> answer_mass(const SampleBatch& batch,
                                                std::span<const std::size_t> indices) {
  std::vector<ConfidenceEntry> entries;
  for (std::size_t i : indices) {
    const ReasoningPath& path = batch.paths[i];
    auto it = std::find_if(entries.begin(), entries.end(),
                           [&](const ConfidenceEntry& e) { return e.answer == path.answer(); });
    if (it == entries.end()) {
      entries.push_back(ConfidenceEntry{path.answer(), std::nullopt, path.path_prob(), i});
    } else {
      it->value += path.path_prob();
    }
  }
  return entries;
}

}  // namespace detail

inline ConfidenceMap sc_confidence(const SampleBatch& batch) {
  detail::require_nonempty(batch);
  const auto groups = group_by_answer(batch.paths);
  const double n = static_cast<double>(batch.size());
  std::vector<ConfidenceEntry> entries;
  entries.reserve(groups.size());
  for (const auto& g : groups) {
    entries.push_back(ConfidenceEntry{g.label, std::nullopt,
                                      static_cast<double>(g.members.size()) / n,
                                      g.members.front()});
  }
  return ConfidenceMap(EstimatorKind::kSC, std::move(entries));
}

inline ConfidenceMap ppl_confidence(const SampleBatch& batch) {
  detail::require_nonempty(batch);
  std::vector<ConfidenceEntry> entries;
  for (std::size_t i : unique_path_indices(batch.paths)) {
    const ReasoningPath& path = batch.paths[i];
    entries.push_back(ConfidenceEntry{path.answer(), path.text(), path.path_prob(), i});
  }
  return ConfidenceMap(EstimatorKind::kPPL, std::move(entries));
}

inline ConfidenceMap pc_confidence(const SampleBatch& batch) {
  detail::require_nonempty(batch);
  const auto unique = unique_path_indices(batch.paths);
  return ConfidenceMap(EstimatorKind::kPC, detail::answer_mass(batch, unique));
}

struct RpcResult {
  ConfidenceMap confidence;
  PruningReport report;               // indices refer to unique_indices
  std::vector<std::size_t> unique_indices;  // batch positions of the unique paths
};

inline RpcResult rpc_confidence(const SampleBatch& batch, const EstimatorOptions& options = {}) {
  detail::require_nonempty(batch);
  RpcResult result;
  result.unique_indices = unique_path_indices(batch.paths);
  std::vector<double> probs;
  probs.reserve(result.unique_indices.size());
  for (std::size_t i : result.unique_indices) probs.push_back(batch.paths[i].path_prob());
  result.report = prune(std::span<const double>(probs), options.fit);

  std::vector<std::size_t> retained;
  retained.reserve(result.report.retained_indices.size());
  for (std::size_t r : result.report.retained_indices) retained.push_back(result.unique_indices[r]);
  result.confidence = ConfidenceMap(EstimatorKind::kRPC, detail::answer_mass(batch, retained));
  return result;
}

inline ConfidenceMap estimate(EstimatorKind kind, const SampleBatch& batch,
                              const EstimatorOptions& options = {}) {
  switch (kind) {
    case EstimatorKind::kSC: return sc_confidence(batch);
    case EstimatorKind::kPPL: return ppl_confidence(batch);
    case EstimatorKind::kPC: return pc_confidence(batch);
    case EstimatorKind::kRPC: return rpc_confidence(batch, options).confidence;
  }
  throw Error(ErrorCode::kConfigError, "unknown estimator kind");
}

}  // namespace ttsc
