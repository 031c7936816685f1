#pragma once

// Reasoning pruning: drop paths whose probability sits in the low mode of
// a two-component Weibull mixture, but always keep every path at or above
// the batch mean (truncated-mean guard).

#include <algorithm>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "ttsc/error.hpp"
#include "ttsc/mixture.hpp"
#include "ttsc/paths.hpp"

namespace ttsc {

struct PruningReport {
  std::optional<MixtureFit> fit;          // absent when the fit was degenerate
  std::vector<std::size_t> retained_indices;
  std::vector<std::size_t> removed_indices;
  bool fallback_used = false;             // mean rule only
  double mean_threshold = 0.0;
};

/// Retains i when P_High(p_i) >= 0.5 or p_i >= mean(p). Indices refer to
/// `probs`, which should hold one probability per unique path.
inline PruningReport prune(std::span<const double> probs, const FitConfig& config = {}) {
  if (probs.empty()) throw Error(ErrorCode::kEmptyBatch, "nothing to prune");
  PruningReport report;
  const double mean =
      std::accumulate(probs.begin(), probs.end(), 0.0) / static_cast<double>(probs.size());
  // Rounding can push the computed mean of equal values above their max.
  report.mean_threshold = std::min(mean, *std::max_element(probs.begin(), probs.end()));
  try {
    report.fit = fit_mixture(probs, config);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kFitDegenerate) throw;
    report.fallback_used = true;
  }
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool keep = probs[i] >= report.mean_threshold ||
                      (report.fit && p_high(probs[i], *report.fit) >= 0.5);
    (keep ? report.retained_indices : report.removed_indices).push_back(i);
  }
  return report;
}

inline PruningReport prune(std::span<const ReasoningPath> unique, const FitConfig& config = {}) {
  std::vector<double> probs;
  probs.reserve(unique.size());
  for (const auto& p : unique) probs.push_back(p.path_prob());
  return prune(std::span<const double>(probs), config);
}

}  // namespace ttsc
