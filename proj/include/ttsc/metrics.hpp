#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ttsc/error.hpp"
#include "ttsc/paths.hpp"

namespace ttsc {

inline double accuracy(std::span<const std::pair<AnswerLabel, AnswerLabel>> selections) {
  if (selections.empty()) throw Error(ErrorCode::kEmptyInput, "no selections to score");
  std::size_t hits = 0;
  for (const auto& [selected, truth] : selections) hits += selected == truth ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(selections.size());
}

struct ScoredItem {
  double confidence = 0.0;
  bool correct = false;
};

struct CalibrationBin {
  double lower = 0.0;  // exclusive, except for the first bin
  double upper = 0.0;  // inclusive
  std::size_t count = 0;
  double mean_confidence = 0.0;
  double accuracy = 0.0;
};

struct CalibrationBins {
  std::vector<double> edges;  // bins + 1 strictly increasing values over [0, 1]
  std::vector<CalibrationBin> bins;
  std::size_t total = 0;
};

/// Equal-width, right-closed bins: (e_{i}, e_{i+1}], with 0 in the first bin.
inline CalibrationBins reliability_bins(std::span<const ScoredItem> scored, std::size_t bins = 10) {
  if (scored.empty()) throw Error(ErrorCode::kEmptyInput, "no scored items");
  if (bins == 0) throw Error(ErrorCode::kDomainError, "need at least one bin");
  CalibrationBins out;
  out.total = scored.size();
  out.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    out.edges[i] = static_cast<double>(i) / static_cast<double>(bins);
  }
  out.bins.resize(bins);
  std::vector<double> conf_sum(bins, 0.0);
  std::vector<std::size_t> hits(bins, 0);
  for (const auto& item : scored) {
    if (!(item.confidence >= 0.0 && item.confidence <= 1.0)) {
      throw Error(ErrorCode::kDomainError, "confidence outside [0, 1]");
    }
    // First upper edge >= confidence.
    auto it = std::lower_bound(out.edges.begin() + 1, out.edges.end(), item.confidence);
    const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(it - out.edges.begin()) - 1, bins - 1);
    ++out.bins[b].count;
    conf_sum[b] += item.confidence;
    hits[b] += item.correct ? 1 : 0;
  }
  for (std::size_t b = 0; b < bins; ++b) {
    CalibrationBin& bin = out.bins[b];
    bin.lower = out.edges[b];
    bin.upper = out.edges[b + 1];
    if (bin.count > 0) {
      bin.mean_confidence = conf_sum[b] / static_cast<double>(bin.count);
      bin.accuracy = static_cast<double>(hits[b]) / static_cast<double>(bin.count);
    }
  }
  return out;
}

inline double ece_from_bins(const CalibrationBins& bins) {
  double e = 0.0;
  for (const auto& bin : bins.bins) {
    if (bin.count == 0) continue;
    e += static_cast<double>(bin.count) / static_cast<double>(bins.total) *
         std::abs(bin.accuracy - bin.mean_confidence);
  }
  return e;
}

/// Expected calibration error: sum_b (|b| / N) |acc(b) - conf(b)|.
inline double ece(std::span<const ScoredItem> scored, std::size_t bins = 10) {
  return ece_from_bins(reliability_bins(scored, bins));
}

struct BudgetPoint {
  std::size_t n = 0;
  double mean_accuracy = 0.0;
  double stddev = 0.0;
  std::size_t repeats = 1;
};

/// Accuracy as a function of the sample budget for one method.
struct BudgetCurve {
  EstimatorKind method = EstimatorKind::kSC;
  std::vector<BudgetPoint> points;

  void validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (points[i].repeats < 1) throw Error(ErrorCode::kDomainError, "repeats must be >= 1");
      if (i > 0 && points[i].n <= points[i - 1].n) {
        throw Error(ErrorCode::kDomainError, "budget curve n must be strictly increasing");
      }
    }
  }
};

/// Mean and sample standard deviation of per-repeat accuracies.
inline BudgetPoint summarize_repeats(std::size_t n, std::span<const double> accuracies) {
  if (accuracies.empty()) throw Error(ErrorCode::kEmptyInput, "no repeats");
  BudgetPoint pt;
  pt.n = n;
  pt.repeats = accuracies.size();
  double sum = 0.0;
  for (double a : accuracies) sum += a;
  pt.mean_accuracy = sum / static_cast<double>(accuracies.size());
  if (accuracies.size() > 1) {
    double ss = 0.0;
    for (double a : accuracies) ss += (a - pt.mean_accuracy) * (a - pt.mean_accuracy);
    pt.stddev = std::sqrt(ss / static_cast<double>(accuracies.size() - 1));
  }
  return pt;
}

/// Smallest budget whose mean accuracy reaches `reference_accuracy`.
inline std::optional<std::size_t> budget_to_match(const BudgetCurve& curve, double reference_accuracy) {
  curve.validate();
  for (const auto& pt : curve.points) {
    if (pt.mean_accuracy >= reference_accuracy) return pt.n;
  }
  return std::nullopt;
}

}  // namespace ttsc
