#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "support.hpp"
#include "ttsc/estimators.hpp"
#include "ttsc/pruning.hpp"

namespace ttsc {
namespace {

using testing::batch;
using testing::label;
using testing::path;
using testing::votes;

double value(const ConfidenceMap& m, const std::string& a) { return m.value_of(label(a)); }

TEST(Sc, VoteFractions) {
  auto m = sc_confidence(votes({"A", "A", "B"}));
  EXPECT_DOUBLE_EQ(value(m, "A"), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(value(m, "B"), 1.0 / 3.0);
  EXPECT_EQ(value(sc_confidence(votes({"A"})), "A"), 1.0);
  m = sc_confidence(votes({"A", "B", "C", "D"}));
  for (auto a : {"A", "B", "C", "D"}) EXPECT_EQ(value(m, a), 0.25);
}

TEST(Sc, EmptyBatchRejected) {
  try {
    sc_confidence(SampleBatch{"q", {}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyBatch);
  }
}

TEST(Sc, PropertySumsToOne) {
  Rng rng(1);
  for (int t = 0; t < 300; ++t) {
    std::vector<std::string> a(1 + rng() % 64);
    for (auto& s : a) s = std::string(1, static_cast<char>('a' + rng() % 5));
    const auto m = sc_confidence(votes(a));
    EXPECT_NEAR(m.total(), 1.0, 1e-12);
  }
}

TEST(Ppl, PassthroughAndDedup) {
  auto m = ppl_confidence(batch({path("t1", 0.3, "A"), path("t2", 0.1, "B")}));
  EXPECT_EQ(m.value_of_path("t1"), 0.3);
  EXPECT_EQ(m.value_of_path("t2"), 0.1);
  m = ppl_confidence(batch({path("t", 0.2, "A"), path("t", 0.2, "A"), path("t", 0.2, "A")}));
  EXPECT_EQ(m.size(), 1u);
  EXPECT_EQ(m.value_of_path("t"), 0.2);
  m = ppl_confidence(batch({path("t", 1.0, "A")}));
  EXPECT_EQ(m.value_of_path("t"), 1.0);
  EXPECT_EQ(m.value_of_path("unsampled"), 0.0);
}

TEST(Ppl, SelectionPicksMostLikelyPath) {
  const auto m = ppl_confidence(batch({path("t1", 0.1, "A"), path("t2", 0.1, "A"), path("t3", 0.15, "B")}));
  const auto s = select_answer(m);
  EXPECT_EQ(s.answer.canonical, "b");
  EXPECT_EQ(*s.path_key, "t3");
}

TEST(Pc, GroupedSumOverUniquePaths) {
  auto m = pc_confidence(batch({path("1", 0.3, "A"), path("2", 0.2, "A"), path("3", 0.1, "B")}));
  EXPECT_DOUBLE_EQ(value(m, "A"), 0.5);
  EXPECT_DOUBLE_EQ(value(m, "B"), 0.1);
  m = pc_confidence(batch({path("1", 0.3, "A"), path("1", 0.3, "A")}));
  EXPECT_DOUBLE_EQ(value(m, "A"), 0.3);
  m = pc_confidence(batch({path("1", 1.0, "A")}));
  EXPECT_DOUBLE_EQ(value(m, "A"), 1.0);
}

TEST(Rpc, TruncatedMeanGuardKeepsTopPaths) {
  const auto b = batch({path("1", 0.5, "A"), path("2", 0.3, "B"), path("3", 0.1, "C")});
  const auto r = rpc_confidence(b);
  EXPECT_TRUE(r.report.fallback_used);  // three unique paths cannot be fitted
  EXPECT_EQ(r.report.retained_indices, (std::vector<std::size_t>{0, 1}));
  EXPECT_DOUBLE_EQ(value(r.confidence, "A"), 0.5);
  EXPECT_DOUBLE_EQ(value(r.confidence, "B"), 0.3);
  EXPECT_EQ(value(r.confidence, "C"), 0.0);
}

TEST(Rpc, EqualProbabilitiesMatchPc) {
  std::vector<ReasoningPath> ps;
  for (int i = 0; i < 10; ++i) ps.push_back(path("t" + std::to_string(i), 0.07, i % 3 ? "A" : "B"));
  const auto b = batch(ps);
  const auto r = rpc_confidence(b);
  EXPECT_TRUE(r.report.removed_indices.empty());
  const auto pc = pc_confidence(b);
  for (const auto& e : pc.entries()) EXPECT_DOUBLE_EQ(r.confidence.value_of(e.answer), e.value);
}

TEST(Rpc, SinglePath) {
  const auto r = rpc_confidence(batch({path("t", 0.42, "X")}));
  EXPECT_EQ(r.report.retained_indices.size(), 1u);
  EXPECT_DOUBLE_EQ(value(r.confidence, "X"), 0.42);
}

TEST(Rpc, ReportIndicesReferToUniquePaths) {
  const auto b = batch({path("a", 0.3, "A"), path("a", 0.3, "A"), path("b", 0.01, "B")});
  const auto r = rpc_confidence(b);
  EXPECT_EQ(r.unique_indices, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(r.report.retained_indices.size() + r.report.removed_indices.size(), 2u);
}

TEST(Estimate, Dispatch) {
  EXPECT_DOUBLE_EQ(value(estimate(EstimatorKind::kSC, votes({"A", "A", "B"})), "A"), 2.0 / 3.0);
  const auto three = batch({path("1", 0.3, "A"), path("2", 0.2, "A"), path("3", 0.1, "B")});
  const auto pc = estimate(EstimatorKind::kPC, three);
  EXPECT_DOUBLE_EQ(value(pc, "A"), 0.5);
  EXPECT_DOUBLE_EQ(value(pc, "B"), 0.1);
  EXPECT_DOUBLE_EQ(value(estimate(EstimatorKind::kRPC, batch({path("t", 0.6, "Z")})), "Z"), 0.6);
  EXPECT_EQ(estimate(EstimatorKind::kPPL, three).kind(), EstimatorKind::kPPL);
}

TEST(Estimate, ParseKind) {
  EXPECT_EQ(parse_estimator_kind("rpc"), EstimatorKind::kRPC);
  EXPECT_EQ(parse_estimator_kind("Sc"), EstimatorKind::kSC);
  EXPECT_THROW(parse_estimator_kind("bon"), Error);
}

TEST(Prune, MeanRuleWhenDegenerate) {
  const std::vector<double> p{0.5, 0.3, 0.1};
  const auto r = prune(std::span<const double>(p));
  EXPECT_TRUE(r.fallback_used);
  EXPECT_FALSE(r.fit.has_value());
  EXPECT_DOUBLE_EQ(r.mean_threshold, 0.3);
  EXPECT_EQ(r.retained_indices, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(r.removed_indices, (std::vector<std::size_t>{2}));
}

TEST(Prune, AllEqualRetainsAll) {
  for (double v : {0.1, 0.3, 1.0 / 3.0, 0.7}) {
    for (std::size_t n : {1u, 2u, 5u, 17u, 100u}) {
      const std::vector<double> p(n, v);
      const auto r = prune(std::span<const double>(p));
      EXPECT_EQ(r.retained_indices.size(), n);
    }
  }
}

TEST(Prune, EmptyRejected) {
  EXPECT_THROW(prune(std::span<const double>{}), Error);
}

TEST(Prune, BimodalRemovesMostlyLowComponentPoints) {
  // The components overlap, so a few high-component draws sit in the low
  // mode; even the true-parameter posterior puts about 8% of them there.
  std::size_t high_points = 0, high_removed = 0, low_points = 0, low_removed = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto d = testing::mixture_draws(128, seed, {2.0, 0.8}, {1.5, 0.1}, 0.5);
    const auto r = prune(std::span<const double>(d.x));
    ASSERT_TRUE(r.fit.has_value());
    for (int c : d.component) (c == 1 ? high_points : low_points)++;
    for (std::size_t i : r.removed_indices) (d.component[i] == 1 ? high_removed : low_removed)++;
    for (std::size_t i : r.removed_indices) EXPECT_LT(d.x[i], 0.4);
  }
  EXPECT_LE(high_removed, 0.12 * high_points);
  EXPECT_GE(low_removed, 0.9 * low_points);
}

TEST(Prune, PropertyPartitionAndGuard) {
  Rng rng(99);
  for (int t = 0; t < 300; ++t) {
    std::vector<double> p(1 + rng() % 64);
    for (double& v : p) v = 1e-4 + uniform01(rng) * (rng() % 2 ? 0.05 : 0.9);
    const auto r = prune(std::span<const double>(p));
    ASSERT_FALSE(r.retained_indices.empty());
    EXPECT_EQ(r.retained_indices.size() + r.removed_indices.size(), p.size());
    const double mean = std::accumulate(p.begin(), p.end(), 0.0) / p.size();
    for (std::size_t i : r.removed_indices) EXPECT_LT(p[i], mean);
  }
}

}  // namespace
}  // namespace ttsc
