#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "support.hpp"
#include "ttsc/paths.hpp"
#include "ttsc/random.hpp"

namespace ttsc {
namespace {

using testing::label;
using testing::path;

TEST(DerivePathProb, JointExponentiatesSum) {
  const std::vector<double> lp{-0.5, -0.5};
  EXPECT_NEAR(derive_path_prob(lp, ProbMode::kJoint), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(derive_path_prob(lp, ProbMode::kJoint), 0.367879, 1e-6);
}

TEST(DerivePathProb, LengthNormalizedExponentiatesMean) {
  const std::vector<double> lp{-0.5, -0.5};
  EXPECT_NEAR(derive_path_prob(lp, ProbMode::kLengthNormalized), 0.606531, 1e-6);
}

TEST(DerivePathProb, ZeroLogprobIsOne) {
  const std::vector<double> lp{0.0};
  EXPECT_EQ(derive_path_prob(lp, ProbMode::kJoint), 1.0);
  EXPECT_EQ(derive_path_prob(lp, ProbMode::kLengthNormalized), 1.0);
}

TEST(DerivePathProb, EmptyAndPositiveRejected) {
  EXPECT_THROW(derive_path_prob(std::vector<double>{}, ProbMode::kJoint), Error);
  try {
    ReasoningPath::from_logprobs("t", {-0.1, 0.2}, label("a"), ProbMode::kJoint);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidPath);
  }
}

TEST(DerivePathProb, UnderflowClampedIntoRange) {
  const std::vector<double> lp(2000, -1.0);
  const double p = derive_path_prob(lp, ProbMode::kJoint);
  EXPECT_GT(p, 0.0);
  EXPECT_LE(p, 1.0);
}

TEST(DerivePathProb, LengthNormalizedNeverBelowJoint) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> lp(1 + rng() % 20);
    for (double& v : lp) v = -3.0 * uniform01(rng);
    EXPECT_GE(derive_path_prob(lp, ProbMode::kLengthNormalized) + 1e-15,
              derive_path_prob(lp, ProbMode::kJoint));
  }
}

TEST(Canonicalize, TrimsUnboxesAndFolds) {
  EXPECT_EQ(canonicalize_answer("  \\boxed{ X+1 } "), "x+1");
  EXPECT_EQ(canonicalize_answer("\\boxed{\\boxed{42}}"), "42");
  EXPECT_EQ(canonicalize_answer("Yes"), "yes");
}

TEST(AnswerLabel, ClassIdOverridesText) {
  EXPECT_EQ(AnswerLabel::from_raw("1/2", 3), AnswerLabel::from_raw("0.5", 3));
  EXPECT_FALSE(AnswerLabel::from_raw("x", 1) == AnswerLabel::from_raw("x", 2));
  EXPECT_EQ(AnswerLabel::from_raw("X"), AnswerLabel::from_raw("x", 9));
}

TEST(ReasoningPath, EmptyAnswerRejected) {
  EXPECT_THROW(path("t", 0.5, "   "), Error);
}

TEST(UniquePaths, DedupPreservesFirstOccurrence) {
  const std::vector<ReasoningPath> a{path("ta", 0.2, "A"), path("ta", 0.2, "A"), path("tb", 0.1, "B")};
  auto u = unique_paths(a);
  ASSERT_EQ(u.size(), 2u);
  EXPECT_EQ(u[0].text(), "ta");
  EXPECT_EQ(u[1].text(), "tb");

  const std::vector<ReasoningPath> one{path("ta", 0.2, "A")};
  EXPECT_EQ(unique_paths(one).size(), 1u);

  const std::vector<ReasoningPath> b{path("ta", 0.2, "A"), path("tb", 0.1, "B"), path("ta", 0.2, "A"),
                                     path("tc", 0.1, "C")};
  u = unique_paths(b);
  ASSERT_EQ(u.size(), 3u);
  EXPECT_EQ(u[0].text(), "ta");
  EXPECT_EQ(u[1].text(), "tb");
  EXPECT_EQ(u[2].text(), "tc");
}

TEST(UniquePaths, PropertyIdempotentAndDistinct) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ReasoningPath> ps;
    const std::size_t n = 1 + rng() % 40;
    for (std::size_t i = 0; i < n; ++i) ps.push_back(path("t" + std::to_string(rng() % 8), 0.1, "a"));
    const auto u = unique_paths(ps);
    std::set<std::string> texts;
    for (const auto& p : u) texts.insert(p.text());
    EXPECT_EQ(texts.size(), u.size());
    EXPECT_EQ(unique_paths(u).size(), u.size());
  }
}

TEST(GroupByAnswer, Examples) {
  const std::vector<ReasoningPath> ps{path("1", 0.1, "A"), path("2", 0.1, "A"), path("3", 0.1, "B")};
  const auto g = group_by_answer(ps);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[0].label.canonical, "a");
  EXPECT_EQ(g[0].members, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(g[1].members, (std::vector<std::size_t>{2}));
  EXPECT_TRUE(group_by_answer(std::vector<ReasoningPath>{}).empty());
  EXPECT_EQ(group_by_answer(std::vector<ReasoningPath>{path("1", 0.1, "A")}).size(), 1u);
}

ConfidenceMap map_of(std::vector<std::pair<std::string, double>> kv) {
  std::vector<ConfidenceEntry> e;
  for (std::size_t i = 0; i < kv.size(); ++i) e.push_back({label(kv[i].first), std::nullopt, kv[i].second, i});
  return ConfidenceMap(EstimatorKind::kPC, std::move(e));
}

TEST(SelectAnswer, ArgmaxAndTies) {
  auto s = select_answer(map_of({{"A", 0.5}, {"B", 0.1}}));
  EXPECT_EQ(s.answer.canonical, "a");
  EXPECT_EQ(s.confidence, 0.5);
  s = select_answer(map_of({{"A", 0.3}, {"B", 0.3}}));
  EXPECT_EQ(s.answer.canonical, "a");
  EXPECT_EQ(s.confidence, 0.3);
  s = select_answer(map_of({{"A", 1.0}}));
  EXPECT_EQ(s.answer.canonical, "a");
  EXPECT_EQ(s.confidence, 1.0);
}

TEST(SelectAnswer, TieGoesToEarliestSampledEvenIfListedLater) {
  std::vector<ConfidenceEntry> e{{label("B"), std::nullopt, 0.3, 4}, {label("A"), std::nullopt, 0.3, 1}};
  EXPECT_EQ(select_answer(ConfidenceMap(EstimatorKind::kSC, e)).answer.canonical, "a");
}

TEST(SelectAnswer, EmptyIsNoCandidates) {
  try {
    select_answer(ConfidenceMap{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoCandidates);
  }
}

TEST(Random, Mt19937_64ReferenceValue) {
  // 10000th output of a default-seeded mt19937_64, fixed by the C++ standard.
  Rng rng;
  rng.discard(9999);
  EXPECT_EQ(rng(), 9981545732273789042ULL);
}

TEST(Random, DerivedSeedsDistinctAndStable) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(42, i));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(derive_seed(42, 3), derive_seed(42, 3));
  EXPECT_NE(derive_seed(42, 3), derive_seed(43, 3));
}

TEST(Random, Uniform01InUnitInterval) {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = uniform01(rng);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Random, CategoricalFrequencies) {
  const std::vector<double> probs{0.2, 0.5, 0.3};
  CategoricalSampler s(probs);
  Rng rng(5);
  std::vector<int> counts(3, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[s(rng)];
  for (std::size_t i = 0; i < 3; ++i) {
    const double se = std::sqrt(probs[i] * (1 - probs[i]) / n);
    EXPECT_NEAR(counts[i] / double(n), probs[i], 6 * se);
  }
}

}  // namespace
}  // namespace ttsc
