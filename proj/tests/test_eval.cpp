#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "ivz/eval/protocol.hpp"

using namespace ivz;
using namespace ivz::eval;

namespace {

WeightMatrix random_matrix(std::size_t m, std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  WeightMatrix w(m, n);
  for (double& v : w.w) v = u(rng);
  return w;
}

using ivz::test::fixture_tags;

}  // namespace

TEST(SemanticIou, Examples) {
  EXPECT_EQ(semantic_iou({"x", "y"}, {"x", "y"}), 1.0);
  EXPECT_DOUBLE_EQ(semantic_iou({"x", "y"}, {"y", "z"}), 1.0 / 3.0);
  EXPECT_EQ(semantic_iou({}, {}), 0.0);
  EXPECT_EQ(semantic_iou({"x"}, {}), 0.0);
}

TEST(SemanticIou, Properties) {
  std::mt19937_64 rng(5);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e"};
  auto draw = [&] {
    std::vector<std::string> t;
    for (const auto& v : vocab)
      if (rng() % 2) t.push_back(v);
    return make_tag_set(t);
  };
  for (int it = 0; it < 200; ++it) {
    const auto a = draw(), b = draw();
    const double x = semantic_iou(a, b);
    EXPECT_EQ(x, semantic_iou(b, a));
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
    if (!a.empty() && !b.empty()) EXPECT_EQ(x == 1.0, a == b);
  }
}

TEST(Matching, FixtureAndSmallCases) {
  const WeightMatrix w(2, 2, {0.6, 0.2, 0.3, 0.9});
  const auto m = max_weight_matching(w);
  EXPECT_EQ(m.pairs, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}}));
  EXPECT_DOUBLE_EQ(m.weight, 1.5);
  EXPECT_EQ(brute_force_matching(w).weight, m.weight);
  EXPECT_EQ(max_weight_matching(WeightMatrix(1, 1, {0.42})).weight, 0.42);
  WeightMatrix eye(3, 5);
  for (std::size_t i = 0; i < 3; ++i) eye(i, i) = 1.0;
  EXPECT_EQ(max_weight_matching(eye).weight, 3.0);
  EXPECT_EQ(max_weight_matching(eye).pairs.size(), 3u);
  EXPECT_EQ(max_weight_matching(WeightMatrix()).weight, 0.0);
  EXPECT_EQ(brute_force_matching(WeightMatrix()).weight, 0.0);
  EXPECT_TRUE(max_weight_matching(WeightMatrix(2, 2)).pairs.empty());
}

TEST(Matching, RectangularEnumeration) {
  // Best is (0,2)+(1,0) = 0.9+0.8; a greedy pick of (0,0)=1.0 would give 1.0+0.5.
  const WeightMatrix w(2, 3, {1.0, 0.1, 0.9, 0.8, 0.5, 0.0});
  EXPECT_DOUBLE_EQ(brute_force_matching(w).weight, 1.7);
  EXPECT_EQ(max_weight_matching(w).weight, brute_force_matching(w).weight);
  WeightMatrix t(3, 2);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) t(j, i) = w(i, j);
  EXPECT_EQ(max_weight_matching(t).weight, brute_force_matching(t).weight);
}

TEST(Matching, Errors) {
  EXPECT_THROW(max_weight_matching(WeightMatrix(1, 2, {0.1, -0.1})), Error);
  EXPECT_THROW(brute_force_matching(WeightMatrix(9, 9)), Error);
}

TEST(Matching, AgreesWithBruteForce) {
  std::mt19937_64 rng(2024);
  for (int it = 0; it < 200; ++it) {
    const auto w = random_matrix(6, 6, rng);
    EXPECT_EQ(max_weight_matching(w).weight, brute_force_matching(w).weight) << it;
  }
  for (int it = 0; it < 100; ++it) {
    const auto w = random_matrix(1 + rng() % 8, 1 + rng() % 9, rng);
    EXPECT_EQ(max_weight_matching(w).weight, brute_force_matching(w).weight) << it;
  }
}

TEST(Matching, SparseIouStyleWeightsWithinRounding) {
  // Rational IOU values create exact ties between matchings, so compare optimal values only.
  std::mt19937_64 rng(77);
  const double vals[] = {0.0, 0.0, 1.0 / 3.0, 0.5, 0.25, 1.0};
  for (int it = 0; it < 200; ++it) {
    WeightMatrix w(1 + rng() % 6, 1 + rng() % 6);
    for (double& v : w.w) v = vals[rng() % 6];
    EXPECT_NEAR(max_weight_matching(w).weight, brute_force_matching(w).weight, 1e-12);
  }
}

TEST(Protocol, FixtureGivesThreeQuarters) {
  const auto tags = fixture_tags();
  EXPECT_DOUBLE_EQ(semantic_iou(tags[0], tags[2]), 0.6);
  EXPECT_DOUBLE_EQ(semantic_iou(tags[0], tags[3]), 0.2);
  EXPECT_DOUBLE_EQ(semantic_iou(tags[1], tags[2]), 0.3);
  EXPECT_DOUBLE_EQ(semantic_iou(tags[1], tags[3]), 0.9);
  // Enumeration: {(0,0),(1,1)} = 1.5 beats {(0,1),(1,0)} = 0.5, so P = R = 1.5/2.
  const auto res = evaluate_summary({0, 1}, {2, 3}, tags);
  EXPECT_NEAR(res.precision, 0.75, 1e-9);
  EXPECT_NEAR(res.recall, 0.75, 1e-9);
  EXPECT_NEAR(res.f1, 0.75, 1e-9);
}

TEST(Protocol, PerfectAndMaskedAndEmpty) {
  std::vector<TagSet> tags = {{"a"}, {"b"}, {"c"}, {"d"}};
  const auto perfect = evaluate_summary({0, 2, 3}, {0, 2, 3}, tags);
  EXPECT_EQ(perfect.precision, 1.0);
  EXPECT_EQ(perfect.recall, 1.0);
  EXPECT_EQ(perfect.f1, 1.0);
  const auto masked = evaluate_summary({0, 1}, {0, 2}, tags, {0, 1});
  EXPECT_EQ(masked.f1, 0.0);
  EXPECT_EQ(evaluate_summary({}, {0}, tags).precision, 0.0);
  try {
    evaluate_summary({4}, {0}, tags);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Input);
  }
  EXPECT_THROW(evaluate_summary({1, 1}, {0}, tags), Error);
}

TEST(Protocol, PermutationInvariance) {
  std::mt19937_64 rng(3);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "f"};
  std::vector<TagSet> tags(30);
  for (auto& t : tags) {
    std::vector<std::string> raw;
    for (const auto& v : vocab)
      if (rng() % 3 == 0) raw.push_back(v);
    t = make_tag_set(raw);
  }
  std::vector<std::size_t> pred = {1, 4, 9, 12, 20}, gt = {2, 4, 7, 28};
  const auto base = evaluate_summary(pred, gt, tags);
  for (int it = 0; it < 10; ++it) {
    std::shuffle(pred.begin(), pred.end(), rng);
    std::shuffle(gt.begin(), gt.end(), rng);
    const auto r = evaluate_summary(pred, gt, tags);
    EXPECT_NEAR(r.precision, base.precision, 1e-12);
    EXPECT_NEAR(r.recall, base.recall, 1e-12);
  }
}

TEST(Protocol, DisjointExtraShotLowersPrecisionOnly) {
  std::vector<TagSet> tags = {{"a", "b"}, {"b", "c"}, {"a"}, {"c"}, {"z"}};
  const auto before = evaluate_summary({0, 1}, {2, 3}, tags);
  const auto after = evaluate_summary({0, 1, 4}, {2, 3}, tags);
  EXPECT_LT(after.precision, before.precision);
  EXPECT_EQ(after.recall, before.recall);
}

TEST(Protocol, JsonFormatAndParsing) {
  EXPECT_EQ(eval_result_json({0.75, 0.75, 0.75}), R"({"precision":0.750000,"recall":0.750000,"f1":0.750000})");
  const auto req = parse_eval_request(nlohmann::json::parse(R"({"pred":[0],"gt":[1],"tags":[["b","a","a"],[]]})"));
  EXPECT_EQ(req.tags[0], (TagSet{"a", "b"}));
  EXPECT_TRUE(req.mask.empty());
  EXPECT_THROW(parse_eval_request(nlohmann::json::parse(R"({"pred":[-1],"gt":[],"tags":[]})")), Error);
  EXPECT_THROW(parse_eval_request(nlohmann::json::parse(R"({"gt":[],"tags":[]})")), Error);
}
