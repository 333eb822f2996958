#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "ivz/querygen/centrality.hpp"

using namespace ivz;
using namespace ivz::querygen;

namespace {

/// Random connected graph: a random spanning tree plus extra random edges.
WeightMatrix random_connected(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  WeightMatrix w(n, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t a = order[i], b = order[rng() % i];
    w(a, b) = w(b, a) = u(rng);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng() % 3 == 0) w(i, j) = w(j, i) = u(rng);
  return w;
}

/// Dense symmetric eigensolve; dominant eigenvector with nonnegative sign.
std::vector<double> dense_dominant(const WeightMatrix& w, double* lambda = nullptr) {
  const auto n = static_cast<Eigen::Index>(w.rows);
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = w(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd v = es.eigenvectors().col(n - 1);
  if (v.sum() < 0) v = -v;
  if (lambda) *lambda = es.eigenvalues()(n - 1);
  return {v.data(), v.data() + n};
}

double linf(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::vector<eval::TagSet> tags_of(std::initializer_list<eval::TagSet> l) { return l; }

}  // namespace

TEST(IouGraph, Cases) {
  const auto same = pairwise_iou_graph({0, 1, 2}, tags_of({{"a", "b"}, {"a", "b"}, {"a", "b"}}));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(same(i, j), i == j ? 0.0 : 1.0);
  const auto disjoint = pairwise_iou_graph({0, 1, 2}, tags_of({{"a"}, {"b"}, {"c"}}));
  for (double v : disjoint.w) EXPECT_EQ(v, 0.0);
  const auto tags = tags_of({{"a", "b"}, {"b", "c"}, {"z"}, {"a", "b", "c"}});
  const std::vector<std::size_t> summary = {3, 0, 1};
  const auto mixed = pairwise_iou_graph(summary, tags);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      EXPECT_EQ(mixed(i, j), i == j ? 0.0 : eval::semantic_iou(tags[summary[i]], tags[summary[j]]));
  EXPECT_THROW(pairwise_iou_graph({0}, tags), Error);
}

TEST(Centrality, CompleteGraphIsUniform) {
  for (std::size_t n : {2u, 5u, 9u}) {
    WeightMatrix w(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) w(i, j) = i == j ? 0.0 : 0.7;
    for (double v : eigenvector_centrality(w)) EXPECT_NEAR(v, 1.0 / std::sqrt(double(n)), 1e-12);
  }
}

TEST(Centrality, StarGraph) {
  WeightMatrix w(4, 4);
  for (std::size_t j = 1; j < 4; ++j) w(0, j) = w(j, 0) = 1.0;
  const auto c = eigenvector_centrality(w);
  EXPECT_NEAR(c[0], 0.70711, 1e-5);
  for (std::size_t j = 1; j < 4; ++j) EXPECT_NEAR(c[j], 0.40825, 1e-5);
  EXPECT_NEAR(c[0] / c[1], std::sqrt(3.0), 1e-9);
}

TEST(Centrality, MatchesDenseSolver) {
  std::mt19937_64 rng(11);
  for (int it = 0; it < 100; ++it) {
    const auto w = random_connected(2 + rng() % 11, rng);
    EXPECT_LT(linf(eigenvector_centrality(w), dense_dominant(w)), 1e-8) << it;
  }
}

TEST(Centrality, ScaleInvariant) {
  std::mt19937_64 rng(12);
  for (int it = 0; it < 20; ++it) {
    auto w = random_connected(8, rng);
    const auto a = eigenvector_centrality(w);
    for (double& v : w.w) v *= 5.5;
    EXPECT_LT(linf(a, eigenvector_centrality(w)), 1e-8);
  }
}

TEST(Centrality, DisconnectedEqualEdges) {
  WeightMatrix w(4, 4);
  w(0, 1) = w(1, 0) = 1.0;
  w(2, 3) = w(3, 2) = 1.0;
  const auto c = eigenvector_centrality(w);
  double lambda = 0;
  dense_dominant(w, &lambda);
  // Any nonnegative vector in the dominant eigenspace is acceptable; check the eigen-equation.
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_GE(c[i], 0.0);
    double wx = 0;
    for (std::size_t j = 0; j < 4; ++j) wx += w(i, j) * c[j];
    EXPECT_NEAR(wx, lambda * c[i], 1e-9);
  }
  EXPECT_GT(c[0], c[2]);
  EXPECT_NEAR(c[0], c[1], 1e-12);
}

TEST(Centrality, DominantComponentAndIsolatedVertex) {
  // Triangle {1,2,4} (radius 2) dominates the edge {0,3} (radius 1); vertex 5 is isolated.
  WeightMatrix w(6, 6);
  for (auto [a, b] : {std::pair{1, 2}, {2, 4}, {1, 4}}) w(a, b) = w(b, a) = 1.0;
  w(0, 3) = w(3, 0) = 1.0;
  const auto c = eigenvector_centrality(w);
  EXPECT_EQ(c[5], 0.0);
  EXPECT_NEAR(c[1], 1 / std::sqrt(3.0), 1e-9);
  EXPECT_GT(c[0], 0.0);
  EXPECT_LT(c[0], 1e-5);
}

TEST(Centrality, Errors) {
  try {
    eigenvector_centrality(WeightMatrix(3, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateGraph);
  }
  WeightMatrix w(3, 3);
  w(0, 1) = w(1, 0) = 1;
  w(1, 2) = w(2, 1) = 0.5;
  try {
    eigenvector_centrality(w, 1e-10, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IterationLimit);
    EXPECT_NE(std::string(e.what()).find("last change"), std::string::npos);
  }
  WeightMatrix asym(2, 2);
  asym(0, 1) = 1;
  EXPECT_THROW(eigenvector_centrality(asym), Error);
}

TEST(VisualQueryGen, UniformCentralityTakesFirstShots) {
  std::vector<eval::TagSet> tags(20, eval::TagSet{"a"});
  const std::vector<std::size_t> summary = {3, 5, 8, 9, 11, 14, 17};
  EXPECT_EQ(generate_visual_query(summary, tags), (std::vector<std::size_t>{3, 5, 8, 9, 11}));
  EXPECT_THROW(generate_visual_query({1, 2, 3}, tags), Error);
}

TEST(VisualQueryGen, MatchesSortOracle) {
  std::mt19937_64 rng(21);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e"};
  int checked = 0;
  for (int it = 0; it < 60; ++it) {
    std::vector<eval::TagSet> tags(40);
    for (auto& t : tags) {
      std::vector<std::string> raw{vocab[rng() % 5]};
      for (const auto& v : vocab)
        if (rng() % 3 == 0) raw.push_back(v);
      t = eval::make_tag_set(raw);
    }
    std::vector<std::size_t> summary;
    for (std::size_t s = 0; s < 40; ++s)
      if (rng() % 4 == 0) summary.push_back(s);
    if (summary.size() < 5) continue;
    const auto w = pairwise_iou_graph(summary, tags);
    if (components(w).size() != 1) continue;
    const auto dense = dense_dominant(w);
    std::vector<std::size_t> order(summary.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const long long qa = std::llround(dense[a] * 1e9), qb = std::llround(dense[b] * 1e9);
      return qa != qb ? qa > qb : summary[a] < summary[b];
    });
    const auto q = generate_visual_query(summary, tags);
    ASSERT_EQ(q.size(), 5u);
    for (std::size_t r = 0; r < 5; ++r) EXPECT_EQ(q[r], summary[order[r]]) << it;
    ++checked;
  }
  EXPECT_GT(checked, 20);
}
