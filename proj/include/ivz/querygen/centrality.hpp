#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "ivz/eval/matching.hpp"
#include "ivz/eval/protocol.hpp"

namespace ivz::querygen {

using eval::WeightMatrix;

inline constexpr std::size_t kDefaultQueryShots = 5;
inline constexpr double kDefaultTolerance = 1e-10;
inline constexpr std::size_t kDefaultMaxIterations = 1000;
// Non-dominant components keep their internal ordering but sit below every dominant vertex.
inline constexpr double kMinorComponentScale = 1e-6;
// Centralities are compared on this grid so rounding noise cannot reorder near-equal shots.
inline constexpr double kRankQuantum = 1e-9;

inline void validate_graph(const WeightMatrix& w) {
  require(w.rows == w.cols, ErrorCode::Dimension, "graph weight matrix must be square");
  eval::check_weights(w);
  for (std::size_t i = 0; i < w.rows; ++i) {
    require(w(i, i) == 0.0, ErrorCode::Input, "graph weight matrix must have a zero diagonal");
    for (std::size_t j = i + 1; j < w.rows; ++j)
      require(w(i, j) == w(j, i), ErrorCode::Input, "graph weight matrix must be symmetric");
  }
}

/// W[i,j] = IOU of the tag sets of summary shots i and j; zero diagonal.
inline WeightMatrix pairwise_iou_graph(const std::vector<std::size_t>& summary, const std::vector<eval::TagSet>& tags) {
  require(summary.size() >= 2, ErrorCode::Input, "need at least 2 summary shots to build a graph");
  for (std::size_t s : summary)
    require(s < tags.size(), ErrorCode::Input, "summary shot " + std::to_string(s) + " out of range");
  const std::size_t n = summary.size();
  WeightMatrix w(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) w(i, j) = w(j, i) = eval::semantic_iou(tags[summary[i]], tags[summary[j]]);
  return w;
}

/// Connected components over positive-weight edges, each listed ascending, ordered by first vertex.
inline std::vector<std::vector<std::size_t>> components(const WeightMatrix& w) {
  const std::size_t n = w.rows;
  std::vector<std::size_t> label(n, n);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < n; ++s) {
    if (label[s] != n) continue;
    std::vector<std::size_t> comp{s}, stack{s};
    label[s] = out.size();
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      for (std::size_t u = 0; u < n; ++u)
        if (label[u] == n && w(v, u) > 0.0) {
          label[u] = out.size();
          comp.push_back(u);
          stack.push_back(u);
        }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

struct PowerResult {
  std::vector<double> vector;  // unit Euclidean norm, nonnegative
  double eigenvalue = 0.0;     // Rayleigh quotient on W
  std::size_t iterations = 0;
};

/// Power iteration on W + I from the all-ones vector. The unit shift keeps the iteration from
/// oscillating on bipartite graphs without moving the eigenvectors.
inline PowerResult power_iteration(const WeightMatrix& w, double tol, std::size_t max_iter) {
  const std::size_t n = w.rows;
  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n))), y(n);
  double change = 0.0;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = x[i];
      for (std::size_t j = 0; j < n; ++j) acc += w(i, j) * x[j];
      y[i] = acc;
    }
    double norm = 0.0;
    for (double v : y) norm += v * v;
    norm = std::sqrt(norm);
    change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] /= norm;
      change = std::max(change, std::abs(y[i] - x[i]));
    }
    std::swap(x, y);
    if (change < tol) {
      double rq = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) rq += x[i] * w(i, j) * x[j];
      return {x, rq, it};
    }
  }
  fail(ErrorCode::IterationLimit, "power iteration did not converge in " + std::to_string(max_iter) +
                                      " iterations (last change " + std::to_string(change) + ")");
}

inline WeightMatrix submatrix(const WeightMatrix& w, const std::vector<std::size_t>& idx) {
  WeightMatrix s(idx.size(), idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b < idx.size(); ++b) s(a, b) = w(idx[a], idx[b]);
  return s;
}

/// Eigenvector centrality: nonnegative, unit Euclidean norm. Disconnected graphs are solved per
/// component; the component with the largest spectral radius (lowest vertex on ties) keeps full
/// weight, other components are scaled by 1e-6, isolated vertices get 0.
inline std::vector<double> eigenvector_centrality(const WeightMatrix& w, double tol = kDefaultTolerance,
                                                  std::size_t max_iter = kDefaultMaxIterations) {
  validate_graph(w);
  require(std::any_of(w.w.begin(), w.w.end(), [](double v) { return v > 0.0; }), ErrorCode::DegenerateGraph,
          "graph has no positive edge weight");
  const std::size_t n = w.rows;
  std::vector<double> out(n, 0.0);
  std::vector<PowerResult> results;
  std::vector<std::vector<std::size_t>> comps;
  for (auto& c : components(w)) {
    if (c.size() < 2) continue;
    results.push_back(power_iteration(submatrix(w, c), tol, max_iter));
    comps.push_back(std::move(c));
  }
  std::size_t dominant = 0;
  for (std::size_t c = 1; c < results.size(); ++c) {
    const double a = results[c].eigenvalue, b = results[dominant].eigenvalue;
    if (a > b * (1.0 + 1e-12)) dominant = c;
  }
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const double scale = c == dominant ? 1.0 : kMinorComponentScale;
    for (std::size_t a = 0; a < comps[c].size(); ++a) out[comps[c][a]] = scale * results[c].vector[a];
  }
  double norm = 0.0;
  for (double v : out) norm += v * v;
  norm = std::sqrt(norm);
  for (double& v : out) v /= norm;
  return out;
}

/// Positions 0..n-1 ordered by quantized centrality descending, ties to the lower key.
inline std::vector<std::size_t> rank_by_centrality(const std::vector<double>& centrality,
                                                   const std::vector<std::size_t>& keys) {
  std::vector<std::size_t> order(centrality.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<long long> q(centrality.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = std::llround(centrality[i] / kRankQuantum);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (q[a] != q[b]) return q[a] > q[b];
    return keys[a] < keys[b];
  });
  return order;
}

/// Top-k summary shots by centrality of the pairwise IOU graph.
inline std::vector<std::size_t> generate_visual_query(const std::vector<std::size_t>& summary,
                                                      const std::vector<eval::TagSet>& tags,
                                                      std::size_t k = kDefaultQueryShots) {
  require(k >= 1, ErrorCode::Config, "query size must be >= 1");
  require(summary.size() >= k, ErrorCode::Input,
          "summary has " + std::to_string(summary.size()) + " shots, fewer than the " + std::to_string(k) +
              " query shots requested");
  const auto c = eigenvector_centrality(pairwise_iou_graph(summary, tags));
  const auto order = rank_by_centrality(c, summary);
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < k; ++r) out.push_back(summary[order[r]]);
  return out;
}

}  // namespace ivz::querygen
