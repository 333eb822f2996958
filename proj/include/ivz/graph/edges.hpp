#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ivz/core/tensor.hpp"

namespace ivz::graph {

enum class EdgeType : std::uint8_t { Intent = 0, Semantic = 1, Temporal = 2 };
inline constexpr std::size_t kEdgeTypes = 3;

inline const char* edge_type_name(std::size_t t) {
  static constexpr const char* names[] = {"intent", "semantic", "temporal"};
  return names[t];
}

/// Directed edge; the message flows from `src` into `dst`.
struct Edge {
  std::uint32_t src;
  std::uint32_t dst;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

using EdgeList = std::vector<Edge>;

struct Graph {
  std::size_t vertices = 0;
  std::array<EdgeList, kEdgeTypes> edges;

  EdgeList& of(EdgeType t) { return edges[static_cast<std::size_t>(t)]; }
  const EdgeList& of(EdgeType t) const { return edges[static_cast<std::size_t>(t)]; }

  void validate() const {
    for (std::size_t t = 0; t < kEdgeTypes; ++t)
      for (const Edge& e : edges[t]) {
        if (e.src >= vertices || e.dst >= vertices)
          fail(ErrorCode::GraphIntegrity, std::string(edge_type_name(t)) + " edge " + std::to_string(e.src) + "->" +
                                              std::to_string(e.dst) + " dangles outside " + std::to_string(vertices) +
                                              " vertices");
        if (e.src == e.dst) fail(ErrorCode::GraphIntegrity, "self-loop at vertex " + std::to_string(e.src));
      }
  }
};

/// For every row i of x, edges from its K nearest rows (Euclidean, self excluded, ties to the lower index)
/// into i. Vertex ids are offset by `offset`.
template <class S>
EdgeList semantic_edges(const Tensor<S>& x, std::size_t k, std::size_t offset = 0) {
  const std::size_t n = x.rows();
  require(k >= 1 && k < n, ErrorCode::Config,
          "semantic neighbours K=" + std::to_string(k) + " needs 1 <= K < N=" + std::to_string(n));
  const std::size_t c = x.cols();
  EdgeList out;
  out.reserve(n * k);
  std::vector<std::pair<double, std::uint32_t>> dist;
  for (std::size_t i = 0; i < n; ++i) {
    dist.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double d = 0;
      for (std::size_t q = 0; q < c; ++q) {
        const double diff = static_cast<double>(x(i, q)) - static_cast<double>(x(j, q));
        d += diff * diff;
      }
      dist.emplace_back(d, static_cast<std::uint32_t>(j));
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t r = 0; r < k; ++r)
      out.push_back({static_cast<std::uint32_t>(dist[r].second + offset), static_cast<std::uint32_t>(i + offset)});
  }
  return out;
}

/// Forward (t -> t+1) then backward (t -> t-1) edges over a path of n vertices.
inline EdgeList temporal_edges(std::size_t n, std::size_t offset = 0) {
  EdgeList out;
  if (n < 2) return out;
  out.reserve(2 * (n - 1));
  for (std::size_t t = 0; t + 1 < n; ++t)
    out.push_back({static_cast<std::uint32_t>(t + offset), static_cast<std::uint32_t>(t + 1 + offset)});
  for (std::size_t t = 1; t < n; ++t)
    out.push_back({static_cast<std::uint32_t>(t + offset), static_cast<std::uint32_t>(t - 1 + offset)});
  return out;
}

/// Records kNN edge lists on the first pass and replays them afterwards, which freezes graph
/// structure for finite-difference checks.
struct GraphMemo {
  bool replay = false;
  std::size_t cursor = 0;
  std::vector<EdgeList> lists;

  void rewind() {
    replay = true;
    cursor = 0;
  }

  template <class F>
  EdgeList get(F&& compute) {
    if (replay) {
      require(cursor < lists.size(), ErrorCode::GraphIntegrity, "graph memo exhausted");
      return lists[cursor++];
    }
    lists.push_back(compute());
    return lists.back();
  }
};

template <class F>
EdgeList memoized(GraphMemo* memo, F&& compute) {
  return memo ? memo->get(std::forward<F>(compute)) : compute();
}

}  // namespace ivz::graph
