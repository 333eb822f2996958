#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ivz/graph/edges.hpp"
#include "ivz/model/pathways.hpp"
#include "ivz/nn/layers.hpp"

namespace ivz::graph {

/// Typed edge convolution with a residual shortcut:
///   x_i' = x_i + sum_type max_{j -> i} ReLU([x_i, x_j - x_i] W_type + b_type)
/// A vertex without in-edges of a type receives nothing from that type.
/// W_type is [2c, c]; its first c rows act on the centre, the last c rows on the difference.
template <class S>
struct EdgeConv {
  std::size_t width = 0;
  std::array<nn::Param<S>, kEdgeTypes> weight;
  std::array<nn::Param<S>, kEdgeTypes> bias;

  struct TypeCache {
    Tensor<S> a, b;                  // centre and difference projections [V,c]
    Tensor<S> best;                  // max pre-activation per (vertex, channel)
    std::vector<std::int32_t> arg;   // winning source vertex, -1 without in-edges
  };
  struct Cache {
    Tensor<S> x;
    std::array<TypeCache, kEdgeTypes> types;
  };

  EdgeConv() = default;
  explicit EdgeConv(std::size_t c) : width(c) {
    for (std::size_t t = 0; t < kEdgeTypes; ++t) {
      weight[t] = nn::Param<S>({2 * c, c});
      bias[t] = nn::Param<S>({c});
    }
  }

  void init(nn::Init& init) {
    for (std::size_t t = 0; t < kEdgeTypes; ++t) {
      init.fan_in(weight[t].value, 2 * width);
      init.fan_in(bias[t].value, 2 * width);
    }
  }

  void collect(nn::ParamList<S>& list, const std::string& prefix) {
    for (std::size_t t = 0; t < kEdgeTypes; ++t) {
      list.push_back({prefix + "." + edge_type_name(t) + ".weight", &weight[t]});
      list.push_back({prefix + "." + edge_type_name(t) + ".bias", &bias[t]});
    }
  }

  Tensor<S> forward(const Tensor<S>& x, const Graph& g, Cache* cache = nullptr) const {
    require(x.rank() == 2 && x.cols() == width && x.rows() == g.vertices, ErrorCode::Dimension,
            "edge_conv: features " + shape_string(x.shape()) + " for " + std::to_string(g.vertices) +
                " vertices of width " + std::to_string(width));
    g.validate();
    const std::size_t v = x.rows(), c = width;
    Tensor<S> y = x;
    Cache local;
    Cache& cc = cache ? *cache : local;
    cc.x = x;
    for (std::size_t t = 0; t < kEdgeTypes; ++t) {
      TypeCache& tc = cc.types[t];
      tc.a = matmul(x, slice_rows(weight[t].value, 0, c));
      tc.b = matmul(x, slice_rows(weight[t].value, c, c));
      tc.best = Tensor<S>({v, c});
      tc.arg.assign(v * c, -1);
      for (const Edge& e : sorted_by_source(g.edges[t])) {
        for (std::size_t q = 0; q < c; ++q) {
          std::int32_t& a = tc.arg[e.dst * c + q];
          if (a < 0 || tc.b(e.src, q) > tc.b(static_cast<std::size_t>(a), q)) a = static_cast<std::int32_t>(e.src);
        }
      }
      for (std::size_t i = 0; i < v; ++i)
        for (std::size_t q = 0; q < c; ++q) {
          const std::int32_t a = tc.arg[i * c + q];
          if (a < 0) continue;
          const S pre = tc.a(i, q) - tc.b(i, q) + tc.b(static_cast<std::size_t>(a), q) + bias[t].value[q];
          tc.best(i, q) = pre;
          if (pre > S(0)) y(i, q) += pre;
        }
    }
    return y;
  }

  Tensor<S> backward(const Cache& cc, const Tensor<S>& dy) {
    const std::size_t v = cc.x.rows(), c = width;
    Tensor<S> dx = dy;
    for (std::size_t t = 0; t < kEdgeTypes; ++t) {
      const TypeCache& tc = cc.types[t];
      Tensor<S> da({v, c}), db({v, c});
      bool any = false;
      for (std::size_t i = 0; i < v; ++i)
        for (std::size_t q = 0; q < c; ++q) {
          const std::int32_t a = tc.arg[i * c + q];
          if (a < 0 || !(tc.best(i, q) > S(0))) continue;
          const S g = dy(i, q);
          da(i, q) += g;
          db(i, q) -= g;
          db(static_cast<std::size_t>(a), q) += g;
          bias[t].grad[q] += g;
          any = true;
        }
      if (!any) continue;
      Tensor<S> dw_top({c, c}), dw_bot({c, c});
      matmul_at_b_acc(cc.x, da, dw_top);
      matmul_at_b_acc(cc.x, db, dw_bot);
      S* gw = weight[t].grad.data();
      for (std::size_t i = 0; i < c * c; ++i) gw[i] += dw_top[i];
      for (std::size_t i = 0; i < c * c; ++i) gw[c * c + i] += dw_bot[i];
      dx += matmul_a_bt(da, slice_rows(weight[t].value, 0, c));
      dx += matmul_a_bt(db, slice_rows(weight[t].value, c, c));
    }
    return dx;
  }

 private:
  static EdgeList sorted_by_source(const EdgeList& edges) {
    EdgeList out = edges;
    std::stable_sort(out.begin(), out.end(), [](const Edge& l, const Edge& r) { return l.src < r.src; });
    return out;
  }
};

/// Segment vertices 0..N-1 followed by ego vertices N..N+M-1.
template <class S>
struct EgoGraph {
  Tensor<S> segment_vertices;  // [N,c]
  Tensor<S> ego_vertices;      // [M,c]
  Graph graph;
};

/// Every ego vertex connects to every segment in both directions; semantic edges are given;
/// temporal edges form a path over segments.
inline Graph ego_graph_edges(std::size_t segments, std::size_t egos, EdgeList semantic) {
  Graph g;
  g.vertices = segments + egos;
  auto& intent = g.of(EdgeType::Intent);
  intent.reserve(2 * segments * egos);
  for (std::size_t m = 0; m < egos; ++m)
    for (std::size_t i = 0; i < segments; ++i) {
      intent.push_back({static_cast<std::uint32_t>(segments + m), static_cast<std::uint32_t>(i)});
      intent.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(segments + m)});
    }
  g.of(EdgeType::Semantic) = std::move(semantic);
  g.of(EdgeType::Temporal) = temporal_edges(segments);
  return g;
}

/// Ego-graph convolution stack. Each layer is two edge-conv sub-layers with an outer shortcut,
/// and semantic edges are recomputed from the current segment features before every layer.
template <class S>
struct EgoGcn {
  std::size_t width = 0;
  std::size_t ego_dim = 0;
  std::size_t neighbours = 8;
  nn::Linear<S> ego_proj;
  std::vector<EdgeConv<S>> sublayers;

  struct LayerCache {
    Graph graph;
    typename EdgeConv<S>::Cache first, second;
  };
  struct Cache {
    Tensor<S> ego_raw;
    std::size_t segments = 0;
    std::vector<LayerCache> layers;
  };
  struct Output {
    Tensor<S> segments;  // [N,c]
    Tensor<S> ego;       // [M,c]
  };
  struct Grads {
    Tensor<S> segments;
    Tensor<S> ego_raw;
  };

  EgoGcn() = default;
  EgoGcn(std::size_t c, std::size_t ego_width, std::size_t layers, std::size_t k)
      : width(c), ego_dim(ego_width), neighbours(k), ego_proj(ego_width, c) {
    require(layers >= 1, ErrorCode::Config, "gcn stack needs at least one layer");
    for (std::size_t i = 0; i < 2 * layers; ++i) sublayers.emplace_back(c);
  }

  std::size_t layers() const { return sublayers.size() / 2; }

  void init(nn::Init& init) {
    ego_proj.init(init);
    for (auto& s : sublayers) s.init(init);
  }

  void collect(nn::ParamList<S>& list, const std::string& prefix) {
    ego_proj.collect(list, prefix + ".ego_proj");
    for (std::size_t i = 0; i < sublayers.size(); ++i)
      sublayers[i].collect(list, prefix + ".layer" + std::to_string(i / 2) + ".sub" + std::to_string(i % 2));
  }

  /// Graph over the given segment features with projected ego vertices.
  EgoGraph<S> build(const Tensor<S>& segments, const Tensor<S>& ego_raw, GraphMemo* memo = nullptr) const {
    const std::size_t n = segments.rows();
    require(n >= 1, ErrorCode::Input, "ego graph needs at least one segment");
    require(segments.cols() == width, ErrorCode::Dimension,
            "ego graph: segments " + shape_string(segments.shape()) + " expected width " + std::to_string(width));
    EgoGraph<S> g;
    g.segment_vertices = segments;
    g.ego_vertices = ego_proj.forward(ego_raw);
    // A single-segment graph (shortest videos, coarse pathway) has no semantic neighbours.
    const std::size_t k = std::min(neighbours, n - 1);
    EdgeList semantic = k == 0 ? EdgeList{} : memoized(memo, [&] { return semantic_edges(segments, k); });
    g.graph = ego_graph_edges(n, ego_raw.rows(), std::move(semantic));
    return g;
  }

  Output forward(const Tensor<S>& segments, const Tensor<S>& ego_raw, Cache* cache = nullptr,
                 GraphMemo* memo = nullptr) const {
    require(ego_raw.rows() >= 1 && ego_raw.cols() == ego_dim, ErrorCode::Dimension,
            "ego input " + shape_string(ego_raw.shape()) + " expected width " + std::to_string(ego_dim));
    EgoGraph<S> eg = build(segments, ego_raw, memo);
    const std::size_t n = segments.rows();
    Tensor<S> x = concat_rows(eg.segment_vertices, eg.ego_vertices);
    if (cache) {
      cache->ego_raw = ego_raw;
      cache->segments = n;
      cache->layers.clear();
    }
    for (std::size_t l = 0; l < layers(); ++l) {
      Graph graph = l == 0 ? std::move(eg.graph) : rebuild(x, n, ego_raw.rows(), memo);
      LayerCache lc;
      Tensor<S> h = sublayers[2 * l].forward(x, graph, cache ? &lc.first : nullptr);
      h = sublayers[2 * l + 1].forward(h, graph, cache ? &lc.second : nullptr);
      x += h;
      if (cache) {
        lc.graph = std::move(graph);
        cache->layers.push_back(std::move(lc));
      }
    }
    return {slice_rows(x, 0, n), slice_rows(x, n, x.rows() - n)};
  }

  Grads backward(const Cache& c, const Tensor<S>& dsegments, const Tensor<S>& dego) {
    Tensor<S> dx = concat_rows(dsegments, dego);
    for (std::size_t l = layers(); l-- > 0;) {
      const LayerCache& lc = c.layers[l];
      Tensor<S> dh = sublayers[2 * l + 1].backward(lc.second, dx);
      dh = sublayers[2 * l].backward(lc.first, dh);
      dx += dh;
    }
    Grads g;
    g.segments = slice_rows(dx, 0, c.segments);
    g.ego_raw = ego_proj.backward(c.ego_raw, slice_rows(dx, c.segments, dx.rows() - c.segments));
    return g;
  }

 private:
  Graph rebuild(const Tensor<S>& x, std::size_t n, std::size_t m, GraphMemo* memo) const {
    const std::size_t k = std::min(neighbours, n - 1);
    const Tensor<S> segs = slice_rows(x, 0, n);
    EdgeList semantic = k == 0 ? EdgeList{} : memoized(memo, [&] { return semantic_edges(segs, k); });
    return ego_graph_edges(n, m, std::move(semantic));
  }
};

/// Per-segment star graphs that lift segment features back to shot level. Shots are vertices
/// 0..T-1, segments follow. Star edges use the intent slot, semantic and temporal edges stay
/// inside a segment's span.
template <class S>
struct LocalGraph {
  std::size_t segment_dim = 0;
  std::size_t shot_dim = 0;
  std::size_t width = 0;
  std::size_t neighbours = 4;
  nn::Linear<S> segment_proj, shot_proj;
  EdgeConv<S> conv;

  struct Cache {
    Tensor<S> segments, shots;
    Graph graph;
    typename EdgeConv<S>::Cache conv;
  };
  struct Grads {
    Tensor<S> segments;
    Tensor<S> shots;
  };

  LocalGraph() = default;
  LocalGraph(std::size_t seg_dim, std::size_t shot_width, std::size_t mutual, std::size_t k)
      : segment_dim(seg_dim), shot_dim(shot_width), width(mutual), neighbours(k),
        segment_proj(seg_dim, mutual), shot_proj(shot_width, mutual), conv(mutual) {}

  void init(nn::Init& init) {
    segment_proj.init(init);
    shot_proj.init(init);
    conv.init(init);
  }

  void collect(nn::ParamList<S>& list, const std::string& prefix) {
    segment_proj.collect(list, prefix + ".segment_proj");
    shot_proj.collect(list, prefix + ".shot_proj");
    conv.collect(list, prefix + ".conv");
  }

  Graph build(const Tensor<S>& shot_features, std::size_t segments, const std::vector<model::Span>& spans,
              GraphMemo* memo) const {
    const std::size_t t = shot_features.rows();
    require(spans.size() == segments, ErrorCode::GraphIntegrity,
            std::to_string(spans.size()) + " spans for " + std::to_string(segments) + " segments");
    Graph g;
    g.vertices = t + segments;
    std::size_t covered = 0;
    for (std::size_t s = 0; s < spans.size(); ++s) {
      const auto [b, e] = spans[s];
      require(b < e && e <= t && b == covered, ErrorCode::GraphIntegrity,
              "segment " + std::to_string(s) + " has an empty or non-contiguous span");
      covered = e;
      const auto seg = static_cast<std::uint32_t>(t + s);
      for (std::size_t i = b; i < e; ++i) {
        g.of(EdgeType::Intent).push_back({seg, static_cast<std::uint32_t>(i)});
        g.of(EdgeType::Intent).push_back({static_cast<std::uint32_t>(i), seg});
      }
      const std::size_t len = e - b;
      const std::size_t k = std::min(neighbours, len - 1);
      if (k > 0) {
        EdgeList sem = memoized(memo, [&] { return semantic_edges(slice_rows(shot_features, b, len), k, b); });
        auto& dst = g.of(EdgeType::Semantic);
        dst.insert(dst.end(), sem.begin(), sem.end());
      }
      EdgeList tmp = temporal_edges(len, b);
      auto& dst = g.of(EdgeType::Temporal);
      dst.insert(dst.end(), tmp.begin(), tmp.end());
    }
    require(covered == t, ErrorCode::GraphIntegrity, "segment spans do not cover every shot");
    return g;
  }

  /// Returns shot-level features [T, width].
  Tensor<S> forward(const Tensor<S>& segments, const Tensor<S>& shots, const std::vector<model::Span>& spans,
                    Cache* cache = nullptr, GraphMemo* memo = nullptr) const {
    const Tensor<S> ps = shot_proj.forward(shots);
    const Tensor<S> pg = segment_proj.forward(segments);
    Graph g = build(ps, segments.rows(), spans, memo);
    Tensor<S> y = conv.forward(concat_rows(ps, pg), g, cache ? &cache->conv : nullptr);
    if (cache) {
      cache->segments = segments;
      cache->shots = shots;
      cache->graph = std::move(g);
    }
    return slice_rows(y, 0, shots.rows());
  }

  Grads backward(const Cache& c, const Tensor<S>& dy) {
    const std::size_t t = c.shots.rows();
    Tensor<S> dfull({t + c.segments.rows(), width});
    std::copy_n(dy.data(), dy.size(), dfull.data());
    const Tensor<S> dx = conv.backward(c.conv, dfull);
    Grads g;
    g.shots = shot_proj.backward(c.shots, slice_rows(dx, 0, t));
    g.segments = segment_proj.backward(c.segments, slice_rows(dx, t, c.segments.rows()));
    return g;
  }
};

}  // namespace ivz::graph
