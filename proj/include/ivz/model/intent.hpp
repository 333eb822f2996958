#pragma once

#include <string>

#include "ivz/graph/edge_conv.hpp"
#include "ivz/model/config.hpp"
#include "ivz/nn/attention.hpp"

namespace ivz::model {

enum class QueryKind { Text, Visual };

/// Intent module: maps (video, query) to a probability vector over the k basis intents.
/// Text queries contribute one ego vertex (both concept embeddings concatenated) and two
/// attention queries; visual queries contribute one ego vertex and one attention query per shot.
template <class S>
struct IntentModule {
  ModelConfig config;
  QueryKind kind = QueryKind::Text;
  GsPathways<S> pathways;
  graph::EgoGcn<S> fine_gcn, coarse_gcn;
  nn::MultiHeadAttention<S> fine_attention, coarse_attention;
  nn::Mlp<S> head;

  struct PathCache {
    typename graph::EgoGcn<S>::Cache gcn;
    typename nn::MultiHeadAttention<S>::Cache attention;
    std::size_t segments = 0;
  };
  struct Cache {
    typename GsPathways<S>::Cache pathways;
    PathCache fine, coarse;
    Tensor<S> pooled;
    typename nn::Mlp<S>::Cache head;
    Tensor<S> probs;
  };

  IntentModule() = default;
  IntentModule(const ModelConfig& c, QueryKind k)
      : config(c),
        kind(k),
        pathways(c.pathways),
        fine_gcn(c.fine_width(), ego_width(c, k), c.intent_gcn_layers, c.semantic_neighbours),
        coarse_gcn(c.coarse_width(), ego_width(c, k), c.intent_gcn_layers, c.semantic_neighbours),
        fine_attention(query_width(c, k), c.fine_width(), c.attention_width, c.attention_heads),
        coarse_attention(query_width(c, k), c.coarse_width(), c.attention_width, c.attention_heads),
        head({c.fine_width() + c.coarse_width() + 2 * c.attention_width, c.intent_hidden, c.intent_hidden,
              c.intents}) {}

  static std::size_t ego_width(const ModelConfig& c, QueryKind k) {
    return k == QueryKind::Text ? 2 * c.word_dim : c.feature_dim;
  }
  static std::size_t query_width(const ModelConfig& c, QueryKind k) {
    return k == QueryKind::Text ? c.word_dim : c.feature_dim;
  }

  void init(nn::Init& init) {
    pathways.init(init);
    fine_gcn.init(init);
    coarse_gcn.init(init);
    fine_attention.init(init);
    coarse_attention.init(init);
    head.init(init);
    // A near-uniform distribution would sit entirely below the shifted-ReLU threshold of the
    // mixer, so the output bias starts spread out.
    init.normal(head.layers.back().bias.value, config.intent_logit_init);
  }

  void collect(nn::ParamList<S>& list, const std::string& prefix) {
    pathways.collect(list, prefix + ".pathways");
    fine_gcn.collect(list, prefix + ".fine_gcn");
    coarse_gcn.collect(list, prefix + ".coarse_gcn");
    fine_attention.collect(list, prefix + ".fine_attention");
    coarse_attention.collect(list, prefix + ".coarse_attention");
    head.collect(list, prefix + ".head");
  }

  /// ego: [M, ego width] ego-vertex inputs; queries: [Q, query width] attention queries. Returns [k].
  Tensor<S> forward(const Tensor<S>& video, const Tensor<S>& ego, const Tensor<S>& queries, Cache* cache = nullptr,
                    graph::GraphMemo* memo = nullptr) const {
    require(queries.rows() >= 1 && queries.cols() == query_width(config, kind), ErrorCode::Dimension,
            "intent queries " + shape_string(queries.shape()));
    Cache local;
    Cache& c = cache ? *cache : local;
    const SegmentFeatures<S> segs = pathways.forward(video, &c.pathways);
    const Tensor<S> fine = pool(fine_gcn, fine_attention, segs.fine, ego, queries, c.fine, memo);
    const Tensor<S> coarse = pool(coarse_gcn, coarse_attention, segs.coarse, ego, queries, c.coarse, memo);
    c.pooled = concat_cols(fine, coarse);
    c.probs = nn::softmax(head.forward(c.pooled, &c.head));
    return c.probs.reshaped({config.intents});
  }

  /// Accumulates parameter gradients; returns d(video).
  Tensor<S> backward(const Cache& c, const Tensor<S>& dprobs) {
    const Tensor<S> dlogits = nn::softmax_backward(c.probs, dprobs.reshaped({1, config.intents}));
    const Tensor<S> dpooled = head.backward(c.head, dlogits);
    const std::size_t fw = config.fine_width() + config.attention_width;
    const Tensor<S> dfine = unpool(fine_gcn, fine_attention, c.fine, slice_cols(dpooled, 0, fw));
    const Tensor<S> dcoarse = unpool(coarse_gcn, coarse_attention, c.coarse, slice_cols(dpooled, fw, dpooled.cols() - fw));
    return pathways.backward(c.pathways, dfine, dcoarse);
  }

 private:
  /// [average over segments || mean over queries of attention output]
  static Tensor<S> pool(const graph::EgoGcn<S>& gcn, const nn::MultiHeadAttention<S>& attention,
                        const Tensor<S>& segments, const Tensor<S>& ego, const Tensor<S>& queries, PathCache& pc,
                        graph::GraphMemo* memo) {
    const auto out = gcn.forward(segments, ego, &pc.gcn, memo);
    pc.segments = out.segments.rows();
    const std::size_t c = out.segments.cols();
    Tensor<S> avg({1, c});
    for (std::size_t r = 0; r < out.segments.rows(); ++r)
      for (std::size_t q = 0; q < c; ++q) avg(0, q) += out.segments(r, q);
    avg *= S(1) / static_cast<S>(out.segments.rows());
    const Tensor<S> att = attention.forward(queries, out.segments, &pc.attention);
    Tensor<S> att_mean({1, att.cols()});
    for (std::size_t r = 0; r < att.rows(); ++r)
      for (std::size_t q = 0; q < att.cols(); ++q) att_mean(0, q) += att(r, q);
    att_mean *= S(1) / static_cast<S>(att.rows());
    return concat_cols(avg, att_mean);
  }

  static Tensor<S> unpool(graph::EgoGcn<S>& gcn, nn::MultiHeadAttention<S>& attention, const PathCache& pc,
                          const Tensor<S>& dpooled) {
    const std::size_t c = gcn.width, n = pc.segments, nq = pc.attention.q.rows();
    Tensor<S> dseg({n, c});
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t q = 0; q < c; ++q) dseg(r, q) = dpooled(0, q) / static_cast<S>(n);
    Tensor<S> datt({nq, attention.embed});
    for (std::size_t r = 0; r < nq; ++r)
      for (std::size_t q = 0; q < attention.embed; ++q) datt(r, q) = dpooled(0, c + q) / static_cast<S>(nq);
    dseg += attention.backward(pc.attention, datt).keys_values;
    const std::size_t m = pc.gcn.ego_raw.rows();
    return gcn.backward(pc.gcn, dseg, Tensor<S>({m, c})).segments;
  }
};

}  // namespace ivz::model
