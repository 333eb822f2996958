#pragma once

#include <string>
#include <vector>

#include "ivz/graph/edge_conv.hpp"
#include "ivz/model/config.hpp"

namespace ivz::model {

/// Summary module: scores every shot under every basis intent. Consumes only the video and the
/// basis, never the query, so it can be reused unchanged across query modalities.
template <class S>
struct SummaryModule {
  ModelConfig config;
  nn::Param<S> basis;  // [k, e]
  GsPathways<S> pathways;
  graph::EgoGcn<S> fine_gcn, coarse_gcn;
  graph::LocalGraph<S> fine_local, coarse_local;
  nn::Linear<S> fusion;      // concatenated fine/coarse shot features -> fused width
  nn::Linear<S> shot_rel;    // fused -> relevance space
  nn::Linear<S> intent_rel;  // intent embedding -> relevance space
  nn::Mlp<S> head;           // relevance -> hidden -> hidden -> 1

  struct IntentCache {
    typename graph::EgoGcn<S>::Cache fine_gcn, coarse_gcn;
    typename graph::LocalGraph<S>::Cache fine_local, coarse_local;
    Tensor<S> shot_concat, fused, shot_proj, intent_proj, product;
    typename nn::Mlp<S>::Cache head;
    Tensor<S> scores;  // sigmoid output [T,1]
  };
  struct Cache {
    typename GsPathways<S>::Cache pathways;
    SegmentFeatures<S> segments;
    Tensor<S> video;
    std::vector<IntentCache> intents;
  };

  SummaryModule() = default;
  explicit SummaryModule(const ModelConfig& c)
      : config(c),
        basis({c.intents, c.intent_dim}),
        pathways(c.pathways),
        fine_gcn(c.fine_width(), c.intent_dim, c.summary_gcn_layers, c.semantic_neighbours),
        coarse_gcn(c.coarse_width(), c.intent_dim, c.summary_gcn_layers, c.semantic_neighbours),
        fine_local(c.fine_width(), c.feature_dim, c.local_width, c.local_neighbours_fine),
        coarse_local(c.coarse_width(), c.feature_dim, c.local_width, c.local_neighbours_coarse),
        fusion(2 * c.local_width, c.fused_width),
        shot_rel(c.fused_width, c.relevance_width),
        intent_rel(c.intent_dim, c.relevance_width),
        head({c.relevance_width, c.summary_hidden, c.summary_hidden, 1}) {}

  void init(nn::Init& init) {
    init.normal(basis.value, 1.0);
    pathways.init(init);
    fine_gcn.init(init);
    coarse_gcn.init(init);
    fine_local.init(init);
    coarse_local.init(init);
    fusion.init(init);
    shot_rel.init(init);
    intent_rel.init(init);
    head.init(init);
  }

  void collect(nn::ParamList<S>& list, const std::string& prefix) {
    list.push_back({prefix + ".basis", &basis});
    pathways.collect(list, prefix + ".pathways");
    fine_gcn.collect(list, prefix + ".fine_gcn");
    coarse_gcn.collect(list, prefix + ".coarse_gcn");
    fine_local.collect(list, prefix + ".fine_local");
    coarse_local.collect(list, prefix + ".coarse_local");
    fusion.collect(list, prefix + ".fusion");
    shot_rel.collect(list, prefix + ".shot_rel");
    intent_rel.collect(list, prefix + ".intent_rel");
    head.collect(list, prefix + ".head");
  }

  /// Per-intent shot scores H [k, T], entries in (0,1).
  Tensor<S> forward(const Tensor<S>& video, Cache* cache = nullptr, graph::GraphMemo* memo = nullptr) const {
    Cache local;
    Cache& c = cache ? *cache : local;
    c.video = video;
    c.segments = pathways.forward(video, &c.pathways);
    const std::size_t k = config.intents, t = video.rows();
    Tensor<S> h({k, t});
    c.intents.assign(cache ? k : 0, IntentCache{});
    for (std::size_t i = 0; i < k; ++i) {
      IntentCache scratch;
      IntentCache& ic = cache ? c.intents[i] : scratch;
      const Tensor<S> ego = slice_rows(basis.value, i, 1);
      const auto fo = fine_gcn.forward(c.segments.fine, ego, &ic.fine_gcn, memo);
      const auto co = coarse_gcn.forward(c.segments.coarse, ego, &ic.coarse_gcn, memo);
      const Tensor<S> fs = fine_local.forward(fo.segments, video, c.segments.fine_spans, &ic.fine_local, memo);
      const Tensor<S> cs = coarse_local.forward(co.segments, video, c.segments.coarse_spans, &ic.coarse_local, memo);
      ic.shot_concat = concat_cols(fs, cs);
      ic.fused = fusion.forward(ic.shot_concat);
      ic.shot_proj = shot_rel.forward(ic.fused);
      ic.intent_proj = intent_rel.forward(ego);
      ic.product = ic.shot_proj;
      for (std::size_t r = 0; r < t; ++r)
        for (std::size_t q = 0; q < config.relevance_width; ++q) ic.product(r, q) *= ic.intent_proj(0, q);
      ic.scores = nn::sigmoid(head.forward(ic.product, &ic.head));
      for (std::size_t r = 0; r < t; ++r) h(i, r) = ic.scores[r];
    }
    return h;
  }

  /// Accumulates parameter gradients; returns d(video).
  Tensor<S> backward(const Cache& c, const Tensor<S>& dh) {
    const std::size_t k = config.intents, t = c.video.rows();
    Tensor<S> dvideo(c.video.shape());
    Tensor<S> dfine_seg(c.segments.fine.shape()), dcoarse_seg(c.segments.coarse.shape());
    for (std::size_t i = 0; i < k; ++i) {
      const IntentCache& ic = c.intents[i];
      Tensor<S> dscore({t, 1});
      for (std::size_t r = 0; r < t; ++r) dscore[r] = dh(i, r);
      Tensor<S> dprod = head.backward(ic.head, nn::sigmoid_backward(ic.scores, dscore));
      Tensor<S> dshot_proj = dprod;
      Tensor<S> dintent_proj({1, config.relevance_width});
      for (std::size_t r = 0; r < t; ++r)
        for (std::size_t q = 0; q < config.relevance_width; ++q) {
          dshot_proj(r, q) *= ic.intent_proj(0, q);
          dintent_proj(0, q) += dprod(r, q) * ic.shot_proj(r, q);
        }
      const Tensor<S> ego = slice_rows(basis.value, i, 1);
      Tensor<S> dego = intent_rel.backward(ego, dintent_proj);
      const Tensor<S> dfused = shot_rel.backward(ic.fused, dshot_proj);
      const Tensor<S> dconcat = fusion.backward(ic.shot_concat, dfused);
      const auto fl = fine_local.backward(ic.fine_local, slice_cols(dconcat, 0, config.local_width));
      const auto cl = coarse_local.backward(ic.coarse_local, slice_cols(dconcat, config.local_width, config.local_width));
      dvideo += fl.shots;
      dvideo += cl.shots;
      const auto fg = fine_gcn.backward(ic.fine_gcn, fl.segments, Tensor<S>({1, config.fine_width()}));
      const auto cg = coarse_gcn.backward(ic.coarse_gcn, cl.segments, Tensor<S>({1, config.coarse_width()}));
      dfine_seg += fg.segments;
      dcoarse_seg += cg.segments;
      dego += fg.ego_raw;
      dego += cg.ego_raw;
      for (std::size_t q = 0; q < config.intent_dim; ++q) basis.grad(i, q) += dego[q];
    }
    dvideo += pathways.backward(c.pathways, dfine_seg, dcoarse_seg);
    return dvideo;
  }
};

}  // namespace ivz::model
