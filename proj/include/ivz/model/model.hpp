#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "ivz/model/intent.hpp"
#include "ivz/model/mixing.hpp"
#include "ivz/model/summary.hpp"

namespace ivz::model {

inline constexpr std::size_t kDefaultQueryShots = 5;

/// Both concept embeddings, rows in query order [2, word_dim].
template <class S>
struct TextQuery {
  std::string first, second;
  Tensor<S> embeddings;
};

struct VisualQuery {
  std::vector<std::size_t> shots;
};

inline void validate_visual_query(const VisualQuery& q, std::size_t shots) {
  require(!q.shots.empty(), ErrorCode::Input, "visual query has no shots");
  std::set<std::size_t> seen;
  for (std::size_t s : q.shots) {
    require(s < shots, ErrorCode::Input,
            "query shot " + std::to_string(s) + " out of range for " + std::to_string(shots) + " shots");
    require(seen.insert(s).second, ErrorCode::Input, "query shot " + std::to_string(s) + " repeated");
  }
}

/// Intent modules for both query kinds plus the shared summary module.
template <class S>
struct Model {
  ModelConfig config;
  SummaryModule<S> summary;
  IntentModule<S> text_intent;
  IntentModule<S> visual_intent;

  Model() = default;
  explicit Model(const ModelConfig& c)
      : config(c), summary(c), text_intent(c, QueryKind::Text), visual_intent(c, QueryKind::Visual) {
    c.validate();
  }

  void init(std::uint64_t seed) {
    nn::Init init(seed);
    summary.init(init);
    text_intent.init(init);
    visual_intent.init(init);
  }

  nn::ParamList<S> parameters() {
    nn::ParamList<S> list;
    summary.collect(list, "summary");
    text_intent.collect(list, "intent_text");
    visual_intent.collect(list, "intent_visual");
    return list;
  }

  nn::ParamList<S> summary_parameters() {
    nn::ParamList<S> list;
    summary.collect(list, "summary");
    return list;
  }

  nn::ParamList<S> intent_parameters(QueryKind kind) {
    nn::ParamList<S> list;
    if (kind == QueryKind::Text) text_intent.collect(list, "intent_text");
    else visual_intent.collect(list, "intent_visual");
    return list;
  }

  static Tensor<S> text_ego(const TextQuery<S>& q) { return q.embeddings.reshaped({1, q.embeddings.size()}); }

  Tensor<S> intent_text(const Tensor<S>& video, const TextQuery<S>& q,
                        typename IntentModule<S>::Cache* cache = nullptr, graph::GraphMemo* memo = nullptr) const {
    require(q.embeddings.rows() == 2 && q.embeddings.cols() == config.word_dim, ErrorCode::Dimension,
            "text query embeddings " + shape_string(q.embeddings.shape()));
    return text_intent.forward(video, text_ego(q), q.embeddings, cache, memo);
  }

  Tensor<S> intent_visual(const Tensor<S>& video, const VisualQuery& q,
                          typename IntentModule<S>::Cache* cache = nullptr, graph::GraphMemo* memo = nullptr) const {
    validate_visual_query(q, video.rows());
    const Tensor<S> shots = gather_rows(video, q.shots);
    return visual_intent.forward(video, shots, shots, cache, memo);
  }
};

}  // namespace ivz::model
