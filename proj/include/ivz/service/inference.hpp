#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ivz/io/dataset.hpp"
#include "ivz/model/model.hpp"

namespace ivz::service {

/// Either a concept pair or a set of query shots.
struct Query {
  model::QueryKind kind = model::QueryKind::Text;
  std::string c1, c2;
  std::vector<std::size_t> shots;

  std::string key() const {
    if (kind == model::QueryKind::Text) return "text|" + c1 + "|" + c2;
    std::string k = "visual";
    for (std::size_t s : shots) k += "|" + std::to_string(s);
    return k;
  }
};

/// Intent distribution over the basis intents for one query.
inline Tensor<float> intent_probs(const model::Model<float>& m, const Tensor<float>& video, const Query& q,
                                  const io::EmbeddingTable* vocab) {
  if (q.kind == model::QueryKind::Visual) return m.intent_visual(video, model::VisualQuery{q.shots});
  require(vocab != nullptr, ErrorCode::Vocabulary, "no embedding table installed; vocabulary has 0 concepts");
  return m.intent_text(video, vocab->query<float>(q.c1, q.c2));
}

/// The inference response body. Mixing and selection are left to the caller.
inline std::string inference_body(const Tensor<float>& probs, const Tensor<float>& scores, double delta,
                                  const std::string& video_id, const std::string& checkpoint_id) {
  nlohmann::json p = nlohmann::json::array();
  for (float v : probs.values()) p.push_back(v);
  nlohmann::json h = nlohmann::json::array();
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (float v : scores.row(i)) row.push_back(v);
    h.push_back(std::move(row));
  }
  const nlohmann::json j = {{"video", video_id},   {"checkpoint", checkpoint_id}, {"delta", delta},
                            {"intent_probs", p}, {"intent_shot_scores", h}};
  return j.dump();
}

inline std::string run_inference(const model::Model<float>& m, const io::VideoRecord& v, const Query& q,
                                 const io::EmbeddingTable* vocab, double delta, const std::string& checkpoint_id) {
  return inference_body(intent_probs(m, v.features, q, vocab), m.summary.forward(v.features), delta, v.id,
                        checkpoint_id);
}

/// Ground truth for `video`: the annotation for (c1, c2) when given, otherwise the first one.
inline const io::Annotation& ground_truth(const io::VideoRecord& v, const std::string& c1, const std::string& c2) {
  require(!v.annotations.empty(), ErrorCode::NotFound, "video " + v.id + " has no ground-truth annotations");
  if (c1.empty() && c2.empty()) return v.annotations.front();
  for (const auto& a : v.annotations)
    if (a.c1 == c1 && a.c2 == c2) return a;
  fail(ErrorCode::NotFound, "video " + v.id + " has no annotation for (" + c1 + ", " + c2 + ")");
}

/// Evaluates a summary against a video's ground truth; body is the evaluation JSON.
inline std::string evaluate_body(const io::VideoRecord& v, const std::vector<std::size_t>& summary,
                                 const std::vector<std::size_t>& mask, const std::string& c1 = "",
                                 const std::string& c2 = "") {
  const auto& gt = ground_truth(v, c1, c2);
  return eval::eval_result_json(eval::evaluate_summary(summary, gt.summary, v.tags, mask));
}

}  // namespace ivz::service
