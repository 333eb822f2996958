#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "ivz/model/pathways.hpp"

namespace ivz::model {

/// Every width and count the model is built from.
struct ModelConfig {
  std::size_t feature_dim = 2048;   // shot feature width d
  std::size_t intents = 20;         // basis intents k
  std::size_t intent_dim = 128;     // basis-intent embedding width e
  std::size_t word_dim = 300;       // per-concept word embedding width
  PathwayConfig pathways = PathwayConfig::standard(2048);
  std::size_t semantic_neighbours = 8;
  std::size_t summary_gcn_layers = 3;
  std::size_t intent_gcn_layers = 2;
  std::size_t local_width = 512;
  std::size_t local_neighbours_fine = 4;
  std::size_t local_neighbours_coarse = 10;
  std::size_t fused_width = 512;
  std::size_t relevance_width = 1024;
  std::size_t summary_hidden = 1024;
  std::size_t intent_hidden = 2048;
  std::size_t attention_width = 300;
  std::size_t attention_heads = 5;
  double intent_logit_init = 2.0;   // stddev of the intent head's output bias at init

  std::size_t fine_width() const { return pathways.fine.channels(); }
  std::size_t coarse_width() const { return pathways.coarse.channels(); }

  /// Full-size layout.
  static ModelConfig standard(std::size_t feature_dim) {
    ModelConfig c;
    c.feature_dim = feature_dim;
    c.pathways = PathwayConfig::standard(feature_dim);
    return c;
  }

  /// Narrow variant for desk-scale training runs: same topology, strides, neighbour counts, k and heads.
  static ModelConfig compact(std::size_t feature_dim) {
    ModelConfig c = standard(feature_dim);
    c.pathways = PathwayConfig::narrow(feature_dim, 32, 64);
    c.intent_dim = 32;
    c.local_width = 32;
    c.fused_width = 32;
    c.relevance_width = 64;
    c.summary_hidden = 64;
    c.intent_hidden = 128;
    c.attention_width = 30;
    return c;
  }

  /// Tiny variant used by gradient checks.
  static ModelConfig tiny(std::size_t feature_dim) {
    ModelConfig c = standard(feature_dim);
    c.pathways = PathwayConfig::narrow(feature_dim, 4, 6);
    c.intents = 3;
    c.intent_dim = 4;
    c.word_dim = 5;
    c.local_width = 4;
    c.fused_width = 4;
    c.relevance_width = 6;
    c.summary_hidden = 6;
    c.intent_hidden = 8;
    c.attention_width = 5;
    c.semantic_neighbours = 3;
    c.local_neighbours_coarse = 5;
    return c;
  }

  void validate() const {
    require(feature_dim > 0 && intents > 0 && intent_dim > 0 && word_dim > 0, ErrorCode::Config,
            "model widths must be positive");
    require(pathways.input_dim == feature_dim, ErrorCode::Config, "pathway input width differs from feature width");
    require(attention_heads > 0 && attention_width % attention_heads == 0, ErrorCode::Config,
            "attention width must be divisible by the head count");
    require(summary_gcn_layers >= 1 && intent_gcn_layers >= 1, ErrorCode::Config, "gcn stacks need layers");
  }
};

inline void to_json(nlohmann::json& j, const LayerSpec& l) { j = {l.kernel, l.stride, l.channels}; }
inline void from_json(const nlohmann::json& j, LayerSpec& l) {
  l = {j.at(0).get<std::size_t>(), j.at(1).get<std::size_t>(), j.at(2).get<std::size_t>()};
}
inline void to_json(nlohmann::json& j, const PathwaySpec& p) {
  j = {{"conv1", p.conv1}, {"pool1", p.pool1}, {"conv2", p.conv2}, {"pool2", p.pool2}, {"segment_span", p.segment_span}};
}
inline void from_json(const nlohmann::json& j, PathwaySpec& p) {
  p.conv1 = j.at("conv1").get<LayerSpec>();
  p.pool1 = j.at("pool1").get<LayerSpec>();
  p.conv2 = j.at("conv2").get<LayerSpec>();
  p.pool2 = j.at("pool2").get<LayerSpec>();
  p.segment_span = j.at("segment_span").get<std::size_t>();
}

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"feature_dim", c.feature_dim},
       {"intents", c.intents},
       {"intent_dim", c.intent_dim},
       {"word_dim", c.word_dim},
       {"fine", c.pathways.fine},
       {"coarse", c.pathways.coarse},
       {"semantic_neighbours", c.semantic_neighbours},
       {"summary_gcn_layers", c.summary_gcn_layers},
       {"intent_gcn_layers", c.intent_gcn_layers},
       {"local_width", c.local_width},
       {"local_neighbours_fine", c.local_neighbours_fine},
       {"local_neighbours_coarse", c.local_neighbours_coarse},
       {"fused_width", c.fused_width},
       {"relevance_width", c.relevance_width},
       {"summary_hidden", c.summary_hidden},
       {"intent_hidden", c.intent_hidden},
       {"attention_width", c.attention_width},
       {"attention_heads", c.attention_heads},
       {"intent_logit_init", c.intent_logit_init}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  c.feature_dim = j.at("feature_dim").get<std::size_t>();
  c.intents = j.at("intents").get<std::size_t>();
  c.intent_dim = j.at("intent_dim").get<std::size_t>();
  c.word_dim = j.at("word_dim").get<std::size_t>();
  c.pathways.input_dim = c.feature_dim;
  c.pathways.fine = j.at("fine").get<PathwaySpec>();
  c.pathways.coarse = j.at("coarse").get<PathwaySpec>();
  c.semantic_neighbours = j.at("semantic_neighbours").get<std::size_t>();
  c.summary_gcn_layers = j.at("summary_gcn_layers").get<std::size_t>();
  c.intent_gcn_layers = j.at("intent_gcn_layers").get<std::size_t>();
  c.local_width = j.at("local_width").get<std::size_t>();
  c.local_neighbours_fine = j.at("local_neighbours_fine").get<std::size_t>();
  c.local_neighbours_coarse = j.at("local_neighbours_coarse").get<std::size_t>();
  c.fused_width = j.at("fused_width").get<std::size_t>();
  c.relevance_width = j.at("relevance_width").get<std::size_t>();
  c.summary_hidden = j.at("summary_hidden").get<std::size_t>();
  c.intent_hidden = j.at("intent_hidden").get<std::size_t>();
  c.attention_width = j.at("attention_width").get<std::size_t>();
  c.attention_heads = j.at("attention_heads").get<std::size_t>();
  c.intent_logit_init = j.value("intent_logit_init", 2.0);
}

/// "standard" / "compact" / "tiny" presets, optionally overridden field by field.
inline ModelConfig model_config_from_json(const nlohmann::json& j, std::size_t feature_dim) {
  const std::string preset = j.value("preset", std::string("standard"));
  ModelConfig c;
  if (preset == "standard") c = ModelConfig::standard(feature_dim);
  else if (preset == "compact") c = ModelConfig::compact(feature_dim);
  else if (preset == "tiny") c = ModelConfig::tiny(feature_dim);
  else fail(ErrorCode::Config, "unknown model preset '" + preset + "'");
  nlohmann::json merged = c;
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "preset") merged[it.key()] = it.value();
  merged["feature_dim"] = feature_dim;
  return merged.get<ModelConfig>();
}

}  // namespace ivz::model
