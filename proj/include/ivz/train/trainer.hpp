#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ivz/eval/protocol.hpp"
#include "ivz/model/model.hpp"
#include "ivz/train/adam.hpp"
#include "ivz/train/schedule.hpp"

namespace ivz::train {

template <class S>
struct Video {
  std::string id;
  Tensor<S> features;  // [T, d]
  std::vector<eval::TagSet> tags;
};

/// One (video, query) pair with its ground-truth summary and the matching 0/1 shot labels.
template <class S>
struct Sample {
  std::size_t video = 0;
  model::QueryKind kind = model::QueryKind::Text;
  model::TextQuery<S> text;
  model::VisualQuery visual;
  std::vector<std::size_t> gt;
  Tensor<S> labels;  // [T]
};

template <class S>
Tensor<S> labels_from_summary(const std::vector<std::size_t>& gt, std::size_t shots) {
  Tensor<S> y({shots});
  for (std::size_t s : gt) {
    require(s < shots, ErrorCode::Input, "ground-truth shot " + std::to_string(s) + " out of range");
    y[s] = S(1);
  }
  return y;
}

template <class S>
Tensor<S> intent_distribution(const model::Model<S>& m, const Tensor<S>& video, const Sample<S>& s,
                              typename model::IntentModule<S>::Cache* cache = nullptr,
                              graph::GraphMemo* memo = nullptr) {
  return s.kind == model::QueryKind::Text ? m.intent_text(video, s.text, cache, memo)
                                          : m.intent_visual(video, s.visual, cache, memo);
}

/// Mixed per-shot scores for one sample (no caches, no gradients).
template <class S>
Tensor<S> predict_scores(const model::Model<S>& m, const Tensor<S>& video, const Sample<S>& s, double delta) {
  return model::mix_scores(intent_distribution(m, video, s), m.summary.forward(video), static_cast<S>(delta));
}

/// Forward + backward for one sample. Gradients accumulate into the model's parameters; with
/// `update_summary` false the summary module is run forward only.
template <class S>
double sample_loss_and_grad(model::Model<S>& m, const Tensor<S>& video, const Sample<S>& s, double delta,
                            bool update_summary = true, graph::GraphMemo* memo = nullptr) {
  typename model::IntentModule<S>::Cache icache;
  typename model::SummaryModule<S>::Cache scache;
  const Tensor<S> g = intent_distribution(m, video, s, &icache, memo);
  const Tensor<S> h = m.summary.forward(video, update_summary ? &scache : nullptr, memo);
  const Tensor<S> score = model::mix_scores(g, h, static_cast<S>(delta));
  const double loss = static_cast<double>(nn::bce_loss(score, s.labels));
  const Tensor<S> dscore = nn::bce_backward(score, s.labels);
  const auto mg = model::mix_scores_backward(g, h, static_cast<S>(delta), dscore);
  if (update_summary) m.summary.backward(scache, mg.h);
  auto& intent = s.kind == model::QueryKind::Text ? m.text_intent : m.visual_intent;
  intent.backward(icache, mg.g);
  return loss;
}

/// Loss only, same path as sample_loss_and_grad.
template <class S>
double sample_loss(const model::Model<S>& m, const Tensor<S>& video, const Sample<S>& s, double delta,
                   graph::GraphMemo* memo = nullptr) {
  const Tensor<S> g = intent_distribution(m, video, s, nullptr, memo);
  const Tensor<S> h = m.summary.forward(video, nullptr, memo);
  return static_cast<double>(nn::bce_loss(model::mix_scores(g, h, static_cast<S>(delta)), s.labels));
}

/// Query shots are masked out of visual-query evaluation.
template <class S>
std::vector<std::size_t> evaluation_mask(const Sample<S>& s) {
  return s.kind == model::QueryKind::Visual ? s.visual.shots : std::vector<std::size_t>{};
}

struct EvalSummary {
  double precision = 0, recall = 0, f1 = 0;
  std::size_t queries = 0;
};

/// Mean metrics over samples with default budget selection.
template <class S>
EvalSummary evaluate_samples(const model::Model<S>& m, const std::vector<Video<S>>& videos,
                             const std::vector<Sample<S>>& samples, double delta) {
  EvalSummary out;
  for (const auto& s : samples) {
    const auto& v = videos.at(s.video);
    const Tensor<S> score = predict_scores(m, v.features, s, delta);
    const auto pred = model::select_summary<S>(score.values(), model::Selection::default_for(v.features.rows()));
    const auto r = eval::evaluate_summary(pred, s.gt, v.tags, evaluation_mask(s));
    out.precision += r.precision;
    out.recall += r.recall;
    out.f1 += r.f1;
    ++out.queries;
  }
  if (out.queries) {
    const double n = static_cast<double>(out.queries);
    out.precision /= n;
    out.recall /= n;
    out.f1 /= n;
  }
  return out;
}

/// Mean F1 of uniformly random summaries of the default budget, `trials` per sample.
template <class S>
double random_baseline_f1(const std::vector<Video<S>>& videos, const std::vector<Sample<S>>& samples,
                          std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double total = 0;
  std::size_t count = 0;
  for (const auto& s : samples) {
    const auto& v = videos.at(s.video);
    const std::size_t t = v.features.rows();
    const std::size_t b = model::Selection::default_for(t).budget;
    std::vector<std::size_t> all(t);
    std::iota(all.begin(), all.end(), std::size_t{0});
    for (std::size_t k = 0; k < trials; ++k) {
      // Partial Fisher-Yates: the first b entries are a uniform b-subset.
      for (std::size_t i = 0; i < b; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, t - 1);
        std::swap(all[i], all[pick(rng)]);
      }
      std::vector<std::size_t> pred(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(b));
      std::sort(pred.begin(), pred.end());
      total += eval::evaluate_summary(pred, s.gt, v.tags, evaluation_mask(s)).f1;
      ++count;
    }
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0, loss = 0;
  EvalSummary eval;
};

struct TrainRecord {
  std::vector<EpochRecord> epochs;
};

inline void to_json(nlohmann::json& j, const EvalSummary& e) {
  j = {{"precision", e.precision}, {"recall", e.recall}, {"f1", e.f1}, {"queries", e.queries}};
}
inline void to_json(nlohmann::json& j, const EpochRecord& e) {
  j = {{"epoch", e.epoch}, {"lr", e.lr}, {"loss", e.loss}, {"eval", e.eval}};
}
inline void to_json(nlohmann::json& j, const TrainRecord& r) { j = {{"epochs", r.epochs}}; }

/// Parameters that a run over `kind` queries updates.
template <class S>
nn::ParamList<S> trainable_parameters(model::Model<S>& m, model::QueryKind kind, bool freeze_summary) {
  nn::ParamList<S> list = freeze_summary ? nn::ParamList<S>{} : m.summary_parameters();
  for (const auto& p : m.intent_parameters(kind)) list.push_back(p);
  return list;
}

/// Mini-batch Adam over all samples (which must share one query kind). Deterministic per cfg.seed.
template <class S>
TrainRecord train(model::Model<S>& m, const std::vector<Video<S>>& videos, const std::vector<Sample<S>>& samples,
                  const std::vector<Sample<S>>& held_out, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  cfg.validate();
  require(!samples.empty(), ErrorCode::Input, "training set is empty");
  const model::QueryKind kind = samples.front().kind;
  for (const auto& s : samples) {
    require(s.kind == kind, ErrorCode::Input, "training samples mix query kinds");
    require(videos.at(s.video).features.rows() >= model::kMinShots, ErrorCode::InputTooShort,
            "training video shorter than " + std::to_string(model::kMinShots) + " shots");
  }
  Adam<S> adam(trainable_parameters(m, kind, cfg.freeze_summary));
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  TrainRecord record;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = lr_at_epoch(e, cfg);
    double epoch_loss = 0;
    for (std::size_t b = 0, batch = 0; b < order.size(); b += cfg.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), b + cfg.batch_size);
      nn::zero_grads(adam.params());
      double batch_loss = 0;
      for (std::size_t i = b; i < end; ++i) {
        const auto& s = samples[order[i]];
        batch_loss += sample_loss_and_grad(m, videos[s.video].features, s, cfg.delta, !cfg.freeze_summary);
      }
      require(std::isfinite(batch_loss), ErrorCode::NonFinite,
              "loss is not finite at epoch " + std::to_string(e) + ", batch " + std::to_string(batch));
      scale_grads(adam.params(), 1.0 / static_cast<double>(end - b));
      if (cfg.grad_clip > 0) {
        const double norm = grad_norm(adam.params());
        if (norm > cfg.grad_clip) scale_grads(adam.params(), cfg.grad_clip / norm);
      }
      adam.step(lr, cfg.weight_decay);
      epoch_loss += batch_loss;
    }
    EpochRecord rec{e, lr, epoch_loss / static_cast<double>(samples.size()), {}};
    if (!held_out.empty()) rec.eval = evaluate_samples(m, videos, held_out, cfg.delta);
    record.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return record;
}

}  // namespace ivz::train
