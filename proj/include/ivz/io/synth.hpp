#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ivz/io/dataset.hpp"

namespace ivz::io {

struct SynthConfig {
  std::uint64_t seed = 42;
  std::size_t videos = 4;
  std::size_t shots = 256;
  std::size_t feature_dim = 64;
  std::size_t vocab = 16;
  std::size_t rules = 4;
  double noise = 0.5;  // feature noise norm relative to the unit prototype mix
};

inline void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = {{"seed", c.seed},         {"videos", c.videos}, {"shots", c.shots}, {"feature_dim", c.feature_dim},
       {"vocab_size", c.vocab}, {"rules", c.rules},   {"noise", c.noise}};
}

inline const std::vector<std::string>& base_concepts() {
  static const std::vector<std::string> words = {
      "beach", "dog",    "car",   "tree",  "food",    "sky",    "street", "water", "book",  "phone", "child", "window",
      "shop",  "bridge", "snow",  "horse", "kitchen", "flower", "train",  "hat",   "guitar", "lamp", "boat",  "chair"};
  return words;
}

/// Readable names; past the word list a numeric suffix keeps them unique.
inline std::vector<std::string> concept_names(std::size_t n) {
  const auto& words = base_concepts();
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(i < words.size() ? words[i] : words[i % words.size()] + std::to_string(i / words.size()));
  return out;
}

namespace detail {

using Rule = std::pair<std::size_t, std::size_t>;

inline Tensor<float> unit_rows(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor<float> t({rows, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> v(cols);
    double norm = 0;
    for (auto& x : v) {
      x = n(rng);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (std::size_t c = 0; c < cols; ++c) t(r, c) = static_cast<float>(v[c] / norm);
  }
  return t;
}

inline bool completes_rule(const std::set<std::size_t>& tags, const std::vector<Rule>& rules, std::size_t skip) {
  for (std::size_t r = 0; r < rules.size(); ++r)
    if (r != skip && tags.count(rules[r].first) && tags.count(rules[r].second)) return true;
  return false;
}

inline std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Per-rule positive count range: inside [1%, 10%] of T, and at least 5 shots when T allows it so
// visual queries can be generated from the summary.
inline std::pair<std::size_t, std::size_t> positive_range(std::size_t t) {
  const std::size_t cap = std::max<std::size_t>(1, t / 10);
  const std::size_t lo = std::max<std::size_t>((t + 99) / 100, std::min<std::size_t>(5, cap));
  const std::size_t hi = std::max(lo, std::min(cap, std::max<std::size_t>(5, t / 16)));
  return {lo, hi};
}

}  // namespace detail

/// Builds the dataset in memory. Each rule (c1, c2) is planted as one or two scenes whose shots carry
/// both concepts; no other shot ever carries both, so the ground truth is exactly the planted shots.
inline Dataset synth_dataset(const SynthConfig& cfg) {
  using detail::Rule;
  require(cfg.vocab >= 2, ErrorCode::Config, "vocab_size must be at least 2, got " + std::to_string(cfg.vocab));
  require(cfg.shots >= model::kMinShots, ErrorCode::Config,
          "shots must be at least " + std::to_string(model::kMinShots) + ", got " + std::to_string(cfg.shots));
  require(cfg.videos >= 1 && cfg.feature_dim >= 1, ErrorCode::Config, "videos and feature_dim must be positive");
  require(cfg.rules >= 1 && cfg.rules <= cfg.vocab * (cfg.vocab - 1) / 2, ErrorCode::Config,
          "rules must be between 1 and " + std::to_string(cfg.vocab * (cfg.vocab - 1) / 2));
  const auto [pos_lo, pos_hi] = detail::positive_range(cfg.shots);
  require(cfg.rules * pos_hi <= cfg.shots / 2, ErrorCode::Config,
          std::to_string(cfg.rules) + " rules do not fit in " + std::to_string(cfg.shots) + " shots");
  require(cfg.noise >= 0 && std::isfinite(cfg.noise), ErrorCode::Config, "noise must be finite and nonnegative");

  std::mt19937_64 rng(cfg.seed);
  Dataset d;
  d.embeddings.concepts = concept_names(cfg.vocab);
  d.embeddings.dim = kWordDim;
  d.embeddings.vectors = detail::unit_rows(cfg.vocab, kWordDim, rng);
  const Tensor<float> protos = detail::unit_rows(cfg.vocab, cfg.feature_dim, rng);

  std::vector<Rule> pairs;
  for (std::size_t a = 0; a < cfg.vocab; ++a)
    for (std::size_t b = a + 1; b < cfg.vocab; ++b) pairs.push_back({a, b});
  std::shuffle(pairs.begin(), pairs.end(), rng);
  const std::vector<Rule> rules(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(cfg.rules));

  nlohmann::json audit = nlohmann::json::array();
  std::normal_distribution<double> noise(0.0, cfg.noise / std::sqrt(static_cast<double>(cfg.feature_dim)));
  std::bernoulli_distribution extra(0.3);
  const int width = static_cast<int>(std::to_string(cfg.videos - 1).size());
  for (std::size_t vi = 0; vi < cfg.videos; ++vi) {
    VideoRecord v;
    std::string num = std::to_string(vi);
    v.id = "video_" + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(num.size()))), '0') + num;
    v.shots = cfg.shots;
    v.dim = cfg.feature_dim;
    v.thumbnail_seed = rng();

    // Planted scenes: (rule, length), placed at random non-overlapping, non-adjacent offsets.
    std::vector<std::pair<std::size_t, std::size_t>> planted;
    for (std::size_t r = 0; r < rules.size(); ++r) {
      const std::size_t total = detail::pick(rng, pos_lo, pos_hi);
      if (total >= 10 && extra(rng)) {
        const std::size_t first = detail::pick(rng, 5, total - 5);
        planted.push_back({r, first});
        planted.push_back({r, total - first});
      } else {
        planted.push_back({r, total});
      }
    }
    std::shuffle(planted.begin(), planted.end(), rng);
    std::size_t planted_len = 0;
    for (const auto& p : planted) planted_len += p.second;
    // Distribute the filler shots into planted.size() + 1 gaps.
    const std::size_t free = cfg.shots - planted_len;
    std::vector<std::size_t> cuts{0, free};
    for (std::size_t i = 0; i < planted.size(); ++i) cuts.push_back(detail::pick(rng, 0, free));
    std::sort(cuts.begin(), cuts.end());

    std::vector<std::set<std::size_t>> shot_tags(cfg.shots);
    std::vector<int> shot_rule(cfg.shots, -1);
    std::size_t pos = 0;
    auto fill = [&](std::size_t len) {
      // Filler scenes of 3..8 shots share one or two concepts that never complete a rule.
      std::size_t done = 0;
      while (done < len) {
        const std::size_t n = std::min(len - done, detail::pick(rng, 3, 8));
        std::set<std::size_t> scene;
        do {
          scene = {detail::pick(rng, 0, cfg.vocab - 1)};
          if (extra(rng)) scene.insert(detail::pick(rng, 0, cfg.vocab - 1));
        } while (detail::completes_rule(scene, rules, rules.size()));
        for (std::size_t i = 0; i < n; ++i) {
          auto tags = scene;
          if (extra(rng)) {
            tags.insert(detail::pick(rng, 0, cfg.vocab - 1));
            if (detail::completes_rule(tags, rules, rules.size())) tags = scene;
          }
          shot_tags[pos++] = tags;
        }
        done += n;
      }
    };
    for (std::size_t g = 0; g <= planted.size(); ++g) {
      fill(cuts[g + 1] - cuts[g]);
      if (g == planted.size()) break;
      const auto [r, len] = planted[g];
      for (std::size_t i = 0; i < len; ++i) {
        std::set<std::size_t> tags{rules[r].first, rules[r].second};
        if (extra(rng)) {
          tags.insert(detail::pick(rng, 0, cfg.vocab - 1));
          if (detail::completes_rule(tags, rules, r)) tags = {rules[r].first, rules[r].second};
        }
        shot_rule[pos] = static_cast<int>(r);
        shot_tags[pos++] = tags;
      }
    }

    v.features = Tensor<float>({cfg.shots, cfg.feature_dim});
    for (std::size_t s = 0; s < cfg.shots; ++s) {
      std::vector<double> mix(cfg.feature_dim, 0.0);
      for (std::size_t c : shot_tags[s])
        for (std::size_t q = 0; q < cfg.feature_dim; ++q) mix[q] += protos(c, q);
      double norm = 0;
      for (double x : mix) norm += x * x;
      norm = std::sqrt(norm);
      for (std::size_t q = 0; q < cfg.feature_dim; ++q)
        v.features(s, q) = static_cast<float>(mix[q] / norm + noise(rng));
      std::vector<std::string> names;
      for (std::size_t c : shot_tags[s]) names.push_back(d.embeddings.concepts[c]);
      v.tags.push_back(eval::make_tag_set(names));
    }
    for (std::size_t r = 0; r < rules.size(); ++r) {
      Annotation a{d.embeddings.concepts[rules[r].first], d.embeddings.concepts[rules[r].second], {}};
      for (std::size_t s = 0; s < cfg.shots; ++s)
        if (shot_tags[s].count(rules[r].first) && shot_tags[s].count(rules[r].second)) a.summary.push_back(s);
      audit.push_back({{"video", v.id},
                       {"c1", a.c1},
                       {"c2", a.c2},
                       {"positives", a.summary.size()},
                       {"rate", static_cast<double>(a.summary.size()) / static_cast<double>(cfg.shots)}});
      v.annotations.push_back(std::move(a));
    }
    d.videos.push_back(std::move(v));
  }
  for (std::size_t i = 0; i < d.videos.size(); ++i)
    (d.videos.size() >= 2 && i + 1 == d.videos.size() ? d.test_ids : d.train_ids).push_back(d.videos[i].id);

  nlohmann::json rule_names = nlohmann::json::array();
  for (const auto& r : rules) rule_names.push_back({d.embeddings.concepts[r.first], d.embeddings.concepts[r.second]});
  d.info = {{"version", 1}, {"generator", cfg}, {"seed", cfg.seed}, {"feature_dim", cfg.feature_dim},
            {"vocab_size", cfg.vocab}, {"shots", cfg.shots}, {"rules", rule_names}, {"audit", audit}};
  return d;
}

/// Positive rate of every annotation; each must lie in [1%, 10%].
inline void audit_positive_rates(const Dataset& d) {
  for (const auto& v : d.videos)
    for (const auto& a : v.annotations) {
      const double rate = static_cast<double>(a.summary.size()) / static_cast<double>(v.shots);
      require(rate >= 0.01 && rate <= 0.10, ErrorCode::Config,
              "query (" + a.c1 + ", " + a.c2 + ") on " + v.id + " has positive rate " + std::to_string(rate));
    }
}

inline Dataset write_synth_dataset(const fs::path& dir, const SynthConfig& cfg) {
  Dataset d = synth_dataset(cfg);
  audit_positive_rates(d);
  save_dataset(dir, d);
  return d;
}

}  // namespace ivz::io
