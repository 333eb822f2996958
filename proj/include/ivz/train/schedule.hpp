#pragma once

#include <cmath>
#include <cstdint>

#include <nlohmann/json.hpp>

#include "ivz/core/error.hpp"

namespace ivz::train {

struct TrainConfig {
  double base_lr = 1e-4;
  double weight_decay = 6e-5;
  std::size_t warmup_epochs = 10;
  double decay_factor = 0.1;
  std::size_t decay_every = 20;
  std::size_t epochs = 120;
  std::size_t batch_size = 2;
  double delta = 0.05;
  double grad_clip = 0.0;  // global-norm clip; 0 disables
  std::uint64_t seed = 42;
  bool freeze_summary = false;  // transfer mode: only the intent module learns

  void validate() const {
    require(base_lr > 0 && weight_decay >= 0 && decay_factor > 0 && delta >= 0 && grad_clip >= 0, ErrorCode::Config,
            "training rates must be positive");
    require(warmup_epochs > 0 && decay_every > 0 && epochs > 0 && batch_size > 0, ErrorCode::Config,
            "epoch counts and batch size must be positive");
  }
};

/// Linear warm-up to base over `warmup_epochs`, then step decay.
inline double lr_at_epoch(std::size_t e, const TrainConfig& c) {
  if (e < c.warmup_epochs) return c.base_lr * static_cast<double>(e + 1) / static_cast<double>(c.warmup_epochs);
  return c.base_lr * std::pow(c.decay_factor, static_cast<double>((e - c.warmup_epochs) / c.decay_every));
}

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"base_lr", c.base_lr},   {"weight_decay", c.weight_decay}, {"warmup_epochs", c.warmup_epochs},
       {"decay_factor", c.decay_factor}, {"decay_every", c.decay_every}, {"epochs", c.epochs},
       {"batch_size", c.batch_size}, {"delta", c.delta}, {"grad_clip", c.grad_clip},
       {"seed", c.seed},         {"freeze_summary", c.freeze_summary}};
}

/// Missing fields keep their defaults.
inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  const TrainConfig d;
  c.base_lr = j.value("base_lr", d.base_lr);
  c.weight_decay = j.value("weight_decay", d.weight_decay);
  c.warmup_epochs = j.value("warmup_epochs", d.warmup_epochs);
  c.decay_factor = j.value("decay_factor", d.decay_factor);
  c.decay_every = j.value("decay_every", d.decay_every);
  c.epochs = j.value("epochs", d.epochs);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.delta = j.value("delta", d.delta);
  c.grad_clip = j.value("grad_clip", d.grad_clip);
  c.seed = j.value("seed", d.seed);
  c.freeze_summary = j.value("freeze_summary", d.freeze_summary);
}

}  // namespace ivz::train
