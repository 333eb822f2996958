#pragma once

#include <algorithm>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ivz/graph/edge_conv.hpp"
#include "ivz/nn/attention.hpp"
#include "ivz/nn/grad_check.hpp"
#include "ivz/train/trainer.hpp"

namespace ivz::train {

struct GradCheckEntry {
  std::string name;
  double max_relative_error = 0;
  std::size_t coordinates = 0;
};

namespace detail {

inline Tensor<double> uniform_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor<double> t(shape);
  for (auto& v : t.values()) v = d(rng);
  return t;
}

/// Probe every coordinate of x and of each parameter against the gradients already accumulated.
inline GradCheckEntry check_all(const std::string& name, const std::function<double()>& loss, Tensor<double>* x,
                                const Tensor<double>* dx, const nn::ParamList<double>& params, double step) {
  GradCheckEntry e{name, 0, 0};
  auto add = [&](const nn::GradCheckResult& r) {
    e.max_relative_error = std::max(e.max_relative_error, r.max_relative_error);
    e.coordinates += r.checked;
  };
  if (x) add(nn::grad_check<double>(loss, x->values(), dx->values(), step));
  for (const auto& p : params) {
    const Tensor<double> g = p.param->grad;
    add(nn::grad_check<double>(loss, p.param->value.values(), g.values(), step));
  }
  return e;
}

}  // namespace detail

/// The layer-by-layer and whole-model central-difference suite (f64).
inline std::vector<GradCheckEntry> run_grad_suite(std::uint64_t seed = 7) {
  using detail::check_all;
  using detail::uniform_tensor;
  std::mt19937_64 rng(seed);
  std::vector<GradCheckEntry> out;
  constexpr double kSmooth = 1e-4;  // default f64 step
  constexpr double kKinked = 1e-6;  // ops with max/ReLU kinks

  {
    nn::Linear<double> lin(5, 4);
    nn::Init init(seed);
    lin.init(init);
    Tensor<double> x = uniform_tensor({3, 5}, rng);
    const auto r = nn::random_projection<double>({3, 4}, seed);
    nn::ParamList<double> ps;
    lin.collect(ps, "linear");
    nn::zero_grads(ps);
    const Tensor<double> dx = lin.backward(x, r);
    out.push_back(check_all("linear", [&] { return nn::projected(lin.forward(x), r); }, &x, &dx, ps, kSmooth));
  }
  {
    nn::Conv1d<double> conv(3, 4, 5, 2);
    nn::Init init(seed + 1);
    conv.init(init);
    Tensor<double> x = uniform_tensor({11, 3}, rng);
    const auto r = nn::random_projection<double>(conv.forward(x).shape(), seed + 1);
    nn::ParamList<double> ps;
    conv.collect(ps, "conv1d");
    nn::zero_grads(ps);
    const Tensor<double> dx = conv.backward(x, r);
    out.push_back(check_all("conv1d", [&] { return nn::projected(conv.forward(x), r); }, &x, &dx, ps, kSmooth));
  }
  {
    // Distinct, well-separated values keep every window's argmax stable under the probe.
    const nn::MaxPool1d pool(3, 2);
    std::vector<double> vals(13 * 2);
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = 0.1 * static_cast<double>(i);
    std::shuffle(vals.begin(), vals.end(), rng);
    Tensor<double> x({13, 2}, vals);
    std::vector<std::uint32_t> arg;
    const auto y = pool.forward(x, &arg);
    const auto r = nn::random_projection<double>(y.shape(), seed + 2);
    const Tensor<double> dx = pool.backward(arg, x.rows(), r);
    out.push_back(check_all("maxpool1d", [&] { return nn::projected(pool.forward(x), r); }, &x, &dx, {}, kKinked));
  }
  {
    const double delta = 0.05;
    Tensor<double> x = uniform_tensor({20}, rng);
    for (auto& v : x.values())
      if (std::abs(v - delta) < 0.05) v += 0.2;
    const auto r = nn::random_projection<double>({20}, seed + 3);
    const Tensor<double> dx = nn::shifted_relu_backward(x, delta, r);
    out.push_back(check_all("shifted_relu", [&] { return nn::projected(nn::shifted_relu(x, delta), r); }, &x, &dx,
                            {}, kKinked));
  }
  {
    nn::MultiHeadAttention<double> att(6, 4, 10, 5);
    nn::Init init(seed + 4);
    att.init(init);
    Tensor<double> q = uniform_tensor({2, 6}, rng);
    Tensor<double> kv = uniform_tensor({7, 4}, rng);
    const auto r = nn::random_projection<double>({2, 10}, seed + 4);
    nn::ParamList<double> ps;
    att.collect(ps, "attention");
    nn::zero_grads(ps);
    typename nn::MultiHeadAttention<double>::Cache cache;
    att.forward(q, kv, &cache);
    const auto g = att.backward(cache, r);
    auto loss = [&] { return nn::projected(att.forward(q, kv), r); };
    auto e = check_all("attention", loss, &kv, &g.keys_values, ps, kSmooth);
    const auto rq = nn::grad_check<double>(loss, q.values(), g.queries.values(), kSmooth);
    e.max_relative_error = std::max(e.max_relative_error, rq.max_relative_error);
    e.coordinates += rq.checked;
    out.push_back(e);
  }
  {
    Tensor<double> p = uniform_tensor({12}, rng, 0.05, 0.95);
    Tensor<double> y({12});
    for (std::size_t i = 0; i < 12; ++i) y[i] = (rng() % 2) ? 1.0 : 0.0;
    const Tensor<double> dp = nn::bce_backward(p, y);
    out.push_back(check_all("bce_loss", [&] { return nn::bce_loss(p, y); }, &p, &dp, {}, kSmooth));
  }
  {
    graph::EdgeConv<double> conv(4);
    nn::Init init(seed + 5);
    conv.init(init);
    Tensor<double> x = uniform_tensor({8, 4}, rng);
    graph::Graph g;
    g.vertices = 8;
    g.of(graph::EdgeType::Semantic) = graph::semantic_edges(x, 3);
    g.of(graph::EdgeType::Temporal) = graph::temporal_edges(8);
    for (std::uint32_t i = 1; i < 8; ++i) {
      g.of(graph::EdgeType::Intent).push_back({0, i});
      g.of(graph::EdgeType::Intent).push_back({i, 0});
    }
    const auto r = nn::random_projection<double>({8, 4}, seed + 5);
    nn::ParamList<double> ps;
    conv.collect(ps, "edge_conv");
    nn::zero_grads(ps);
    typename graph::EdgeConv<double>::Cache cache;
    conv.forward(x, g, &cache);
    const Tensor<double> dx = conv.backward(cache, r);
    out.push_back(
        check_all("edge_conv (frozen graph)", [&] { return nn::projected(conv.forward(x, g), r); }, &x, &dx, ps, kKinked));
  }
  for (const auto kind : {model::QueryKind::Text, model::QueryKind::Visual}) {
    const auto cfg = model::ModelConfig::tiny(6);
    model::Model<double> m(cfg);
    m.init(seed + 6);
    const std::size_t t = 32;
    Video<double> v{"grad", uniform_tensor({t, cfg.feature_dim}, rng), {}};
    Sample<double> s;
    s.kind = kind;
    s.text = {"a", "b", uniform_tensor({2, cfg.word_dim}, rng)};
    s.visual = {{2, 9, 17, 30}};
    s.gt = {3, 4, 5, 20, 21};
    s.labels = labels_from_summary<double>(s.gt, t);
    nn::ParamList<double> ps = trainable_parameters(m, kind, false);
    nn::zero_grads(ps);
    graph::GraphMemo memo;
    sample_loss_and_grad(m, v.features, s, model::kDefaultDelta, true, &memo);
    memo.rewind();
    auto loss = [&] {
      memo.rewind();
      return sample_loss(m, v.features, s, model::kDefaultDelta, &memo);
    };
    // 50 coordinates sampled uniformly over the concatenated parameter vector.
    std::vector<std::size_t> offsets;
    std::size_t total = 0;
    for (const auto& p : ps) {
      offsets.push_back(total);
      total += p.param->value.size();
    }
    GradCheckEntry e{kind == model::QueryKind::Text ? "model T=32 (text)" : "model T=32 (visual)", 0, 0};
    for (std::size_t flat : nn::sample_indices(total, 50, seed + 7)) {
      const std::size_t k = static_cast<std::size_t>(std::upper_bound(offsets.begin(), offsets.end(), flat) - offsets.begin()) - 1;
      const std::vector<std::size_t> idx{flat - offsets[k]};
      const Tensor<double> g = ps[k].param->grad;
      const auto r = nn::grad_check<double>(loss, ps[k].param->value.values(), g.values(), kKinked, &idx);
      e.max_relative_error = std::max(e.max_relative_error, r.max_relative_error);
      e.coordinates += r.checked;
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace ivz::train
