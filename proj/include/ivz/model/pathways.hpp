#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ivz/nn/layers.hpp"

namespace ivz::model {

struct LayerSpec {
  std::size_t kernel;
  std::size_t stride;
  std::size_t channels;
};

/// Conv1 -> MaxPool1 -> Conv2 -> MaxPool2. Each conv is followed by ReLU.
struct PathwaySpec {
  LayerSpec conv1, pool1, conv2, pool2;
  std::size_t segment_span;  // shots covered by one output segment

  std::size_t channels() const { return conv2.channels; }
};

struct PathwayConfig {
  std::size_t input_dim = 0;
  PathwaySpec fine;
  PathwaySpec coarse;

  /// Kernel/stride/channel table of the two granularity pathways.
  static PathwayConfig standard(std::size_t input_dim) {
    PathwayConfig cfg;
    cfg.input_dim = input_dim;
    cfg.coarse = {{5, 8, 1024}, {2, 1, 1024}, {5, 1, 1024}, {3, 2, 1024}, 16};
    cfg.fine = {{5, 1, 256}, {2, 2, 256}, {5, 1, 256}, {2, 2, 256}, 4};
    return cfg;
  }

  /// Same strides and kernels with narrower channels.
  static PathwayConfig narrow(std::size_t input_dim, std::size_t fine_channels, std::size_t coarse_channels) {
    PathwayConfig cfg = standard(input_dim);
    cfg.fine.conv1.channels = cfg.fine.pool1.channels = cfg.fine.conv2.channels = cfg.fine.pool2.channels = fine_channels;
    cfg.coarse.conv1.channels = cfg.coarse.pool1.channels = cfg.coarse.conv2.channels = cfg.coarse.pool2.channels =
        coarse_channels;
    return cfg;
  }
};

inline constexpr std::size_t kMinShots = 16;

/// [begin, end) shot range covered by one segment.
using Span = std::pair<std::size_t, std::size_t>;

inline std::vector<Span> segment_spans(std::size_t shots, std::size_t span) {
  std::vector<Span> out;
  for (std::size_t b = 0; b < shots; b += span) out.emplace_back(b, std::min(b + span, shots));
  return out;
}

template <class S>
struct SegmentFeatures {
  Tensor<S> fine;    // [ceil(T/4), fine channels]
  Tensor<S> coarse;  // [ceil(T/16), coarse channels]
  std::vector<Span> fine_spans;
  std::vector<Span> coarse_spans;
};

template <class S>
struct Pathway {
  PathwaySpec spec;
  nn::Conv1d<S> conv1, conv2;
  nn::MaxPool1d pool1, pool2;

  struct Cache {
    Tensor<S> input, pre1, act1, pooled1, pre2, act2;
    std::vector<std::uint32_t> arg1, arg2;
  };

  Pathway() = default;
  Pathway(std::size_t input_dim, const PathwaySpec& s)
      : spec(s),
        conv1(input_dim, s.conv1.channels, s.conv1.kernel, s.conv1.stride),
        conv2(s.conv1.channels, s.conv2.channels, s.conv2.kernel, s.conv2.stride),
        pool1(s.pool1.kernel, s.pool1.stride),
        pool2(s.pool2.kernel, s.pool2.stride) {}

  void init(nn::Init& init) {
    conv1.init(init);
    conv2.init(init);
  }

  void collect(nn::ParamList<S>& list, const std::string& prefix) {
    conv1.collect(list, prefix + ".conv1");
    conv2.collect(list, prefix + ".conv2");
  }

  Tensor<S> forward(const Tensor<S>& x, Cache* cache = nullptr) const {
    Cache local;
    Cache& c = cache ? *cache : local;
    c.input = x;
    c.pre1 = conv1.forward(x);
    c.act1 = nn::relu(c.pre1);
    c.pooled1 = pool1.forward(c.act1, &c.arg1);
    c.pre2 = conv2.forward(c.pooled1);
    c.act2 = nn::relu(c.pre2);
    return pool2.forward(c.act2, &c.arg2);
  }

  Tensor<S> backward(const Cache& c, const Tensor<S>& dy) {
    Tensor<S> g = pool2.backward(c.arg2, c.act2.rows(), dy);
    g = nn::relu_backward(c.pre2, g);
    g = conv2.backward(c.pooled1, g);
    g = pool1.backward(c.arg1, c.act1.rows(), g);
    g = nn::relu_backward(c.pre1, g);
    return conv1.backward(c.input, g);
  }
};

/// Fine and coarse pathways over a shot-level feature sequence [T, d].
template <class S>
struct GsPathways {
  PathwayConfig config;
  Pathway<S> fine, coarse;

  struct Cache {
    typename Pathway<S>::Cache fine, coarse;
  };

  GsPathways() = default;
  explicit GsPathways(const PathwayConfig& cfg)
      : config(cfg), fine(cfg.input_dim, cfg.fine), coarse(cfg.input_dim, cfg.coarse) {
    require(cfg.input_dim > 0, ErrorCode::Config, "pathway input width must be positive");
  }

  void init(nn::Init& init) {
    fine.init(init);
    coarse.init(init);
  }

  void collect(nn::ParamList<S>& list, const std::string& prefix) {
    fine.collect(list, prefix + ".fine");
    coarse.collect(list, prefix + ".coarse");
  }

  SegmentFeatures<S> forward(const Tensor<S>& shots, Cache* cache = nullptr) const {
    require(shots.rank() == 2 && shots.cols() == config.input_dim, ErrorCode::Dimension,
            "pathways: input " + shape_string(shots.shape()) + " expected [T," + std::to_string(config.input_dim) + "]");
    require(shots.rows() >= kMinShots, ErrorCode::InputTooShort,
            "video has " + std::to_string(shots.rows()) + " shots; at least " + std::to_string(kMinShots) +
                " are required");
    SegmentFeatures<S> out;
    out.fine = fine.forward(shots, cache ? &cache->fine : nullptr);
    out.coarse = coarse.forward(shots, cache ? &cache->coarse : nullptr);
    out.fine_spans = segment_spans(shots.rows(), config.fine.segment_span);
    out.coarse_spans = segment_spans(shots.rows(), config.coarse.segment_span);
    require(out.fine.rows() == out.fine_spans.size() && out.coarse.rows() == out.coarse_spans.size(),
            ErrorCode::Config, "pathway strides do not produce one row per segment span");
    return out;
  }

  /// Returns d(shots).
  Tensor<S> backward(const Cache& c, const Tensor<S>& dfine, const Tensor<S>& dcoarse) {
    Tensor<S> dx = fine.backward(c.fine, dfine);
    dx += coarse.backward(c.coarse, dcoarse);
    return dx;
  }
};

}  // namespace ivz::model
