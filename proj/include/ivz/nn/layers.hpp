#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ivz/core/tensor.hpp"
#include "ivz/nn/param.hpp"

namespace ivz::nn {

// ---------------------------------------------------------------------------
// Elementwise activations.

template <class S>
Tensor<S> shifted_relu(const Tensor<S>& x, S delta) {
  require(delta >= S(0), ErrorCode::Config, "shifted_relu threshold must be >= 0");
  Tensor<S> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::max(x[i] - delta, S(0));
  return y;
}

template <class S>
Tensor<S> shifted_relu_backward(const Tensor<S>& x, S delta, const Tensor<S>& dy) {
  Tensor<S> dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > delta ? dy[i] : S(0);
  return dx;
}

template <class S>
Tensor<S> relu(const Tensor<S>& x) {
  return shifted_relu(x, S(0));
}

template <class S>
Tensor<S> relu_backward(const Tensor<S>& x, const Tensor<S>& dy) {
  return shifted_relu_backward(x, S(0), dy);
}

template <class S>
S sigmoid(S v) {
  // Split on sign so exp never overflows.
  if (v >= S(0)) return S(1) / (S(1) + std::exp(-v));
  const S e = std::exp(v);
  return e / (S(1) + e);
}

template <class S>
Tensor<S> sigmoid(const Tensor<S>& x) {
  Tensor<S> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = sigmoid(x[i]);
  return y;
}

/// Takes the forward output y.
template <class S>
Tensor<S> sigmoid_backward(const Tensor<S>& y, const Tensor<S>& dy) {
  Tensor<S> dx(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] = dy[i] * y[i] * (S(1) - y[i]);
  return dx;
}

/// Row-wise softmax over the last dimension, max-subtracted.
template <class S>
Tensor<S> softmax(const Tensor<S>& x) {
  Tensor<S> y(x.shape());
  const std::size_t n = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    auto out = y.row(r);
    const S mx = *std::max_element(in.begin(), in.end());
    S sum = 0;
    for (std::size_t j = 0; j < n; ++j) sum += out[j] = std::exp(in[j] - mx);
    for (std::size_t j = 0; j < n; ++j) out[j] /= sum;
  }
  return y;
}

template <class S>
Tensor<S> softmax_backward(const Tensor<S>& y, const Tensor<S>& dy) {
  Tensor<S> dx(y.shape());
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto yr = y.row(r);
    auto dyr = dy.row(r);
    S dot = 0;
    for (std::size_t j = 0; j < yr.size(); ++j) dot += yr[j] * dyr[j];
    auto dxr = dx.row(r);
    for (std::size_t j = 0; j < yr.size(); ++j) dxr[j] = yr[j] * (dyr[j] - dot);
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Binary cross-entropy, mean over elements.

inline constexpr double kBceEps = 1e-7;

template <class S>
S clamp_probability(S p) {
  return std::clamp(p, static_cast<S>(kBceEps), static_cast<S>(1.0 - kBceEps));
}

template <class S>
S bce_loss(const Tensor<S>& p, const Tensor<S>& y) {
  require(p.size() == y.size(), ErrorCode::Dimension,
          "bce_loss: " + shape_string(p.shape()) + " vs " + shape_string(y.shape()));
  require(!p.empty(), ErrorCode::Dimension, "bce_loss on empty input");
  double sum = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = clamp_probability(static_cast<double>(p[i]));
    const double t = y[i];
    sum -= t * std::log(q) + (1.0 - t) * std::log(1.0 - q);
  }
  return static_cast<S>(sum / static_cast<double>(p.size()));
}

/// dL/dp evaluated at the clamped probability; the clamp itself passes gradients straight through.
template <class S>
Tensor<S> bce_backward(const Tensor<S>& p, const Tensor<S>& y) {
  require(p.size() == y.size(), ErrorCode::Dimension, "bce_backward length mismatch");
  Tensor<S> dp(p.shape());
  const S n = static_cast<S>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const S q = clamp_probability(p[i]);
    dp[i] = (-y[i] / q + (S(1) - y[i]) / (S(1) - q)) / n;
  }
  return dp;
}

// ---------------------------------------------------------------------------
// Linear: y = x W + b over the last dimension.

template <class S>
struct Linear {
  std::size_t in = 0;
  std::size_t out = 0;
  Param<S> weight;  // [in, out]
  Param<S> bias;    // [out]

  Linear() = default;
  Linear(std::size_t in_features, std::size_t out_features)
      : in(in_features), out(out_features), weight({in_features, out_features}), bias({out_features}) {}

  void init(Init& init) {
    init.fan_in(weight.value, in);
    init.fan_in(bias.value, in);
  }

  void collect(ParamList<S>& list, const std::string& prefix) {
    list.push_back({prefix + ".weight", &weight});
    list.push_back({prefix + ".bias", &bias});
  }

  Tensor<S> forward(const Tensor<S>& x) const {
    require(x.cols() == in, ErrorCode::Dimension,
            "linear: input " + shape_string(x.shape()) + " vs weight " + shape_string(weight.value.shape()));
    Tensor<S> y = matmul(x.reshaped({x.rows(), in}), weight.value);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      auto row = y.row(r);
      for (std::size_t j = 0; j < out; ++j) row[j] += bias.value[j];
    }
    Shape shape = x.shape();
    if (shape.empty()) shape = {out};
    shape.back() = out;
    return y.reshaped(shape);
  }

  /// Accumulates dW and db, returns dx.
  Tensor<S> backward(const Tensor<S>& x, const Tensor<S>& dy) {
    const Tensor<S> x2 = x.reshaped({x.rows(), in});
    const Tensor<S> dy2 = dy.reshaped({dy.rows(), out});
    matmul_at_b_acc(x2, dy2, weight.grad);
    for (std::size_t r = 0; r < dy2.rows(); ++r)
      for (std::size_t j = 0; j < out; ++j) bias.grad[j] += dy2(r, j);
    return matmul_a_bt(dy2, weight.value).reshaped(x.shape());
  }
};

// ---------------------------------------------------------------------------
// Multi-layer perceptron: Linear (ReLU Linear)*, no activation after the last layer.

template <class S>
struct Mlp {
  std::vector<Linear<S>> layers;

  struct Cache {
    std::vector<Tensor<S>> inputs;  // input to each layer
    std::vector<Tensor<S>> pre;     // pre-activation output of each hidden layer
  };

  Mlp() = default;
  /// widths = {in, hidden..., out}
  explicit Mlp(const std::vector<std::size_t>& widths) {
    require(widths.size() >= 2, ErrorCode::Config, "mlp needs at least input and output width");
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) layers.emplace_back(widths[i], widths[i + 1]);
  }

  void init(Init& init) {
    for (auto& l : layers) l.init(init);
  }

  void collect(ParamList<S>& list, const std::string& prefix) {
    for (std::size_t i = 0; i < layers.size(); ++i) layers[i].collect(list, prefix + "." + std::to_string(i));
  }

  Tensor<S> forward(const Tensor<S>& x, Cache* cache = nullptr) const {
    Tensor<S> h = x;
    if (cache) {
      cache->inputs.clear();
      cache->pre.clear();
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (cache) cache->inputs.push_back(h);
      Tensor<S> z = layers[i].forward(h);
      if (i + 1 < layers.size()) {
        h = relu(z);
        if (cache) cache->pre.push_back(std::move(z));
      } else {
        h = std::move(z);
      }
    }
    return h;
  }

  Tensor<S> backward(const Cache& cache, Tensor<S> dy) {
    for (std::size_t i = layers.size(); i-- > 0;) {
      if (i + 1 < layers.size()) dy = relu_backward(cache.pre[i], dy);
      dy = layers[i].backward(cache.inputs[i], dy);
    }
    return dy;
  }
};

// ---------------------------------------------------------------------------
// Temporal convolution and pooling over [T, C] sequences.

struct Window {
  std::size_t out_length;
  std::size_t pad_left;
};

/// Output length ceil(T/stride); total padding (T'-1)*stride + kernel - T split with the smaller half on the left.
inline Window same_window(std::size_t length, std::size_t kernel, std::size_t stride) {
  const std::size_t out = (length + stride - 1) / stride;
  const std::size_t needed = (out - 1) * stride + kernel;
  const std::size_t pad_total = needed > length ? needed - length : 0;
  return {out, pad_total / 2};
}

template <class S>
struct Conv1d {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  Param<S> weight;  // [kernel * in_channels, out_channels], tap-major
  Param<S> bias;    // [out_channels]

  Conv1d() = default;
  Conv1d(std::size_t cin, std::size_t cout, std::size_t kernel_size, std::size_t stride_size)
      : in_channels(cin), out_channels(cout), kernel(kernel_size), stride(stride_size) {
    require(kernel_size >= 1 && stride_size >= 1, ErrorCode::Config,
            "conv1d kernel and stride must be positive (kernel=" + std::to_string(kernel_size) +
                ", stride=" + std::to_string(stride_size) + ")");
    weight = Param<S>({kernel * cin, cout});
    bias = Param<S>({cout});
  }

  void init(Init& init) {
    init.fan_in(weight.value, kernel * in_channels);
    init.fan_in(bias.value, kernel * in_channels);
  }

  void collect(ParamList<S>& list, const std::string& prefix) {
    list.push_back({prefix + ".weight", &weight});
    list.push_back({prefix + ".bias", &bias});
  }

  Tensor<S> im2col(const Tensor<S>& x, const Window& w) const {
    const std::size_t length = x.rows();
    Tensor<S> cols({w.out_length, kernel * in_channels});
    for (std::size_t o = 0; o < w.out_length; ++o) {
      for (std::size_t k = 0; k < kernel; ++k) {
        const std::ptrdiff_t t = static_cast<std::ptrdiff_t>(o * stride + k) - static_cast<std::ptrdiff_t>(w.pad_left);
        if (t < 0 || t >= static_cast<std::ptrdiff_t>(length)) continue;
        std::copy_n(x.data() + static_cast<std::size_t>(t) * in_channels, in_channels,
                    cols.data() + o * kernel * in_channels + k * in_channels);
      }
    }
    return cols;
  }

  Tensor<S> forward(const Tensor<S>& x) const {
    require(x.rank() == 2 && x.cols() == in_channels && x.rows() >= 1, ErrorCode::Dimension,
            "conv1d: input " + shape_string(x.shape()) + " expected [T," + std::to_string(in_channels) + "]");
    const Window w = same_window(x.rows(), kernel, stride);
    Tensor<S> y = matmul(im2col(x, w), weight.value);
    for (std::size_t r = 0; r < y.rows(); ++r)
      for (std::size_t j = 0; j < out_channels; ++j) y(r, j) += bias.value[j];
    return y;
  }

  Tensor<S> backward(const Tensor<S>& x, const Tensor<S>& dy) {
    const Window w = same_window(x.rows(), kernel, stride);
    matmul_at_b_acc(im2col(x, w), dy, weight.grad);
    for (std::size_t r = 0; r < dy.rows(); ++r)
      for (std::size_t j = 0; j < out_channels; ++j) bias.grad[j] += dy(r, j);
    const Tensor<S> dcols = matmul_a_bt(dy, weight.value);
    Tensor<S> dx(x.shape());
    for (std::size_t o = 0; o < w.out_length; ++o) {
      for (std::size_t k = 0; k < kernel; ++k) {
        const std::ptrdiff_t t = static_cast<std::ptrdiff_t>(o * stride + k) - static_cast<std::ptrdiff_t>(w.pad_left);
        if (t < 0 || t >= static_cast<std::ptrdiff_t>(x.rows())) continue;
        const S* src = dcols.data() + o * kernel * in_channels + k * in_channels;
        S* dst = dx.data() + static_cast<std::size_t>(t) * in_channels;
        for (std::size_t c = 0; c < in_channels; ++c) dst[c] += src[c];
      }
    }
    return dx;
  }
};

/// Max pooling over time. Padded positions never win, so every window maps to a real input row.
struct MaxPool1d {
  std::size_t kernel = 1;
  std::size_t stride = 1;

  MaxPool1d() = default;
  MaxPool1d(std::size_t kernel_size, std::size_t stride_size) : kernel(kernel_size), stride(stride_size) {
    require(kernel_size >= 1 && stride_size >= 1, ErrorCode::Config, "maxpool1d kernel and stride must be positive");
  }

  /// argmax receives, per output element, the winning input row (ties resolve to the lowest row).
  template <class S>
  Tensor<S> forward(const Tensor<S>& x, std::vector<std::uint32_t>* argmax = nullptr) const {
    require(x.rank() == 2 && x.rows() >= 1 && x.cols() >= 1, ErrorCode::Dimension,
            "maxpool1d: empty input " + shape_string(x.shape()));
    const std::size_t length = x.rows(), channels = x.cols();
    const Window w = same_window(length, kernel, stride);
    Tensor<S> y({w.out_length, channels});
    if (argmax) argmax->assign(w.out_length * channels, 0);
    for (std::size_t o = 0; o < w.out_length; ++o) {
      const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(o * stride) - static_cast<std::ptrdiff_t>(w.pad_left);
      const std::size_t lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(start, 0));
      const std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(start + static_cast<std::ptrdiff_t>(kernel)), length);
      for (std::size_t c = 0; c < channels; ++c) {
        std::size_t best = lo;
        for (std::size_t t = lo + 1; t < hi; ++t)
          if (x(t, c) > x(best, c)) best = t;
        y(o, c) = x(best, c);
        if (argmax) (*argmax)[o * channels + c] = static_cast<std::uint32_t>(best);
      }
    }
    return y;
  }

  template <class S>
  Tensor<S> backward(const std::vector<std::uint32_t>& argmax, std::size_t length, const Tensor<S>& dy) const {
    const std::size_t channels = dy.cols();
    Tensor<S> dx({length, channels});
    for (std::size_t o = 0; o < dy.rows(); ++o)
      for (std::size_t c = 0; c < channels; ++c) dx(argmax[o * channels + c], c) += dy(o, c);
    return dx;
  }
};

}  // namespace ivz::nn
