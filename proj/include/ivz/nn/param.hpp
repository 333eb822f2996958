#pragma once

#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ivz/core/tensor.hpp"

namespace ivz::nn {

/// A trainable tensor and its gradient accumulator (same shape).
template <class S>
struct Param {
  Tensor<S> value;
  Tensor<S> grad;

  Param() = default;
  explicit Param(Shape shape) : value(shape), grad(shape) {}

  void zero_grad() { grad.zero(); }
};

/// Flat, ordered view over every parameter of a module tree.
template <class S>
struct NamedParam {
  std::string name;
  Param<S>* param;
};

template <class S>
using ParamList = std::vector<NamedParam<S>>;

/// Seeded initializer. Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) matches the usual dense-layer default.
class Init {
 public:
  explicit Init(std::uint64_t seed) : rng_(seed) {}

  template <class S>
  void uniform(Tensor<S>& t, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : t.values()) v = static_cast<S>(dist(rng_));
  }

  template <class S>
  void fan_in(Tensor<S>& t, std::size_t fan) {
    uniform(t, 1.0 / std::sqrt(static_cast<double>(fan)));
  }

  template <class S>
  void normal(Tensor<S>& t, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto& v : t.values()) v = static_cast<S>(dist(rng_));
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

template <class S>
void zero_grads(const ParamList<S>& params) {
  for (const auto& p : params) p.param->zero_grad();
}

template <class S>
std::size_t parameter_count(const ParamList<S>& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.param->value.size();
  return n;
}

/// Copy values between two module trees of identical structure but possibly different scalar type.
template <class Dst, class Src>
void copy_values(const ParamList<Dst>& dst, const ParamList<Src>& src) {
  require(dst.size() == src.size(), ErrorCode::Dimension, "parameter lists differ in length");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    require(dst[i].name == src[i].name && dst[i].param->value.shape() == src[i].param->value.shape(),
            ErrorCode::Dimension, "parameter mismatch at " + dst[i].name);
    auto& d = dst[i].param->value;
    const auto& s = src[i].param->value;
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = static_cast<Dst>(s[j]);
  }
}

}  // namespace ivz::nn
