#pragma once

#include <cmath>
#include <vector>

#include "ivz/nn/param.hpp"

namespace ivz::train {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with decoupled weight decay (p -= lr * wd * p alongside the moment update).
template <class S>
class Adam {
 public:
  explicit Adam(nn::ParamList<S> params, AdamConfig cfg = {}) : params_(std::move(params)), cfg_(cfg) {
    for (const auto& p : params_) {
      m_.emplace_back(p.param->value.shape());
      v_.emplace_back(p.param->value.shape());
    }
  }

  const nn::ParamList<S>& params() const { return params_; }
  std::size_t steps() const { return t_; }

  /// Raises NonFinite naming the parameter if any gradient is NaN/Inf; nothing is updated then.
  void step(double lr, double weight_decay) {
    for (const auto& p : params_)
      require(p.param->grad.all_finite(), ErrorCode::NonFinite, "non-finite gradient in parameter " + p.name);
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto& val = params_[k].param->value;
      const auto& g = params_[k].param->grad;
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < val.size(); ++i) {
        const double gi = g[i];
        const double mi = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
        const double vi = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
        m[i] = mi;
        v[i] = vi;
        const double update = (mi / c1) / (std::sqrt(vi / c2) + cfg_.eps);
        val[i] = static_cast<S>(val[i] - lr * weight_decay * val[i] - lr * update);
      }
    }
  }

 private:
  nn::ParamList<S> params_;
  AdamConfig cfg_;
  std::vector<Tensor<double>> m_, v_;
  std::size_t t_ = 0;
};

/// Global L2 norm of all gradients.
template <class S>
double grad_norm(const nn::ParamList<S>& params) {
  double s = 0;
  for (const auto& p : params)
    for (S g : p.param->grad.values()) s += static_cast<double>(g) * g;
  return std::sqrt(s);
}

template <class S>
void scale_grads(const nn::ParamList<S>& params, double factor) {
  for (const auto& p : params) p.param->grad *= static_cast<S>(factor);
}

}  // namespace ivz::train
