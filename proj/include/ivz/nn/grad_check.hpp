#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ivz/core/tensor.hpp"

namespace ivz::nn {

struct GradCheckResult {
  double max_relative_error = 0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

template <class S>
constexpr S default_fd_step() {
  return sizeof(S) >= 8 ? S(1e-4) : S(1e-2);
}

/// Central-difference check of `analytic` (gradient of `loss` w.r.t. `coords`).
/// Relative error is |a - n| / max(|a|, |n|, floor); `indices` restricts which coordinates are probed.
template <class S>
GradCheckResult grad_check(const std::function<double()>& loss, std::span<S> coords, std::span<const S> analytic,
                           S step, const std::vector<std::size_t>* indices = nullptr, double floor = 1e-4) {
  require(step > S(0), ErrorCode::Config, "finite-difference step must be positive");
  require(coords.size() == analytic.size(), ErrorCode::Dimension, "gradient and coordinate counts differ");
  GradCheckResult result;
  auto probe = [&](std::size_t i) {
    const S saved = coords[i];
    coords[i] = saved + step;
    const double plus = loss();
    coords[i] = saved - step;
    const double minus = loss();
    coords[i] = saved;
    if (!std::isfinite(plus) || !std::isfinite(minus))
      fail(ErrorCode::NonFinite, "non-finite loss while probing coordinate " + std::to_string(i));
    // Use the step actually representable in S.
    const double h = static_cast<double>(static_cast<S>(saved + step)) - static_cast<double>(static_cast<S>(saved - step));
    const double numeric = (plus - minus) / h;
    const double a = analytic[i];
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
    if (rel > result.max_relative_error) {
      result.max_relative_error = rel;
      result.worst_index = i;
    }
    ++result.checked;
  };
  if (indices) {
    for (std::size_t i : *indices) probe(i);
  } else {
    for (std::size_t i = 0; i < coords.size(); ++i) probe(i);
  }
  return result;
}

/// Deterministic random projection weights so a tensor-valued op becomes a scalar loss sum(y * r).
template <class S>
Tensor<S> random_projection(const Shape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Tensor<S> r(shape);
  for (auto& v : r.values()) v = static_cast<S>(dist(rng));
  return r;
}

template <class S>
double projected(const Tensor<S>& y, const Tensor<S>& r) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += static_cast<double>(y[i]) * static_cast<double>(r[i]);
  return s;
}

inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  if (count >= n) return all;
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(count);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace ivz::nn
