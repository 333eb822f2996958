#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "ivz/core/tensor.hpp"

namespace ivz::model {

inline constexpr double kDefaultDelta = 0.05;

/// score_s = sum_i max(g_i * H[i,s] - delta, 0)
template <class S>
Tensor<S> mix_scores(const Tensor<S>& g, const Tensor<S>& h, S delta) {
  require(delta >= S(0), ErrorCode::Config, "mixing threshold must be >= 0");
  require(h.rank() == 2 && g.size() == h.rows(), ErrorCode::Dimension,
          "mix_scores: intent distribution " + shape_string(g.shape()) + " vs scores " + shape_string(h.shape()));
  const std::size_t k = h.rows(), t = h.cols();
  Tensor<S> out({t});
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t s = 0; s < t; ++s) out[s] += std::max(g[i] * h(i, s) - delta, S(0));
  return out;
}

template <class S>
struct MixGrads {
  Tensor<S> g;
  Tensor<S> h;
};

template <class S>
MixGrads<S> mix_scores_backward(const Tensor<S>& g, const Tensor<S>& h, S delta, const Tensor<S>& dscore) {
  const std::size_t k = h.rows(), t = h.cols();
  MixGrads<S> out{Tensor<S>(g.shape()), Tensor<S>(h.shape())};
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t s = 0; s < t; ++s) {
      if (!(g[i] * h(i, s) > delta)) continue;
      out.g[i] += h(i, s) * dscore[s];
      out.h(i, s) = g[i] * dscore[s];
    }
  return out;
}

/// Selected shot indices, ascending.
using Summary = std::vector<std::size_t>;

struct Selection {
  enum class Mode { Threshold, Budget };
  Mode mode = Mode::Budget;
  double threshold = 0.5;
  std::size_t budget = 1;

  static Selection by_threshold(double t) { return {Mode::Threshold, t, 0}; }
  static Selection by_budget(std::size_t b) { return {Mode::Budget, 0.5, b}; }
  /// ceil(2% of the shots), at least one.
  static Selection default_for(std::size_t shots) {
    return by_budget(std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.02 * static_cast<double>(shots)))));
  }
};

/// Indices sorted by score descending, ties to the lower index.
template <class S>
std::vector<std::size_t> rank_descending(std::span<const S> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

template <class S>
Summary select_summary(std::span<const S> scores, const Selection& sel) {
  Summary out;
  if (sel.mode == Selection::Mode::Threshold) {
    for (std::size_t s = 0; s < scores.size(); ++s)
      if (static_cast<double>(scores[s]) > sel.threshold) out.push_back(s);
    return out;
  }
  require(sel.budget <= scores.size(), ErrorCode::Config,
          "budget " + std::to_string(sel.budget) + " exceeds " + std::to_string(scores.size()) + " shots");
  std::vector<std::size_t> order = rank_descending(scores);
  out.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(sel.budget));
  std::sort(out.begin(), out.end());
  return out;
}

/// Top-m shots of one intent's score row, best first.
template <class S>
std::vector<std::size_t> representative_shots(std::span<const S> row, std::size_t m) {
  require(m >= 1 && m <= row.size(), ErrorCode::Config,
          "representative count " + std::to_string(m) + " outside [1," + std::to_string(row.size()) + "]");
  std::vector<std::size_t> order = rank_descending(row);
  order.resize(m);
  return order;
}

}  // namespace ivz::model
