#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "ivz/core/error.hpp"

namespace ivz::eval {

/// Dense weight matrix, row-major [rows, cols].
struct WeightMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> w;

  WeightMatrix() = default;
  WeightMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), w(r * c, 0.0) {}
  WeightMatrix(std::size_t r, std::size_t c, std::vector<double> v) : rows(r), cols(c), w(std::move(v)) {
    require(w.size() == r * c, ErrorCode::Dimension, "weight matrix data does not match its shape");
  }
  double operator()(std::size_t i, std::size_t j) const { return w[i * cols + j]; }
  double& operator()(std::size_t i, std::size_t j) { return w[i * cols + j]; }
};

struct Matching {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (row, col), ascending by row
  double weight = 0.0;
};

/// Sum of matched weights taken in ascending row order; both solvers report through this.
inline double matching_weight(const WeightMatrix& w, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  double total = 0.0;
  for (const auto& [i, j] : pairs) total += w(i, j);
  return total;
}

inline void check_weights(const WeightMatrix& w) {
  for (double v : w.w) {
    require(std::isfinite(v), ErrorCode::Input, "matching weights must be finite");
    require(v >= 0.0, ErrorCode::Input, "matching weights must be nonnegative");
  }
}

/// Maximum-weight bipartite matching: shortest augmenting paths with potentials (Hungarian,
/// O(n^3)) on the zero-padded square matrix. Zero-weight pairs are dropped from the result.
inline Matching max_weight_matching(const WeightMatrix& w) {
  check_weights(w);
  Matching out;
  const std::size_t n = std::max(w.rows, w.cols);
  if (n == 0) return out;
  auto cost = [&](std::size_t i, std::size_t j) { return (i < w.rows && j < w.cols) ? -w(i, j) : 0.0; };
  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based rows/cols; column 0 is the virtual source of each augmentation.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n, n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  for (std::size_t i = 0; i < w.rows; ++i) {
    const std::size_t j = row_to_col[i];
    if (j < w.cols && w(i, j) > 0.0) out.pairs.push_back({i, j});
  }
  out.weight = matching_weight(w, out.pairs);
  return out;
}

inline constexpr std::size_t kBruteForceLimit = 8;

/// Exhaustive enumeration over all matchings (test oracle). Refuses min(m,n) > 8.
inline Matching brute_force_matching(const WeightMatrix& w) {
  check_weights(w);
  require(std::min(w.rows, w.cols) <= kBruteForceLimit, ErrorCode::Config,
          "brute-force matching limited to min(m,n) <= 8");
  // Enumerate over the smaller side so the search tree stays bounded.
  const bool flip = w.rows > w.cols;
  const std::size_t a = flip ? w.cols : w.rows, b = flip ? w.rows : w.cols;
  auto at = [&](std::size_t i, std::size_t j) { return flip ? w(j, i) : w(i, j); };
  Matching best;
  std::vector<std::pair<std::size_t, std::size_t>> cur;
  std::vector<bool> taken(b, false);
  auto consider = [&] {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& [i, j] : cur)
      if (at(i, j) > 0.0) pairs.push_back(flip ? std::pair{j, i} : std::pair{i, j});
    std::sort(pairs.begin(), pairs.end());
    const double total = matching_weight(w, pairs);
    if (total > best.weight) best = {pairs, total};
  };
  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == a) {
      consider();
      return;
    }
    self(self, i + 1);
    for (std::size_t j = 0; j < b; ++j) {
      if (taken[j]) continue;
      taken[j] = true;
      cur.push_back({i, j});
      self(self, i + 1);
      cur.pop_back();
      taken[j] = false;
    }
  };
  rec(rec, 0);
  return best;
}

}  // namespace ivz::eval
