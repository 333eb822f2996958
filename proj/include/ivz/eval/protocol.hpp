#pragma once

#include <algorithm>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ivz/eval/matching.hpp"

namespace ivz::eval {

/// Concept identifiers of one shot, sorted and unique.
using TagSet = std::vector<std::string>;

inline TagSet make_tag_set(std::vector<std::string> tags) {
  std::sort(tags.begin(), tags.end());
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
  return tags;
}

/// |a n b| / |a u b|; two empty sets score 0.
inline double semantic_iou(const TagSet& a, const TagSet& b) {
  std::size_t inter = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) ++i;
    else if (b[j] < a[i]) ++j;
    else {
      ++inter;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

struct EvalResult {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

inline double f1_score(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

/// Drops masked shots; rejects out-of-range or repeated indices.
inline std::vector<std::size_t> prepare_shots(const std::vector<std::size_t>& shots, const std::set<std::size_t>& mask,
                                              std::size_t total, const char* what) {
  std::set<std::size_t> seen;
  std::vector<std::size_t> out;
  for (std::size_t s : shots) {
    require(s < total, ErrorCode::Input,
            std::string(what) + " shot " + std::to_string(s) + " out of range for " + std::to_string(total) + " shots");
    require(seen.insert(s).second, ErrorCode::Input, std::string(what) + " shot " + std::to_string(s) + " repeated");
    if (!mask.count(s)) out.push_back(s);
  }
  return out;
}

inline EvalResult evaluate_summary(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& gt,
                                   const std::vector<TagSet>& tags, const std::vector<std::size_t>& mask = {}) {
  std::set<std::size_t> masked;
  for (std::size_t s : mask) {
    require(s < tags.size(), ErrorCode::Input, "mask shot " + std::to_string(s) + " out of range");
    masked.insert(s);
  }
  const auto p = prepare_shots(pred, masked, tags.size(), "predicted");
  const auto g = prepare_shots(gt, masked, tags.size(), "ground-truth");
  EvalResult r;
  if (p.empty() || g.empty()) return r;
  WeightMatrix w(p.size(), g.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) w(i, j) = semantic_iou(tags[p[i]], tags[g[j]]);
  const double total = max_weight_matching(w).weight;
  r.precision = total / static_cast<double>(p.size());
  r.recall = total / static_cast<double>(g.size());
  r.f1 = f1_score(r.precision, r.recall);
  return r;
}

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

/// Canonical text shared by the CLI and the HTTP service.
inline std::string eval_result_json(const EvalResult& r) {
  return "{\"precision\":" + fixed6(r.precision) + ",\"recall\":" + fixed6(r.recall) + ",\"f1\":" + fixed6(r.f1) + "}";
}

/// Batch request {pred, gt, tags, mask?}.
struct EvalRequest {
  std::vector<std::size_t> pred, gt, mask;
  std::vector<TagSet> tags;
};

inline std::vector<std::size_t> index_list(const nlohmann::json& j, const char* field) {
  require(j.is_array(), ErrorCode::Input, std::string("'") + field + "' must be an array of shot indices");
  std::vector<std::size_t> out;
  for (const auto& v : j) {
    require(v.is_number_integer() && v.get<long long>() >= 0, ErrorCode::Input,
            std::string("'") + field + "' entries must be nonnegative integers");
    out.push_back(v.get<std::size_t>());
  }
  return out;
}

inline std::vector<TagSet> tag_lists(const nlohmann::json& j) {
  require(j.is_array(), ErrorCode::Input, "'tags' must be a list of string lists");
  std::vector<TagSet> out;
  for (const auto& shot : j) {
    require(shot.is_array(), ErrorCode::Input, "'tags' must be a list of string lists");
    std::vector<std::string> t;
    for (const auto& s : shot) {
      require(s.is_string(), ErrorCode::Input, "tags must be strings");
      t.push_back(s.get<std::string>());
    }
    out.push_back(make_tag_set(std::move(t)));
  }
  return out;
}

inline EvalRequest parse_eval_request(const nlohmann::json& j) {
  require(j.is_object(), ErrorCode::Input, "evaluation request must be a JSON object");
  for (const char* f : {"pred", "gt", "tags"})
    require(j.contains(f), ErrorCode::Input, std::string("evaluation request missing '") + f + "'");
  EvalRequest r;
  r.pred = index_list(j.at("pred"), "pred");
  r.gt = index_list(j.at("gt"), "gt");
  r.tags = tag_lists(j.at("tags"));
  if (j.contains("mask") && !j.at("mask").is_null()) r.mask = index_list(j.at("mask"), "mask");
  return r;
}

}  // namespace ivz::eval
