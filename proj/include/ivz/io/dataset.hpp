#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "ivz/eval/protocol.hpp"
#include "ivz/io/binary.hpp"
#include "ivz/model/model.hpp"
#include "ivz/querygen/centrality.hpp"
#include "ivz/train/trainer.hpp"

namespace ivz::io {

inline constexpr std::size_t kWordDim = 300;

/// Text query with its ground-truth summary.
struct Annotation {
  std::string c1, c2;
  std::vector<std::size_t> summary;
};

/// One video directory: meta.json, features.bin, tags.json, annotations.json.
struct VideoRecord {
  std::string id;
  std::size_t shots = 0, dim = 0;
  std::uint64_t thumbnail_seed = 0;
  Tensor<float> features;  // [shots, dim]
  std::vector<eval::TagSet> tags;
  std::vector<Annotation> annotations;
};

inline void validate_id(const std::string& id) {
  require(!id.empty() && std::all_of(id.begin(), id.end(),
                                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }),
          ErrorCode::Input, "invalid id '" + id + "' (letters, digits, '_' and '-' only)");
}

inline nlohmann::json annotations_json(const std::vector<Annotation>& anns) {
  nlohmann::json q = nlohmann::json::array();
  for (const auto& a : anns) q.push_back({{"c1", a.c1}, {"c2", a.c2}, {"summary", a.summary}});
  return {{"queries", q}};
}

inline void save_video(const fs::path& dir, const VideoRecord& v) {
  validate_id(v.id);
  require(v.features.rank() == 2 && v.features.rows() == v.shots && v.features.cols() == v.dim, ErrorCode::Dimension,
          "video " + v.id + " features " + shape_string(v.features.shape()));
  require(v.tags.size() == v.shots, ErrorCode::Dimension, "video " + v.id + " needs one tag list per shot");
  const fs::path d = dir / v.id;
  write_json(d / "meta.json", {{"id", v.id}, {"shots", v.shots}, {"dim", v.dim}, {"thumbnail_seed", v.thumbnail_seed}});
  std::string blob;
  put_f32(blob, v.features.data(), v.features.size());
  write_file(d / "features.bin", blob);
  write_json(d / "tags.json", v.tags);
  write_json(d / "annotations.json", annotations_json(v.annotations));
}

/// Reads `dir/id`. annotations.json is optional.
inline VideoRecord load_video(const fs::path& dir, const std::string& id) {
  validate_id(id);
  const fs::path d = dir / id;
  require(fs::is_directory(d), ErrorCode::NotFound, "unknown video '" + id + "'");
  VideoRecord v;
  try {
    const auto meta = read_json(d / "meta.json");
    v.id = meta.at("id").get<std::string>();
    v.shots = meta.at("shots").get<std::size_t>();
    v.dim = meta.at("dim").get<std::size_t>();
    v.thumbnail_seed = meta.value("thumbnail_seed", std::uint64_t{0});
    require(v.id == id, ErrorCode::Io, "meta.json id '" + v.id + "' does not match directory '" + id + "'");
    const std::string blob = read_file(d / "features.bin");
    const std::size_t expected = 4 * v.shots * v.dim;
    require(blob.size() >= expected, ErrorCode::Truncated,
            "features.bin has " + std::to_string(blob.size()) + " bytes, expected " + std::to_string(expected));
    require(blob.size() == expected, ErrorCode::Io, "features.bin has trailing bytes");
    v.features = Tensor<float>({v.shots, v.dim});
    get_f32(blob.data(), v.features.data(), v.features.size());
    v.tags = eval::tag_lists(read_json(d / "tags.json"));
    require(v.tags.size() == v.shots, ErrorCode::Io, "tags.json lists " + std::to_string(v.tags.size()) + " shots, meta says " +
                                                         std::to_string(v.shots));
    if (fs::exists(d / "annotations.json")) {
      const auto anns = read_json(d / "annotations.json");
      for (const auto& q : anns.at("queries")) {
        Annotation a{q.at("c1").get<std::string>(), q.at("c2").get<std::string>(), eval::index_list(q.at("summary"), "summary")};
        for (std::size_t s : a.summary) require(s < v.shots, ErrorCode::Io, "annotation shot out of range in " + id);
        v.annotations.push_back(std::move(a));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Io, "malformed record for video " + id + ": " + e.what());
  }
  return v;
}

/// Concept vocabulary with one fixed-width vector per concept.
struct EmbeddingTable {
  std::vector<std::string> concepts;
  std::size_t dim = kWordDim;
  Tensor<float> vectors;  // [V, dim]

  std::size_t find(const std::string& c) const {
    const auto it = std::find(concepts.begin(), concepts.end(), c);
    if (it == concepts.end()) {
      std::string known;
      for (std::size_t i = 0; i < concepts.size(); ++i) known += (i ? ", " : "") + concepts[i];
      fail(ErrorCode::Vocabulary, "unknown concept '" + c + "'; vocabulary has " + std::to_string(concepts.size()) +
                                      " concepts: " + known);
    }
    return static_cast<std::size_t>(it - concepts.begin());
  }

  template <class S>
  model::TextQuery<S> query(const std::string& c1, const std::string& c2) const {
    const std::size_t a = find(c1), b = find(c2);
    Tensor<S> e({2, dim});
    for (std::size_t q = 0; q < dim; ++q) {
      e(0, q) = static_cast<S>(vectors(a, q));
      e(1, q) = static_cast<S>(vectors(b, q));
    }
    return {c1, c2, std::move(e)};
  }
};

inline void save_embeddings(const fs::path& dir, const EmbeddingTable& t) {
  require(t.vectors.rows() == t.concepts.size() && t.vectors.cols() == t.dim, ErrorCode::Dimension,
          "embedding table shape " + shape_string(t.vectors.shape()));
  write_json(dir / "embeddings.json", {{"dim", t.dim}, {"concepts", t.concepts}});
  std::string blob;
  put_f32(blob, t.vectors.data(), t.vectors.size());
  write_file(dir / "embeddings.bin", blob);
}

inline EmbeddingTable load_embeddings(const fs::path& dir) {
  EmbeddingTable t;
  try {
    const auto j = read_json(dir / "embeddings.json");
    t.dim = j.at("dim").get<std::size_t>();
    t.concepts = j.at("concepts").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Io, std::string("malformed embeddings.json: ") + e.what());
  }
  require(t.dim == kWordDim, ErrorCode::Io, "embedding width " + std::to_string(t.dim) + ", expected " + std::to_string(kWordDim));
  std::vector<std::string> sorted = t.concepts;
  std::sort(sorted.begin(), sorted.end());
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), ErrorCode::Io, "duplicate concept in embeddings.json");
  const std::string blob = read_file(dir / "embeddings.bin");
  const std::size_t expected = 4 * t.concepts.size() * t.dim;
  require(blob.size() >= expected, ErrorCode::Truncated, "embeddings.bin shorter than the vocabulary needs");
  require(blob.size() == expected, ErrorCode::Io, "embeddings.bin has trailing bytes");
  t.vectors = Tensor<float>({t.concepts.size(), t.dim});
  get_f32(blob.data(), t.vectors.data(), t.vectors.size());
  return t;
}

/// dataset.json plus the embedding table and every video record.
struct Dataset {
  nlohmann::json info = nlohmann::json::object();
  EmbeddingTable embeddings;
  std::vector<VideoRecord> videos;
  std::vector<std::string> train_ids, test_ids;

  std::size_t video_index(const std::string& id) const {
    for (std::size_t i = 0; i < videos.size(); ++i)
      if (videos[i].id == id) return i;
    fail(ErrorCode::NotFound, "unknown video '" + id + "'");
  }
};

inline void save_dataset(const fs::path& dir, const Dataset& d) {
  nlohmann::json info = d.info;
  std::vector<std::string> ids;
  for (const auto& v : d.videos) ids.push_back(v.id);
  info["videos"] = ids;
  info["train"] = d.train_ids;
  info["test"] = d.test_ids;
  write_json(dir / "dataset.json", info);
  save_embeddings(dir, d.embeddings);
  for (const auto& v : d.videos) save_video(dir / "videos", v);
}

inline Dataset load_dataset(const fs::path& dir) {
  require(fs::is_directory(dir), ErrorCode::NotFound, "dataset directory " + dir.string() + " does not exist");
  Dataset d;
  d.info = read_json(dir / "dataset.json");
  d.embeddings = load_embeddings(dir);
  try {
    for (const auto& id : d.info.at("videos")) d.videos.push_back(load_video(dir / "videos", id.get<std::string>()));
    d.train_ids = d.info.value("train", std::vector<std::string>{});
    d.test_ids = d.info.value("test", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Io, std::string("malformed dataset.json: ") + e.what());
  }
  for (const auto& id : d.train_ids) d.video_index(id);
  for (const auto& id : d.test_ids) d.video_index(id);
  return d;
}

/// Video ids present under `dir/videos`, sorted.
inline std::vector<std::string> list_video_ids(const fs::path& dir) {
  std::vector<std::string> ids;
  if (!fs::is_directory(dir / "videos")) return ids;
  for (const auto& e : fs::directory_iterator(dir / "videos"))
    if (e.is_directory() && fs::exists(e.path() / "meta.json")) ids.push_back(e.path().filename().string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

template <class S>
train::Video<S> to_train_video(const VideoRecord& v) {
  return {v.id, v.features.template cast<S>(), v.tags};
}

/// Text samples for every annotation of the listed videos (indices into `videos`).
template <class S>
std::vector<train::Sample<S>> text_samples(const Dataset& d, const std::vector<std::string>& ids) {
  std::vector<train::Sample<S>> out;
  for (const auto& id : ids) {
    const std::size_t vi = d.video_index(id);
    const auto& v = d.videos[vi];
    for (const auto& a : v.annotations) {
      train::Sample<S> s;
      s.video = vi;
      s.kind = model::QueryKind::Text;
      s.text = d.embeddings.query<S>(a.c1, a.c2);
      s.gt = a.summary;
      s.labels = train::labels_from_summary<S>(a.summary, v.shots);
      out.push_back(std::move(s));
    }
  }
  return out;
}

/// Visual samples: the query shots are generated from each ground-truth summary by centrality.
template <class S>
std::vector<train::Sample<S>> visual_samples(const Dataset& d, const std::vector<std::string>& ids,
                                             std::size_t query_shots = querygen::kDefaultQueryShots) {
  std::vector<train::Sample<S>> out;
  for (const auto& id : ids) {
    const std::size_t vi = d.video_index(id);
    const auto& v = d.videos[vi];
    for (const auto& a : v.annotations) {
      if (a.summary.size() < query_shots) continue;
      train::Sample<S> s;
      s.video = vi;
      s.kind = model::QueryKind::Visual;
      auto shots = querygen::generate_visual_query(a.summary, v.tags, query_shots);
      std::sort(shots.begin(), shots.end());
      s.visual = {shots};
      s.gt = a.summary;
      s.labels = train::labels_from_summary<S>(a.summary, v.shots);
      out.push_back(std::move(s));
    }
  }
  return out;
}

template <class S>
std::vector<train::Video<S>> train_videos(const Dataset& d) {
  std::vector<train::Video<S>> out;
  for (const auto& v : d.videos) out.push_back(to_train_video<S>(v));
  return out;
}

}  // namespace ivz::io
