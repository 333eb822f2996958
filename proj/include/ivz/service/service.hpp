#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ivz/io/checkpoint.hpp"
#include "ivz/io/image.hpp"
#include "ivz/service/inference.hpp"

namespace ivz::service {

namespace fs = std::filesystem;

struct ServiceConfig {
  fs::path data_dir = "data";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t cache_size = 256;
  double delta = model::kDefaultDelta;
};

/// Reads IVZ_DATA_DIR, IVZ_BIND ("host:port") and IVZ_CACHE_SIZE over the defaults.
inline ServiceConfig config_from_env(ServiceConfig c = {}) {
  if (const char* d = std::getenv("IVZ_DATA_DIR")) c.data_dir = d;
  if (const char* b = std::getenv("IVZ_BIND")) {
    const std::string s = b;
    const auto colon = s.rfind(':');
    require(colon != std::string::npos, ErrorCode::Config, "IVZ_BIND must be host:port");
    c.host = s.substr(0, colon);
    c.port = std::stoi(s.substr(colon + 1));
  }
  if (const char* n = std::getenv("IVZ_CACHE_SIZE")) c.cache_size = std::stoul(n);
  return c;
}

struct Request {
  std::string method, path;
  std::map<std::string, std::string> params;
  std::string body;
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  const char* cache = "";  // "hit" / "miss" for cached routes
};

/// Bounded map with FIFO eviction. Lookups take a shared lock only.
template <class V>
class SharedCache {
 public:
  explicit SharedCache(std::size_t capacity) : capacity_(capacity) {}

  std::shared_ptr<const V> find(const std::string& key) const {
    std::shared_lock lock(mutex_);
    const auto it = map_.find(key);
    return it == map_.end() ? nullptr : it->second;
  }

  /// Inserts unless another writer got there first; returns the stored value either way.
  std::shared_ptr<const V> insert(const std::string& key, std::shared_ptr<const V> value) {
    std::unique_lock lock(mutex_);
    const auto [it, fresh] = map_.emplace(key, value);
    if (!fresh) return it->second;
    order_.push_back(key);
    while (capacity_ && order_.size() > capacity_) {
      map_.erase(order_.front());
      order_.pop_front();
    }
    return value;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return map_.size();
  }

 private:
  std::size_t capacity_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::shared_ptr<const V>> map_;
  std::deque<std::string> order_;
};

/// Everything the server reads, loaded once at startup and never written.
struct Registry {
  std::map<std::string, io::VideoRecord> videos;
  std::map<std::string, std::shared_ptr<const model::Model<float>>> checkpoints;
  std::optional<io::EmbeddingTable> vocab;
  std::string load_error;  // non-empty when the data directory could not be read

  static Registry load(const fs::path& dir) {
    Registry r;
    try {
      require(fs::is_directory(dir), ErrorCode::Io, "data directory " + dir.string() + " is not readable");
      for (const auto& id : io::list_video_ids(dir)) r.videos.emplace(id, io::load_video(dir / "videos", id));
      if (fs::exists(dir / "embeddings.json")) r.vocab = io::load_embeddings(dir);
      if (fs::is_directory(dir / "checkpoints")) {
        for (const auto& e : fs::directory_iterator(dir / "checkpoints")) {
          if (e.path().extension() != ".ivzr") continue;
          auto m = io::model_from_checkpoint<float>(io::load_checkpoint(e.path()));
          r.checkpoints.emplace(e.path().stem().string(), std::make_shared<const model::Model<float>>(std::move(m)));
        }
      }
    } catch (const std::exception& e) {
      r = Registry{};
      r.load_error = e.what();
    }
    return r;
  }
};

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Input:
    case ErrorCode::InputTooShort:
    case ErrorCode::Vocabulary:
    case ErrorCode::Dimension: return 400;
    default: return 500;
  }
}

inline Response error_response(int status, std::string_view code, const std::string& message) {
  return {status, "application/json", nlohmann::json{{"error", {{"code", code}, {"message", message}}}}.dump(), ""};
}

class Service {
 public:
  explicit Service(ServiceConfig cfg)
      : cfg_(std::move(cfg)),
        registry_(Registry::load(cfg_.data_dir)),
        scores_(cfg_.cache_size),
        bodies_(cfg_.cache_size) {}

  const Registry& registry() const { return registry_; }
  const ServiceConfig& config() const { return cfg_; }

  Response handle(const Request& req) const {
    try {
      if (req.path == "/api/prepare" && req.method == "GET") return prepare();
      if (req.path == "/api/infer" && req.method == "GET") return infer_text(req);
      if (req.path == "/api/infer/visual" && req.method == "POST") return infer_visual(req);
      if (req.path == "/api/shot/frame" && req.method == "GET") return shot_image(req, false);
      if (req.path == "/api/shot/gif" && req.method == "GET") return shot_image(req, true);
      if (req.path == "/api/evaluate" && req.method == "POST") return evaluate(req);
      return error_response(404, "not-found", "no route for " + req.method + " " + req.path);
    } catch (const Error& e) {
      return error_response(http_status(e.code()), to_string(e.code()), e.what());
    } catch (const nlohmann::json::exception& e) {
      return error_response(400, "input", std::string("malformed JSON body: ") + e.what());
    } catch (const std::exception& e) {
      return error_response(500, "internal", e.what());
    }
  }

 private:
  static const std::string& param(const Request& req, const std::string& name) {
    const auto it = req.params.find(name);
    require(it != req.params.end() && !it->second.empty(), ErrorCode::Input, "missing query parameter '" + name + "'");
    return it->second;
  }

  static std::size_t parse_index(const std::string& s, const std::string& name) {
    require(!s.empty() && s.size() < 10 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }),
            ErrorCode::Input, name + " must be a nonnegative integer, got '" + s + "'");
    return std::stoul(s);
  }

  const io::VideoRecord& video(const std::string& id) const {
    const auto it = registry_.videos.find(id);
    require(it != registry_.videos.end(), ErrorCode::NotFound, "unknown video '" + id + "'");
    return it->second;
  }

  const model::Model<float>& checkpoint(const std::string& id) const {
    const auto it = registry_.checkpoints.find(id);
    require(it != registry_.checkpoints.end(), ErrorCode::NotFound, "unknown checkpoint '" + id + "'");
    return *it->second;
  }

  Response prepare() const {
    if (!registry_.load_error.empty()) return error_response(500, "io", registry_.load_error);
    nlohmann::json videos = nlohmann::json::array(), ckpts = nlohmann::json::array(), concepts = nlohmann::json::array();
    for (const auto& [id, v] : registry_.videos) videos.push_back(id);
    for (const auto& [id, m] : registry_.checkpoints) ckpts.push_back(id);
    if (registry_.vocab)
      for (const auto& c : registry_.vocab->concepts) concepts.push_back(c);
    return {200, "application/json", nlohmann::json{{"videos", videos}, {"checkpoints", ckpts}, {"concepts", concepts}}.dump(), ""};
  }

  Response infer(const std::string& video_id, const std::string& ckpt_id, const Query& q) const {
    const auto& v = video(video_id);
    const auto& m = checkpoint(ckpt_id);
    if (q.kind == model::QueryKind::Text) {
      require(registry_.vocab.has_value(), ErrorCode::Vocabulary, "no embedding table installed; vocabulary has 0 concepts");
      registry_.vocab->find(q.c1);
      registry_.vocab->find(q.c2);
    } else {
      model::validate_visual_query(model::VisualQuery{q.shots}, v.shots);
    }
    const std::string key = video_id + "\n" + ckpt_id + "\n" + q.key();
    if (auto hit = bodies_.find(key)) return {200, "application/json", *hit, "hit"};

    // The [k, T] score matrix depends only on (video, checkpoint) and is shared across queries.
    const std::string skey = video_id + "\n" + ckpt_id;
    auto h = scores_.find(skey);
    if (!h) h = scores_.insert(skey, std::make_shared<const Tensor<float>>(m.summary.forward(v.features)));
    const Tensor<float> g = intent_probs(m, v.features, q, registry_.vocab ? &*registry_.vocab : nullptr);
    auto body = bodies_.insert(key, std::make_shared<const std::string>(inference_body(g, *h, cfg_.delta, video_id, ckpt_id)));
    return {200, "application/json", *body, "miss"};
  }

  Response infer_text(const Request& req) const {
    Query q;
    q.c1 = param(req, "c1");
    q.c2 = param(req, "c2");
    return infer(param(req, "video"), param(req, "ckpt"), q);
  }

  Response infer_visual(const Request& req) const {
    const auto j = nlohmann::json::parse(req.body);
    require(j.is_object(), ErrorCode::Input, "body must be a JSON object");
    Query q;
    q.kind = model::QueryKind::Visual;
    require(j.contains("video") && j["video"].is_string(), ErrorCode::Input, "'video' must be a string");
    require(j.contains("ckpt") && j["ckpt"].is_string(), ErrorCode::Input, "'ckpt' must be a string");
    q.shots = eval::index_list(j.value("shots", nlohmann::json()), "shots");
    return infer(j["video"].get<std::string>(), j["ckpt"].get<std::string>(), q);
  }

  Response shot_image(const Request& req, bool gif) const {
    const auto& v = video(param(req, "video"));
    const std::size_t shot = parse_index(param(req, "shot"), "shot");
    require(shot < v.shots, ErrorCode::NotFound,
            "shot " + std::to_string(shot) + " out of range for " + v.id + " (" + std::to_string(v.shots) + " shots)");
    if (gif) return {200, "image/gif", io::shot_gif(v.thumbnail_seed, shot, v.tags[shot]), ""};
    return {200, "image/png", io::shot_png(v.thumbnail_seed, shot, v.tags[shot]), ""};
  }

  Response evaluate(const Request& req) const {
    const auto j = nlohmann::json::parse(req.body);
    require(j.is_object(), ErrorCode::Input, "body must be a JSON object");
    require(j.contains("video") && j["video"].is_string(), ErrorCode::Input, "'video' must be a string");
    const auto& v = video(j["video"].get<std::string>());
    const auto summary = eval::index_list(j.value("summary", nlohmann::json()), "summary");
    const auto mask = j.contains("mask") ? eval::index_list(j["mask"], "mask") : std::vector<std::size_t>{};
    return {200, "application/json",
            evaluate_body(v, summary, mask, j.value("c1", std::string()), j.value("c2", std::string())), ""};
  }

  ServiceConfig cfg_;
  Registry registry_;
  mutable SharedCache<Tensor<float>> scores_;
  mutable SharedCache<std::string> bodies_;
};

/// One JSON line per request on `log`.
inline void log_request(std::ostream& log, const Request& req, const Response& res, double ms) {
  static std::mutex m;
  const nlohmann::json line = {{"method", req.method}, {"path", req.path}, {"status", res.status},
                               {"ms", std::round(ms * 1000) / 1000}, {"bytes", res.body.size()}, {"cache", res.cache}};
  std::lock_guard lock(m);
  log << line.dump() << '\n' << std::flush;
}

/// Binds `svc` to an httplib server. The caller owns both and calls listen().
inline void mount(httplib::Server& server, const Service& svc, std::ostream* log = &std::cerr) {
  auto route = [&svc, log](const httplib::Request& hr, httplib::Response& out) {
    const auto t0 = std::chrono::steady_clock::now();
    Request req{hr.method, hr.path, {}, hr.body};
    for (const auto& [k, v] : hr.params) req.params.emplace(k, v);
    const Response res = svc.handle(req);
    out.status = res.status;
    out.set_content(res.body, res.content_type);
    if (*res.cache) out.set_header("X-Cache", res.cache);
    if (log)
      log_request(*log, req, res, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  };
  server.Get(R"(/api/.*)", route);
  server.Post(R"(/api/.*)", route);
  server.set_error_handler([](const httplib::Request& hr, httplib::Response& out) {
    if (out.body.empty()) {
      const auto r = error_response(out.status, "http", "request failed for " + hr.path);
      out.set_content(r.body, r.content_type);
    }
  });
}

/// Blocking server loop.
inline int serve(const ServiceConfig& cfg, std::ostream& log = std::cerr) {
  Service svc(cfg);
  if (!svc.registry().load_error.empty())
    log << nlohmann::json{{"event", "load_error"}, {"message", svc.registry().load_error}}.dump() << '\n';
  httplib::Server server;
  mount(server, svc, &log);
  log << nlohmann::json{{"event", "listen"}, {"host", cfg.host}, {"port", cfg.port},
                        {"videos", svc.registry().videos.size()}, {"checkpoints", svc.registry().checkpoints.size()}}
             .dump()
      << '\n'
      << std::flush;
  return server.listen(cfg.host, cfg.port) ? 0 : 2;
}

}  // namespace ivz::service
