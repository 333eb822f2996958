#pragma once

#include <map>
#include <set>
#include <string>

#include "ivz/io/binary.hpp"
#include "ivz/model/model.hpp"

namespace ivz::io {

// File layout: "IVZR1" | u32 LE header length | JSON header | f32 LE payload in index order.
inline constexpr char kCheckpointMagic[] = "IVZR1";
inline constexpr std::size_t kMagicSize = 5;
inline constexpr int kCheckpointVersion = 1;

struct TensorEntry {
  std::string name;
  Shape shape;
  std::size_t offset = 0;  // bytes from payload start
};

struct Checkpoint {
  model::ModelConfig config;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<TensorEntry> index;
  std::map<std::string, Tensor<float>> tensors;
};

template <class S>
std::string encode_checkpoint(const model::ModelConfig& config, const nn::ParamList<S>& params,
                              const nlohmann::json& meta = nlohmann::json::object()) {
  nlohmann::json tensors = nlohmann::json::array();
  std::string payload;
  std::set<std::string> names;
  for (const auto& p : params) {
    require(names.insert(p.name).second, ErrorCode::Config, "duplicate tensor name " + p.name);
    tensors.push_back({{"name", p.name}, {"shape", p.param->value.shape()}, {"offset", payload.size()}});
    put_f32(payload, p.param->value.data(), p.param->value.size());
  }
  const nlohmann::json header = {{"format", "IVZR"},
                                 {"version", kCheckpointVersion},
                                 {"model", config},
                                 {"meta", meta},
                                 {"payload_bytes", payload.size()},
                                 {"tensors", tensors}};
  const std::string text = header.dump();
  std::string out(kCheckpointMagic, kMagicSize);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  out += payload;
  return out;
}

/// Validates magic, version and the tensor index before touching the payload.
inline Checkpoint decode_checkpoint(const std::string& bytes) {
  require(bytes.size() >= kMagicSize && bytes.compare(0, kMagicSize, kCheckpointMagic) == 0, ErrorCode::BadMagic,
          "not an IVZR1 checkpoint");
  require(bytes.size() >= kMagicSize + 4, ErrorCode::Truncated, "checkpoint header length missing");
  const std::size_t header_len = get_u32(bytes.data() + kMagicSize);
  const std::size_t payload_start = kMagicSize + 4 + header_len;
  require(bytes.size() >= payload_start, ErrorCode::Truncated, "checkpoint header truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(kMagicSize + 4, header_len));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Io, std::string("malformed checkpoint header: ") + e.what());
  }
  const int version = header.value("version", 0);
  require(version == kCheckpointVersion, ErrorCode::UnsupportedVersion,
          "checkpoint version " + std::to_string(version) + " (supported: " + std::to_string(kCheckpointVersion) + ")");
  Checkpoint ck;
  try {
    ck.config = header.at("model").get<model::ModelConfig>();
    ck.meta = header.value("meta", nlohmann::json::object());
    std::size_t expected = 0;
    for (const auto& t : header.at("tensors")) {
      TensorEntry e{t.at("name").get<std::string>(), t.at("shape").get<Shape>(), t.at("offset").get<std::size_t>()};
      require(e.offset == expected, ErrorCode::Io, "tensor " + e.name + " is not contiguous with its predecessor");
      expected += 4 * shape_size(e.shape);
      ck.index.push_back(std::move(e));
    }
    require(header.at("payload_bytes").get<std::size_t>() == expected, ErrorCode::Io,
            "payload size disagrees with the tensor index");
    require(bytes.size() - payload_start >= expected, ErrorCode::Truncated,
            "payload has " + std::to_string(bytes.size() - payload_start) + " bytes, index needs " +
                std::to_string(expected));
    require(bytes.size() - payload_start == expected, ErrorCode::Io, "trailing bytes after checkpoint payload");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Io, std::string("malformed checkpoint header: ") + e.what());
  }
  for (const auto& e : ck.index) {
    Tensor<float> t(e.shape);
    get_f32(bytes.data() + payload_start + e.offset, t.data(), t.size());
    require(ck.tensors.emplace(e.name, std::move(t)).second, ErrorCode::Io, "tensor " + e.name + " listed twice");
  }
  return ck;
}

/// Copies checkpoint tensors into `params`; every parameter must be present and every tensor used.
template <class S>
void apply_checkpoint(const Checkpoint& ck, const nn::ParamList<S>& params) {
  std::set<std::string> used;
  for (const auto& p : params) {
    const auto it = ck.tensors.find(p.name);
    require(it != ck.tensors.end(), ErrorCode::MissingTensor, "checkpoint has no tensor named " + p.name);
    require(it->second.shape() == p.param->value.shape(), ErrorCode::Dimension,
            "tensor " + p.name + " has shape " + shape_string(it->second.shape()) + ", model expects " +
                shape_string(p.param->value.shape()));
    auto& dst = p.param->value;
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<S>(it->second[i]);
    used.insert(p.name);
  }
  for (const auto& [name, t] : ck.tensors)
    require(used.count(name), ErrorCode::UnknownTensor, "checkpoint tensor " + name + " does not belong to the model");
}

template <class S>
model::Model<S> model_from_checkpoint(const Checkpoint& ck) {
  model::Model<S> m(ck.config);
  apply_checkpoint(ck, m.parameters());
  return m;
}

template <class S>
void save_checkpoint(const fs::path& path, model::Model<S>& m, const nlohmann::json& meta = nlohmann::json::object()) {
  write_file(path, encode_checkpoint(m.config, m.parameters(), meta));
}

/// The magic is checked on the first five bytes before the rest of the file is read.
inline Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::NotFound, "cannot open checkpoint " + path.string());
  std::string bytes(kMagicSize, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(kMagicSize));
  require(in.gcount() == static_cast<std::streamsize>(kMagicSize) && bytes == std::string(kCheckpointMagic, kMagicSize),
          ErrorCode::BadMagic, path.string() + " is not an IVZR1 checkpoint");
  std::ostringstream rest;
  rest << in.rdbuf();
  return decode_checkpoint(bytes + rest.str());
}

}  // namespace ivz::io
