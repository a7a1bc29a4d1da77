#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lowres/tensor.hpp"

namespace lowres {

// Checkpoint fragment format, shared by the SR model and the classifier:
//   magic "PVST" | u32 version | u32 header length | JSON header | payload
// The header lists tensor names/shapes and byte offsets into the payload;
// the payload is raw little-endian 32-bit floats in declared order.
inline constexpr char kCheckpointMagic[4] = {'P', 'V', 'S', 'T'};
inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string kind;
  nlohmann::json config;
  std::vector<std::pair<std::string, TensorPtr>> tensors;

  TensorPtr find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return t;
    fail("checkpoint-missing-tensor", "no tensor named '" + name + "'");
  }
};

namespace detail {

inline void put_u32le(std::string& out, uint32_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char((v >> 8) & 0xff));
  out.push_back(char((v >> 16) & 0xff));
  out.push_back(char((v >> 24) & 0xff));
}

inline uint32_t get_u32le(const unsigned char* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
         uint32_t(p[3]) << 24;
}

inline void put_f32le(std::string& out, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32le(out, bits);
}

inline float get_f32le(const unsigned char* p) {
  const uint32_t bits = get_u32le(p);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace detail

inline std::string serialize_checkpoint(
    const std::string& kind, const nlohmann::json& config,
    const std::vector<std::pair<std::string, TensorPtr>>& tensors) {
  nlohmann::json header;
  header["kind"] = kind;
  header["config"] = config;
  auto list = nlohmann::json::array();
  uint64_t offset = 0;
  for (const auto& [name, t] : tensors) {
    nlohmann::json e;
    e["name"] = name;
    e["shape"] = t->shape;
    e["offset"] = offset;
    list.push_back(e);
    offset += uint64_t(t->size()) * 4;
  }
  header["tensors"] = list;
  const std::string hjson = header.dump();

  std::string out;
  out.reserve(12 + hjson.size() + offset);
  out.append(kCheckpointMagic, 4);
  detail::put_u32le(out, kCheckpointVersion);
  detail::put_u32le(out, uint32_t(hjson.size()));
  out += hjson;
  for (const auto& [name, t] : tensors)
    for (float f : t->v) detail::put_f32le(out, f);
  return out;
}

inline void save_checkpoint(
    const std::filesystem::path& path, const std::string& kind,
    const nlohmann::json& config,
    const std::vector<std::pair<std::string, TensorPtr>>& tensors) {
  const std::string bytes = serialize_checkpoint(kind, config, tensors);
  std::ofstream f(path, std::ios::binary);
  require(bool(f), "io-error", "cannot open " + path.string() + " for write");
  f.write(bytes.data(), std::streamsize(bytes.size()));
  require(bool(f), "io-error", "short write to " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  require(bool(f), "io-error", "cannot open checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  require(bytes.size() >= 12, "checkpoint-corrupt",
          path.string() + ": truncated header");
  require(std::memcmp(bytes.data(), kCheckpointMagic, 4) == 0,
          "checkpoint-corrupt", path.string() + ": bad magic");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const uint32_t version = detail::get_u32le(p + 4);
  require(version == kCheckpointVersion, "checkpoint-corrupt",
          path.string() + ": unsupported version " + std::to_string(version));
  const uint32_t hlen = detail::get_u32le(p + 8);
  require(bytes.size() >= 12 + size_t(hlen), "checkpoint-corrupt",
          path.string() + ": truncated JSON header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(12, hlen));
  } catch (const std::exception& e) {
    fail("checkpoint-corrupt", path.string() + ": " + e.what());
  }

  Checkpoint ck;
  ck.kind = header.at("kind").get<std::string>();
  ck.config = header.value("config", nlohmann::json::object());
  const size_t payload = 12 + size_t(hlen);
  for (const auto& e : header.at("tensors")) {
    const auto name = e.at("name").get<std::string>();
    const auto shape = e.at("shape").get<std::vector<int>>();
    const auto offset = e.at("offset").get<uint64_t>();
    const size_t n = numel(shape);
    require(payload + offset + n * 4 <= bytes.size(), "checkpoint-corrupt",
            path.string() + ": tensor '" + name + "' exceeds payload");
    std::vector<float> data(n);
    const auto* q =
        reinterpret_cast<const unsigned char*>(bytes.data() + payload + offset);
    for (size_t i = 0; i < n; ++i) data[i] = detail::get_f32le(q + i * 4);
    ck.tensors.emplace_back(name, from_vec<float>(shape, std::move(data)));
  }
  return ck;
}

}  // namespace lowres
