#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lowres/depth_frame.hpp"
#include "lowres/image_io.hpp"

namespace lowres {

// Dataset manifests are JSON-lines: one header line followed by one entry per
// frame. Frame paths are relative to the manifest's directory, which keeps
// regenerated datasets byte-identical regardless of where they live.

struct ManifestEntry {
  std::string path;
  std::optional<int> label;  // absent for SR corpus frames
  std::string split;         // "train" | "test"
  std::string task;
  Provenance provenance = Provenance::Synthetic;
};

struct DatasetManifest {
  std::filesystem::path file;  // where this manifest lives (set on load/save)
  std::string task;            // "hand_hygiene" | "icu" | "sr_corpus"
  Provenance provenance = Provenance::Synthetic;
  std::string origin;          // "capture-sim" | "derived"
  uint64_t seed = 0;
  std::string spec_hash;
  DepthRange range;
  nlohmann::json params;  // generator / derivation parameters
  std::vector<ManifestEntry> entries;

  std::filesystem::path resolve(const ManifestEntry& e) const {
    return file.parent_path() / e.path;
  }

  std::vector<size_t> split_indices(const std::string& split) const {
    std::vector<size_t> out;
    for (size_t i = 0; i < entries.size(); ++i)
      if (entries[i].split == split) out.push_back(i);
    return out;
  }
};

inline DepthFrame load_norm_frame(const DatasetManifest& m,
                                  const ManifestEntry& e) {
  auto f = read_frame(m.resolve(e), m.range, e.provenance);
  return normalize_depth(f);
}

inline void save_manifest(const DatasetManifest& m,
                          const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  require(bool(f), "io-error", "cannot open " + path.string() + " for write");
  nlohmann::json header;
  header["type"] = "lowres-manifest";
  header["version"] = 1;
  header["task"] = m.task;
  header["provenance"] = to_string(m.provenance);
  header["origin"] = m.origin;
  header["seed"] = m.seed;
  header["spec_hash"] = m.spec_hash;
  header["depth_min_m"] = m.range.min_m;
  header["depth_max_m"] = m.range.max_m;
  header["params"] = m.params;
  f << header.dump() << "\n";
  for (const auto& e : m.entries) {
    nlohmann::json j;
    j["path"] = e.path;
    if (e.label)
      j["label"] = *e.label;
    else
      j["label"] = nullptr;
    j["split"] = e.split;
    j["task"] = e.task;
    j["provenance"] = to_string(e.provenance);
    f << j.dump() << "\n";
  }
  require(bool(f), "io-error", "short write to " + path.string());
}

// Loads and validates: header well-formed, rows well-formed (errors carry
// line numbers), provenance/task uniform, no path in both splits, every path
// exists and decodes (header-level decode).
inline DatasetManifest load_manifest(const std::filesystem::path& path,
                                     bool check_frames = true) {
  std::ifstream f(path, std::ios::binary);
  require(bool(f), "io-error", "cannot open manifest " + path.string());
  DatasetManifest m;
  m.file = path;

  std::string line;
  require(bool(std::getline(f, line)), "bad-manifest",
          path.string() + ": empty file");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const std::exception& e) {
    fail("bad-manifest", path.string() + " line 1: " + e.what());
  }
  require(header.value("type", "") == "lowres-manifest", "bad-manifest",
          path.string() + " line 1: missing manifest header");
  m.task = header.at("task").get<std::string>();
  m.provenance = provenance_from_string(header.at("provenance"));
  m.origin = header.value("origin", "capture-sim");
  m.seed = header.value("seed", uint64_t(0));
  m.spec_hash = header.value("spec_hash", "");
  m.range.min_m = header.value("depth_min_m", 0.8);
  m.range.max_m = header.value("depth_max_m", 4.0);
  m.params = header.value("params", nlohmann::json::object());

  std::set<std::string> train_paths, test_paths;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      fail("bad-manifest",
           path.string() + " line " + std::to_string(lineno) + ": " + e.what());
    }
    ManifestEntry e;
    try {
      e.path = j.at("path").get<std::string>();
      if (j.contains("label") && !j["label"].is_null())
        e.label = j["label"].get<int>();
      e.split = j.at("split").get<std::string>();
      e.task = j.at("task").get<std::string>();
      e.provenance = provenance_from_string(j.at("provenance"));
    } catch (const std::exception& ex) {
      fail("bad-manifest", path.string() + " line " + std::to_string(lineno) +
                               ": " + ex.what());
    }
    require(e.split == "train" || e.split == "test", "bad-manifest",
            path.string() + " line " + std::to_string(lineno) +
                ": split must be train|test, got '" + e.split + "'");
    require(e.provenance == m.provenance, "bad-manifest",
            path.string() + " line " + std::to_string(lineno) +
                ": mixed provenance tags ('" + to_string(e.provenance) +
                "' vs manifest '" + to_string(m.provenance) + "')");
    require(e.task == m.task, "bad-manifest",
            path.string() + " line " + std::to_string(lineno) +
                ": mixed task tags");
    auto& own = e.split == "train" ? train_paths : test_paths;
    auto& other = e.split == "train" ? test_paths : train_paths;
    require(!other.count(e.path), "bad-manifest",
            path.string() + " line " + std::to_string(lineno) + ": path '" +
                e.path + "' appears in both splits");
    require(own.insert(e.path).second, "bad-manifest",
            path.string() + " line " + std::to_string(lineno) +
                ": duplicate path '" + e.path + "'");
    m.entries.push_back(std::move(e));
  }

  if (check_frames) {
    for (const auto& e : m.entries) {
      const auto p = m.resolve(e);
      require(std::filesystem::exists(p), "bad-manifest",
              path.string() + ": missing frame file " + p.string());
      read_frame_header(p);  // throws if undecodable
    }
  }
  return m;
}

inline std::string file_hash_hex(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  require(bool(f), "io-error", "cannot hash missing file " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  return hex64(fnv1a64(bytes.data(), bytes.size()));
}

}  // namespace lowres
