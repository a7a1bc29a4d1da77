#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lowres/common.hpp"

namespace lowres {

// Resolution-based privacy tiers. Strong: faces indiscernible (<= 15 px on
// the longer side); Weak: face region resolution-limited (<= 56 px); None
// otherwise.
enum class Privacy { None = 0, Weak = 1, Strong = 2 };

enum class Provenance { Public, Private, Synthetic };

inline const char* to_string(Privacy p) {
  switch (p) {
    case Privacy::Strong: return "strong";
    case Privacy::Weak: return "weak";
    default: return "none";
  }
}

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::Public: return "public";
    case Provenance::Private: return "private";
    default: return "synthetic";
  }
}

inline Privacy privacy_from_string(const std::string& s) {
  if (s == "strong") return Privacy::Strong;
  if (s == "weak") return Privacy::Weak;
  if (s == "none") return Privacy::None;
  fail("bad-privacy", "unknown privacy level '" + s + "'");
}

inline Provenance provenance_from_string(const std::string& s) {
  if (s == "public") return Provenance::Public;
  if (s == "private") return Provenance::Private;
  if (s == "synthetic") return Provenance::Synthetic;
  fail("bad-provenance", "unknown provenance '" + s + "'");
}

inline constexpr int kStrongThreshold = 15;
inline constexpr int kWeakThreshold = 56;

// Full-resolution frame side for the whole pipeline: capture simulation
// renders at this size and super-resolution may not exceed it.
inline constexpr int kFullResSide = 224;

inline Privacy privacy_level(int width, int height,
                             int strong_threshold = kStrongThreshold,
                             int weak_threshold = kWeakThreshold) {
  require(width > 0 && height > 0, "bad-dimension",
          "privacy_level: dims must be positive");
  const int side = std::max(width, height);
  if (side <= strong_threshold) return Privacy::Strong;
  if (side <= weak_threshold) return Privacy::Weak;
  return Privacy::None;
}

struct DepthRange {
  double min_m = 0.8;
  double max_m = 4.0;
};

// Single-channel depth image. Exactly one of `raw` (16-bit millimeters,
// 0 = no return) or `norm` (floats in [0,1]) is populated.
struct DepthFrame {
  int width = 0;
  int height = 0;
  std::vector<uint16_t> raw;
  std::vector<float> norm;
  DepthRange range;
  Privacy privacy = Privacy::None;
  Provenance provenance = Provenance::Synthetic;
  // set on super-resolved frames: the tier of the low-res data they came from
  std::optional<Privacy> derived_from;

  bool is_normalized() const { return !norm.empty(); }
  size_t pixels() const { return size_t(width) * height; }
};

inline DepthFrame make_raw_frame(int width, int height,
                                 std::vector<uint16_t> data,
                                 DepthRange range = {},
                                 Provenance prov = Provenance::Synthetic) {
  require(width > 0 && height > 0, "bad-dimension",
          "make_raw_frame: dims must be positive");
  require(data.size() == size_t(width) * height, "bad-dimension",
          "make_raw_frame: buffer size does not match dims");
  require(range.min_m < range.max_m, "bad-depth-range",
          "make_raw_frame: min_m must be < max_m");
  DepthFrame f;
  f.width = width;
  f.height = height;
  f.raw = std::move(data);
  f.range = range;
  f.privacy = privacy_level(width, height);
  f.provenance = prov;
  return f;
}

inline DepthFrame make_norm_frame(int width, int height,
                                  std::vector<float> data,
                                  DepthRange range = {},
                                  Provenance prov = Provenance::Synthetic) {
  require(width > 0 && height > 0, "bad-dimension",
          "make_norm_frame: dims must be positive");
  require(data.size() == size_t(width) * height, "bad-dimension",
          "make_norm_frame: buffer size does not match dims");
  for (float& v : data) v = std::min(1.0f, std::max(0.0f, v));
  DepthFrame f;
  f.width = width;
  f.height = height;
  f.norm = std::move(data);
  f.range = range;
  f.privacy = privacy_level(width, height);
  f.provenance = prov;
  return f;
}

// Linear map of [min_m, max_m] to [0,1], clamped; the sensor no-return
// sentinel (raw 0) maps to 0.
inline DepthFrame normalize_depth(const DepthFrame& frame) {
  require(!frame.raw.empty(), "bad-frame",
          "normalize_depth: frame has no raw data");
  require(frame.range.min_m < frame.range.max_m, "bad-depth-range",
          "normalize_depth: invalid depth range");
  const double lo = frame.range.min_m * 1000.0;
  const double span = (frame.range.max_m - frame.range.min_m) * 1000.0;
  std::vector<float> out(frame.pixels());
  for (size_t i = 0; i < out.size(); ++i) {
    const uint16_t r = frame.raw[i];
    if (r == 0) {
      out[i] = 0.0f;
      continue;
    }
    const double v = (double(r) - lo) / span;
    out[i] = float(std::min(1.0, std::max(0.0, v)));
  }
  DepthFrame f = make_norm_frame(frame.width, frame.height, std::move(out),
                                 frame.range, frame.provenance);
  f.derived_from = frame.derived_from;
  return f;
}

// Inverse of normalize_depth for persistence of derived frames.
inline DepthFrame denormalize_depth(const DepthFrame& frame) {
  require(frame.is_normalized(), "bad-frame",
          "denormalize_depth: frame has no normalized data");
  const double lo = frame.range.min_m * 1000.0;
  const double span = (frame.range.max_m - frame.range.min_m) * 1000.0;
  std::vector<uint16_t> out(frame.pixels());
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = uint16_t(std::lround(lo + span * double(frame.norm[i])));
  DepthFrame f = make_raw_frame(frame.width, frame.height, std::move(out),
                                frame.range, frame.provenance);
  f.derived_from = frame.derived_from;
  return f;
}

inline bool meets_policy(Privacy level, Privacy required) {
  return int(level) >= int(required);
}

// Gate applied by every pipeline stage that persists frames: passes iff the
// frame's resolution tier meets or exceeds the policy.
inline void privacy_gate(const DepthFrame& frame, Privacy required) {
  if (!meets_policy(frame.privacy, required))
    fail("privacy-violation",
         "frame " + std::to_string(frame.width) + "x" +
             std::to_string(frame.height) + " is " + to_string(frame.privacy) +
             ", policy requires " + to_string(required));
}

}  // namespace lowres
