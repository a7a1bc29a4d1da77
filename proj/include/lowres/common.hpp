#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lowres {

// All library failures surface as Error with a short machine-readable slug
// plus a human-readable detail. The CLI prints `error: <slug>: <detail>` on
// one line and exits nonzero.
class Error : public std::runtime_error {
public:
  Error(std::string slug, const std::string& detail)
      : std::runtime_error(slug + ": " + detail), slug_(std::move(slug)) {}

  const std::string& slug() const { return slug_; }

private:
  std::string slug_;
};

[[noreturn]] inline void fail(const std::string& slug, const std::string& detail) {
  throw Error(slug, detail);
}

inline void require(bool ok, const std::string& slug, const std::string& detail) {
  if (!ok) fail(slug, detail);
}

inline uint64_t fnv1a64(const void* data, size_t n,
                        uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline uint64_t fnv1a64(const std::string& s,
                        uint64_t h = 1469598103934665603ull) {
  return fnv1a64(s.data(), s.size(), h);
}

inline std::string hex64(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace lowres
