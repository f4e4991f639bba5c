#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pcbdet {

// User/configuration mistakes: bad shapes, bad config values, missing files.
// CLI maps these to exit code 1.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric contract violations: NaN/Inf escaping a primitive, diverged loss.
// CLI maps these to exit code 2.
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// I/O and other runtime failures. CLI maps these to exit code 2.
class RuntimeError : public std::runtime_error {
public:
  explicit RuntimeError(const std::string& msg) : std::runtime_error(msg) {}
};

// FNV-1a 64-bit, used for content hashes in weight/run manifests and for
// deriving per-name/per-sample RNG streams.
inline std::uint64_t fnv1a64(const void* bytes, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  return fnv1a64(s.data(), s.size());
}

// splitmix64 finalizer; good avalanche for combining seeds with stream ids.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream));
}

std::string hex64(std::uint64_t v);

}  // namespace pcbdet
