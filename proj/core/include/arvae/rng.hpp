#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace arvae {

using Rng = std::mt19937_64;

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 1099511628211ull;
  }
  return h;
}

// Independent deterministic stream for a named purpose. Keeps samplers,
// weight init and data synthesis decoupled from each other.
inline Rng named_rng(std::uint64_t seed, std::string_view name) {
  return Rng(seed ^ fnv1a(name));
}

}  // namespace arvae
