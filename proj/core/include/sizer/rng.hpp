// Seed derivation and the random engine used throughout.
#pragma once

#include <concepts>
#include <cstdint>
#include <random>
#include <string_view>

namespace sizer {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Independent child seed for a (parent, index...) path.
template <std::integral... Ts>
std::uint64_t derive_seed(std::uint64_t parent, Ts... path) noexcept {
  std::uint64_t h = splitmix64(parent);
  ((h = splitmix64(h ^ static_cast<std::uint64_t>(path))), ...);
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag) noexcept {
  return splitmix64(splitmix64(parent) ^ fnv1a(tag));
}

}  // namespace sizer
