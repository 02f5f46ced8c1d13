#pragma once

#include <cstdint>
#include <random>

namespace swag {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for the index-th sub-stream of `base`.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
  return base ^ mix64(index);
}

// Stream tags keep the generation stream, fold streams and split stream apart.
inline constexpr std::uint64_t kFoldStreamTag = 0x666f6c6473ULL;       // "folds"
inline constexpr std::uint64_t kGenerationStreamTag = 0x67656e6572ULL;  // "gener"
inline constexpr std::uint64_t kSplitStreamTag = 0x73706c6974ULL;       // "split"

}  // namespace swag
