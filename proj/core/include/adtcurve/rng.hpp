#pragma once

#include <cstdint>
#include <random>

namespace adt {

// Salts for independent substream families. Every parallel unit of work draws
// its randomness from substream(master, salt, index) so that results do not
// depend on scheduling or worker count.
namespace salt {
inline constexpr std::uint64_t kTree = 0x7472656521ULL;
inline constexpr std::uint64_t kFolds = 0x666f6c6473ULL;
inline constexpr std::uint64_t kTuning = 0x74756e65ULL;
inline constexpr std::uint64_t kBootWeights = 0x77656967687473ULL;
inline constexpr std::uint64_t kBootFit = 0x626f6f74666974ULL;
inline constexpr std::uint64_t kBootRetry = 0x7265747279ULL;
inline constexpr std::uint64_t kSimCovariates = 0x636f76ULL;
inline constexpr std::uint64_t kSimOutcome = 0x6f7574636f6d65ULL;
inline constexpr std::uint64_t kNuisance = 0x6e756973ULL;
}  // namespace salt

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive an independent substream seed from (master, salt, index).
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t salt,
                                    std::uint64_t index = 0) {
  return splitmix64(splitmix64(master ^ salt) + index);
}

inline std::mt19937_64 make_engine(std::uint64_t master, std::uint64_t salt,
                                   std::uint64_t index = 0) {
  return std::mt19937_64(substream_seed(master, salt, index));
}

}  // namespace adt
