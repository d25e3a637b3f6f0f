#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

namespace lepf {

/// SplitMix64 (Steele, Lea, Flood 2014). Satisfies UniformRandomBitGenerator.
/// Seeding is a single word, which makes it cheap to spin up one generator per
/// (replicate, step, particle) key.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Finalizer of SplitMix64; used to fold keys into a seed.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Uniform double in [0, 1) with 53 random bits.
template <class Engine>
double uniform01(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

__extension__ typedef unsigned __int128 uint128;

/// Uniform integer in [0, bound) by multiply-shift; bias is below bound / 2^64.
template <class Engine>
std::uint64_t uniform_index(Engine& engine, std::uint64_t bound) {
  return static_cast<std::uint64_t>((static_cast<uint128>(engine()) * bound) >> 64);
}

/// Keyed random streams derived from a 64-bit master seed.
///
/// Every draw in a particle filter run is taken from the generator returned by
/// `particle(replicate, step, index)`. Because the key fully determines the
/// generator, results do not depend on how work is split across threads.
///
/// `particle_salts` (optional, indexed by particle) perturbs the streams of
/// chosen particles only. It exists so tests can change the randomness of one
/// group and check that another group is unaffected.
class RngStream {
 public:
  explicit RngStream(std::uint64_t master_seed, std::vector<std::uint64_t> particle_salts = {})
      : master_(master_seed), salts_(std::move(particle_salts)) {}

  std::uint64_t master_seed() const noexcept { return master_; }

  /// Generator for particle `index` at time `step` of replicate `replicate`.
  SplitMix64 particle(std::uint64_t replicate, std::uint64_t step, std::uint64_t index) const {
    std::uint64_t seed = key(replicate, step, index);
    if (index < salts_.size() && salts_[index] != 0) seed ^= mix64(salts_[index]);
    return SplitMix64(seed);
  }

  /// Generator for an auxiliary purpose (`tag`) of a replicate, e.g. observation
  /// simulation or chain sampling.
  SplitMix64 auxiliary(std::uint64_t replicate, std::uint64_t tag) const {
    return SplitMix64(key(replicate, ~tag, 0xA5A5A5A5A5A5A5A5ULL));
  }

  /// Seed of replicate `replicate` when it is re-rooted as its own master stream.
  std::uint64_t replicate_seed(std::uint64_t replicate) const {
    return key(replicate, 0xFFFFFFFFFFFFFFFFULL, 0x5DEECE66DULL);
  }

 private:
  std::uint64_t key(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
    std::uint64_t h = mix64(master_);
    h = mix64(h ^ a);
    h = mix64(h ^ (b * 0xD1B54A32D192ED03ULL));
    h = mix64(h ^ (c * 0xABC98388FB8FAC03ULL));
    return h;
  }

  std::uint64_t master_;
  std::vector<std::uint64_t> salts_;
};

}  // namespace lepf
