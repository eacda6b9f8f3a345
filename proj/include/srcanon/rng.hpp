#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace srcanon {

// Seeded generator with derivable sub-streams.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. Every transform from raw bits to a variate is done here rather
// than through <random> distributions, whose algorithms are left to the
// library vendor, so a (seed, stream path) pair reproduces bit-exactly on
// any conforming toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Independent child stream. The child seed is a SplitMix64 mix of the
  // parent seed and the stream id, so it does not depend on how many draws
  // the parent has made.
  Rng derive(std::uint64_t stream) const;
  Rng derive(std::string_view name) const;

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer on [0, bound); bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

// 64-bit FNV-1a; stable across platforms, used for stream names and spec hashes.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace srcanon
