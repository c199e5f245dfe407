#pragma once

#include <cstdint>
#include <vector>

namespace prefgame {

// Algorithm identifier recorded in dataset headers.
inline constexpr const char* kRngAlgorithm = "splitmix64";

// SplitMix64 finalizer (Steele, Lea & Flood; the Java SplittableRandom mixer).
std::uint64_t mix64(std::uint64_t z);

/* Counter-mode SplitMix64.
 *
 * The i-th output is mix64(seed + (i+1)*GAMMA), i.e. the stream a sequential
 * SplitMix64 generator would produce, but addressable by index. Random access
 * is what makes index-range splitting of a collection job byte-identical to a
 * sequential run.
 */
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t raw(std::uint64_t index) const;

  // Uniform on [0,1) with 53 random bits.
  double uniform(std::uint64_t index) const;

  // Inverse-CDF draw from an unnormalized nonnegative weight vector.
  int categorical(std::uint64_t index, const std::vector<double>& weights) const;

 private:
  std::uint64_t seed_;
};

// Deterministic sub-stream seed for (seed, tag) pairs, e.g. per-iteration
// batches inside a run.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

}  // namespace prefgame
