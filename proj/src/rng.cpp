#include "prefgame/rng.hpp"

#include "prefgame/errors.hpp"

namespace prefgame {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t CounterRng::raw(std::uint64_t index) const {
  return mix64(seed_ + (index + 1) * kGamma);
}

double CounterRng::uniform(std::uint64_t index) const {
  return static_cast<double>(raw(index) >> 11) * 0x1.0p-53;
}

int CounterRng::categorical(std::uint64_t index, const std::vector<double>& weights) const {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw InvalidArgument("categorical: negative weight");
    total += w;
  }
  if (total <= 0.0) throw InvalidArgument("categorical: zero total weight");
  double u = uniform(index) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return mix64(seed ^ mix64(tag + kGamma));
}

}  // namespace prefgame
