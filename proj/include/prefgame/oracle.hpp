#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "prefgame/game.hpp"

namespace prefgame {

struct RewardTable {
  std::vector<std::vector<double>> values;  // values[x][a], finite
};

// P(x,a1,a2) = sigmoid(R(x,a1) - R(x,a2)); always transitive.
PreferenceFunction bt_oracle(const RewardTable& rewards);

// Single-prompt cyclic tournament on k >= 3 actions: action i beats action
// (i+1) mod k with probability w in (0.5, 1]; every other distinct pair is
// 0.5. The canonical intransitive oracle (no reward table realizes it).
PreferenceFunction cyclic_oracle(int n_actions, double w);

struct TransitivityReport {
  bool acyclic = true;
  int prompt = -1;             // prompt carrying the witness cycle
  std::vector<int> cycle;      // first directed cycle found, as action indices
};

// Builds, per prompt, the digraph with edge a->b iff P(x,a,b) > 0.5+threshold
// and returns the first directed cycle (DFS order) or acyclic.
TransitivityReport transitivity_check(const PreferenceFunction& P,
                                      double threshold = 1e-9);

struct PreferenceRecord {
  int x;
  int a1;
  int a2;
  int y;  // 1 iff a1 preferred
};

struct PreferenceDataset {
  std::vector<PreferenceRecord> records;
  std::uint64_t seed = 0;
  std::string rng_algorithm;    // identifier of the generator that produced it
  std::string behavior1;        // diagnostic labels, not serialized
  std::string behavior2;

  std::size_t size() const { return records.size(); }
};

/* n i.i.d. records with x ~ d0, a1 ~ pD1(.|x), a2 ~ pD2(.|x),
 * y ~ Bernoulli(oracle(x,a1,a2)). Record i consumes exactly the counter
 * indices 4i..4i+3, so any index-range split reproduces the sequential
 * output byte for byte.
 */
PreferenceDataset collect(const GameConfig& cfg, const Policy& pD1, const Policy& pD2,
                          const PreferenceFunction& oracle, std::size_t n,
                          std::uint64_t seed);

// Serialization: "# rng=<alg> seed=<seed>" header, then one "x,a1,a2,y" line
// per record. Round-trips bit-exactly.
std::string dataset_to_string(const PreferenceDataset& d);
PreferenceDataset dataset_from_string(const std::string& text);
void dataset_save(const PreferenceDataset& d, const std::string& path);
PreferenceDataset dataset_load(const std::string& path);

}  // namespace prefgame
