#include "prefgame/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "prefgame/errors.hpp"
#include "prefgame/rng.hpp"

namespace prefgame {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Iterative DFS over the beats digraph of one prompt; returns a directed
// cycle as soon as a back edge appears.
std::optional<std::vector<int>> find_cycle(const std::vector<std::vector<int>>& adj) {
  int k = static_cast<int>(adj.size());
  std::vector<int> state(k, 0);  // 0 unvisited, 1 on stack, 2 done
  std::vector<int> parent(k, -1);
  for (int root = 0; root < k; ++root) {
    if (state[root] != 0) continue;
    std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
    state[root] = 1;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      if (next < adj[v].size()) {
        int w = adj[v][next++];
        if (state[w] == 1) {
          std::vector<int> cycle{w};
          for (int u = v; u != w; u = parent[u]) cycle.push_back(u);
          std::reverse(cycle.begin() + 1, cycle.end());
          return cycle;
        }
        if (state[w] == 0) {
          state[w] = 1;
          parent[w] = v;
          stack.emplace_back(w, 0);
        }
      } else {
        state[v] = 2;
        stack.pop_back();
      }
    }
  }
  return std::nullopt;
}

}  // namespace

PreferenceFunction bt_oracle(const RewardTable& rewards) {
  ActionSpace actions;
  for (const auto& row : rewards.values) {
    for (double r : row)
      if (!std::isfinite(r)) throw InvalidArgument("bt_oracle: non-finite reward");
    actions.counts.push_back(static_cast<int>(row.size()));
  }
  PreferenceFunction P(actions);
  for (int x = 0; x < P.prompts(); ++x)
    for (int i = 0; i < P.actions(x); ++i)
      for (int j = i + 1; j < P.actions(x); ++j)
        P.set(x, i, j, sigmoid(rewards.values[x][i] - rewards.values[x][j]));
  return P;
}

PreferenceFunction cyclic_oracle(int n_actions, double w) {
  if (n_actions < 3) throw InvalidArgument("cyclic_oracle: need at least 3 actions");
  if (!(w > 0.5 && w <= 1.0)) throw InvalidArgument("cyclic_oracle: w must lie in (0.5, 1]");
  ActionSpace actions{{n_actions}};
  PreferenceFunction P(actions);
  for (int i = 0; i < n_actions; ++i) P.set(0, i, (i + 1) % n_actions, w);
  return P;
}

TransitivityReport transitivity_check(const PreferenceFunction& P, double threshold) {
  if (threshold < 0.0) throw InvalidArgument("transitivity_check: negative threshold");
  TransitivityReport report;
  for (int x = 0; x < P.prompts(); ++x) {
    int k = P.actions(x);
    std::vector<std::vector<int>> adj(k);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        if (a != b && P.at(x, a, b) > 0.5 + threshold) adj[a].push_back(b);
    if (auto cycle = find_cycle(adj)) {
      report.acyclic = false;
      report.prompt = x;
      report.cycle = *cycle;
      return report;
    }
  }
  return report;
}

PreferenceDataset collect(const GameConfig& cfg, const Policy& pD1, const Policy& pD2,
                          const PreferenceFunction& oracle, std::size_t n,
                          std::uint64_t seed) {
  check_policy_shape(cfg, pD1, "collect pD1");
  check_policy_shape(cfg, pD2, "collect pD2");
  check_pref_shape(cfg, oracle, "collect oracle");
  for (int x = 0; x < cfg.prompts.size(); ++x)
    for (int a = 0; a < cfg.actions.counts[x]; ++a)
      if (cfg.pi0.rows[x][a] <= 0.0 &&
          (pD1.rows[x][a] > 0.0 || pD2.rows[x][a] > 0.0))
        throw SupportViolation("collect: behavior policy outside pi0 support");

  CounterRng rng(seed);
  PreferenceDataset d;
  d.seed = seed;
  d.rng_algorithm = kRngAlgorithm;
  d.records.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t base = 4 * i;
    int x = rng.categorical(base, cfg.prompts.d0);
    int a1 = rng.categorical(base + 1, pD1.rows[x]);
    int a2 = rng.categorical(base + 2, pD2.rows[x]);
    int y = rng.uniform(base + 3) < oracle.at(x, a1, a2) ? 1 : 0;
    d.records[i] = PreferenceRecord{x, a1, a2, y};
  }
  return d;
}

std::string dataset_to_string(const PreferenceDataset& d) {
  std::ostringstream out;
  out << "# rng=" << d.rng_algorithm << " seed=" << d.seed << "\n";
  for (const auto& r : d.records)
    out << r.x << ',' << r.a1 << ',' << r.a2 << ',' << r.y << "\n";
  return out.str();
}

PreferenceDataset dataset_from_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("dataset: empty input");
  PreferenceDataset d;
  {
    std::istringstream header(line);
    std::string hash, rng_field, seed_field;
    header >> hash >> rng_field >> seed_field;
    if (hash != "#" || rng_field.rfind("rng=", 0) != 0 || seed_field.rfind("seed=", 0) != 0)
      throw ParseError("dataset: malformed header: " + line);
    d.rng_algorithm = rng_field.substr(4);
    try {
      d.seed = std::stoull(seed_field.substr(5));
    } catch (const std::exception&) {
      throw ParseError("dataset: bad seed: " + seed_field);
    }
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) throw ParseError("dataset: blank line " + std::to_string(lineno));
    PreferenceRecord r{};
    char c1, c2, c3;
    std::istringstream row(line);
    if (!(row >> r.x >> c1 >> r.a1 >> c2 >> r.a2 >> c3 >> r.y) || c1 != ',' ||
        c2 != ',' || c3 != ',' || !(row >> std::ws).eof())
      throw ParseError("dataset: malformed record at line " + std::to_string(lineno));
    if (r.y != 0 && r.y != 1)
      throw ParseError("dataset: label not in {0,1} at line " + std::to_string(lineno));
    if (r.x < 0 || r.a1 < 0 || r.a2 < 0)
      throw ParseError("dataset: negative index at line " + std::to_string(lineno));
    d.records.push_back(r);
  }
  return d;
}

void dataset_save(const PreferenceDataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << dataset_to_string(d);
  if (!out) throw IoError("write failed: " + path);
}

PreferenceDataset dataset_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return dataset_from_string(buf.str());
}

}  // namespace prefgame
