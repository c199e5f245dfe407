#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prefgame/io.hpp"
#include "prefgame/offline.hpp"
#include "prefgame/online.hpp"

namespace prefgame {

// Worker count for parallel replicates: PREFGAME_WORKERS if set (>= 1),
// otherwise the hardware concurrency. Parallelism never changes output bytes.
int worker_count();

/* Experiment configuration file:
 *
 *   [experiment]  instance, class, oracle, algorithm, replicates, base_seed,
 *                 output, summary (optional; default "<output>.csv")
 *   [offline]     n, behavior, beta, lambda, delta, auto_hyperparams
 *   [online]      iterations, batch_size, lambda, beta, delta, epsilon,
 *                 d_est, enhancer, bon_n, candidates, auto_hyperparams
 *   [sweep]       values (optional; offline: dataset sizes, online: batch sizes)
 *
 * Exactly the block matching the algorithm is required. The parser is strict.
 */
struct ExperimentConfig {
  enum class Algorithm { offline_vs, offline_bonus, online };

  std::string instance_path;
  std::string class_path;
  std::string oracle_spec = "instance";
  Algorithm algorithm = Algorithm::offline_vs;
  int replicates = 1;
  std::uint64_t base_seed = 0;
  std::string output_path;   // JSON-lines records; empty = do not write
  std::string summary_path;  // CSV summary; empty = "<output>.csv"

  // Offline blocks.
  int data_n = 200;
  std::string behavior = "uniform";  // uniform | pi0
  double delta = 0.1;
  bool auto_hyperparams = false;
  OfflineConfig offline;

  // Online blocks.
  double epsilon = 0.1;
  double d_est = 1.0;
  OnlineConfig online;

  std::vector<int> sweep_values;

  void validate() const;
};

const char* algorithm_name(ExperimentConfig::Algorithm a);
ExperimentConfig::Algorithm parse_algorithm(const std::string& name);

ExperimentConfig experiment_from_string(const std::string& text);
ExperimentConfig experiment_load(const std::string& path);

// "section.key=value" override, e.g. "experiment.replicates=4". Applied after
// parsing with the same validation; unknown keys are errors.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

struct ReplicateResult {
  int run = 0;          // replicate index within its sweep value
  int sweep_value = 0;  // dataset size (offline) or batch size (online)
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<std::string> json_lines;

  // Run-level metrics backing the CSV summary.
  double subopt = 0.0;
  double duality_gap = 0.0;
  double in_sample_error = 0.0;
  double coverage = 0.0;
  bool coverage_infinite = false;
  double bound = 0.0;
  bool bound_infinite = false;
  bool satisfied = false;
};

struct ExperimentReport {
  std::vector<ReplicateResult> replicates;  // sweep order, then replicate order
  int failed = 0;
  std::string jsonl;
  std::string summary_csv;
};

// Runs all replicates (parallel up to worker_count(), outputs buffered and
// emitted in order), writes output/summary files when paths are set, and
// reports wall time on stderr only.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

}  // namespace prefgame
