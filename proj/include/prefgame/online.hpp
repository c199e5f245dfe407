#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "prefgame/game.hpp"
#include "prefgame/oracle.hpp"
#include "prefgame/prefclass.hpp"
#include "prefgame/rng.hpp"
#include "prefgame/solver.hpp"

namespace prefgame {

enum class EnhancerMode { max_uncertainty, kl_restricted, best_of_n };

const char* enhancer_mode_name(EnhancerMode mode);
EnhancerMode parse_enhancer_mode(const std::string& name);

struct OnlineConfig {
  int iterations = 1;  // T
  int batch_size = 1;  // m
  double lambda = 1.0;
  double beta = 0.0;
  EnhancerMode enhancer_mode = EnhancerMode::max_uncertainty;
  int bon_n = 8;         // bracket size for best_of_n
  int candidates = 64;   // candidate-set cap for kl_restricted
  std::uint64_t seed = 0;
  double solver_tol = kSolverTol;
  int solver_max_iter = kSolverMaxIter;

  void validate() const;
};

// T = min{n >= 1 : n >= 2 d_est(n)}, m = ceil(18 T ln(2T k/delta)/eps^2),
// beta = sqrt(2T ln(2T k/delta)/m), lambda = beta^2 (the settings under which
// the batch-online guarantee is proved, with d_est standing in for the eluder
// coefficient at horizon n).
struct OnlineSchedule {
  int T = 0;
  int m = 0;
  double beta = 0.0;
  double lambda = 0.0;
};
OnlineSchedule online_hyperparams(int class_size, double delta, double epsilon,
                                  const std::function<double(int)>& d_est);
OnlineSchedule online_hyperparams(int class_size, double delta, double epsilon,
                                  double d_est_const);

/* Enhancer maximizing the empirical pair bonus against the main policy.
 *
 * For each class member and sign the numerator is linear in the opponent's
 * per-prompt rows, so its maximizer is deterministic (argmax per prompt, ties
 * to the lowest action); the full bonus of each such candidate is evaluated
 * exactly and the first maximizer wins (member index, then sign +, then the
 * lowest-action default).
 */
Policy max_uncertainty_enhancer(const FiniteClass& cls, const PreferenceFunction& phat,
                                const PreferenceDataset& history, double lambda, int m,
                                const Policy& main, const GameConfig& cfg);

/* KL-restricted enhancer: generates candidates (main itself, the Gibbs
 * response to main under phat, Gibbs tilts of main at temperatures
 * {0.25,0.5,1,2,4} eta against each member's scores, and the best-of-n
 * policies for n in {2,4,8} ranked by phat), keeps those with
 *   eta^-1 E_x KL(pi | main) <= beta (bonus(main, pi) + bonus(main, main)),
 * and returns the survivor with the largest bonus (ties to the earliest
 * candidate, so main wins when nothing improves). The candidate list is
 * truncated to `candidates` entries; main always survives the filter.
 */
Policy kl_restricted_enhancer(const FiniteClass& cls, const PreferenceFunction& phat,
                              const PreferenceDataset& history, double lambda, int m,
                              double beta, const Policy& main, const GameConfig& cfg,
                              int candidates);

/* Exact winner distribution of a single-elimination bracket over n i.i.d.
 * draws from `main`, matches decided by rank(x,a,b) > 0.5 with ties going to
 * the earlier slot. n must be a power of two; the distribution is computed by
 * doubling (the level-2k distribution is a pairing convolution of level k),
 * exact for every n.
 */
Policy best_of_n_policy(const Policy& main, const PreferenceFunction& rank, int n,
                        const GameConfig& cfg);

// Seed-deterministic single draw from the bracket: consumes exactly n
// categorical draws at indices index0 .. index0+n-1 of the counter stream.
int best_of_n_sample(const Policy& main, const PreferenceFunction& rank, int n, int x,
                     const CounterRng& rng, std::uint64_t index0);

struct OnlineIteration {
  int t = 0;  // 1-based
  int mle_index = 0;
  Policy main_policy;
  Policy enhancer_policy;
  PreferenceDataset batch;
  double pair_bonus = 0.0;          // realized bonus at (main, enhancer)
  double main_gap_true = 0.0;       // duality gap of (main, main) under the env oracle
  double in_sample_error = 0.0;     // discrepancy of phat on its fitting data
  double enhancer_log_ratio = 0.0;  // realized max |ln(enhancer/pi0)|, recorded unclipped
};

struct OnlineTrace {
  std::vector<OnlineIteration> iterations;
  std::uint64_t seed = 0;
  bool aborted = false;  // a solve failed; iterations holds the completed prefix
  std::string error;
};

/* Batch-online loop: per round, fit the MLE on all data so far (empty-data
 * ties resolve to member 0), solve the game under the fitted table for the
 * main policy, pick the enhancer by the configured mode, then collect
 * batch_size labeled pairs from (main, enhancer) under the environment
 * oracle with the round's derived seed. Fully deterministic given the seed.
 */
OnlineTrace oelhf_run(const PreferenceFunction& env, const FiniteClass& cls,
                      const GameConfig& cfg, const OnlineConfig& online);

struct CheckpointChoice {
  int index = 0;  // the winning round's t (1-based)
  Policy policy;
};

// argmax_t of the exactly evaluated J(main_t, best response) under the
// validation oracle; ties to the earliest round.
CheckpointChoice select_checkpoint(const OnlineTrace& trace, const PreferenceFunction& oracle,
                                   const GameConfig& cfg);

struct EluderDiagnostic {
  std::vector<double> per_step;  // min(1, ratio_t^2)
  std::vector<double> running_sum;
};

// Exact information ratios along a trace: numerator sup_P |E_x (P - phat_t)|
// at the round's behavior pair, denominator accumulating the population
// discrepancies over all earlier behavior pairs (no 1/m scaling).
EluderDiagnostic eluder_diagnostic(const OnlineTrace& trace, const FiniteClass& cls,
                                   double lambda, const GameConfig& cfg);

}  // namespace prefgame
