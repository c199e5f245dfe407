#pragma once

#include <utility>
#include <vector>

#include "prefgame/game.hpp"
#include "prefgame/prefclass.hpp"
#include "prefgame/solver.hpp"

namespace prefgame {

struct OfflineConfig {
  double beta = 1.0;    // version-space radius / bonus multiplier, >= 0
  double lambda = 0.1;  // bonus denominator regularizer, > 0
  double delta = 0.1;   // confidence level in (0,1)
  double solver_tol = kSolverTol;
  int solver_max_iter = kSolverMaxIter;
  int mirror_max_iter = 5000;

  void validate() const;
};

// beta = sqrt(2 ln(|class|/delta)), lambda = ln(|class|/delta): the settings
// under which the offline suboptimality bound 4 beta sqrt(C/n) is proved.
std::pair<double, double> offline_hyperparams(int class_size, double delta);

struct OfflineResult {
  Policy policy;
  double pessimistic_value = 0.0;  // conservative value of the output policy
  int mle_index = -1;
  std::vector<int> version_space;  // member indices (empty for the bonus variant)
  int iterations = 0;
  bool hit_iteration_cap = false;
};

// min over the listed members of J_P(p1, p2), exact enumeration.
double pessimistic_pair_value(const GameConfig& cfg, const FiniteClass& cls,
                              const std::vector<int>& indices, const Policy& p1,
                              const Policy& p2);

struct PessimisticEval {
  double value = 0.0;  // min_{P, p2} J_P(p1, p2)
  int member = -1;     // achieving member index
  Policy response;     // achieving Gibbs response
};

// Conservative value of p1: the inner minimum over listed members with the
// closed-form Gibbs response per member.
PessimisticEval pessimistic_value(const GameConfig& cfg, const FiniteClass& cls,
                                  const std::vector<int>& indices, const Policy& p1);

/* Pessimistic equilibrium learning, version-space variant.
 *
 * Fits the MLE, forms the version space at radius beta^2/2, and maximizes the
 * conservative value by mirror ascent (multiplicative updates with uniform
 * averaging; the inner minimum is exact). The Nash policies of the individual
 * version-space members are evaluated as additional candidates and the best
 * candidate under the conservative value is returned.
 */
OfflineResult pelhf_version_space(const FiniteClass& cls, const PreferenceDataset& d,
                                  const GameConfig& cfg, const OfflineConfig& off);

// Pessimistic equilibrium learning, pointwise-bonus variant: solves the
// two-player game with the penalized payoff Phat - beta Gamma.
OfflineResult pelhf_bonus(const FiniteClass& cls, const PreferenceDataset& d,
                          const GameConfig& cfg, const OfflineConfig& off);

struct CoverageResult {
  double value = 0.0;
  bool infinite = false;  // an uncovered direction: zero denominator, nonzero numerator
};

enum class CoverageMethod {
  automatic,   // enumerate when the product of action counts is <= 1e6
  per_prompt,  // per-prompt maximization, both signs (exact)
  enumerate_policies,
};

/* Unilateral coverage of a target max-policy by the data distribution:
 *
 *   max_{p2} sup_P (E_{x~d0}[(P - Phat)(x, target, p2)])^2
 *            / E_{x~d0, a~d1, b~d2}[(P - Phat)(x,a,b)^2],
 *
 * with 0/0 treated as 0. The maximizer over p2 is deterministic; both the
 * per-prompt sign-split maximization and full enumeration are exact.
 */
CoverageResult coverage_coefficient(const FiniteClass& cls, const PreferenceFunction& phat,
                                    const Policy& target, const Policy& d1, const Policy& d2,
                                    const GameConfig& cfg,
                                    CoverageMethod method = CoverageMethod::automatic);

// Variant with the prompt expectation inside the sup: the numerator is the
// per-prompt squared discrepancy, sup over members per prompt, then E_x.
CoverageResult coverage_coefficient_tilde(const FiniteClass& cls,
                                          const PreferenceFunction& phat,
                                          const Policy& target, const Policy& d1,
                                          const Policy& d2, const GameConfig& cfg);

struct RefinedCoverageResult {
  CoverageResult coverage;  // for the fixed probe pair (target, probe)
  double subopt = 0.0;      // pessimistic-value regret of the probe response
};

/* Coverage of the fixed pair (target, probe) plus the probe's conservative
 * suboptimality min_P J_P(target, probe) - min_{P, p2} J_P(target, p2). The
 * class argument is used as the version space; pass version_space(...) output
 * when a dataset is available.
 */
RefinedCoverageResult refined_coverage(const FiniteClass& cls, const PreferenceFunction& phat,
                                       const Policy& target, const Policy& probe,
                                       const Policy& d1, const Policy& d2,
                                       const GameConfig& cfg, const OfflineConfig& off);

}  // namespace prefgame
