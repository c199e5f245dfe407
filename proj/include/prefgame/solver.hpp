#pragma once

#include <cstdint>
#include <vector>

#include "prefgame/game.hpp"

namespace prefgame {

inline constexpr double kSolverTol = 1e-8;
inline constexpr int kSolverMaxIter = 100000;

struct NashResult {
  Policy policy;
  double duality_gap = 0.0;  // certified gap of (policy, policy)
  int iterations = 0;
  bool converged = false;
  bool used_fallback = false;  // mirror-descent phase was entered
};

/* Nash solver for a skew-symmetric preference table.
 *
 * Damped fixed-point iteration pi <- (1-gamma) pi + gamma GibbsBR(pi) on the
 * stationarity condition pi(a|x) prop pi0(a|x) exp(eta P(x,a,pi)), with the
 * duality gap evaluated every iteration as the stopping certificate. If the
 * gap stops improving for 50 iterations, falls back to mirror-descent
 * self-play (Gibbs-tilted multiplicative updates); both the last iterate and
 * the uniform iterate average are checked against the certificate.
 */
NashResult solve_nash(const GameConfig& cfg, const PreferenceFunction& P,
                      double tol = kSolverTol, int max_iter = kSolverMaxIter);

struct CoincideReport {
  NashResult max_side;
  NashResult min_side;
  double distance = 0.0;  // max-norm between the two Nash policies
  bool passed = false;    // distance <= 10 tol
};

// Solves from the max-player side and, via J(p1,p2) = 1 - J(p2,p1), from the
// min-player side, and compares the two equilibria.
CoincideReport nash_players_coincide_check(const GameConfig& cfg, const PreferenceFunction& P,
                                           double tol = kSolverTol);

// General (not necessarily skew-symmetric) payoff table G(x,a,b).
struct PayoffTable {
  std::vector<int> counts;                // actions per prompt
  std::vector<std::vector<double>> values;  // values[x][a*k+b]

  static PayoffTable from_preference(const PreferenceFunction& P);
  double at(int x, int a, int b) const { return values[x][a * counts[x] + b]; }
  double& at(int x, int a, int b) { return values[x][a * counts[x] + b]; }
};

// E_{x~d0}[ G(x,p1,p2) - KL(p1|pi0)/eta + KL(p2|pi0)/eta ].
double payoff_game_value(const GameConfig& cfg, const PayoffTable& G, const Policy& p1,
                         const Policy& p2);
double payoff_duality_gap(const GameConfig& cfg, const PayoffTable& G, const Policy& p1,
                          const Policy& p2);

struct GameSolveResult {
  Policy p1;
  Policy p2;
  double duality_gap = 0.0;
  int iterations = 0;
  bool converged = false;
  bool used_fallback = false;
};

// Saddle point of the KL-regularized game with payoff G: the same damped
// fixed-point / mirror-descent scheme run on the policy pair.
GameSolveResult solve_game(const GameConfig& cfg, const PayoffTable& G,
                           double tol = kSolverTol, int max_iter = kSolverMaxIter);

// One composite mirror step on a simplex row:
// log p' = (log p + r log pi0)/(1+r) + sign alpha score/(1+r), r = alpha/eta.
// The pi0 leak keeps iterates inside the support; alpha <= eta required.
std::vector<double> mirror_step_row(const std::vector<double>& prow,
                                    const std::vector<double>& pi0row,
                                    const std::vector<double>& score, double alpha,
                                    double eta, BrSign sign);

/* Exact population value of the self-play IPO loss
 *
 *   E_{x~d0, a,a'~pi} [ Phat(a,a') (h(a,a') - eta/2)^2
 *                     + Phat(a',a) (h(a',a) - eta/2)^2 ],
 *   h(u,v) = ln( pi(u|x) pi0(v|x) / (pi(v|x) pi0(u|x)) ).
 *
 * The residual target eta/2 makes the population minimizer the Nash policy
 * of the eta^-1-KL game (sources stating the loss with target 1/(2 tau) use
 * a tau KL penalty; tau = eta^-1 here). Zero-probability pairs contribute 0.
 */
double ipo_population_loss(const GameConfig& cfg, const Policy& pi,
                           const PreferenceFunction& phat);

// Gradient descent on the loss over per-prompt logits (softmax), sampling
// measure refreshed each step and excluded from the gradient; backtracking
// line search; certified afterwards by duality_gap <= tol.
NashResult ipo_solve(const GameConfig& cfg, const PreferenceFunction& phat,
                     double tol = 1e-3, int max_iter = kSolverMaxIter);

}  // namespace prefgame
