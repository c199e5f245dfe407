#pragma once

#include <vector>

namespace prefgame {

/* Tabular two-player preference game.
 *
 * Prompts x carry weights d0(x); each prompt has a finite action set. A
 * preference function P gives P(x,a1,a2) = Pr[a1 preferred to a2 | x] with
 * the skew-symmetry P(x,a1,a2) = 1 - P(x,a2,a1). The objective is
 *
 *   J(p1,p2) = E_{x~d0}[ P(x,p1,p2) - KL(p1|pi0)/eta + KL(p2|pi0)/eta ],
 *
 * maximized over p1 and minimized over p2. Best responses have the Gibbs
 * closed form pi(a|x) prop pi0(a|x) exp(+-eta score(a)); the duality gap
 * J(dagger,p2) - J(p1,dagger) certifies Nash points.
 */

// Simplex rows are accepted if they sum to 1 within this and renormalized.
inline constexpr double kSimplexTol = 1e-12;

struct PromptSpace {
  std::vector<double> d0;  // prompt weights, a probability vector
  int size() const { return static_cast<int>(d0.size()); }
};

struct ActionSpace {
  std::vector<int> counts;  // |A(x)| per prompt, each >= 2
  int size() const { return static_cast<int>(counts.size()); }
};

struct Policy {
  std::vector<std::vector<double>> rows;  // rows[x][a] = pi(a|x)
  int prompts() const { return static_cast<int>(rows.size()); }
};

// Per-prompt preference table storing only the strict upper triangle; the
// diagonal is 0.5 and the lower triangle is derived, so skew-symmetry holds
// exactly by construction.
class PreferenceFunction {
 public:
  PreferenceFunction() = default;
  explicit PreferenceFunction(const ActionSpace& actions);  // all entries 0.5

  double at(int x, int i, int j) const;
  void set(int x, int i, int j, double value);  // writes the skew pair

  int prompts() const { return static_cast<int>(actions_.size()); }
  int actions(int x) const { return actions_[x]; }
  ActionSpace action_space() const { return ActionSpace{actions_}; }

  // Strict-upper-triangle storage, row-major per prompt (serialization order).
  const std::vector<double>& upper(int x) const { return upper_[x]; }
  std::vector<double>& upper(int x) { return upper_[x]; }

  bool same_shape(const PreferenceFunction& other) const;

 private:
  std::vector<int> actions_;
  std::vector<std::vector<double>> upper_;
};

struct GameConfig {
  PromptSpace prompts;
  ActionSpace actions;
  Policy pi0;   // strictly positive on every declared action
  double eta;   // KL coefficient, > 0

  // Checks invariants and renormalizes d0 / pi0 rows within kSimplexTol.
  void validate();
};

enum class BrSign { max = +1, min = -1 };

// KL(p||q) with 0 ln 0 = 0; throws SupportViolation if p puts mass where q=0.
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q);

// Sum_{a1,a2} p1[a1] p2[a2] P(x,a1,a2), evaluated so that the self-play value
// is exactly 0.5: 0.5 + sum_{i<j} (P(x,i,j) - 0.5)(p1[i]p2[j] - p1[j]p2[i]).
double expected_preference(const PreferenceFunction& P, int x,
                           const std::vector<double>& p1,
                           const std::vector<double>& p2);

double game_value(const GameConfig& cfg, const PreferenceFunction& P,
                  const Policy& p1, const Policy& p2);

// Gibbs row pi(a) prop pi0row[a] exp(sign eta score[a]) via log-sum-exp.
std::vector<double> gibbs_row(const std::vector<double>& pi0row,
                              const std::vector<double>& score, double eta,
                              BrSign sign);

// Per-prompt closed-form best response; exact argmax (sign=max) or argmin
// (sign=min) of the linear-plus-KL objective.
std::vector<double> gibbs_best_response(const GameConfig& cfg, int x,
                                        const std::vector<double>& score,
                                        BrSign sign);

// Opponent-averaged scores: row a -> E_{b~opp(.|x)} P(x,a,b) when opp sits in
// slot 2, or b -> E_{a~opp(.|x)} P(x,a,b) when opp sits in slot 1.
std::vector<double> opponent_score(const PreferenceFunction& P, int x,
                                   const std::vector<double>& opponent,
                                   int opponent_slot);

// Exact best-response policies against a fixed opponent.
Policy best_response_max(const GameConfig& cfg, const PreferenceFunction& P,
                         const Policy& p2);
Policy best_response_min(const GameConfig& cfg, const PreferenceFunction& P,
                         const Policy& p1);

// J(dagger,p2) - J(p1,dagger); nonnegative, small negatives clamped to 0.
double duality_gap(const GameConfig& cfg, const PreferenceFunction& P,
                   const Policy& p1, const Policy& p2);

// Shape checks shared by the modules.
void check_policy_shape(const GameConfig& cfg, const Policy& p, const char* what);
void check_pref_shape(const GameConfig& cfg, const PreferenceFunction& P, const char* what);

}  // namespace prefgame
