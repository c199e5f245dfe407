#include "prefgame/game.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "prefgame/errors.hpp"

namespace prefgame {

namespace {

// Index of (i,j), i<j, in the row-major strict upper triangle of a k x k table.
inline std::size_t tri_index(int i, int j, int k) {
  return static_cast<std::size_t>(i) * k - static_cast<std::size_t>(i) * (i + 1) / 2 +
         (j - i - 1);
}

void normalize_row(std::vector<double>& row, const char* what) {
  double sum = 0.0;
  for (double v : row) {
    if (!(v >= 0.0)) throw InvalidArgument(std::string(what) + ": negative or NaN entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTol)
    throw InvalidArgument(std::string(what) + ": row sums to " + std::to_string(sum));
  for (double& v : row) v /= sum;
}

}  // namespace

PreferenceFunction::PreferenceFunction(const ActionSpace& actions)
    : actions_(actions.counts) {
  upper_.resize(actions_.size());
  for (std::size_t x = 0; x < actions_.size(); ++x) {
    int k = actions_[x];
    upper_[x].assign(static_cast<std::size_t>(k) * (k - 1) / 2, 0.5);
  }
}

double PreferenceFunction::at(int x, int i, int j) const {
  if (i == j) return 0.5;
  int k = actions_[x];
  if (i < j) return upper_[x][tri_index(i, j, k)];
  return 1.0 - upper_[x][tri_index(j, i, k)];
}

void PreferenceFunction::set(int x, int i, int j, double value) {
  if (!(value >= 0.0 && value <= 1.0))
    throw InvalidArgument("preference entry outside [0,1]");
  if (i == j) {
    if (value != 0.5) throw InvalidArgument("diagonal preference must be 0.5");
    return;
  }
  int k = actions_[x];
  if (i < j)
    upper_[x][tri_index(i, j, k)] = value;
  else
    upper_[x][tri_index(j, i, k)] = 1.0 - value;
}

bool PreferenceFunction::same_shape(const PreferenceFunction& other) const {
  return actions_ == other.actions_;
}

void GameConfig::validate() {
  if (!(eta > 0.0)) throw InvalidArgument("eta must be positive");
  if (prompts.size() < 1) throw InvalidArgument("at least one prompt required");
  if (actions.size() != prompts.size())
    throw DimensionMismatch("action space / prompt space size mismatch");
  for (int k : actions.counts)
    if (k < 2) throw InvalidArgument("every prompt needs at least 2 actions");
  normalize_row(prompts.d0, "d0");
  if (pi0.prompts() != prompts.size())
    throw DimensionMismatch("pi0 prompt count mismatch");
  for (int x = 0; x < prompts.size(); ++x) {
    if (static_cast<int>(pi0.rows[x].size()) != actions.counts[x])
      throw DimensionMismatch("pi0 row length mismatch");
    normalize_row(pi0.rows[x], "pi0");
    for (double v : pi0.rows[x])
      if (v <= 0.0) throw InvalidArgument("pi0 must be strictly positive on all actions");
  }
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw DimensionMismatch("kl_divergence: length mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) throw SupportViolation("kl_divergence: mass outside reference support");
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

double expected_preference(const PreferenceFunction& P, int x,
                           const std::vector<double>& p1,
                           const std::vector<double>& p2) {
  int k = P.actions(x);
  if (static_cast<int>(p1.size()) != k || static_cast<int>(p2.size()) != k)
    throw DimensionMismatch("expected_preference: row length mismatch");
  // Skew part only; identical rows cancel termwise, giving exactly 0.5.
  const std::vector<double>& up = P.upper(x);
  double skew = 0.0;
  std::size_t idx = 0;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j, ++idx)
      skew += (up[idx] - 0.5) * (p1[i] * p2[j] - p1[j] * p2[i]);
  return 0.5 + skew;
}

double game_value(const GameConfig& cfg, const PreferenceFunction& P,
                  const Policy& p1, const Policy& p2) {
  check_pref_shape(cfg, P, "game_value");
  check_policy_shape(cfg, p1, "game_value p1");
  check_policy_shape(cfg, p2, "game_value p2");
  double value = 0.0;
  for (int x = 0; x < cfg.prompts.size(); ++x) {
    double term = expected_preference(P, x, p1.rows[x], p2.rows[x]) -
                  kl_divergence(p1.rows[x], cfg.pi0.rows[x]) / cfg.eta +
                  kl_divergence(p2.rows[x], cfg.pi0.rows[x]) / cfg.eta;
    value += cfg.prompts.d0[x] * term;
  }
  return value;
}

std::vector<double> gibbs_row(const std::vector<double>& pi0row,
                              const std::vector<double>& score, double eta,
                              BrSign sign) {
  if (pi0row.size() != score.size()) throw DimensionMismatch("gibbs_row: length mismatch");
  std::size_t k = pi0row.size();
  std::vector<double> logits(k);
  double s = sign == BrSign::max ? eta : -eta;
  for (std::size_t a = 0; a < k; ++a) {
    if (!(pi0row[a] > 0.0))
      throw SupportViolation("gibbs_row: reference not strictly positive");
    if (!std::isfinite(score[a])) throw InvalidArgument("gibbs_row: non-finite score");
    logits[a] = std::log(pi0row[a]) + s * score[a];
  }
  double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double& l : logits) {
    l = std::exp(l - m);
    z += l;
  }
  for (double& l : logits) l /= z;
  return logits;
}

std::vector<double> gibbs_best_response(const GameConfig& cfg, int x,
                                        const std::vector<double>& score,
                                        BrSign sign) {
  return gibbs_row(cfg.pi0.rows[x], score, cfg.eta, sign);
}

std::vector<double> opponent_score(const PreferenceFunction& P, int x,
                                   const std::vector<double>& opponent,
                                   int opponent_slot) {
  int k = P.actions(x);
  std::vector<double> score(k);
  for (int a = 0; a < k; ++a) {
    double s = 0.0;
    for (int b = 0; b < k; ++b)
      s += opponent[b] * (opponent_slot == 2 ? P.at(x, a, b) : P.at(x, b, a));
    score[a] = s;
  }
  return score;
}

Policy best_response_max(const GameConfig& cfg, const PreferenceFunction& P,
                         const Policy& p2) {
  Policy br;
  br.rows.resize(cfg.prompts.size());
  for (int x = 0; x < cfg.prompts.size(); ++x)
    br.rows[x] = gibbs_best_response(cfg, x, opponent_score(P, x, p2.rows[x], 2),
                                     BrSign::max);
  return br;
}

Policy best_response_min(const GameConfig& cfg, const PreferenceFunction& P,
                         const Policy& p1) {
  Policy br;
  br.rows.resize(cfg.prompts.size());
  for (int x = 0; x < cfg.prompts.size(); ++x)
    br.rows[x] = gibbs_best_response(cfg, x, opponent_score(P, x, p1.rows[x], 1),
                                     BrSign::min);
  return br;
}

double duality_gap(const GameConfig& cfg, const PreferenceFunction& P,
                   const Policy& p1, const Policy& p2) {
  double up = game_value(cfg, P, best_response_max(cfg, P, p2), p2);
  double down = game_value(cfg, P, p1, best_response_min(cfg, P, p1));
  double gap = up - down;
  return gap < 0.0 ? 0.0 : gap;
}

void check_policy_shape(const GameConfig& cfg, const Policy& p, const char* what) {
  if (p.prompts() != cfg.prompts.size())
    throw DimensionMismatch(std::string(what) + ": prompt count mismatch");
  for (int x = 0; x < cfg.prompts.size(); ++x)
    if (static_cast<int>(p.rows[x].size()) != cfg.actions.counts[x])
      throw DimensionMismatch(std::string(what) + ": row length mismatch");
}

void check_pref_shape(const GameConfig& cfg, const PreferenceFunction& P, const char* what) {
  if (P.prompts() != cfg.prompts.size())
    throw DimensionMismatch(std::string(what) + ": preference prompt count mismatch");
  for (int x = 0; x < cfg.prompts.size(); ++x)
    if (P.actions(x) != cfg.actions.counts[x])
      throw DimensionMismatch(std::string(what) + ": preference table size mismatch");
}

}  // namespace prefgame
