#include "prefgame/offline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "prefgame/errors.hpp"

namespace prefgame {

void OfflineConfig::validate() const {
  if (beta < 0.0) throw InvalidArgument("offline config: beta must be >= 0");
  if (lambda <= 0.0) throw InvalidArgument("offline config: lambda must be > 0");
  if (delta <= 0.0 || delta >= 1.0) throw InvalidArgument("offline config: delta must be in (0,1)");
  if (solver_tol <= 0.0) throw InvalidArgument("offline config: solver_tol must be > 0");
  if (solver_max_iter <= 0 || mirror_max_iter <= 0) {
    throw InvalidArgument("offline config: iteration caps must be positive");
  }
}

std::pair<double, double> offline_hyperparams(int class_size, double delta) {
  if (class_size < 1) throw InvalidArgument("offline_hyperparams: class_size must be >= 1");
  if (delta <= 0.0 || delta >= 1.0) {
    throw InvalidArgument("offline_hyperparams: delta must be in (0,1)");
  }
  const double lg = std::log(static_cast<double>(class_size) / delta);
  return {std::sqrt(2.0 * lg), lg};
}

double pessimistic_pair_value(const GameConfig& cfg, const FiniteClass& cls,
                              const std::vector<int>& indices, const Policy& p1,
                              const Policy& p2) {
  if (indices.empty()) throw InvalidArgument("pessimistic_pair_value: empty member set");
  double best = std::numeric_limits<double>::infinity();
  for (int idx : indices) {
    best = std::min(best, game_value(cfg, cls.members[idx], p1, p2));
  }
  return best;
}

PessimisticEval pessimistic_value(const GameConfig& cfg, const FiniteClass& cls,
                                  const std::vector<int>& indices, const Policy& p1) {
  if (indices.empty()) throw InvalidArgument("pessimistic_value: empty member set");
  PessimisticEval eval;
  eval.value = std::numeric_limits<double>::infinity();
  for (int idx : indices) {
    const PreferenceFunction& P = cls.members[idx];
    Policy response = best_response_min(cfg, P, p1);
    const double v = game_value(cfg, P, p1, response);
    if (v < eval.value) {
      eval.value = v;
      eval.member = idx;
      eval.response = std::move(response);
    }
  }
  return eval;
}

OfflineResult pelhf_version_space(const FiniteClass& cls, const PreferenceDataset& d,
                                  const GameConfig& cfg, const OfflineConfig& off) {
  off.validate();
  if (cls.size() < 1) throw InvalidArgument("pelhf_version_space: empty class");

  OfflineResult result;
  result.mle_index = mle_fit(cls, d);
  const PreferenceFunction& phat = cls.members[result.mle_index];
  result.version_space = version_space_indices(cls, phat, d, off.beta);
  const std::vector<int>& vs = result.version_space;
  const int nx = cfg.prompts.size();

  // Mirror ascent on the max policy; the conservative objective is concave
  // (a pointwise min of concave functions), so the uniform average carries
  // the usual averaged-iterate guarantee and is tracked alongside.
  const double alpha = std::min(cfg.eta, 1.0);
  Policy pi = cfg.pi0;
  std::vector<std::vector<double>> sums = pi.rows;
  double count = 1.0;

  double best_val = -std::numeric_limits<double>::infinity();
  Policy best_policy = pi;
  int stagnant = 0;
  int iter = 0;
  for (; iter < off.mirror_max_iter; ++iter) {
    PessimisticEval last = pessimistic_value(cfg, cls, vs, pi);
    Policy avg = (count > 1.0) ? [&] {
      Policy a;
      a.rows.resize(nx);
      for (int x = 0; x < nx; ++x) {
        a.rows[x].resize(sums[x].size());
        for (std::size_t j = 0; j < sums[x].size(); ++j) a.rows[x][j] = sums[x][j] / count;
      }
      return a;
    }() : pi;
    const double avg_val =
        (count > 1.0) ? pessimistic_value(cfg, cls, vs, avg).value : last.value;

    const double incumbent = std::max(last.value, avg_val);
    if (incumbent > best_val + 1e-9) {
      best_val = incumbent;
      best_policy = (last.value >= avg_val) ? pi : avg;
      stagnant = 0;
    } else if (++stagnant >= 100) {
      break;
    }

    // Supergradient step at the achieving (member, response).
    for (int x = 0; x < nx; ++x) {
      std::vector<double> score =
          opponent_score(cls.members[last.member], x, last.response.rows[x], 2);
      pi.rows[x] = mirror_step_row(pi.rows[x], cfg.pi0.rows[x], score, alpha, cfg.eta,
                                   BrSign::max);
      for (std::size_t j = 0; j < sums[x].size(); ++j) sums[x][j] += pi.rows[x][j];
    }
    count += 1.0;
  }
  result.iterations = iter;
  result.hit_iteration_cap = iter >= off.mirror_max_iter;

  // Candidate sweep: the Nash policy of each version-space member is a
  // natural competitor; keep whichever candidate maximizes the conservative
  // value (strict improvement, so earlier candidates win ties).
  result.policy = best_policy;
  result.pessimistic_value = best_val;
  for (int idx : vs) {
    NashResult nash;
    try {
      nash = solve_nash(cfg, cls.members[idx], off.solver_tol, off.solver_max_iter);
    } catch (const ConvergenceError&) {
      continue;
    }
    const double v = pessimistic_value(cfg, cls, vs, nash.policy).value;
    if (v > result.pessimistic_value) {
      result.pessimistic_value = v;
      result.policy = nash.policy;
    }
  }
  return result;
}

OfflineResult pelhf_bonus(const FiniteClass& cls, const PreferenceDataset& d,
                          const GameConfig& cfg, const OfflineConfig& off) {
  off.validate();
  if (cls.size() < 1) throw InvalidArgument("pelhf_bonus: empty class");

  OfflineResult result;
  result.mle_index = mle_fit(cls, d);
  const PreferenceFunction& phat = cls.members[result.mle_index];
  const std::vector<std::vector<double>> bonus = pointwise_bonus_table(cls, phat, d, off.lambda);

  PayoffTable G;
  G.counts = cfg.actions.counts;
  G.values.resize(cfg.prompts.size());
  for (int x = 0; x < cfg.prompts.size(); ++x) {
    const int k = cfg.actions.counts[x];
    G.values[x].resize(static_cast<std::size_t>(k) * k);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) {
        G.values[x][a * k + b] = phat.at(x, a, b) - off.beta * bonus[x][a * k + b];
      }
    }
  }

  GameSolveResult solved = solve_game(cfg, G, off.solver_tol, off.solver_max_iter);
  result.policy = solved.p1;
  result.pessimistic_value = payoff_game_value(cfg, G, solved.p1, solved.p2);
  result.iterations = solved.iterations;
  return result;
}

namespace {

struct MemberDiscrepancy {
  double den = 0.0;                     // E over the data distribution of (P - Phat)^2
  std::vector<std::vector<double>> w;   // w[x][b] = E_{a~target}[(P - Phat)(x,a,b)]
};

MemberDiscrepancy member_discrepancy(const PreferenceFunction& P,
                                     const PreferenceFunction& phat, const Policy& target,
                                     const Policy& d1, const Policy& d2,
                                     const GameConfig& cfg) {
  MemberDiscrepancy md;
  const int nx = cfg.prompts.size();
  md.w.resize(nx);
  for (int x = 0; x < nx; ++x) {
    const int k = cfg.actions.counts[x];
    md.w[x].assign(k, 0.0);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) {
        const double delta = P.at(x, a, b) - phat.at(x, a, b);
        md.den += cfg.prompts.d0[x] * d1.rows[x][a] * d2.rows[x][b] * delta * delta;
        md.w[x][b] += target.rows[x][a] * delta;
      }
    }
  }
  return md;
}

}  // namespace

CoverageResult coverage_coefficient(const FiniteClass& cls, const PreferenceFunction& phat,
                                    const Policy& target, const Policy& d1, const Policy& d2,
                                    const GameConfig& cfg, CoverageMethod method) {
  const int nx = cfg.prompts.size();
  if (method == CoverageMethod::automatic) {
    double combos = 1.0;
    for (int x = 0; x < nx; ++x) combos *= cfg.actions.counts[x];
    method = (combos <= 1e6) ? CoverageMethod::enumerate_policies : CoverageMethod::per_prompt;
  }

  CoverageResult out;
  std::vector<MemberDiscrepancy> mds;
  mds.reserve(cls.members.size());
  for (const PreferenceFunction& P : cls.members) {
    mds.push_back(member_discrepancy(P, phat, target, d1, d2, cfg));
  }

  if (method == CoverageMethod::per_prompt) {
    for (const MemberDiscrepancy& md : mds) {
      double hi = 0.0, lo = 0.0;
      for (int x = 0; x < nx; ++x) {
        const auto [mn, mx] = std::minmax_element(md.w[x].begin(), md.w[x].end());
        hi += cfg.prompts.d0[x] * *mx;
        lo += cfg.prompts.d0[x] * *mn;
      }
      const double num = std::max(hi * hi, lo * lo);
      if (md.den <= 0.0) {
        if (num > 0.0) out.infinite = true;
        continue;
      }
      out.value = std::max(out.value, num / md.den);
    }
    return out;
  }

  // Enumerate deterministic opponent policies with an odometer over prompts.
  std::vector<int> choice(nx, 0);
  while (true) {
    for (const MemberDiscrepancy& md : mds) {
      double e = 0.0;
      for (int x = 0; x < nx; ++x) e += cfg.prompts.d0[x] * md.w[x][choice[x]];
      const double num = e * e;
      if (md.den <= 0.0) {
        if (num > 0.0) out.infinite = true;
        continue;
      }
      out.value = std::max(out.value, num / md.den);
    }
    int x = 0;
    for (; x < nx; ++x) {
      if (++choice[x] < cfg.actions.counts[x]) break;
      choice[x] = 0;
    }
    if (x == nx) break;
  }
  return out;
}

CoverageResult coverage_coefficient_tilde(const FiniteClass& cls,
                                          const PreferenceFunction& phat,
                                          const Policy& target, const Policy& d1,
                                          const Policy& d2, const GameConfig& cfg) {
  const int nx = cfg.prompts.size();
  CoverageResult out;
  std::vector<MemberDiscrepancy> mds;
  mds.reserve(cls.members.size());
  for (const PreferenceFunction& P : cls.members) {
    mds.push_back(member_discrepancy(P, phat, target, d1, d2, cfg));
  }
  double total = 0.0;
  for (int x = 0; x < nx; ++x) {
    double best = 0.0;
    for (int b = 0; b < cfg.actions.counts[x]; ++b) {
      for (const MemberDiscrepancy& md : mds) {
        const double num = md.w[x][b] * md.w[x][b];
        if (md.den <= 0.0) {
          if (num > 0.0) out.infinite = true;
          continue;
        }
        best = std::max(best, num / md.den);
      }
    }
    total += cfg.prompts.d0[x] * best;
  }
  out.value = total;
  return out;
}

RefinedCoverageResult refined_coverage(const FiniteClass& cls, const PreferenceFunction& phat,
                                       const Policy& target, const Policy& probe,
                                       const Policy& d1, const Policy& d2,
                                       const GameConfig& cfg, const OfflineConfig& off) {
  off.validate();
  if (cls.size() < 1) throw InvalidArgument("refined_coverage: empty class");
  RefinedCoverageResult out;
  for (const PreferenceFunction& P : cls.members) {
    const MemberDiscrepancy md = member_discrepancy(P, phat, target, d1, d2, cfg);
    double e = 0.0;
    for (int x = 0; x < cfg.prompts.size(); ++x) {
      double row = 0.0;
      for (int b = 0; b < cfg.actions.counts[x]; ++b) row += probe.rows[x][b] * md.w[x][b];
      e += cfg.prompts.d0[x] * row;
    }
    const double num = e * e;
    if (md.den <= 0.0) {
      if (num > 0.0) out.coverage.infinite = true;
      continue;
    }
    out.coverage.value = std::max(out.coverage.value, num / md.den);
  }

  std::vector<int> all(cls.members.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  const double probe_value = pessimistic_pair_value(cfg, cls, all, target, probe);
  const double floor_value = pessimistic_value(cfg, cls, all, target).value;
  out.subopt = std::max(0.0, probe_value - floor_value);
  return out;
}

}  // namespace prefgame
