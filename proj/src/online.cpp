#include "prefgame/online.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "prefgame/errors.hpp"

namespace prefgame {

const char* enhancer_mode_name(EnhancerMode mode) {
  switch (mode) {
    case EnhancerMode::max_uncertainty: return "max_uncertainty";
    case EnhancerMode::kl_restricted: return "kl_restricted";
    case EnhancerMode::best_of_n: return "best_of_n";
  }
  throw InvalidArgument("enhancer_mode_name: unknown mode");
}

EnhancerMode parse_enhancer_mode(const std::string& name) {
  if (name == "max_uncertainty") return EnhancerMode::max_uncertainty;
  if (name == "kl_restricted") return EnhancerMode::kl_restricted;
  if (name == "best_of_n") return EnhancerMode::best_of_n;
  throw ParseError("unknown enhancer mode: " + name);
}

namespace {

bool is_power_of_two(int n) { return n >= 1 && (n & (n - 1)) == 0; }

}  // namespace

void OnlineConfig::validate() const {
  if (iterations < 1) throw InvalidArgument("online config: iterations must be >= 1");
  if (batch_size < 1) throw InvalidArgument("online config: batch_size must be >= 1");
  if (lambda <= 0.0) throw InvalidArgument("online config: lambda must be > 0");
  if (beta < 0.0) throw InvalidArgument("online config: beta must be >= 0");
  if (enhancer_mode == EnhancerMode::best_of_n && !is_power_of_two(bon_n)) {
    throw InvalidArgument("online config: bon_n must be a power of two");
  }
  if (candidates < 1) throw InvalidArgument("online config: candidates must be >= 1");
  if (solver_tol <= 0.0) throw InvalidArgument("online config: solver_tol must be > 0");
  if (solver_max_iter < 1) throw InvalidArgument("online config: solver_max_iter must be >= 1");
}

OnlineSchedule online_hyperparams(int class_size, double delta, double epsilon,
                                  const std::function<double(int)>& d_est) {
  if (class_size < 1) throw InvalidArgument("online_hyperparams: class_size must be >= 1");
  if (delta <= 0.0 || delta >= 1.0) {
    throw InvalidArgument("online_hyperparams: delta must be in (0,1)");
  }
  if (epsilon <= 0.0 || epsilon >= 1.0) {
    throw InvalidArgument("online_hyperparams: epsilon must be in (0,1)");
  }
  OnlineSchedule s;
  constexpr int kHorizonCap = 1000000;
  for (int n = 1; n <= kHorizonCap; ++n) {
    if (n >= 2.0 * d_est(n)) {
      s.T = n;
      break;
    }
  }
  if (s.T == 0) throw InvalidArgument("online_hyperparams: no horizon satisfies n >= 2 d(n)");
  const double lg = std::log(2.0 * s.T * static_cast<double>(class_size) / delta);
  s.m = static_cast<int>(std::ceil(18.0 * s.T * lg / (epsilon * epsilon)));
  s.beta = std::sqrt(2.0 * s.T * lg / s.m);
  s.lambda = 2.0 * s.T * lg / s.m;
  return s;
}

OnlineSchedule online_hyperparams(int class_size, double delta, double epsilon,
                                  double d_est_const) {
  return online_hyperparams(class_size, delta, epsilon,
                            [d_est_const](int) { return d_est_const; });
}

Policy max_uncertainty_enhancer(const FiniteClass& cls, const PreferenceFunction& phat,
                                const PreferenceDataset& history, double lambda, int m,
                                const Policy& main, const GameConfig& cfg) {
  if (cls.size() < 1) throw InvalidArgument("max_uncertainty_enhancer: empty class");
  const int nx = cfg.prompts.size();

  Policy best;
  double best_bonus = -std::numeric_limits<double>::infinity();
  for (int idx = 0; idx < cls.size(); ++idx) {
    const PreferenceFunction& P = cls.members[idx];
    for (double sign : {+1.0, -1.0}) {
      Policy cand;
      cand.rows.resize(nx);
      for (int x = 0; x < nx; ++x) {
        const int k = cfg.actions.counts[x];
        int arg = 0;
        double top = -std::numeric_limits<double>::infinity();
        for (int b = 0; b < k; ++b) {
          double w = 0.0;
          for (int a = 0; a < k; ++a) {
            w += main.rows[x][a] * (P.at(x, a, b) - phat.at(x, a, b));
          }
          if (sign * w > top) {
            top = sign * w;
            arg = b;
          }
        }
        cand.rows[x].assign(k, 0.0);
        cand.rows[x][arg] = 1.0;
      }
      const double bonus =
          pair_bonus_empirical(cls, phat, history, lambda, m, main, cand, cfg);
      if (bonus > best_bonus) {
        best_bonus = bonus;
        best = std::move(cand);
      }
    }
  }
  return best;
}

namespace {

double mean_kl_to(const GameConfig& cfg, const Policy& p, const Policy& base) {
  double total = 0.0;
  for (int x = 0; x < cfg.prompts.size(); ++x) {
    total += cfg.prompts.d0[x] * kl_divergence(p.rows[x], base.rows[x]);
  }
  return total;
}

}  // namespace

Policy kl_restricted_enhancer(const FiniteClass& cls, const PreferenceFunction& phat,
                              const PreferenceDataset& history, double lambda, int m,
                              double beta, const Policy& main, const GameConfig& cfg,
                              int candidates) {
  if (cls.size() < 1) throw InvalidArgument("kl_restricted_enhancer: empty class");
  if (beta < 0.0) throw InvalidArgument("kl_restricted_enhancer: beta must be >= 0");
  if (candidates < 1) throw InvalidArgument("kl_restricted_enhancer: candidates must be >= 1");
  const int nx = cfg.prompts.size();

  std::vector<Policy> pool;
  pool.push_back(main);
  pool.push_back(best_response_min(cfg, phat, main));
  for (const PreferenceFunction& P : cls.members) {
    for (double scale : {0.25, 0.5, 1.0, 2.0, 4.0}) {
      const double tau = scale * cfg.eta;
      Policy tilt;
      tilt.rows.resize(nx);
      for (int x = 0; x < nx; ++x) {
        std::vector<double> score = opponent_score(P, x, main.rows[x], 1);
        tilt.rows[x] = gibbs_row(main.rows[x], score, tau, BrSign::min);
      }
      pool.push_back(std::move(tilt));
    }
  }
  for (int n : {2, 4, 8}) {
    pool.push_back(best_of_n_policy(main, phat, n, cfg));
  }
  if (static_cast<int>(pool.size()) > candidates) pool.resize(candidates);

  const double main_bonus =
      pair_bonus_empirical(cls, phat, history, lambda, m, main, main, cfg);

  Policy best = main;
  double best_bonus = -std::numeric_limits<double>::infinity();
  for (const Policy& cand : pool) {
    const double bonus = pair_bonus_empirical(cls, phat, history, lambda, m, main, cand, cfg);
    const double kl_term = mean_kl_to(cfg, cand, main) / cfg.eta;
    if (kl_term > beta * (bonus + main_bonus)) continue;
    if (bonus > best_bonus) {
      best_bonus = bonus;
      best = cand;
    }
  }
  return best;
}

Policy best_of_n_policy(const Policy& main, const PreferenceFunction& rank, int n,
                        const GameConfig& cfg) {
  check_policy_shape(cfg, main, "best_of_n base policy");
  check_pref_shape(cfg, rank, "best_of_n ranking");
  if (!is_power_of_two(n)) {
    throw InvalidArgument("best_of_n_policy: n must be a power of two");
  }
  if (n == 1) return main;

  Policy out;
  out.rows.resize(cfg.prompts.size());
  for (int x = 0; x < cfg.prompts.size(); ++x) {
    const int k = cfg.actions.counts[x];
    std::vector<double> w = main.rows[x];
    // Level doubling: a survives a round by winning as the earlier slot
    // (rank >= 0.5, ties included) or as the later slot (strict rank > 0.5).
    for (int level = 1; level < n; level *= 2) {
      std::vector<double> next(k, 0.0);
      for (int a = 0; a < k; ++a) {
        if (w[a] == 0.0) continue;
        double survive = 0.0;
        for (int b = 0; b < k; ++b) {
          if (w[b] == 0.0) continue;
          const double r = rank.at(x, a, b);
          if (r >= 0.5) survive += w[b];
          if (r > 0.5) survive += w[b];
        }
        next[a] = w[a] * survive;
      }
      w = std::move(next);
    }
    double z = 0.0;
    for (double v : w) z += v;
    for (double& v : w) v /= z;
    out.rows[x] = std::move(w);
  }
  return out;
}

int best_of_n_sample(const Policy& main, const PreferenceFunction& rank, int n, int x,
                     const CounterRng& rng, std::uint64_t index0) {
  if (!is_power_of_two(n)) {
    throw InvalidArgument("best_of_n_sample: n must be a power of two");
  }
  std::vector<int> slots(n);
  for (int i = 0; i < n; ++i) {
    slots[i] = rng.categorical(index0 + static_cast<std::uint64_t>(i), main.rows[x]);
  }
  // Play the bracket: adjacent pairs, earlier slot wins ties.
  for (int round = n; round > 1; round /= 2) {
    for (int i = 0; i < round / 2; ++i) {
      const int u = slots[2 * i];
      const int v = slots[2 * i + 1];
      slots[i] = (rank.at(x, u, v) >= 0.5) ? u : v;
    }
  }
  return slots[0];
}

OnlineTrace oelhf_run(const PreferenceFunction& env, const FiniteClass& cls,
                      const GameConfig& cfg, const OnlineConfig& online) {
  online.validate();
  if (cls.size() < 1) throw InvalidArgument("oelhf_run: empty class");
  check_pref_shape(cfg, env, "environment oracle");

  OnlineTrace trace;
  trace.seed = online.seed;
  PreferenceDataset history;
  history.seed = online.seed;
  history.rng_algorithm = kRngAlgorithm;
  history.behavior1 = "online-main";
  history.behavior2 = "online-enhancer";

  for (int t = 1; t <= online.iterations; ++t) {
    OnlineIteration it;
    it.t = t;
    it.mle_index = mle_fit(cls, history);
    const PreferenceFunction& phat = cls.members[it.mle_index];
    it.in_sample_error = sq_distance(phat, env, history);

    try {
      it.main_policy =
          solve_nash(cfg, phat, online.solver_tol, online.solver_max_iter).policy;
    } catch (const ConvergenceError& e) {
      trace.aborted = true;
      trace.error = e.what();
      return trace;
    }

    switch (online.enhancer_mode) {
      case EnhancerMode::max_uncertainty:
        it.enhancer_policy = max_uncertainty_enhancer(
            cls, phat, history, online.lambda, online.batch_size, it.main_policy, cfg);
        break;
      case EnhancerMode::kl_restricted:
        it.enhancer_policy = kl_restricted_enhancer(
            cls, phat, history, online.lambda, online.batch_size, online.beta,
            it.main_policy, cfg, online.candidates);
        break;
      case EnhancerMode::best_of_n:
        it.enhancer_policy = best_of_n_policy(it.main_policy, phat, online.bon_n, cfg);
        break;
    }

    it.pair_bonus = pair_bonus_empirical(cls, phat, history, online.lambda,
                                         online.batch_size, it.main_policy,
                                         it.enhancer_policy, cfg);
    it.main_gap_true = duality_gap(cfg, env, it.main_policy, it.main_policy);
    for (int x = 0; x < cfg.prompts.size(); ++x) {
      for (int a = 0; a < cfg.actions.counts[x]; ++a) {
        const double p = it.enhancer_policy.rows[x][a];
        if (p > 0.0) {
          it.enhancer_log_ratio = std::max(
              it.enhancer_log_ratio, std::abs(std::log(p / cfg.pi0.rows[x][a])));
        }
      }
    }

    it.batch = collect(cfg, it.main_policy, it.enhancer_policy, env,
                       static_cast<std::size_t>(online.batch_size),
                       derive_seed(online.seed, static_cast<std::uint64_t>(t)));
    history.records.insert(history.records.end(), it.batch.records.begin(),
                           it.batch.records.end());
    trace.iterations.push_back(std::move(it));
  }
  return trace;
}

CheckpointChoice select_checkpoint(const OnlineTrace& trace, const PreferenceFunction& oracle,
                                   const GameConfig& cfg) {
  if (trace.iterations.empty()) throw InvalidArgument("select_checkpoint: empty trace");
  CheckpointChoice choice;
  double best = -std::numeric_limits<double>::infinity();
  for (const OnlineIteration& it : trace.iterations) {
    Policy response = best_response_min(cfg, oracle, it.main_policy);
    const double value = game_value(cfg, oracle, it.main_policy, response);
    if (value > best) {
      best = value;
      choice.index = it.t;
      choice.policy = it.main_policy;
    }
  }
  return choice;
}

EluderDiagnostic eluder_diagnostic(const OnlineTrace& trace, const FiniteClass& cls,
                                   double lambda, const GameConfig& cfg) {
  if (lambda <= 0.0) throw InvalidArgument("eluder_diagnostic: lambda must be > 0");
  EluderDiagnostic diag;
  double sum = 0.0;
  const std::size_t n = trace.iterations.size();

  auto population_discrepancy = [&](const PreferenceFunction& P, const PreferenceFunction& Q,
                                    const Policy& p1, const Policy& p2) {
    double total = 0.0;
    for (int x = 0; x < cfg.prompts.size(); ++x) {
      const int k = cfg.actions.counts[x];
      for (int a = 0; a < k; ++a) {
        if (p1.rows[x][a] == 0.0) continue;
        for (int b = 0; b < k; ++b) {
          const double delta = P.at(x, a, b) - Q.at(x, a, b);
          total += cfg.prompts.d0[x] * p1.rows[x][a] * p2.rows[x][b] * delta * delta;
        }
      }
    }
    return total;
  };

  for (std::size_t i = 0; i < n; ++i) {
    const OnlineIteration& it = trace.iterations[i];
    const PreferenceFunction& phat = cls.members[it.mle_index];
    double ratio = 0.0;
    for (const PreferenceFunction& P : cls.members) {
      double den = lambda;
      for (std::size_t s = 0; s < i; ++s) {
        den += population_discrepancy(P, phat, trace.iterations[s].main_policy,
                                      trace.iterations[s].enhancer_policy);
      }
      double diff = 0.0;
      for (int x = 0; x < cfg.prompts.size(); ++x) {
        diff += cfg.prompts.d0[x] *
                (expected_preference(P, x, it.main_policy.rows[x], it.enhancer_policy.rows[x]) -
                 expected_preference(phat, x, it.main_policy.rows[x],
                                     it.enhancer_policy.rows[x]));
      }
      ratio = std::max(ratio, std::abs(diff) / std::sqrt(den));
    }
    diag.per_step.push_back(std::min(1.0, ratio * ratio));
    sum += diag.per_step.back();
    diag.running_sum.push_back(sum);
  }
  return diag;
}

}  // namespace prefgame
