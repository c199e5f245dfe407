#include "prefgame/accept.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "prefgame/errors.hpp"
#include "prefgame/harness.hpp"
#include "prefgame/io.hpp"
#include "prefgame/offline.hpp"
#include "prefgame/online.hpp"
#include "prefgame/rng.hpp"
#include "prefgame/solver.hpp"

namespace prefgame {

namespace {

// Seed bases; each criterion owns a disjoint block of the counter space.
constexpr std::uint64_t kInstanceSeedBase = 20260801;
constexpr std::uint64_t kClassSeed = 31337;
constexpr std::uint64_t kConfidenceSeedBase = 400000;
constexpr std::uint64_t kOfflineSeedBase = 500000;
constexpr std::uint64_t kOnlineSeedBase = 600000;
constexpr std::uint64_t kGibbsSeedBase = 300000;
constexpr std::uint64_t kBonSeedBase = 700000;
constexpr std::uint64_t kLinearSeedBase = 800000;
constexpr std::uint64_t kCollectSeed = 900001;

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  for (std::thread& t : pool) t.join();
}

// Deterministic scalar stream over the counter generator.
struct Draw {
  CounterRng rng;
  std::uint64_t c = 0;
  explicit Draw(std::uint64_t seed) : rng(seed) {}
  double u() { return rng.uniform(c++); }
  int below(int n) { return std::min(n - 1, static_cast<int>(u() * n)); }
};

std::vector<double> random_simplex(Draw& d, int k, double mix) {
  std::vector<double> v(static_cast<std::size_t>(k));
  double s = 0.0;
  for (double& x : v) {
    x = -std::log(std::max(d.u(), 1e-300));
    s += x;
  }
  for (double& x : v) x = (1.0 - mix) * (x / s) + mix / k;
  return v;
}

// Random instance family used by the certificate criteria: 1-3 prompts,
// 2-5 actions, interior reference policies, preference entries in [.05,.95].
Instance random_instance(std::uint64_t seed, double eta) {
  Draw d(seed);
  GameConfig cfg;
  cfg.eta = eta;
  int nx = 1 + d.below(3);
  cfg.prompts.d0 = random_simplex(d, nx, 0.2);
  cfg.actions.counts.resize(static_cast<std::size_t>(nx));
  for (int& k : cfg.actions.counts) k = 2 + d.below(4);
  PreferenceFunction P(cfg.actions);
  cfg.pi0.rows.resize(static_cast<std::size_t>(nx));
  for (int x = 0; x < nx; ++x) {
    int k = cfg.actions.counts[static_cast<std::size_t>(x)];
    cfg.pi0.rows[static_cast<std::size_t>(x)] = random_simplex(d, k, 0.1);
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) P.set(x, i, j, 0.05 + 0.9 * d.u());
  }
  cfg.validate();
  return Instance{cfg, P};
}

std::vector<Instance> pinned_instances() {
  const double etas[3] = {0.5, 1.0, 5.0};
  std::vector<Instance> out;
  out.reserve(20);
  for (int i = 0; i < 20; ++i)
    out.push_back(random_instance(kInstanceSeedBase + static_cast<std::uint64_t>(i),
                                  etas[i % 3]));
  return out;
}

GameConfig uniform_config(std::vector<double> d0, std::vector<int> counts, double eta) {
  GameConfig cfg;
  cfg.prompts.d0 = std::move(d0);
  cfg.actions.counts = std::move(counts);
  cfg.eta = eta;
  cfg.pi0.rows.resize(cfg.actions.counts.size());
  for (std::size_t x = 0; x < cfg.actions.counts.size(); ++x)
    cfg.pi0.rows[x].assign(static_cast<std::size_t>(cfg.actions.counts[x]),
                           1.0 / cfg.actions.counts[x]);
  cfg.validate();
  return cfg;
}

Policy uniform_policy(const GameConfig& cfg) {
  Policy p;
  p.rows = cfg.pi0.rows;
  for (std::size_t x = 0; x < p.rows.size(); ++x)
    p.rows[x].assign(p.rows[x].size(), 1.0 / static_cast<double>(p.rows[x].size()));
  return p;
}

// Two-prompt environment plus a realizable eight-member class (member 0 is
// the environment itself, the rest are clipped perturbations).
struct EstimationSetup {
  GameConfig cfg;
  FiniteClass cls;
};

EstimationSetup estimation_setup() {
  EstimationSetup s;
  s.cfg = uniform_config({0.6, 0.4}, {3, 3}, 1.0);
  PreferenceFunction truth(s.cfg.actions);
  truth.set(0, 0, 1, 0.72);
  truth.set(0, 0, 2, 0.35);
  truth.set(0, 1, 2, 0.6);
  truth.set(1, 0, 1, 0.45);
  truth.set(1, 0, 2, 0.8);
  truth.set(1, 1, 2, 0.25);
  s.cls.realizable = true;
  s.cls.members.push_back(truth);
  Draw d(kClassSeed);
  for (int j = 1; j < 8; ++j) {
    PreferenceFunction P(s.cfg.actions);
    for (int x = 0; x < 2; ++x)
      for (int i = 0; i < 3; ++i)
        for (int k = i + 1; k < 3; ++k) {
          double v = truth.at(x, i, k) + 0.3 * (d.u() - 0.5);
          P.set(x, i, k, std::min(0.95, std::max(0.05, v)));
        }
    s.cls.members.push_back(P);
  }
  return s;
}

// Rock-paper-scissors environment with a four-member realizable class:
// the 0.75 cycle (truth), a weaker cycle, the reversed cycle, and a
// reward-induced table.
struct CycleSetup {
  GameConfig cfg;
  PreferenceFunction truth;
  FiniteClass cls;
};

CycleSetup cycle_setup() {
  CycleSetup s;
  s.cfg = uniform_config({1.0}, {3}, 1.0);
  s.truth = cyclic_oracle(3, 0.75);
  PreferenceFunction reversed(s.cfg.actions);
  reversed.set(0, 0, 1, 1.0 - s.truth.at(0, 0, 1));
  reversed.set(0, 0, 2, 1.0 - s.truth.at(0, 0, 2));
  reversed.set(0, 1, 2, 1.0 - s.truth.at(0, 1, 2));
  RewardTable rewards{{{1.0, 0.5, 0.0}}};
  s.cls.realizable = true;
  s.cls.members = {s.truth, cyclic_oracle(3, 0.6), reversed, bt_oracle(rewards)};
  return s;
}

double row_value(const GameConfig& cfg, int x, const std::vector<double>& p1,
                 const std::vector<double>& p2, const PreferenceFunction& P) {
  const std::vector<double>& pi0 = cfg.pi0.rows[static_cast<std::size_t>(x)];
  return expected_preference(P, x, p1, p2) - kl_divergence(p1, pi0) / cfg.eta +
         kl_divergence(p2, pi0) / cfg.eta;
}

double ln_arg(int T, int class_size, double delta) {
  return std::log(2.0 * T * class_size / delta);
}

// ---------------------------------------------------------------------------
// Criterion 1: solver certificate on 20 pinned instances + grid cross-check.

CriterionResult criterion_nash_certificate(double scale) {
  CriterionResult r{1, "nash-certificate", true, "", 0.0};
  std::vector<Instance> insts = pinned_instances();
  double max_gap = 0.0, max_secs = 0.0;
  for (const Instance& inst : insts) {
    auto t0 = std::chrono::steady_clock::now();
    NashResult nr = solve_nash(inst.cfg, inst.pref, 1e-8 * scale);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    max_gap = std::max(max_gap, nr.duality_gap);
    max_secs = std::max(max_secs, secs);
    if (nr.duality_gap > 1e-8 || secs >= 1.0) r.passed = false;
  }

  RewardTable rewards{{{1.0, 0.0}}};
  Instance bt{uniform_config({1.0}, {2}, 1.0), bt_oracle(rewards)};
  double solved = solve_nash(bt.cfg, bt.pref, 1e-8 * scale).policy.rows[0][0];
  double best_p = 0.0, best_v = -1e300;
  const std::vector<double>& pi0 = bt.cfg.pi0.rows[0];
  for (int j = 0; j <= 100000; ++j) {
    std::vector<double> p1{j * 1e-5, 1.0 - j * 1e-5};
    std::vector<double> score = opponent_score(bt.pref, 0, p1, 1);
    std::vector<double> br = gibbs_row(pi0, score, bt.cfg.eta, BrSign::min);
    double v = row_value(bt.cfg, 0, p1, br, bt.pref);
    if (v > best_v) {
      best_v = v;
      best_p = j * 1e-5;
    }
  }
  double grid_diff = std::abs(best_p - solved);
  if (grid_diff > 1e-4) r.passed = false;

  r.detail = "max_gap=" + fmt("%.3g", max_gap) + " grid_diff=" + fmt("%.3g", grid_diff) +
             " budget_ok=" + (max_secs < 1.0 ? "yes" : "no");
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 2: max-side and min-side equilibria coincide; cycle game is uniform.

CriterionResult criterion_symmetric_nash(double scale) {
  CriterionResult r{2, "symmetric-nash", true, "", 0.0};
  double max_dist = 0.0;
  for (const Instance& inst : pinned_instances()) {
    CoincideReport cr = nash_players_coincide_check(inst.cfg, inst.pref, 1e-8 * scale);
    max_dist = std::max(max_dist, cr.distance);
    if (cr.distance > 1e-7) r.passed = false;
  }
  CycleSetup rps = cycle_setup();
  NashResult nr = solve_nash(rps.cfg, rps.truth, 1e-8 * scale);
  double uniform_dist = 0.0;
  for (double p : nr.policy.rows[0])
    uniform_dist = std::max(uniform_dist, std::abs(p - 1.0 / 3.0));
  if (uniform_dist > 1e-8) r.passed = false;
  r.detail = "max_side_dist=" + fmt("%.3g", max_dist) +
             " cycle_uniform_dist=" + fmt("%.3g", uniform_dist);
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 3: closed-form optimality identities of the Gibbs response.

CriterionResult criterion_gibbs_identities(double) {
  CriterionResult r{3, "gibbs-identities", true, "", 0.0};
  const double etas[3] = {0.5, 1.0, 5.0};
  double max_err = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Draw d(kGibbsSeedBase + static_cast<std::uint64_t>(i));
    int k = 2 + i % 5;
    double eta = etas[i % 3];
    std::vector<double> pi0 = random_simplex(d, k, 0.1);
    std::vector<double> pi = random_simplex(d, k, 0.1);
    std::vector<double> score(static_cast<std::size_t>(k));
    for (double& x : score) x = d.u();
    std::vector<double> gibbs = gibbs_row(pi0, score, eta, BrSign::max);
    auto value = [&](const std::vector<double>& p) {
      double dot = 0.0;
      for (int a = 0; a < k; ++a) dot += p[static_cast<std::size_t>(a)] * score[static_cast<std::size_t>(a)];
      return dot - kl_divergence(p, pi0) / eta;
    };
    double err = std::abs(value(gibbs) - value(pi) - kl_divergence(pi, gibbs) / eta);
    max_err = std::max(max_err, err);
    if (err > 1e-8) r.passed = false;
  }

  int beaten = 0;
  for (int c = 0; c < 10; ++c) {
    Draw d(kGibbsSeedBase + 5000 + static_cast<std::uint64_t>(c));
    int k = 2 + c % 5;
    double eta = etas[c % 3];
    std::vector<double> pi0 = random_simplex(d, k, 0.1);
    std::vector<double> score(static_cast<std::size_t>(k));
    for (double& x : score) x = d.u();
    std::vector<double> gibbs = gibbs_row(pi0, score, eta, BrSign::max);
    auto value = [&](const std::vector<double>& p) {
      double dot = 0.0;
      for (int a = 0; a < k; ++a) dot += p[static_cast<std::size_t>(a)] * score[static_cast<std::size_t>(a)];
      return dot - kl_divergence(p, pi0) / eta;
    };
    double gv = value(gibbs);
    for (int j = 0; j < 1000; ++j)
      if (gv >= value(random_simplex(d, k, 0.0)) - 1e-12) ++beaten;
  }
  if (beaten != 10000) r.passed = false;
  r.detail = "max_identity_err=" + fmt("%.3g", max_err) + " beaten=" + std::to_string(beaten) +
             "/10000";
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 4: in-sample distance of the MLE to the truth stays within ln(k/delta).

CriterionResult criterion_confidence_set(double) {
  CriterionResult r{4, "confidence-set", true, "", 0.0};
  EstimationSetup s = estimation_setup();
  Policy behavior = uniform_policy(s.cfg);
  const double radius = std::log(8.0 / 0.1);
  std::vector<int> hit(500, 0);
  parallel_for(500, [&](int i) {
    PreferenceDataset d = collect(s.cfg, behavior, behavior, s.cls.members[0], 200,
                                  kConfidenceSeedBase + static_cast<std::uint64_t>(i));
    int idx = mle_fit(s.cls, d);
    hit[static_cast<std::size_t>(i)] =
        sq_distance(s.cls.members[static_cast<std::size_t>(idx)], s.cls.members[0], d) <= radius
            ? 1
            : 0;
  });
  int count = 0;
  for (int h : hit) count += h;
  double freq = count / 500.0;
  if (freq < 0.85) r.passed = false;
  r.detail = "freq=" + fmt("%.4g", freq) + " radius=" + fmt("%.4g", radius);
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 5: offline pessimism bounds, version-space and bonus variants.

CriterionResult criterion_offline_bounds(double scale) {
  CriterionResult r{5, "offline-bounds", true, "", 0.0};
  EstimationSetup s = estimation_setup();
  Policy behavior = uniform_policy(s.cfg);
  auto hp = offline_hyperparams(8, 0.1);
  OfflineConfig off;
  off.beta = hp.first;
  off.lambda = hp.second;
  off.solver_tol = 1e-8 * scale;
  Policy target = solve_nash(s.cfg, s.cls.members[0], 1e-8 * scale).policy;
  const int n = 200;

  std::vector<int> ok_vs(200, 0), ok_bonus(200, 0), failed(200, 0);
  parallel_for(200, [&](int i) {
    try {
      PreferenceDataset d = collect(s.cfg, behavior, behavior, s.cls.members[0],
                                    static_cast<std::size_t>(n),
                                    kOfflineSeedBase + static_cast<std::uint64_t>(i));
      OfflineResult vs = pelhf_version_space(s.cls, d, s.cfg, off);
      const PreferenceFunction& phat_vs = s.cls.members[static_cast<std::size_t>(vs.mle_index)];
      double sub_vs =
          0.5 - game_value(s.cfg, s.cls.members[0], vs.policy,
                           best_response_min(s.cfg, s.cls.members[0], vs.policy));
      CoverageResult cov = coverage_coefficient(s.cls, phat_vs, target, behavior, behavior, s.cfg);
      if (!cov.infinite && sub_vs <= 4.0 * off.beta * std::sqrt(cov.value / n))
        ok_vs[static_cast<std::size_t>(i)] = 1;

      OfflineResult bn = pelhf_bonus(s.cls, d, s.cfg, off);
      const PreferenceFunction& phat_bn = s.cls.members[static_cast<std::size_t>(bn.mle_index)];
      double sub_bn =
          0.5 - game_value(s.cfg, s.cls.members[0], bn.policy,
                           best_response_min(s.cfg, s.cls.members[0], bn.policy));
      CoverageResult cov_t =
          coverage_coefficient_tilde(s.cls, phat_bn, target, behavior, behavior, s.cfg);
      if (!cov_t.infinite && sub_bn <= 4.0 * off.beta * std::sqrt(cov_t.value / n))
        ok_bonus[static_cast<std::size_t>(i)] = 1;
    } catch (const std::exception&) {
      failed[static_cast<std::size_t>(i)] = 1;
    }
  });
  int cvs = 0, cbn = 0, bad = 0;
  for (int i = 0; i < 200; ++i) {
    cvs += ok_vs[static_cast<std::size_t>(i)];
    cbn += ok_bonus[static_cast<std::size_t>(i)];
    bad += failed[static_cast<std::size_t>(i)];
  }
  double freq_vs = cvs / 200.0, freq_bonus = cbn / 200.0;
  if (freq_vs < 0.90 || freq_bonus < 0.90 || bad > 0) r.passed = false;
  r.detail = "freq_vs=" + fmt("%.4g", freq_vs) + " freq_bonus=" + fmt("%.4g", freq_bonus) +
             " errors=" + std::to_string(bad);
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 6: batch online guarantee on the cycle game, qualitative form.

CriterionResult criterion_online_bounds(double scale) {
  CriterionResult r{6, "online-bounds", true, "", 0.0};
  CycleSetup s = cycle_setup();
  const int T = 3, seeds = 50;
  const double delta = 0.1;

  auto min_gap_run = [&](std::uint64_t seed, int m) {
    OnlineConfig on;
    on.iterations = T;
    on.batch_size = m;
    double la = 2.0 * T * ln_arg(T, 4, delta) / m;
    on.lambda = la;
    on.beta = std::sqrt(la);
    on.enhancer_mode = EnhancerMode::max_uncertainty;
    on.seed = seed;
    on.solver_tol = 1e-8 * scale;
    OnlineTrace trace = oelhf_run(s.truth, s.cls, s.cfg, on);
    double best = 1e300;
    for (const OnlineIteration& it : trace.iterations) best = std::min(best, it.main_gap_true);
    return trace.iterations.empty() ? 1e300 : best;
  };

  std::vector<double> gap_small(seeds), gap_large(seeds);
  parallel_for(seeds, [&](int i) {
    gap_small[static_cast<std::size_t>(i)] =
        min_gap_run(kOnlineSeedBase + static_cast<std::uint64_t>(i), 200);
    gap_large[static_cast<std::size_t>(i)] =
        min_gap_run(kOnlineSeedBase + static_cast<std::uint64_t>(i), 2000);
  });

  int mono = 0, within_small = 0, within_large = 0;
  double bound_small = 3.0 * std::sqrt(2.0 * T * ln_arg(T, 4, delta) / 200.0);
  double bound_large = 3.0 * std::sqrt(2.0 * T * ln_arg(T, 4, delta) / 2000.0);
  for (int i = 0; i < seeds; ++i) {
    if (gap_large[static_cast<std::size_t>(i)] <= gap_small[static_cast<std::size_t>(i)]) ++mono;
    if (0.5 * gap_small[static_cast<std::size_t>(i)] <= bound_small) ++within_small;
    if (0.5 * gap_large[static_cast<std::size_t>(i)] <= bound_large) ++within_large;
  }
  double mono_freq = static_cast<double>(mono) / seeds;
  double within_freq = std::min(within_small, within_large) / static_cast<double>(seeds);
  if (mono_freq < 0.80 || within_small < 0.85 * seeds || within_large < 0.85 * seeds)
    r.passed = false;

  // Singleton class: the first round's fitted table is the environment itself.
  FiniteClass singleton;
  singleton.realizable = true;
  singleton.members = {s.truth};
  OnlineConfig on;
  on.iterations = 1;
  on.batch_size = 50;
  on.lambda = 1.0;
  on.beta = 1.0;
  on.seed = kOnlineSeedBase + 999;
  on.solver_tol = 1e-8 * scale;
  OnlineTrace st = oelhf_run(s.truth, singleton, s.cfg, on);
  double first_gap = st.iterations.empty() ? 1e300 : st.iterations[0].main_gap_true;
  if (first_gap > 1e-8) r.passed = false;

  r.detail = "mono_freq=" + fmt("%.4g", mono_freq) + " within_freq=" + fmt("%.4g", within_freq) +
             " singleton_gap=" + fmt("%.3g", first_gap);
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 7: bracket-winner KL never exceeds ln n - (n-1)/n, exactly.

CriterionResult criterion_bon_kl(double) {
  CriterionResult r{7, "bon-kl-bound", true, "", 0.0};
  double max_slack = -1e300;
  int checked = 0;
  for (int k = 2; k <= 6; ++k) {
    GameConfig cfg = uniform_config({1.0}, {k}, 1.0);
    PreferenceFunction rank(cfg.actions);
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) rank.set(0, i, j, 1.0);  // lower index = higher reward
    Draw d(kBonSeedBase + static_cast<std::uint64_t>(k));
    for (int trial = 0; trial < 21; ++trial) {
      Policy main;
      main.rows = {trial == 0 ? cfg.pi0.rows[0] : random_simplex(d, k, 0.05)};
      for (int n : {2, 4, 8}) {
        Policy bon = best_of_n_policy(main, rank, n, cfg);
        double kl = kl_divergence(bon.rows[0], main.rows[0]);
        double bound = std::log(static_cast<double>(n)) - (n - 1.0) / n;
        max_slack = std::max(max_slack, kl - bound);
        ++checked;
        if (kl > bound) r.passed = false;
      }
    }
  }
  r.detail = "checked=" + std::to_string(checked) + " max_excess=" + fmt("%.3g", max_slack);
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 8: the squared-residual policy optimizer lands on the equilibrium.

CriterionResult criterion_ipo(double scale) {
  CriterionResult r{8, "ipo-equivalence", true, "", 0.0};
  std::vector<Instance> insts = pinned_instances();
  std::vector<double> gaps(insts.size()), norms(insts.size());
  std::vector<int> failed(insts.size(), 0);
  parallel_for(static_cast<int>(insts.size()), [&](int i) {
    const Instance& inst = insts[static_cast<std::size_t>(i)];
    try {
      NashResult ipo = ipo_solve(inst.cfg, inst.pref, 1e-8 * scale);
      NashResult nash = solve_nash(inst.cfg, inst.pref, 1e-8 * scale);
      double norm = 0.0;
      for (int x = 0; x < inst.cfg.actions.size(); ++x)
        for (std::size_t a = 0; a < ipo.policy.rows[static_cast<std::size_t>(x)].size(); ++a)
          norm = std::max(norm, std::abs(ipo.policy.rows[static_cast<std::size_t>(x)][a] -
                                         nash.policy.rows[static_cast<std::size_t>(x)][a]));
      gaps[static_cast<std::size_t>(i)] = ipo.duality_gap;
      norms[static_cast<std::size_t>(i)] = norm;
    } catch (const std::exception&) {
      failed[static_cast<std::size_t>(i)] = 1;
    }
  });
  double max_gap = 0.0, max_norm = 0.0;
  int bad = 0;
  for (std::size_t i = 0; i < insts.size(); ++i) {
    if (failed[i] != 0) {
      ++bad;
      continue;
    }
    max_gap = std::max(max_gap, gaps[i]);
    max_norm = std::max(max_norm, norms[i]);
  }
  if (bad > 0 || max_gap > 1e-3 || max_norm > 1e-3) r.passed = false;
  r.detail = "max_gap=" + fmt("%.3g", max_gap) + " max_norm=" + fmt("%.3g", max_norm) +
             " errors=" + std::to_string(bad);
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 9: no reward-difference model matches an intransitive oracle.

CriterionResult criterion_intransitivity(double) {
  CriterionResult r{9, "intransitivity-separation", true, "", 0.0};
  CycleSetup s = cycle_setup();
  LinearBTClass cls;
  cls.dim = 2;
  cls.bound = 5.0;
  cls.features = {{Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(0.0, 1.0),
                   Eigen::Vector2d(0.0, 0.0)}};
  cls.validate();

  // Population over uniformly random ordered pairs, folded into upper cells.
  std::vector<PairCell> cells;
  for (int a = 0; a < 3; ++a) {
    cells.push_back(PairCell{0, a, a, 0.5 / 9.0, 0.5 / 9.0});
    for (int b = a + 1; b < 3; ++b)
      cells.push_back(PairCell{0, a, b, 2.0 / 9.0 * s.truth.at(0, a, b),
                               2.0 / 9.0 * s.truth.at(0, b, a)});
  }
  Eigen::VectorXd theta = mle_fit_cells(cls, cells);
  double ce_bt = -log_likelihood_cells(cls.to_preference(theta), cells, false);
  double ce_truth = -log_likelihood_cells(s.truth, cells, false);
  double separation = ce_bt - ce_truth;
  TransitivityReport cycle = transitivity_check(s.truth);
  if (separation < 0.01 || cycle.acyclic || cycle.cycle.empty()) r.passed = false;
  r.detail = "loss_excess=" + fmt("%.4g", separation) +
             " cycle_flagged=" + (cycle.acyclic ? "no" : "yes");
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 10: the ellipsoid bonus dominates realized model discrepancies.

CriterionResult criterion_linear_bonus(double) {
  CriterionResult r{10, "linear-bonus-dominance", true, "", 0.0};
  std::vector<int> violations(100, 0);
  std::vector<double> margins(100, 1e300);
  parallel_for(100, [&](int inst) {
    Draw d(kLinearSeedBase + static_cast<std::uint64_t>(inst));
    const double B = 2.0;
    int nx = 1 + d.below(2);
    std::vector<double> d0 = random_simplex(d, nx, 0.2);
    std::vector<int> counts(static_cast<std::size_t>(nx));
    for (int& k : counts) k = 2 + d.below(3);
    GameConfig cfg = uniform_config(d0, counts, 1.0);

    LinearBTClass cls;
    cls.dim = 2;
    cls.bound = B;
    cls.features.resize(static_cast<std::size_t>(nx));
    for (int x = 0; x < nx; ++x)
      for (int a = 0; a < counts[static_cast<std::size_t>(x)]; ++a) {
        Eigen::Vector2d phi(2.0 * d.u() - 1.0, 2.0 * d.u() - 1.0);
        cls.features[static_cast<std::size_t>(x)].push_back(phi / std::sqrt(2.0));
      }
    cls.validate();

    auto random_theta = [&] {
      Eigen::Vector2d t(2.0 * d.u() - 1.0, 2.0 * d.u() - 1.0);
      return Eigen::VectorXd(B * d.u() / std::max(t.norm(), 1e-12) * t);
    };
    auto random_pol = [&] {
      Policy p;
      for (int x = 0; x < nx; ++x)
        p.rows.push_back(random_simplex(d, counts[static_cast<std::size_t>(x)], 0.1));
      return p;
    };

    double lambda = 0.5 + d.u();
    Eigen::VectorXd theta_hat = random_theta();
    PreferenceFunction phat = cls.to_preference(theta_hat);

    Covariance cov = initial_covariance(2, lambda, B);
    int steps = 1 + d.below(3);
    std::vector<std::pair<Policy, Policy>> history;
    for (int t = 0; t < steps; ++t) {
      history.emplace_back(random_pol(), random_pol());
      cov = covariance_update(cov, cls, cfg, history.back().first, history.back().second);
    }
    Policy p1 = random_pol(), p2 = random_pol();
    double bonus = linear_bt_bonus(cov, cls, cfg, p1, p2);

    for (int g = 0; g < 1000; ++g) {
      PreferenceFunction pg = cls.to_preference(random_theta());
      double num = 0.0;
      for (int x = 0; x < nx; ++x)
        num += cfg.prompts.d0[static_cast<std::size_t>(x)] *
               (expected_preference(pg, x, p1.rows[static_cast<std::size_t>(x)],
                                    p2.rows[static_cast<std::size_t>(x)]) -
                expected_preference(phat, x, p1.rows[static_cast<std::size_t>(x)],
                                    p2.rows[static_cast<std::size_t>(x)]));
      num = std::abs(num);
      double den = lambda;
      for (const auto& [h1, h2] : history)
        for (int x = 0; x < nx; ++x) {
          int k = counts[static_cast<std::size_t>(x)];
          for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b) {
              double diff = pg.at(x, a, b) - phat.at(x, a, b);
              den += cfg.prompts.d0[static_cast<std::size_t>(x)] *
                     h1.rows[static_cast<std::size_t>(x)][static_cast<std::size_t>(a)] *
                     h2.rows[static_cast<std::size_t>(x)][static_cast<std::size_t>(b)] * diff *
                     diff;
            }
        }
      double ratio = num / std::sqrt(den);
      margins[static_cast<std::size_t>(inst)] =
          std::min(margins[static_cast<std::size_t>(inst)], bonus - ratio);
      if (ratio > bonus) ++violations[static_cast<std::size_t>(inst)];
    }
  });
  int total = 0;
  double min_margin = 1e300;
  for (int i = 0; i < 100; ++i) {
    total += violations[static_cast<std::size_t>(i)];
    min_margin = std::min(min_margin, margins[static_cast<std::size_t>(i)]);
  }
  if (total != 0) r.passed = false;
  r.detail = "violations=" + std::to_string(total) + " min_margin=" + fmt("%.3g", min_margin);
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 11: byte-identical reruns, including across worker counts.

struct EnvGuard {
  std::string name;
  std::string old_value;
  bool had = false;
  EnvGuard(const char* n, const char* v) : name(n) {
    const char* cur = std::getenv(n);
    if (cur != nullptr) {
      had = true;
      old_value = cur;
    }
    ::setenv(n, v, 1);
  }
  ~EnvGuard() {
    if (had)
      ::setenv(name.c_str(), old_value.c_str(), 1);
    else
      ::unsetenv(name.c_str());
  }
};

CriterionResult criterion_determinism(double scale) {
  CriterionResult r{11, "determinism", true, "", 0.0};
  EstimationSetup s = estimation_setup();
  Instance inst{s.cfg, s.cls.members[0]};

  PreferenceDataset d1 = collect(s.cfg, s.cfg.pi0, s.cfg.pi0, inst.pref, 500, kCollectSeed);
  PreferenceDataset d2 = collect(s.cfg, s.cfg.pi0, s.cfg.pi0, inst.pref, 500, kCollectSeed);
  bool collect_ok = dataset_to_string(d1) == dataset_to_string(d2);

  std::string inst_text = instance_to_string(inst);
  bool roundtrip_ok = instance_to_string(instance_from_string(inst_text)) == inst_text;

  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() /
                 ("prefgame_accept_" + std::to_string(static_cast<long>(::getpid())));
  fs::create_directories(dir);
  ClassSpec spec;
  spec.kind = ClassSpec::Kind::finite;
  spec.prompts = s.cfg.actions.size();
  spec.actions = s.cfg.actions;
  spec.finite = s.cls;
  write_file((dir / "instance.txt").string(), inst_text);
  write_file((dir / "class.txt").string(), class_to_string(spec));

  ExperimentConfig ecfg;
  ecfg.instance_path = (dir / "instance.txt").string();
  ecfg.class_path = (dir / "class.txt").string();
  ecfg.algorithm = ExperimentConfig::Algorithm::offline_vs;
  ecfg.replicates = 4;
  ecfg.base_seed = 7;
  ecfg.data_n = 60;
  ecfg.offline.solver_tol = 1e-8 * scale;

  ExperimentConfig ocfg = ecfg;
  ocfg.algorithm = ExperimentConfig::Algorithm::online;
  ocfg.replicates = 3;
  ocfg.online.iterations = 2;
  ocfg.online.batch_size = 50;
  ocfg.online.solver_tol = 1e-8 * scale;

  bool offline_ok = false, online_ok = false;
  {
    EnvGuard serial("PREFGAME_WORKERS", "1");
    ExperimentReport a = run_experiment(ecfg);
    ExperimentReport c = run_experiment(ocfg);
    EnvGuard parallel_wk("PREFGAME_WORKERS", "8");
    ExperimentReport b = run_experiment(ecfg);
    ExperimentReport e = run_experiment(ocfg);
    offline_ok = a.jsonl == b.jsonl && a.summary_csv == b.summary_csv && !a.jsonl.empty();
    online_ok = c.jsonl == e.jsonl && c.summary_csv == e.summary_csv && !c.jsonl.empty();
  }
  std::error_code ec;
  fs::remove_all(dir, ec);

  if (!collect_ok || !roundtrip_ok || !offline_ok || !online_ok) r.passed = false;
  r.detail = std::string("collect=") + (collect_ok ? "ok" : "DIFF") +
             " roundtrip=" + (roundtrip_ok ? "ok" : "DIFF") +
             " offline_workers=" + (offline_ok ? "ok" : "DIFF") +
             " online_workers=" + (online_ok ? "ok" : "DIFF");
  return r;
}

}  // namespace

std::string AcceptanceReport::table() const {
  std::ostringstream out;
  int ok = 0;
  for (const CriterionResult& c : criteria) {
    char head[64];
    std::snprintf(head, sizeof(head), "C%02d %-26s", c.id, c.name.c_str());
    out << head << (c.passed ? "PASS" : "FAIL") << "  " << c.detail << '\n';
    if (c.passed) ++ok;
  }
  out << "overall " << (passed ? "PASS" : "FAIL") << " (" << ok << '/' << criteria.size()
      << " criteria)\n";
  return out.str();
}

AcceptanceReport acceptance_suite(const AcceptanceOptions& opt) {
  if (opt.tol_scale <= 0.0) throw InvalidArgument("acceptance: tol_scale must be > 0");
  if (opt.only < 0 || opt.only > 11)
    throw InvalidArgument("acceptance: criterion id must be in 1..11");
  using Fn = CriterionResult (*)(double);
  const Fn criteria[11] = {
      criterion_nash_certificate, criterion_symmetric_nash, criterion_gibbs_identities,
      criterion_confidence_set,   criterion_offline_bounds, criterion_online_bounds,
      criterion_bon_kl,           criterion_ipo,            criterion_intransitivity,
      criterion_linear_bonus,     criterion_determinism};

  AcceptanceReport report;
  auto t0 = std::chrono::steady_clock::now();
  for (int id = 1; id <= 11; ++id) {
    if (opt.only != 0 && opt.only != id) continue;
    auto c0 = std::chrono::steady_clock::now();
    CriterionResult res = criteria[id - 1](opt.tol_scale);
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - c0).count();
    std::fprintf(stderr, "criterion %2d %-26s %s (%.2fs)\n", res.id, res.name.c_str(),
                 res.passed ? "pass" : "FAIL", res.seconds);
    report.passed = report.passed && res.passed;
    report.criteria.push_back(std::move(res));
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::fprintf(stderr, "acceptance total %.2fs\n", report.seconds);
  return report;
}

}  // namespace prefgame
