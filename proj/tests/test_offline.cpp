#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "prefgame/errors.hpp"
#include "prefgame/game.hpp"
#include "prefgame/offline.hpp"
#include "prefgame/oracle.hpp"
#include "prefgame/prefclass.hpp"
#include "prefgame/solver.hpp"
#include "test_util.hpp"

using namespace prefgame;

namespace {

PreferenceFunction table2(double p01) {
  ActionSpace sp;
  sp.counts = {2};
  PreferenceFunction P(sp);
  P.set(0, 0, 1, p01);
  return P;
}

GameConfig config2() {
  GameConfig cfg;
  cfg.prompts.d0 = {1.0};
  cfg.actions.counts = {2};
  cfg.pi0.rows = {{0.5, 0.5}};
  cfg.eta = 1.0;
  cfg.validate();
  return cfg;
}

}  // namespace

TEST_CASE("offline hyperparameter formulas") {
  auto [beta, lambda] = offline_hyperparams(8, 0.1);
  CHECK(std::abs(lambda - std::log(80.0)) <= 1e-15);
  CHECK(std::abs(beta - std::sqrt(2.0 * std::log(80.0))) <= 1e-15);
  CHECK_THROWS_AS(offline_hyperparams(0, 0.1), InvalidArgument);
  CHECK_THROWS_AS(offline_hyperparams(8, 1.0), InvalidArgument);

  OfflineConfig off;
  off.beta = -0.5;
  CHECK_THROWS_AS(off.validate(), InvalidArgument);
  off = OfflineConfig{};
  off.lambda = 0.0;
  CHECK_THROWS_AS(off.validate(), InvalidArgument);
  off = OfflineConfig{};
  CHECK_NOTHROW(off.validate());
}

TEST_CASE("pessimistic values enumerate the member minimum") {
  GameConfig cfg = config2();
  FiniteClass cls;
  cls.members = {table2(0.8), table2(0.2)};
  Policy d0pol = testutil::delta_policy(cfg, 0);
  Policy d1pol = testutil::delta_policy(cfg, 1);
  // KL terms cancel for deterministic policies under the uniform reference.
  CHECK(std::abs(pessimistic_pair_value(cfg, cls, {0, 1}, d0pol, d1pol) - 0.2) <= 1e-12);
  CHECK(std::abs(pessimistic_pair_value(cfg, cls, {0}, d0pol, d1pol) - 0.8) <= 1e-12);
  CHECK_THROWS_AS(pessimistic_pair_value(cfg, cls, {}, d0pol, d1pol), InvalidArgument);

  // Single member: the inner minimum is the closed-form best response.
  PessimisticEval ev = pessimistic_value(cfg, cls, {0}, d0pol);
  Policy br = best_response_min(cfg, cls.members[0], d0pol);
  CHECK(ev.member == 0);
  CHECK(std::abs(ev.value - game_value(cfg, cls.members[0], d0pol, br)) <= 1e-12);
  for (int a = 0; a < 2; ++a)
    CHECK(std::abs(ev.response.rows[0][a] - br.rows[0][a]) <= 1e-12);

  // Two members: the reported member attains the reported value.
  PessimisticEval both = pessimistic_value(cfg, cls, {0, 1}, d0pol);
  Policy br2 = best_response_min(cfg, cls.members[both.member], d0pol);
  CHECK(std::abs(both.value - game_value(cfg, cls.members[both.member], d0pol, br2)) <= 1e-12);
  CHECK(both.value <= ev.value + 1e-12);
}

TEST_CASE("version-space learner on a singleton class solves the game") {
  GameConfig cfg = testutil::random_config(1717, 1.0);
  PreferenceFunction env = testutil::random_pref(cfg, 1718);
  FiniteClass cls;
  cls.members = {env};
  cls.realizable = true;
  Policy u = testutil::uniform_policy(cfg);
  PreferenceDataset d = collect(cfg, u, u, env, 100, 5);

  OfflineConfig off;
  off.beta = 1.0;
  OfflineResult res = pelhf_version_space(cls, d, cfg, off);
  CHECK(res.mle_index == 0);
  CHECK(res.version_space == std::vector<int>{0});
  double subopt = 0.5 - game_value(cfg, env, res.policy,
                                   best_response_min(cfg, env, res.policy));
  CHECK(subopt < 1e-4);
  CHECK_FALSE(res.hit_iteration_cap);
}

TEST_CASE("version-space learner maximizes the conservative value") {
  GameConfig cfg = testutil::random_config(2711, 1.0);
  FiniteClass cls;
  for (std::uint64_t s = 0; s < 5; ++s)
    cls.members.push_back(testutil::random_pref(cfg, 2800 + s));
  Policy u = testutil::uniform_policy(cfg);
  PreferenceDataset d = collect(cfg, u, u, cls.members[1], 150, 9);

  OfflineConfig off;
  off.beta = 2.0;
  OfflineResult res = pelhf_version_space(cls, d, cfg, off);
  REQUIRE(!res.version_space.empty());
  // The reported value is the conservative value of the reported policy.
  PessimisticEval ev = pessimistic_value(cfg, cls, res.version_space, res.policy);
  CHECK(std::abs(ev.value - res.pessimistic_value) <= 1e-9);
  // It beats the reference policy and every member's own equilibrium.
  CHECK(res.pessimistic_value >=
        pessimistic_value(cfg, cls, res.version_space, cfg.pi0).value - 1e-9);
  for (int idx : res.version_space) {
    Policy cand = solve_nash(cfg, cls.members[idx], off.solver_tol).policy;
    CHECK(res.pessimistic_value >=
          pessimistic_value(cfg, cls, res.version_space, cand).value - 1e-9);
  }
  // The version space always holds the fitted member.
  bool has_mle = false;
  for (int idx : res.version_space) has_mle = has_mle || idx == res.mle_index;
  CHECK(has_mle);
}

TEST_CASE("growing beta makes the version-space learner more conservative") {
  GameConfig cfg = testutil::random_config(3311, 1.0);
  FiniteClass cls;
  for (std::uint64_t s = 0; s < 4; ++s)
    cls.members.push_back(testutil::random_pref(cfg, 3400 + s));
  Policy u = testutil::uniform_policy(cfg);
  PreferenceDataset d = collect(cfg, u, u, cls.members[0], 80, 21);

  std::size_t prev_size = 0;
  double prev_value = 1e300;
  for (double beta : {0.0, 0.7, 1.5, 4.0}) {
    OfflineConfig off;
    off.beta = beta;
    OfflineResult res = pelhf_version_space(cls, d, cfg, off);
    CHECK(res.version_space.size() >= prev_size);
    CHECK(res.pessimistic_value <= prev_value + 1e-6);
    prev_size = res.version_space.size();
    prev_value = res.pessimistic_value;
  }
}

TEST_CASE("bonus learner with zero width reproduces the fitted equilibrium") {
  GameConfig cfg = testutil::random_config(4411, 1.0);
  FiniteClass cls;
  for (std::uint64_t s = 0; s < 3; ++s)
    cls.members.push_back(testutil::random_pref(cfg, 4500 + s));
  Policy u = testutil::uniform_policy(cfg);
  PreferenceDataset d = collect(cfg, u, u, cls.members[2], 120, 33);

  OfflineConfig off;
  off.beta = 0.0;
  OfflineResult res = pelhf_bonus(cls, d, cfg, off);
  int mle = mle_fit(cls, d);
  CHECK(res.mle_index == mle);
  Policy nash = solve_nash(cfg, cls.members[mle]).policy;
  for (int x = 0; x < cfg.prompts.size(); ++x)
    for (int a = 0; a < cfg.actions.counts[x]; ++a)
      CHECK(std::abs(res.policy.rows[x][a] - nash.rows[x][a]) <= 1e-6);

  // A positive width penalizes unexplored pairs but still certifies.
  off.beta = 0.8;
  OfflineResult pen = pelhf_bonus(cls, d, cfg, off);
  CHECK(std::isfinite(pen.pessimistic_value));
  CHECK(pen.version_space.empty());
}

TEST_CASE("coverage methods agree and handle degenerate mass") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    GameConfig cfg = testutil::random_config(5511 + s, 1.0);
    FiniteClass cls;
    for (std::uint64_t j = 0; j < 3; ++j)
      cls.members.push_back(testutil::random_pref(cfg, 5600 + 10 * s + j));
    PreferenceFunction phat = cls.members[0];
    Policy target = testutil::random_policy(cfg, 5700 + s);
    Policy d1 = testutil::random_policy(cfg, 5800 + s);
    Policy d2 = testutil::random_policy(cfg, 5900 + s);
    CoverageResult a =
        coverage_coefficient(cls, phat, target, d1, d2, cfg, CoverageMethod::per_prompt);
    CoverageResult b = coverage_coefficient(cls, phat, target, d1, d2, cfg,
                                            CoverageMethod::enumerate_policies);
    CoverageResult c = coverage_coefficient(cls, phat, target, d1, d2, cfg);
    CHECK(a.infinite == b.infinite);
    CHECK(std::abs(a.value - b.value) <= 1e-9 * (1.0 + std::abs(a.value)));
    CHECK(std::abs(a.value - c.value) <= 1e-9 * (1.0 + std::abs(a.value)));
    CHECK(a.value >= 0.0);

    // The prompt-wise variant dominates the plain coefficient.
    CoverageResult t = coverage_coefficient_tilde(cls, phat, target, d1, d2, cfg);
    if (!a.infinite && !t.infinite) CHECK(t.value >= a.value - 1e-9);
  }
}

TEST_CASE("coverage of a singleton class is zero by convention") {
  GameConfig cfg = config2();
  FiniteClass cls;
  cls.members = {table2(0.7)};
  Policy u = testutil::uniform_policy(cfg);
  CoverageResult r = coverage_coefficient(cls, cls.members[0], u, u, u, cfg);
  CHECK(r.value == 0.0);
  CHECK_FALSE(r.infinite);
  CoverageResult t = coverage_coefficient_tilde(cls, cls.members[0], u, u, u, cfg);
  CHECK(t.value == 0.0);
  CHECK_FALSE(t.infinite);
}

TEST_CASE("uncovered directions are flagged infinite") {
  GameConfig cfg = config2();
  FiniteClass cls;
  cls.members = {table2(0.5), table2(0.9)};
  PreferenceFunction phat = cls.members[0];
  // Behavior mass only on the diagonal pair (0,0): zero denominator, while the
  // target comparison (0 vs 1) still distinguishes the members.
  Policy probe = testutil::delta_policy(cfg, 0);
  CoverageResult r = coverage_coefficient(cls, phat, probe, probe, probe, cfg);
  CHECK(r.infinite);
  CoverageResult t = coverage_coefficient_tilde(cls, phat, probe, probe, probe, cfg);
  CHECK(t.infinite);
}

TEST_CASE("refined coverage of the achieving response has zero regret") {
  GameConfig cfg = testutil::random_config(6611, 1.0);
  FiniteClass cls;
  for (std::uint64_t j = 0; j < 3; ++j)
    cls.members.push_back(testutil::random_pref(cfg, 6700 + j));
  Policy target = testutil::random_policy(cfg, 6800);
  std::vector<int> all = {0, 1, 2};
  PessimisticEval ev = pessimistic_value(cfg, cls, all, target);

  OfflineConfig off;
  Policy u = testutil::uniform_policy(cfg);
  RefinedCoverageResult rc =
      refined_coverage(cls, cls.members[0], target, ev.response, u, u, cfg, off);
  CHECK(std::abs(rc.subopt) <= 1e-10);
  CHECK(rc.coverage.value >= 0.0);

  // A deliberately bad probe carries positive regret.
  RefinedCoverageResult bad =
      refined_coverage(cls, cls.members[0], target, target, u, u, cfg, off);
  CHECK(bad.subopt >= -1e-10);
}
