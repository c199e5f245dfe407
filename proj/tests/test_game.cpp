#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "prefgame/errors.hpp"
#include "prefgame/game.hpp"
#include "prefgame/oracle.hpp"
#include "test_util.hpp"

using namespace prefgame;

namespace {

// Single prompt, two actions, rewards (1, 0), uniform pi0, eta = 1. The
// closed-form constants below come from tools/oracle/ref_game_value.py.
GameConfig two_action_config() {
  GameConfig cfg;
  cfg.prompts.d0 = {1.0};
  cfg.actions.counts = {2};
  cfg.pi0.rows = {{0.5, 0.5}};
  cfg.eta = 1.0;
  cfg.validate();
  return cfg;
}

PreferenceFunction two_action_pref() {
  RewardTable r;
  r.values = {{1.0, 0.0}};
  return bt_oracle(r);
}

}  // namespace

TEST_CASE("kl_divergence identities and support check") {
  std::vector<double> u = {0.5, 0.5};
  CHECK(kl_divergence(u, u) == 0.0);
  CHECK(kl_divergence({0.3, 0.7}, {0.3, 0.7}) == 0.0);
  CHECK(std::abs(kl_divergence({1.0, 0.0}, u) - std::log(2.0)) <= 1e-15);
  CHECK(kl_divergence({0.3, 0.7}, u) >= 0.0);
  CHECK(kl_divergence({0.0, 1.0}, {0.0, 1.0}) == 0.0);  // 0 ln 0 = 0
  CHECK_THROWS_AS(kl_divergence({0.5, 0.5}, {1.0, 0.0}), SupportViolation);
  CHECK_THROWS_AS(kl_divergence({0.5, 0.5}, {0.3, 0.3, 0.4}), DimensionMismatch);
}

TEST_CASE("kl_divergence is nonnegative on random pairs") {
  for (std::uint64_t s = 0; s < 200; ++s) {
    auto p = testutil::random_simplex(s, 0, 4);
    auto q = testutil::random_simplex(s + 7777, 1, 4);
    CHECK(kl_divergence(p, q) >= 0.0);
  }
}

TEST_CASE("preference table stores the skew pair") {
  ActionSpace sp;
  sp.counts = {3};
  PreferenceFunction P(sp);
  CHECK(P.at(0, 0, 1) == 0.5);
  CHECK(P.at(0, 2, 2) == 0.5);
  P.set(0, 0, 2, 0.8);
  CHECK(P.at(0, 0, 2) == 0.8);
  CHECK(P.at(0, 2, 0) == doctest::Approx(0.2).epsilon(1e-15));
  P.set(0, 2, 1, 0.9);  // lower-triangle write lands in the mirror slot
  CHECK(P.at(0, 1, 2) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK_THROWS_AS(P.set(0, 0, 1, 1.2), InvalidArgument);
  CHECK_THROWS_AS(P.set(0, 1, 1, 0.6), InvalidArgument);
  CHECK(P.upper(0).size() == 3);
}

TEST_CASE("expected_preference self-play is exactly one half") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    GameConfig cfg = testutil::random_config(1000 + s, 1.0);
    PreferenceFunction P = testutil::random_pref(cfg, 2000 + s);
    Policy p = testutil::random_policy(cfg, 3000 + s);
    for (int x = 0; x < cfg.prompts.size(); ++x)
      CHECK(expected_preference(P, x, p.rows[x], p.rows[x]) == 0.5);
  }
}

TEST_CASE("expected_preference swap antisymmetry") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    GameConfig cfg = testutil::random_config(1100 + s, 1.0);
    PreferenceFunction P = testutil::random_pref(cfg, 2100 + s);
    Policy p1 = testutil::random_policy(cfg, 3100 + s);
    Policy p2 = testutil::random_policy(cfg, 4100 + s);
    for (int x = 0; x < cfg.prompts.size(); ++x) {
      double a = expected_preference(P, x, p1.rows[x], p2.rows[x]);
      double b = expected_preference(P, x, p2.rows[x], p1.rows[x]);
      CHECK(std::abs(a + b - 1.0) <= 1e-15);
      CHECK(a >= 0.0);
      CHECK(a <= 1.0);
    }
  }
}

TEST_CASE("expected_preference under the indifferent table") {
  GameConfig cfg = testutil::random_config(42, 1.0);
  PreferenceFunction half(cfg.actions);  // all entries 0.5
  Policy p1 = testutil::random_policy(cfg, 43);
  Policy p2 = testutil::random_policy(cfg, 44);
  for (int x = 0; x < cfg.prompts.size(); ++x)
    CHECK(expected_preference(half, x, p1.rows[x], p2.rows[x]) == 0.5);
}

TEST_CASE("game_value on the two-action instance") {
  GameConfig cfg = two_action_config();
  PreferenceFunction P = two_action_pref();
  Policy delta = testutil::delta_policy(cfg, 0);
  // sigma(1)/2 + 1/4 - ln 2; value from tools/oracle/ref_game_value.py.
  CHECK(std::abs(game_value(cfg, P, delta, cfg.pi0) - (-0.077617891244942894)) <= 1e-13);
}

TEST_CASE("game_value diagonal and antisymmetry") {
  for (std::uint64_t s = 0; s < 40; ++s) {
    GameConfig cfg = testutil::random_config(1200 + s, 0.5 + (s % 3));
    PreferenceFunction P = testutil::random_pref(cfg, 2200 + s);
    Policy p1 = testutil::random_policy(cfg, 3200 + s);
    Policy p2 = testutil::random_policy(cfg, 4200 + s);
    CHECK(std::abs(game_value(cfg, P, p1, p1) - 0.5) <= 1e-12);
    double j12 = game_value(cfg, P, p1, p2);
    double j21 = game_value(cfg, P, p2, p1);
    CHECK(std::abs(j12 + j21 - 1.0) <= 1e-12);
  }
}

TEST_CASE("game_value tolerates a barely positive reference") {
  GameConfig cfg;
  cfg.prompts.d0 = {1.0};
  cfg.actions.counts = {2};
  cfg.pi0.rows = {{1.0 - 1e-9, 1e-9}};
  cfg.eta = 1.0;
  cfg.validate();
  PreferenceFunction P(cfg.actions);
  Policy p;
  p.rows = {{0.5, 0.5}};
  CHECK(std::isfinite(game_value(cfg, P, p, cfg.pi0)));
}

TEST_CASE("opponent_score slots") {
  GameConfig cfg = two_action_config();
  PreferenceFunction P = two_action_pref();
  std::vector<double> uniform = {0.5, 0.5};
  auto s2 = opponent_score(P, 0, uniform, 2);
  // Values from tools/oracle/ref_game_value.py.
  CHECK(std::abs(s2[0] - 0.61552928931500239) <= 1e-14);
  CHECK(std::abs(s2[1] - 0.38447071068499755) <= 1e-14);
  // Slot 1: column averages; rows and columns of a skew table sum to 1.
  auto s1 = opponent_score(P, 0, uniform, 1);
  CHECK(std::abs(s1[0] + s2[0] - 1.0) <= 1e-14);
  CHECK(std::abs(s1[1] + s2[1] - 1.0) <= 1e-14);
}

TEST_CASE("gibbs_row normalizes and matches the closed form") {
  GameConfig cfg = two_action_config();
  PreferenceFunction P = two_action_pref();
  auto score = opponent_score(P, 0, cfg.pi0.rows[0], 2);
  auto g = gibbs_best_response(cfg, 0, score, BrSign::max);
  // Best response to the uniform opponent; tools/oracle/ref_game_value.py.
  CHECK(std::abs(g[0] - 0.55750901410746112) <= 1e-14);
  CHECK(std::abs(g[0] + g[1] - 1.0) <= 1e-15);

  // sign=min equals sign=max with the score negated.
  auto neg = score;
  for (double& v : neg) v = -v;
  auto gmin = gibbs_best_response(cfg, 0, score, BrSign::min);
  auto gneg = gibbs_best_response(cfg, 0, neg, BrSign::max);
  CHECK(std::abs(gmin[0] - gneg[0]) <= 1e-15);

  // A constant score leaves the reference untouched.
  auto flat = gibbs_row({0.25, 0.75}, {3.0, 3.0}, 2.0, BrSign::max);
  CHECK(std::abs(flat[0] - 0.25) <= 1e-15);

  // Extreme scores survive via log-sum-exp.
  auto big = gibbs_row({0.5, 0.5}, {2000.0, 0.0}, 1.0, BrSign::max);
  CHECK(big[0] == doctest::Approx(1.0));
  CHECK(std::isfinite(big[1]));
}

TEST_CASE("gibbs best response beats every alternative") {
  // F(pi) = <score, pi> - KL(pi|pi0)/eta is maximized by the Gibbs row, and
  // the improvement over any pi equals KL(pi|gibbs)/eta exactly.
  for (std::uint64_t s = 0; s < 200; ++s) {
    GameConfig cfg = testutil::random_config(1300 + s, 0.5 + (s % 4));
    PreferenceFunction P = testutil::random_pref(cfg, 2300 + s);
    Policy opp = testutil::random_policy(cfg, 3300 + s);
    Policy pi = testutil::random_policy(cfg, 4300 + s);
    for (int x = 0; x < cfg.prompts.size(); ++x) {
      auto score = opponent_score(P, x, opp.rows[x], 2);
      auto g = gibbs_best_response(cfg, x, score, BrSign::max);
      auto value = [&](const std::vector<double>& row) {
        double lin = 0.0;
        for (std::size_t a = 0; a < row.size(); ++a) lin += row[a] * score[a];
        return lin - kl_divergence(row, cfg.pi0.rows[x]) / cfg.eta;
      };
      double gain = value(g) - value(pi.rows[x]);
      CHECK(gain >= -1e-12);
      CHECK(std::abs(gain - kl_divergence(pi.rows[x], g) / cfg.eta) <= 1e-8);
    }
  }
}

TEST_CASE("best responses and the duality gap") {
  GameConfig cfg = two_action_config();
  PreferenceFunction P = two_action_pref();
  Policy delta = testutil::delta_policy(cfg, 0);
  // Value from tools/oracle/ref_game_value.py.
  CHECK(std::abs(duality_gap(cfg, P, delta, cfg.pi0) - 0.59093532270696902) <= 1e-13);

  for (std::uint64_t s = 0; s < 40; ++s) {
    GameConfig rc = testutil::random_config(1400 + s, 1.0 + (s % 3));
    PreferenceFunction rp = testutil::random_pref(rc, 2400 + s);
    Policy p1 = testutil::random_policy(rc, 3400 + s);
    Policy p2 = testutil::random_policy(rc, 4400 + s);
    double gap = duality_gap(rc, rp, p1, p2);
    CHECK(gap >= 0.0);
    // The max side's best response only improves the first argument.
    Policy br = best_response_max(rc, rp, p2);
    CHECK(game_value(rc, rp, br, p2) >= game_value(rc, rp, p1, p2) - 1e-12);
    Policy brmin = best_response_min(rc, rp, p1);
    CHECK(game_value(rc, rp, p1, brmin) <= game_value(rc, rp, p1, p2) + 1e-12);
  }
}

TEST_CASE("config validation rejects malformed inputs") {
  GameConfig cfg = two_action_config();
  CHECK_NOTHROW(cfg.validate());

  GameConfig bad = cfg;
  bad.eta = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);

  bad = cfg;
  bad.prompts.d0 = {0.7};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);

  bad = cfg;
  bad.actions.counts = {1};
  bad.pi0.rows = {{1.0}};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);

  bad = cfg;
  bad.pi0.rows = {{1.0, 0.0}};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);

  bad = cfg;
  bad.pi0.rows = {{0.3, 0.3, 0.4}};
  CHECK_THROWS_AS(bad.validate(), DimensionMismatch);

  bad = cfg;
  bad.actions.counts = {2, 2};
  CHECK_THROWS_AS(bad.validate(), DimensionMismatch);
}

TEST_CASE("shape checks") {
  GameConfig cfg = two_action_config();
  PreferenceFunction P = two_action_pref();
  CHECK_NOTHROW(check_pref_shape(cfg, P, "pref"));
  Policy good = testutil::uniform_policy(cfg);
  CHECK_NOTHROW(check_policy_shape(cfg, good, "policy"));
  Policy badp;
  badp.rows = {{0.5, 0.25, 0.25}};
  CHECK_THROWS_AS(check_policy_shape(cfg, badp, "policy"), DimensionMismatch);
  ActionSpace sp;
  sp.counts = {3};
  PreferenceFunction wide(sp);
  CHECK_THROWS_AS(check_pref_shape(cfg, wide, "pref"), DimensionMismatch);
  CHECK_FALSE(wide.same_shape(P));
}
