#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "prefgame/errors.hpp"
#include "prefgame/game.hpp"
#include "prefgame/oracle.hpp"
#include "prefgame/solver.hpp"
#include "test_util.hpp"

using namespace prefgame;

namespace {

GameConfig cyclic_config(double eta, std::vector<double> pi0row) {
  GameConfig cfg;
  cfg.prompts.d0 = {1.0};
  cfg.actions.counts = {static_cast<int>(pi0row.size())};
  cfg.pi0.rows = {std::move(pi0row)};
  cfg.eta = eta;
  cfg.validate();
  return cfg;
}

// Single prompt, three actions, eta = 0.5, pi0 = (0.5, 0.3, 0.2); entries are
// the seed-7 draws frozen in tools/oracle/ref_ipo.py.
GameConfig ipo_config() {
  return cyclic_config(0.5, {0.5, 0.3, 0.2});
}

PreferenceFunction ipo_pref() {
  ActionSpace sp;
  sp.counts = {3};
  PreferenceFunction P(sp);
  P.set(0, 0, 1, 0.35906621186652987);
  P.set(0, 0, 2, 0.22067933913960155);
  P.set(0, 1, 2, 0.620747578431883);
  return P;
}

double max_norm(const Policy& a, const Policy& b) {
  double m = 0.0;
  for (std::size_t x = 0; x < a.rows.size(); ++x)
    for (std::size_t i = 0; i < a.rows[x].size(); ++i)
      m = std::max(m, std::abs(a.rows[x][i] - b.rows[x][i]));
  return m;
}

}  // namespace

TEST_CASE("uniform start is the exact equilibrium of the cyclic game") {
  GameConfig cfg = cyclic_config(1.0, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  PreferenceFunction P = cyclic_oracle(3, 0.75);
  NashResult r = solve_nash(cfg, P);
  CHECK(r.converged);
  CHECK_FALSE(r.used_fallback);
  CHECK(r.duality_gap == 0.0);
  for (double v : r.policy.rows[0]) CHECK(std::abs(v - 1.0 / 3) <= 1e-15);
}

TEST_CASE("two-action equilibrium matches the grid search") {
  GameConfig cfg = cyclic_config(1.0, {0.5, 0.5});
  RewardTable rw;
  rw.values = {{1.0, 0.0}};
  PreferenceFunction P = bt_oracle(rw);
  NashResult r = solve_nash(cfg, P);
  CHECK(r.converged);
  CHECK(r.duality_gap <= 1e-8);
  // Grid argmax at resolution 1e-5 from tools/oracle/ref_game_value.py.
  CHECK(std::abs(r.policy.rows[0][0] - 0.55751) <= 1e-4);

  CoincideReport rep = nash_players_coincide_check(cfg, P);
  CHECK(rep.passed);
  CHECK(rep.distance <= 1e-7);
}

TEST_CASE("solver certifies random instances") {
  const double etas[] = {0.5, 1.0, 5.0};
  for (std::uint64_t s = 0; s < 15; ++s) {
    GameConfig cfg = testutil::random_config(5000 + s, etas[s % 3]);
    PreferenceFunction P = testutil::random_pref(cfg, 6000 + s);
    NashResult r = solve_nash(cfg, P);
    CHECK(r.converged);
    CHECK(r.duality_gap <= 1e-8);
    CHECK(duality_gap(cfg, P, r.policy, r.policy) <= 1e-8);  // recheck the certificate
    CoincideReport rep = nash_players_coincide_check(cfg, P);
    CHECK(rep.passed);
  }
}

TEST_CASE("strong regularization converges via the fallback when damping stalls") {
  // eta = 10 is the regime where the damped fixed point can cycle; every
  // instance must still end certified.
  bool fallback_seen = false;
  for (std::uint64_t s = 0; s < 20; ++s) {
    GameConfig cfg = testutil::random_config(7000 + s, 10.0);
    PreferenceFunction P = testutil::random_pref(cfg, 8000 + s);
    NashResult r = solve_nash(cfg, P);
    CHECK(r.converged);
    CHECK(r.duality_gap <= 1e-8);
    fallback_seen = fallback_seen || r.used_fallback;
  }
  CHECK(fallback_seen);
}

TEST_CASE("solver rejects bad arguments and reports non-convergence") {
  GameConfig cfg = ipo_config();
  PreferenceFunction P = ipo_pref();
  CHECK_THROWS_AS(solve_nash(cfg, P, 0.0), InvalidArgument);
  CHECK_THROWS_AS(solve_nash(cfg, P, 1e-8, 0), InvalidArgument);
  try {
    solve_nash(cfg, P, 1e-300, 3);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    REQUIRE(e.last_iterate.size() == 1);
    CHECK(e.last_iterate[0].size() == 3);
    CHECK(e.residual > 0.0);
    double sum = 0.0;
    for (double v : e.last_iterate[0]) sum += v;
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("payoff tables agree with the preference game") {
  GameConfig cfg = testutil::random_config(111, 2.0);
  PreferenceFunction P = testutil::random_pref(cfg, 112);
  PayoffTable G = PayoffTable::from_preference(P);
  for (int x = 0; x < cfg.prompts.size(); ++x)
    for (int a = 0; a < cfg.actions.counts[x]; ++a)
      for (int b = 0; b < cfg.actions.counts[x]; ++b)
        CHECK(G.at(x, a, b) == P.at(x, a, b));
  Policy p1 = testutil::random_policy(cfg, 113);
  Policy p2 = testutil::random_policy(cfg, 114);
  CHECK(std::abs(payoff_game_value(cfg, G, p1, p2) - game_value(cfg, P, p1, p2)) <= 1e-14);
  CHECK(std::abs(payoff_duality_gap(cfg, G, p1, p2) - duality_gap(cfg, P, p1, p2)) <= 1e-12);
}

TEST_CASE("solve_game finds the saddle point") {
  GameConfig cfg = ipo_config();
  PreferenceFunction P = ipo_pref();
  NashResult nash = solve_nash(cfg, P);
  GameSolveResult gs = solve_game(cfg, PayoffTable::from_preference(P));
  CHECK(gs.converged);
  CHECK(gs.duality_gap <= 1e-8);
  // On a skew payoff the two sides coincide with the symmetric equilibrium.
  CHECK(max_norm(gs.p1, nash.policy) <= 1e-6);
  CHECK(max_norm(gs.p2, nash.policy) <= 1e-6);
}

TEST_CASE("solve_game on degenerate payoffs") {
  GameConfig cfg = cyclic_config(1.0, {0.5, 0.3, 0.2});
  ActionSpace sp = cfg.actions;

  // Constant payoff: both sides keep the reference policy.
  PayoffTable flat;
  flat.counts = sp.counts;
  flat.values = {std::vector<double>(9, 0.3)};
  GameSolveResult gs = solve_game(cfg, flat);
  CHECK(gs.converged);
  for (int a = 0; a < 3; ++a) {
    CHECK(std::abs(gs.p1.rows[0][a] - cfg.pi0.rows[0][a]) <= 1e-9);
    CHECK(std::abs(gs.p2.rows[0][a] - cfg.pi0.rows[0][a]) <= 1e-9);
  }

  // Payoff independent of the opponent: the max side tilts toward the reward,
  // the min side has nothing to minimize and stays at the reference.
  PayoffTable rewards;
  rewards.counts = sp.counts;
  rewards.values = {{1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.5, 0.5, 0.5}};
  // Gap tol 1e-13 because a gap of g only pins the policy to ~sqrt(eta g).
  GameSolveResult gr = solve_game(cfg, rewards, 1e-13);
  CHECK(gr.converged);
  auto expect = gibbs_row(cfg.pi0.rows[0], {1.0, 0.0, 0.5}, cfg.eta, BrSign::max);
  for (int a = 0; a < 3; ++a) {
    CHECK(std::abs(gr.p1.rows[0][a] - expect[a]) <= 1e-6);
    CHECK(std::abs(gr.p2.rows[0][a] - cfg.pi0.rows[0][a]) <= 1e-6);
  }
}

TEST_CASE("mirror step stays on the simplex and matches the tilted Gibbs row") {
  std::vector<double> pi0 = {0.5, 0.3, 0.2};
  std::vector<double> score = {0.7, 0.2, 0.5};
  std::vector<double> out = mirror_step_row(pi0, pi0, score, 0.5, 1.0, BrSign::max);
  double sum = 0.0;
  for (double v : out) {
    CHECK(v > 0.0);
    sum += v;
  }
  CHECK(std::abs(sum - 1.0) <= 1e-12);
  // Starting from pi0 the step is a Gibbs tilt at temperature alpha/(1+alpha/eta).
  auto g = gibbs_row(pi0, score, 0.5 / 1.5, BrSign::max);
  for (int a = 0; a < 3; ++a) CHECK(std::abs(out[a] - g[a]) <= 1e-14);
  // The min step moves the other way.
  auto down = mirror_step_row(pi0, pi0, score, 0.5, 1.0, BrSign::min);
  CHECK(down[0] < pi0[0]);
}

TEST_CASE("ipo loss worked value") {
  GameConfig cfg = cyclic_config(1.0, {0.5, 0.5});
  PreferenceFunction half(cfg.actions);
  // Indifferent table at the reference policy; value from tools/oracle/ref_ipo.py.
  CHECK(ipo_population_loss(cfg, cfg.pi0, half) == 0.25);
}

TEST_CASE("ipo minimizer matches the equilibrium") {
  GameConfig cfg = ipo_config();
  PreferenceFunction P = ipo_pref();
  // Gap tol 1e-12 so the policy itself is accurate to ~1e-6.
  NashResult nash = solve_nash(cfg, P, 1e-12);
  // Equilibrium frozen in tools/oracle/ref_ipo.py (printed to 6 decimals).
  CHECK(std::abs(nash.policy.rows[0][0] - 0.475479) <= 1e-5);
  CHECK(std::abs(nash.policy.rows[0][1] - 0.314558) <= 1e-5);
  CHECK(std::abs(nash.policy.rows[0][2] - 0.209964) <= 1e-5);

  NashResult ipo = ipo_solve(cfg, P, 1e-8);
  CHECK(ipo.converged);
  CHECK(ipo.duality_gap <= 1e-8);
  CHECK(max_norm(ipo.policy, nash.policy) <= 1e-3);

  // The loss at the equilibrium undercuts nearby perturbations.
  double at_nash = ipo_population_loss(cfg, nash.policy, P);
  for (std::uint64_t s = 0; s < 20; ++s) {
    Policy q = testutil::random_policy(cfg, 300 + s);
    Policy mix;
    mix.rows = {std::vector<double>(3)};
    for (int a = 0; a < 3; ++a)
      mix.rows[0][a] = 0.8 * nash.policy.rows[0][a] + 0.2 * q.rows[0][a];
    CHECK(ipo_population_loss(cfg, mix, P) >= at_nash - 1e-10);
  }
  CHECK_THROWS_AS(ipo_solve(cfg, P, -1.0), InvalidArgument);
}

TEST_CASE("ipo default certificate") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    GameConfig cfg = testutil::random_config(9100 + s, 1.0);
    PreferenceFunction P = testutil::random_pref(cfg, 9200 + s);
    NashResult r = ipo_solve(cfg, P);  // default tol 1e-3
    CHECK(r.converged);
    CHECK(r.duality_gap <= 1e-3);
  }
}
