#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "prefgame/errors.hpp"
#include "prefgame/game.hpp"
#include "prefgame/oracle.hpp"
#include "prefgame/prefclass.hpp"
#include "prefgame/rng.hpp"
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

PreferenceDataset records_at(int x, int a1, int a2, const std::vector<int>& labels) {
  PreferenceDataset d;
  for (int y : labels) d.records.push_back(PreferenceRecord{x, a1, a2, y});
  return d;
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

TEST_CASE("log_likelihood hand values and clipping") {
  PreferenceFunction P = table2(0.75);
  PreferenceDataset d = records_at(0, 0, 1, {1, 0});
  CHECK(std::abs(log_likelihood(P, d) - (std::log(0.75) + std::log(0.25))) <= 1e-15);
  CHECK(log_likelihood(P, d) == log_likelihood_unclipped(P, d));

  PreferenceFunction boundary = table2(1.0);
  PreferenceDataset lose = records_at(0, 0, 1, {0});
  CHECK(std::isinf(log_likelihood_unclipped(boundary, lose)));
  CHECK(std::abs(log_likelihood(boundary, lose) - std::log(kLikelihoodClip)) <= 1e-12);

  // Swapped-slot records read the mirrored entry.
  PreferenceDataset swapped = records_at(0, 1, 0, {1});
  CHECK(std::abs(log_likelihood(P, swapped) - std::log(0.25)) <= 1e-15);
}

TEST_CASE("aggregate_cells preserves the likelihood") {
  GameConfig cfg = testutil::random_config(555, 1.0);
  PreferenceFunction truth = testutil::random_pref(cfg, 556);
  Policy u = testutil::uniform_policy(cfg);
  PreferenceDataset d = collect(cfg, u, u, truth, 400, 99);
  auto cells = aggregate_cells(d);
  CHECK(cells.size() <= d.records.size());
  double w = 0.0;
  for (const auto& c : cells) w += c.w1 + c.w0;
  CHECK(std::abs(w - 400.0) <= 1e-9);
  PreferenceFunction Q = testutil::random_pref(cfg, 557);
  CHECK(std::abs(log_likelihood_cells(Q, cells) - log_likelihood(Q, d)) <= 1e-9);
}

TEST_CASE("finite mle recovers the generating member") {
  FiniteClass cls;
  cls.members = {table2(0.8), table2(0.2), table2(0.5)};
  GameConfig cfg = config2();
  Policy u = testutil::uniform_policy(cfg);
  PreferenceDataset d = collect(cfg, u, u, cls.members[0], 500, 2024);
  CHECK(mle_fit(cls, d) == 0);
  PreferenceDataset d2 = collect(cfg, u, u, cls.members[1], 500, 2025);
  CHECK(mle_fit(cls, d2) == 1);

  PreferenceDataset empty;
  CHECK(mle_fit(cls, empty) == 0);  // ties resolve to the lowest index

  FiniteClass twins;
  twins.members = {table2(0.6), table2(0.6)};
  CHECK(mle_fit(twins, d) == 0);

  FiniteClass none;
  CHECK_THROWS_AS(mle_fit(none, d), InvalidArgument);
}

TEST_CASE("sq_distance counts record slots") {
  PreferenceFunction A = table2(0.8);
  PreferenceFunction B = table2(0.2);
  PreferenceDataset d = records_at(0, 0, 1, {1, 0, 1});
  CHECK(std::abs(sq_distance(A, B, d) - 3 * 0.36) <= 1e-12);
  CHECK(sq_distance(A, A, d) == 0.0);
  // Labels do not enter the distance, only the visited (x,a1,a2) slots.
  PreferenceDataset flipped = records_at(0, 0, 1, {0, 1, 0});
  CHECK(sq_distance(A, B, d) == sq_distance(A, B, flipped));
}

TEST_CASE("version space radius is beta^2/2 inclusive") {
  FiniteClass cls;
  cls.members = {table2(0.8), table2(0.2)};
  PreferenceFunction phat = cls.members[0];
  PreferenceDataset d = records_at(0, 0, 1, {1});  // sq_distance(m1, phat) = 0.36
  double beta_in = std::sqrt(2 * 0.36) + 1e-9;
  double beta_out = std::sqrt(2 * 0.36) - 1e-6;
  auto in = version_space_indices(cls, phat, d, beta_in);
  CHECK(in == std::vector<int>{0, 1});
  auto out = version_space_indices(cls, phat, d, beta_out);
  CHECK(out == std::vector<int>{0});
  FiniteClass sub = version_space(cls, phat, d, beta_out);
  CHECK(sub.size() == 1);
  CHECK(sub.members[0].at(0, 0, 1) == 0.8);
  // beta = 0 still keeps the center.
  CHECK(version_space_indices(cls, phat, d, 0.0) == std::vector<int>{0});
}

TEST_CASE("pointwise bonus sup form") {
  FiniteClass cls;
  cls.members = {table2(0.5), table2(0.9)};
  PreferenceFunction phat = cls.members[0];
  PreferenceDataset empty;
  double lambda = 0.25;
  double b = pointwise_bonus(cls, phat, empty, lambda, 0, 0, 1);
  CHECK(std::abs(b - 0.4 / std::sqrt(0.25)) <= 1e-12);
  CHECK(pointwise_bonus(cls, phat, empty, lambda, 0, 1, 0) == b);  // symmetric
  CHECK(pointwise_bonus(cls, phat, empty, lambda, 0, 0, 0) == 0.0);

  // In-sample evidence shrinks the bonus.
  PreferenceDataset seen = records_at(0, 0, 1, {1, 1, 1, 1});
  CHECK(pointwise_bonus(cls, phat, seen, lambda, 0, 0, 1) < b);

  FiniteClass singleton;
  singleton.members = {phat};
  CHECK(pointwise_bonus(singleton, phat, empty, lambda, 0, 0, 1) == 0.0);
}

TEST_CASE("pointwise bonus table matches the scalar routine") {
  GameConfig cfg = testutil::random_config(808, 1.0);
  FiniteClass cls;
  for (std::uint64_t s = 0; s < 4; ++s) cls.members.push_back(testutil::random_pref(cfg, 900 + s));
  PreferenceFunction phat = cls.members[2];
  Policy u = testutil::uniform_policy(cfg);
  PreferenceDataset d = collect(cfg, u, u, cls.members[0], 60, 11);
  auto table = pointwise_bonus_table(cls, phat, d, 0.5);
  for (int x = 0; x < cfg.prompts.size(); ++x) {
    int k = cfg.actions.counts[x];
    for (int a = 0; a < k; ++a)
      for (int b2 = 0; b2 < k; ++b2)
        CHECK(std::abs(table[x][a * k + b2] -
                       pointwise_bonus(cls, phat, d, 0.5, x, a, b2)) <= 1e-12);
  }
}

TEST_CASE("empirical pair bonus hand values") {
  GameConfig cfg = config2();
  FiniteClass cls;
  cls.members = {table2(0.5), table2(0.9)};
  PreferenceFunction phat = cls.members[0];
  PreferenceDataset empty;
  Policy p1 = testutil::delta_policy(cfg, 0);
  Policy p2 = testutil::delta_policy(cfg, 1);
  auto [b, who] = pair_bonus_empirical_arg(cls, phat, empty, 0.04, 10, p1, p2, cfg);
  CHECK(std::abs(b - 2.0) <= 1e-12);  // |0.9-0.5| / sqrt(0.04)
  CHECK(who == 1);
  CHECK(pair_bonus_empirical(cls, phat, empty, 0.04, 10, p1, p2, cfg) == b);

  // Any self-pair has zero discrepancy under every skew table.
  CHECK(pair_bonus_empirical(cls, phat, empty, 0.04, 10, p1, p1, cfg) == 0.0);
  Policy mix = testutil::random_policy(cfg, 5);
  CHECK(pair_bonus_empirical(cls, phat, empty, 0.04, 10, mix, mix, cfg) == 0.0);

  // History at the disagreeing slot grows the denominator.
  PreferenceDataset seen = records_at(0, 0, 1, {1, 1, 0, 1, 0, 1, 1, 1, 0, 1});
  double after = pair_bonus_empirical(cls, phat, seen, 0.04, 10, p1, p2, cfg);
  CHECK(std::abs(after - 0.4 / std::sqrt(0.04 + 10 * 0.16 / 10.0)) <= 1e-12);
  CHECK(after < b);
}

TEST_CASE("linear class fits and projects") {
  LinearBTClass cls;
  cls.dim = 1;
  cls.bound = 2.0;
  Eigen::VectorXd f0(1), f1(1);
  f0 << 1.0;
  f1 << 0.0;
  cls.features = {{f0, f1}};
  cls.validate();

  double theta_star = 0.7;
  Eigen::VectorXd t(1);
  t << theta_star;
  PreferenceFunction P = cls.to_preference(t);
  CHECK(std::abs(P.at(0, 0, 1) - 1.0 / (1.0 + std::exp(-0.7))) <= 1e-15);

  // Population cells at the generating frequencies: the fit recovers theta.
  std::vector<PairCell> cells = {{0, 0, 1, P.at(0, 0, 1) * 100.0, P.at(0, 1, 0) * 100.0}};
  Eigen::VectorXd hat = mle_fit_cells(cls, cells);
  CHECK(std::abs(hat[0] - theta_star) <= 1e-6);

  // A tight ball clips the estimate to its boundary.
  LinearBTClass tight = cls;
  tight.bound = 0.3;
  Eigen::VectorXd clipped = mle_fit_cells(tight, cells);
  CHECK(std::abs(clipped.norm() - 0.3) <= 1e-8);

  // Record-level fit agrees with the cell-level fit on aggregated data.
  PreferenceDataset d;
  for (int i = 0; i < 60; ++i) d.records.push_back(PreferenceRecord{0, 0, 1, i % 3 != 0});
  Eigen::VectorXd a = mle_fit(cls, d);
  Eigen::VectorXd b = mle_fit_cells(cls, aggregate_cells(d));
  CHECK(std::abs(a[0] - b[0]) <= 1e-7);

  LinearBTClass bad = cls;
  bad.features[0][0] = Eigen::VectorXd::Constant(1, 3.0);  // |phi| > 1
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("covariance bookkeeping") {
  double lambda = 0.5, B = 1.0;
  Covariance cov = initial_covariance(2, lambda, B);
  double scale = lambda * (1.0 + std::exp(B)) * (1.0 + std::exp(B));
  CHECK(std::abs(cov.sigma(0, 0) - scale) <= 1e-12);
  CHECK(cov.sigma(0, 1) == 0.0);

  LinearBTClass cls;
  cls.dim = 2;
  cls.bound = B;
  Eigen::VectorXd f0(2), f1(2);
  f0 << 0.6, 0.0;
  f1 << 0.0, 0.8;
  cls.features = {{f0, f1}};
  cls.validate();

  GameConfig cfg = config2();
  Policy p1 = testutil::delta_policy(cfg, 0);
  Policy p2 = testutil::delta_policy(cfg, 1);
  Covariance next = covariance_update(cov, cls, cfg, p1, p2);
  // Deterministic pair: one outer product of phi0 - phi1 = (0.6, -0.8).
  CHECK(std::abs(next.sigma(0, 0) - (scale + 0.36)) <= 1e-12);
  CHECK(std::abs(next.sigma(0, 1) - (-0.48)) <= 1e-12);
  CHECK(std::abs(next.sigma(1, 1) - (scale + 0.64)) <= 1e-12);

  // Identical marginals cancel: the expected feature difference is zero.
  double zero = linear_bt_bonus(cov, cls, cfg, p1, p1);
  CHECK(zero == 0.0);
  double bonus = linear_bt_bonus(cov, cls, cfg, p1, p2);
  // Sigma = scale I, so the norm is |dphi| / sqrt(scale).
  CHECK(std::abs(bonus - (1.0 + std::exp(B)) * 1.0 / std::sqrt(scale)) <= 1e-12);
}
