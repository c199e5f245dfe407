#include "prefgame/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "prefgame/errors.hpp"

namespace prefgame {

namespace {

// Iterations without a new best certificate before the fallback engages.
constexpr int kStallWindow = 50;
constexpr double kDamping = 0.5;

Policy uniform_average(const std::vector<std::vector<double>>& sums, double count) {
  Policy avg;
  avg.rows.resize(sums.size());
  for (std::size_t x = 0; x < sums.size(); ++x) {
    avg.rows[x].resize(sums[x].size());
    for (std::size_t a = 0; a < sums[x].size(); ++a) {
      avg.rows[x][a] = sums[x][a] / count;
    }
  }
  return avg;
}

void accumulate(std::vector<std::vector<double>>& sums, const Policy& p) {
  for (std::size_t x = 0; x < sums.size(); ++x) {
    for (std::size_t a = 0; a < sums[x].size(); ++a) {
      sums[x][a] += p.rows[x][a];
    }
  }
}

}  // namespace

std::vector<double> mirror_step_row(const std::vector<double>& prow,
                                    const std::vector<double>& pi0row,
                                    const std::vector<double>& score, double alpha,
                                    double eta, BrSign sign) {
  const double r = alpha / eta;
  const double denom = 1.0 + r;
  const double coef = (sign == BrSign::max ? alpha : -alpha) / denom;
  const int k = static_cast<int>(prow.size());
  std::vector<double> logits(k);
  double mx = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < k; ++a) {
    logits[a] = (std::log(prow[a]) + r * std::log(pi0row[a])) / denom + coef * score[a];
    mx = std::max(mx, logits[a]);
  }
  std::vector<double> out(k);
  double z = 0.0;
  for (int a = 0; a < k; ++a) {
    out[a] = std::exp(logits[a] - mx);
    z += out[a];
  }
  for (int a = 0; a < k; ++a) out[a] /= z;
  return out;
}

namespace {

[[noreturn]] void throw_unconverged(const char* what, const Policy& best, double gap) {
  throw ConvergenceError(what, best.rows, gap);
}

// Symmetric-game solve driven from one player's fixed-point map: side=max
// iterates pi -> GibbsBR(+eta, a -> E_b P(a,b)), side=min the b -> E_a P(a,b)
// map with -eta. The certificate is always the two-sided gap of (pi, pi).
NashResult solve_symmetric(const GameConfig& cfg, const PreferenceFunction& P,
                           double tol, int max_iter, BrSign side) {
  const int nx = cfg.prompts.size();
  Policy pi = cfg.pi0;

  auto response = [&](const Policy& p) {
    Policy out;
    out.rows.resize(nx);
    for (int x = 0; x < nx; ++x) {
      std::vector<double> score =
          opponent_score(P, x, p.rows[x], side == BrSign::max ? 2 : 1);
      out.rows[x] = gibbs_best_response(cfg, x, score, side);
    }
    return out;
  };

  NashResult result;
  double best_gap = std::numeric_limits<double>::infinity();
  Policy best_policy = pi;
  int since_best = 0;
  int iter = 0;

  // Phase 1: damped fixed point.
  bool stalled = false;
  for (; iter < max_iter; ++iter) {
    const double gap = duality_gap(cfg, P, pi, pi);
    if (gap < best_gap) {
      best_gap = gap;
      best_policy = pi;
      since_best = 0;
    } else if (++since_best >= kStallWindow) {
      stalled = true;
      break;
    }
    if (gap <= tol) {
      result.policy = pi;
      result.duality_gap = gap;
      result.iterations = iter;
      result.converged = true;
      return result;
    }
    Policy br = response(pi);
    for (int x = 0; x < nx; ++x) {
      for (std::size_t a = 0; a < pi.rows[x].size(); ++a) {
        pi.rows[x][a] = (1.0 - kDamping) * pi.rows[x][a] + kDamping * br.rows[x][a];
      }
    }
  }

  if (!stalled) throw_unconverged("nash solver: iteration budget exhausted", best_policy, best_gap);

  // Phase 2: mirror descent from the best damped iterate, certifying both the
  // last iterate and the uniform running average.
  result.used_fallback = true;
  const double alpha = std::min(cfg.eta, 1.0);
  pi = best_policy;
  std::vector<std::vector<double>> sums = pi.rows;
  double count = 1.0;
  for (; iter < max_iter; ++iter) {
    for (int x = 0; x < nx; ++x) {
      std::vector<double> score =
          opponent_score(P, x, pi.rows[x], side == BrSign::max ? 2 : 1);
      pi.rows[x] = mirror_step_row(pi.rows[x], cfg.pi0.rows[x], score, alpha, cfg.eta, side);
    }
    accumulate(sums, pi);
    count += 1.0;

    const double last_gap = duality_gap(cfg, P, pi, pi);
    if (last_gap < best_gap) {
      best_gap = last_gap;
      best_policy = pi;
    }
    if (last_gap <= tol) {
      result.policy = pi;
      result.duality_gap = last_gap;
      result.iterations = iter + 1;
      result.converged = true;
      return result;
    }
    Policy avg = uniform_average(sums, count);
    const double avg_gap = duality_gap(cfg, P, avg, avg);
    if (avg_gap < best_gap) {
      best_gap = avg_gap;
      best_policy = avg;
    }
    if (avg_gap <= tol) {
      result.policy = std::move(avg);
      result.duality_gap = avg_gap;
      result.iterations = iter + 1;
      result.converged = true;
      return result;
    }
  }
  throw_unconverged("nash solver: mirror fallback exhausted", best_policy, best_gap);
}

}  // namespace

NashResult solve_nash(const GameConfig& cfg, const PreferenceFunction& P, double tol,
                      int max_iter) {
  check_pref_shape(cfg, P, "solve_nash preference");
  if (tol <= 0.0) throw InvalidArgument("solve_nash: tol must be positive");
  if (max_iter <= 0) throw InvalidArgument("solve_nash: max_iter must be positive");
  return solve_symmetric(cfg, P, tol, max_iter, BrSign::max);
}

CoincideReport nash_players_coincide_check(const GameConfig& cfg,
                                           const PreferenceFunction& P, double tol) {
  CoincideReport report;
  report.max_side = solve_symmetric(cfg, P, tol, kSolverMaxIter, BrSign::max);
  report.min_side = solve_symmetric(cfg, P, tol, kSolverMaxIter, BrSign::min);
  double dist = 0.0;
  for (int x = 0; x < cfg.prompts.size(); ++x) {
    for (std::size_t a = 0; a < report.max_side.policy.rows[x].size(); ++a) {
      dist = std::max(dist, std::abs(report.max_side.policy.rows[x][a] -
                                     report.min_side.policy.rows[x][a]));
    }
  }
  report.distance = dist;
  report.passed = dist <= 10.0 * tol;
  return report;
}

PayoffTable PayoffTable::from_preference(const PreferenceFunction& P) {
  PayoffTable G;
  G.counts.resize(P.prompts());
  G.values.resize(P.prompts());
  for (int x = 0; x < P.prompts(); ++x) {
    const int k = P.actions(x);
    G.counts[x] = k;
    G.values[x].resize(static_cast<std::size_t>(k) * k);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) G.values[x][a * k + b] = P.at(x, a, b);
    }
  }
  return G;
}

namespace {

void check_payoff_shape(const GameConfig& cfg, const PayoffTable& G, const char* what) {
  if (static_cast<int>(G.counts.size()) != cfg.prompts.size()) {
    throw DimensionMismatch(std::string(what) + ": prompt count mismatch");
  }
  for (int x = 0; x < cfg.prompts.size(); ++x) {
    if (G.counts[x] != cfg.actions.counts[x]) {
      throw DimensionMismatch(std::string(what) + ": action count mismatch");
    }
    if (G.values[x].size() != static_cast<std::size_t>(G.counts[x]) * G.counts[x]) {
      throw DimensionMismatch(std::string(what) + ": payoff row size mismatch");
    }
  }
}

std::vector<double> payoff_score(const PayoffTable& G, int x,
                                 const std::vector<double>& opponent, int opponent_slot) {
  const int k = G.counts[x];
  std::vector<double> score(k, 0.0);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      if (opponent_slot == 2) {
        score[a] += opponent[b] * G.at(x, a, b);
      } else {
        score[a] += opponent[b] * G.at(x, b, a);
      }
    }
  }
  return score;
}

}  // namespace

double payoff_game_value(const GameConfig& cfg, const PayoffTable& G, const Policy& p1,
                         const Policy& p2) {
  double total = 0.0;
  for (int x = 0; x < cfg.prompts.size(); ++x) {
    const int k = G.counts[x];
    double mean = 0.0;
    for (int a = 0; a < k; ++a) {
      if (p1.rows[x][a] == 0.0) continue;
      double row = 0.0;
      for (int b = 0; b < k; ++b) row += p2.rows[x][b] * G.at(x, a, b);
      mean += p1.rows[x][a] * row;
    }
    const double kl1 = kl_divergence(p1.rows[x], cfg.pi0.rows[x]);
    const double kl2 = kl_divergence(p2.rows[x], cfg.pi0.rows[x]);
    total += cfg.prompts.d0[x] * (mean - kl1 / cfg.eta + kl2 / cfg.eta);
  }
  return total;
}

double payoff_duality_gap(const GameConfig& cfg, const PayoffTable& G, const Policy& p1,
                          const Policy& p2) {
  const int nx = cfg.prompts.size();
  Policy br1, br2;
  br1.rows.resize(nx);
  br2.rows.resize(nx);
  for (int x = 0; x < nx; ++x) {
    br1.rows[x] = gibbs_best_response(cfg, x, payoff_score(G, x, p2.rows[x], 2), BrSign::max);
    br2.rows[x] = gibbs_best_response(cfg, x, payoff_score(G, x, p1.rows[x], 1), BrSign::min);
  }
  const double up = payoff_game_value(cfg, G, br1, p2);
  const double down = payoff_game_value(cfg, G, p1, br2);
  return std::max(0.0, up - down);
}

GameSolveResult solve_game(const GameConfig& cfg, const PayoffTable& G, double tol,
                           int max_iter) {
  check_payoff_shape(cfg, G, "solve_game payoff");
  if (tol <= 0.0) throw InvalidArgument("solve_game: tol must be positive");
  if (max_iter <= 0) throw InvalidArgument("solve_game: max_iter must be positive");
  const int nx = cfg.prompts.size();

  GameSolveResult result;
  Policy p1 = cfg.pi0;
  Policy p2 = cfg.pi0;
  double best_gap = std::numeric_limits<double>::infinity();
  Policy best1 = p1, best2 = p2;
  int since_best = 0;
  int iter = 0;
  bool stalled = false;

  for (; iter < max_iter; ++iter) {
    const double gap = payoff_duality_gap(cfg, G, p1, p2);
    if (gap < best_gap) {
      best_gap = gap;
      best1 = p1;
      best2 = p2;
      since_best = 0;
    } else if (++since_best >= kStallWindow) {
      stalled = true;
      break;
    }
    if (gap <= tol) {
      result.p1 = p1;
      result.p2 = p2;
      result.duality_gap = gap;
      result.iterations = iter;
      result.converged = true;
      return result;
    }
    // Simultaneous damped best responses.
    Policy n1 = p1, n2 = p2;
    for (int x = 0; x < nx; ++x) {
      std::vector<double> br1 =
          gibbs_best_response(cfg, x, payoff_score(G, x, p2.rows[x], 2), BrSign::max);
      std::vector<double> br2 =
          gibbs_best_response(cfg, x, payoff_score(G, x, p1.rows[x], 1), BrSign::min);
      for (int a = 0; a < G.counts[x]; ++a) {
        n1.rows[x][a] = (1.0 - kDamping) * p1.rows[x][a] + kDamping * br1[a];
        n2.rows[x][a] = (1.0 - kDamping) * p2.rows[x][a] + kDamping * br2[a];
      }
    }
    p1 = std::move(n1);
    p2 = std::move(n2);
  }

  if (!stalled) {
    throw ConvergenceError("solve_game: iteration budget exhausted", best1.rows, best_gap);
  }

  result.used_fallback = true;
  const double alpha = std::min(cfg.eta, 1.0);
  p1 = best1;
  p2 = best2;
  std::vector<std::vector<double>> sums1 = p1.rows, sums2 = p2.rows;
  double count = 1.0;
  for (; iter < max_iter; ++iter) {
    Policy n1 = p1, n2 = p2;
    for (int x = 0; x < nx; ++x) {
      n1.rows[x] = mirror_step_row(p1.rows[x], cfg.pi0.rows[x],
                              payoff_score(G, x, p2.rows[x], 2), alpha, cfg.eta, BrSign::max);
      n2.rows[x] = mirror_step_row(p2.rows[x], cfg.pi0.rows[x],
                              payoff_score(G, x, p1.rows[x], 1), alpha, cfg.eta, BrSign::min);
    }
    p1 = std::move(n1);
    p2 = std::move(n2);
    accumulate(sums1, p1);
    accumulate(sums2, p2);
    count += 1.0;

    const double last_gap = payoff_duality_gap(cfg, G, p1, p2);
    if (last_gap < best_gap) {
      best_gap = last_gap;
      best1 = p1;
      best2 = p2;
    }
    if (last_gap <= tol) {
      result.p1 = p1;
      result.p2 = p2;
      result.duality_gap = last_gap;
      result.iterations = iter + 1;
      result.converged = true;
      return result;
    }
    Policy avg1 = uniform_average(sums1, count);
    Policy avg2 = uniform_average(sums2, count);
    const double avg_gap = payoff_duality_gap(cfg, G, avg1, avg2);
    if (avg_gap < best_gap) {
      best_gap = avg_gap;
      best1 = avg1;
      best2 = avg2;
    }
    if (avg_gap <= tol) {
      result.p1 = std::move(avg1);
      result.p2 = std::move(avg2);
      result.duality_gap = avg_gap;
      result.iterations = iter + 1;
      result.converged = true;
      return result;
    }
  }
  throw ConvergenceError("solve_game: mirror fallback exhausted", best1.rows, best_gap);
}

double ipo_population_loss(const GameConfig& cfg, const Policy& pi,
                           const PreferenceFunction& phat) {
  check_policy_shape(cfg, pi, "ipo_population_loss policy");
  check_pref_shape(cfg, phat, "ipo_population_loss preference");
  const double c = cfg.eta / 2.0;
  double total = 0.0;
  for (int x = 0; x < cfg.prompts.size(); ++x) {
    const int k = cfg.actions.counts[x];
    const std::vector<double>& prow = pi.rows[x];
    const std::vector<double>& p0row = cfg.pi0.rows[x];
    double loss = 0.0;
    for (int a = 0; a < k; ++a) {
      if (prow[a] == 0.0) continue;
      for (int b = 0; b < k; ++b) {
        if (prow[b] == 0.0) continue;
        const double w = prow[a] * prow[b];
        const double h = std::log(prow[a] / p0row[a]) - std::log(prow[b] / p0row[b]);
        const double ra = h - c;
        const double rb = -h - c;
        loss += w * (phat.at(x, a, b) * ra * ra + phat.at(x, b, a) * rb * rb);
      }
    }
    total += cfg.prompts.d0[x] * loss;
  }
  return total;
}

namespace {

// Per-prompt loss and logit gradient at fixed sampling measure mu = softmax
// of the current logits. With u_a = theta_a - ln pi0(a) and h_ab = u_a - u_b,
//   dL/dtheta_t = 4 mu_t sum_b mu_b [ h_tb - c (2 Phat(t,b) - 1) ].
double prompt_loss(const std::vector<double>& mu, const std::vector<double>& u,
                   const PreferenceFunction& phat, int x, double c) {
  const int k = static_cast<int>(mu.size());
  double loss = 0.0;
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      const double h = u[a] - u[b];
      const double ra = h - c;
      const double rb = -h - c;
      loss += mu[a] * mu[b] * (phat.at(x, a, b) * ra * ra + phat.at(x, b, a) * rb * rb);
    }
  }
  return loss;
}

std::vector<double> softmax(const std::vector<double>& theta) {
  double mx = *std::max_element(theta.begin(), theta.end());
  std::vector<double> out(theta.size());
  double z = 0.0;
  for (std::size_t a = 0; a < theta.size(); ++a) {
    out[a] = std::exp(theta[a] - mx);
    z += out[a];
  }
  for (double& v : out) v /= z;
  return out;
}

}  // namespace

NashResult ipo_solve(const GameConfig& cfg, const PreferenceFunction& phat, double tol,
                     int max_iter) {
  check_pref_shape(cfg, phat, "ipo_solve preference");
  if (tol <= 0.0) throw InvalidArgument("ipo_solve: tol must be positive");
  const int nx = cfg.prompts.size();
  const double c = cfg.eta / 2.0;

  std::vector<std::vector<double>> theta(nx);
  for (int x = 0; x < nx; ++x) {
    theta[x].resize(cfg.actions.counts[x]);
    for (int a = 0; a < cfg.actions.counts[x]; ++a) {
      theta[x][a] = std::log(cfg.pi0.rows[x][a]);
    }
  }

  auto assemble = [&]() {
    Policy pi;
    pi.rows.resize(nx);
    for (int x = 0; x < nx; ++x) pi.rows[x] = softmax(theta[x]);
    return pi;
  };

  NashResult result;
  double best_gap = std::numeric_limits<double>::infinity();
  Policy best_policy = assemble();
  for (int iter = 0; iter < max_iter; ++iter) {
    Policy pi = assemble();
    const double gap = duality_gap(cfg, phat, pi, pi);
    if (gap < best_gap) {
      best_gap = gap;
      best_policy = pi;
    }
    if (gap <= tol) {
      result.policy = pi;
      result.duality_gap = gap;
      result.iterations = iter;
      result.converged = true;
      return result;
    }

    for (int x = 0; x < nx; ++x) {
      const int k = cfg.actions.counts[x];
      const std::vector<double>& mu = pi.rows[x];
      std::vector<double> u(k);
      for (int a = 0; a < k; ++a) u[a] = theta[x][a] - std::log(cfg.pi0.rows[x][a]);

      std::vector<double> grad(k, 0.0);
      double gnorm2 = 0.0;
      for (int t = 0; t < k; ++t) {
        double s = 0.0;
        for (int b = 0; b < k; ++b) {
          s += mu[b] * ((u[t] - u[b]) - c * (2.0 * phat.at(x, t, b) - 1.0));
        }
        grad[t] = 4.0 * mu[t] * s;
        gnorm2 += grad[t] * grad[t];
      }
      if (gnorm2 == 0.0) continue;

      const double base = prompt_loss(mu, u, phat, x, c);
      double step = 1.0;
      std::vector<double> cand(k);
      for (int bt = 0; bt < 60; ++bt) {
        for (int a = 0; a < k; ++a) cand[a] = u[a] - step * grad[a];
        if (prompt_loss(mu, cand, phat, x, c) <= base - 0.5 * step * gnorm2) break;
        step *= 0.5;
      }
      for (int a = 0; a < k; ++a) {
        theta[x][a] = cand[a] + std::log(cfg.pi0.rows[x][a]);
      }
    }
  }
  throw ConvergenceError("ipo_solve: iteration budget exhausted", best_policy.rows, best_gap);
}

}  // namespace prefgame
