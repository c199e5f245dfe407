#include "prefgame/prefclass.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "prefgame/errors.hpp"

namespace prefgame {

namespace {

double clip01(double p, double clip) { return std::min(1.0 - clip, std::max(clip, p)); }

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double sq_distance_cells(const PreferenceFunction& P, const PreferenceFunction& Q,
                         const std::vector<PairCell>& cells) {
  double s = 0.0;
  for (const auto& c : cells) {
    double d = P.at(c.x, c.a1, c.a2) - Q.at(c.x, c.a1, c.a2);
    s += (c.w1 + c.w0) * d * d;
  }
  return s;
}

// |E_{x~d0}[P - phat](p1,p2)|, exact finite sum.
double mean_discrepancy(const PreferenceFunction& P, const PreferenceFunction& phat,
                        const GameConfig& cfg, const Policy& p1, const Policy& p2) {
  double num = 0.0;
  for (int x = 0; x < cfg.prompts.size(); ++x)
    num += cfg.prompts.d0[x] * (expected_preference(P, x, p1.rows[x], p2.rows[x]) -
                                expected_preference(phat, x, p1.rows[x], p2.rows[x]));
  return std::abs(num);
}

}  // namespace

void LinearBTClass::validate() const {
  if (dim <= 0) throw InvalidArgument("linear class: dim must be positive");
  if (!(bound > 0.0)) throw InvalidArgument("linear class: bound must be positive");
  for (const auto& prompt : features)
    for (const auto& phi : prompt) {
      if (phi.size() != dim) throw DimensionMismatch("linear class: feature dim mismatch");
      if (phi.norm() > 1.0 + 1e-9)
        throw InvalidArgument("linear class: feature norm exceeds 1");
    }
}

PreferenceFunction LinearBTClass::to_preference(const Eigen::VectorXd& theta) const {
  ActionSpace actions;
  for (const auto& prompt : features)
    actions.counts.push_back(static_cast<int>(prompt.size()));
  PreferenceFunction P(actions);
  for (int x = 0; x < P.prompts(); ++x)
    for (int i = 0; i < P.actions(x); ++i)
      for (int j = i + 1; j < P.actions(x); ++j)
        P.set(x, i, j, sigmoid(theta.dot(features[x][i] - features[x][j])));
  return P;
}

Covariance initial_covariance(int dim, double lambda, double B) {
  if (!(lambda > 0.0)) throw InvalidArgument("covariance: lambda must be positive");
  double scale = 1.0 + std::exp(B);
  Covariance cov;
  cov.lambda = lambda;
  cov.sigma = lambda * scale * scale * Eigen::MatrixXd::Identity(dim, dim);
  return cov;
}

std::vector<PairCell> aggregate_cells(const PreferenceDataset& d) {
  std::map<std::tuple<int, int, int>, std::pair<double, double>> acc;
  for (const auto& r : d.records) {
    auto& cell = acc[{r.x, r.a1, r.a2}];
    (r.y == 1 ? cell.first : cell.second) += 1.0;
  }
  std::vector<PairCell> cells;
  cells.reserve(acc.size());
  for (const auto& [key, w] : acc)
    cells.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), w.first, w.second});
  return cells;
}

double log_likelihood_cells(const PreferenceFunction& P, const std::vector<PairCell>& cells,
                            bool clipped) {
  double ll = 0.0;
  for (const auto& c : cells) {
    double p = P.at(c.x, c.a1, c.a2);
    double q = 1.0 - p;
    if (clipped) {
      p = clip01(p, kLikelihoodClip);
      q = clip01(q, kLikelihoodClip);
    }
    if (c.w1 > 0.0) ll += c.w1 * std::log(p);
    if (c.w0 > 0.0) ll += c.w0 * std::log(q);
  }
  return ll;
}

double log_likelihood(const PreferenceFunction& P, const PreferenceDataset& d) {
  return log_likelihood_cells(P, aggregate_cells(d), true);
}

double log_likelihood_unclipped(const PreferenceFunction& P, const PreferenceDataset& d) {
  return log_likelihood_cells(P, aggregate_cells(d), false);
}

int mle_fit(const FiniteClass& cls, const PreferenceDataset& d) {
  if (cls.size() == 0) throw InvalidArgument("mle_fit: empty class");
  auto cells = aggregate_cells(d);
  int best = 0;
  double best_ll = log_likelihood_cells(cls.members[0], cells, true);
  for (int i = 1; i < cls.size(); ++i) {
    double ll = log_likelihood_cells(cls.members[i], cells, true);
    if (ll > best_ll) {
      best_ll = ll;
      best = i;
    }
  }
  return best;
}

Eigen::VectorXd mle_fit_cells(const LinearBTClass& cls, const std::vector<PairCell>& cells,
                              int max_iter) {
  cls.validate();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(cls.dim);
  if (cells.empty()) return theta;

  std::vector<Eigen::VectorXd> z;  // feature differences per cell
  z.reserve(cells.size());
  double lipschitz = 0.0;
  for (const auto& c : cells) {
    z.push_back(cls.features[c.x][c.a1] - cls.features[c.x][c.a2]);
    lipschitz += 0.25 * (c.w1 + c.w0) * z.back().squaredNorm();
  }
  double step = 1.0 / std::max(lipschitz, 1e-12);
  const double tol = 1e-8;

  auto project = [&](Eigen::VectorXd v) {
    double n = v.norm();
    if (n > cls.bound) v *= cls.bound / n;
    return v;
  };

  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(cls.dim);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      double p = sigmoid(theta.dot(z[i]));
      grad += (cells[i].w1 * (1.0 - p) - cells[i].w0 * p) * z[i];
    }
    Eigen::VectorXd next = project(theta + step * grad);
    double residual = (next - theta).norm() / step;
    theta = next;
    if (residual <= tol) return theta;
  }
  throw ConvergenceError("linear MLE: projected gradient did not reach tolerance",
                         {{theta.data(), theta.data() + theta.size()}}, 0.0);
}

Eigen::VectorXd mle_fit(const LinearBTClass& cls, const PreferenceDataset& d, int max_iter) {
  return mle_fit_cells(cls, aggregate_cells(d), max_iter);
}

double sq_distance(const PreferenceFunction& P, const PreferenceFunction& Q,
                   const PreferenceDataset& d) {
  if (!P.same_shape(Q)) throw DimensionMismatch("sq_distance: shape mismatch");
  double s = 0.0;
  for (const auto& r : d.records) {
    double diff = P.at(r.x, r.a1, r.a2) - Q.at(r.x, r.a1, r.a2);
    s += diff * diff;
  }
  return s;
}

std::vector<int> version_space_indices(const FiniteClass& cls, const PreferenceFunction& phat,
                                       const PreferenceDataset& d, double beta) {
  if (beta < 0.0) throw InvalidArgument("version_space: beta must be nonnegative");
  auto cells = aggregate_cells(d);
  double radius = beta * beta / 2.0;
  std::vector<int> keep;
  for (int i = 0; i < cls.size(); ++i)
    if (sq_distance_cells(cls.members[i], phat, cells) <= radius) keep.push_back(i);
  return keep;
}

FiniteClass version_space(const FiniteClass& cls, const PreferenceFunction& phat,
                          const PreferenceDataset& d, double beta) {
  FiniteClass out;
  out.realizable = cls.realizable;
  for (int i : version_space_indices(cls, phat, d, beta))
    out.members.push_back(cls.members[i]);
  return out;
}

double pointwise_bonus(const FiniteClass& cls, const PreferenceFunction& phat,
                       const PreferenceDataset& d, double lambda, int x, int a1, int a2) {
  if (!(lambda > 0.0)) throw InvalidArgument("pointwise_bonus: lambda must be positive");
  auto cells = aggregate_cells(d);
  double best = 0.0;
  for (const auto& P : cls.members) {
    double num = std::abs(P.at(x, a1, a2) - phat.at(x, a1, a2));
    double val = num / std::sqrt(lambda + sq_distance_cells(P, phat, cells));
    best = std::max(best, val);
  }
  return best;
}

std::vector<std::vector<double>> pointwise_bonus_table(const FiniteClass& cls,
                                                       const PreferenceFunction& phat,
                                                       const PreferenceDataset& d,
                                                       double lambda) {
  if (!(lambda > 0.0)) throw InvalidArgument("pointwise_bonus: lambda must be positive");
  auto cells = aggregate_cells(d);
  std::vector<double> denom;
  denom.reserve(cls.members.size());
  for (const auto& P : cls.members)
    denom.push_back(std::sqrt(lambda + sq_distance_cells(P, phat, cells)));

  std::vector<std::vector<double>> table(phat.prompts());
  for (int x = 0; x < phat.prompts(); ++x) {
    int k = phat.actions(x);
    table[x].assign(static_cast<std::size_t>(k) * k, 0.0);
    for (int a = 0; a < k; ++a)
      for (int b = a + 1; b < k; ++b) {
        double best = 0.0;
        for (int i = 0; i < cls.size(); ++i) {
          double num = std::abs(cls.members[i].at(x, a, b) - phat.at(x, a, b));
          best = std::max(best, num / denom[i]);
        }
        // |P-phat|(x,a,b) = |P-phat|(x,b,a) by skew-symmetry.
        table[x][a * k + b] = best;
        table[x][b * k + a] = best;
      }
  }
  return table;
}

std::pair<double, int> pair_bonus_empirical_arg(const FiniteClass& cls,
                                                const PreferenceFunction& phat,
                                                const PreferenceDataset& history,
                                                double lambda, int m, const Policy& p1,
                                                const Policy& p2, const GameConfig& cfg) {
  if (!(lambda > 0.0)) throw InvalidArgument("pair_bonus: lambda must be positive");
  if (m < 1) throw InvalidArgument("pair_bonus: m must be >= 1");
  auto cells = aggregate_cells(history);
  double best = 0.0;
  int arg = -1;
  for (int i = 0; i < cls.size(); ++i) {
    double num = mean_discrepancy(cls.members[i], phat, cfg, p1, p2);
    double val = num / std::sqrt(lambda + sq_distance_cells(cls.members[i], phat, cells) / m);
    if (arg < 0 || val > best) {
      best = val;
      arg = i;
    }
  }
  return {best, arg};
}

double pair_bonus_empirical(const FiniteClass& cls, const PreferenceFunction& phat,
                            const PreferenceDataset& history, double lambda, int m,
                            const Policy& p1, const Policy& p2, const GameConfig& cfg) {
  return pair_bonus_empirical_arg(cls, phat, history, lambda, m, p1, p2, cfg).first;
}

Covariance covariance_update(const Covariance& cov, const LinearBTClass& cls,
                             const GameConfig& cfg, const Policy& p1, const Policy& p2) {
  check_policy_shape(cfg, p1, "covariance_update p1");
  check_policy_shape(cfg, p2, "covariance_update p2");
  Covariance out = cov;
  for (int x = 0; x < cfg.prompts.size(); ++x) {
    int k = cfg.actions.counts[x];
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) {
        double w = cfg.prompts.d0[x] * p1.rows[x][a] * p2.rows[x][b];
        if (w == 0.0 || a == b) continue;
        Eigen::VectorXd dphi = cls.features[x][a] - cls.features[x][b];
        out.sigma += w * dphi * dphi.transpose();
      }
  }
  return out;
}

double linear_bt_bonus(const Covariance& cov, const LinearBTClass& cls,
                       const GameConfig& cfg, const Policy& p1, const Policy& p2) {
  check_policy_shape(cfg, p1, "linear_bt_bonus p1");
  check_policy_shape(cfg, p2, "linear_bt_bonus p2");
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(cls.dim);
  for (int x = 0; x < cfg.prompts.size(); ++x) {
    int k = cfg.actions.counts[x];
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(cls.dim);
    for (int a = 0; a < k; ++a)
      mean += (p1.rows[x][a] - p2.rows[x][a]) * cls.features[x][a];
    delta += cfg.prompts.d0[x] * mean;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov.sigma);
  if (llt.info() != Eigen::Success)
    throw InvalidArgument("linear_bt_bonus: covariance not positive definite");
  double quad = delta.dot(llt.solve(delta));
  return (1.0 + std::exp(cls.bound)) * std::sqrt(std::max(0.0, quad));
}

}  // namespace prefgame
