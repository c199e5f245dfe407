#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "prefgame/game.hpp"
#include "prefgame/oracle.hpp"

namespace prefgame {

// Likelihood clip applied before logs; finite classes may contain boundary
// tables where the unclipped log-likelihood is -inf.
inline constexpr double kLikelihoodClip = 1e-12;

struct FiniteClass {
  std::vector<PreferenceFunction> members;  // all skew-symmetric by type
  bool realizable = false;                  // diagnostic only: truth in members
  int size() const { return static_cast<int>(members.size()); }
};

// Bradley-Terry family P_theta(x,a,b) = sigmoid(<theta, phi(x,a)-phi(x,b)>)
// over the ball |theta| <= B, with |phi(x,a)| <= 1.
struct LinearBTClass {
  std::vector<std::vector<Eigen::VectorXd>> features;  // phi[x][a]
  double bound = 1.0;                                  // B
  int dim = 0;                                         // d

  void validate() const;
  PreferenceFunction to_preference(const Eigen::VectorXd& theta) const;
};

struct Covariance {
  Eigen::MatrixXd sigma;  // SPD, >= lambda (1+e^B)^2 I by construction
  double lambda = 0.0;
};

Covariance initial_covariance(int dim, double lambda, double B);

// Dataset collapsed to distinct ordered comparisons with label weights; the
// population variants of the fits use fractional weights.
struct PairCell {
  int x;
  int a1;
  int a2;
  double w1;  // weight of "a1 preferred" labels
  double w0;
};
std::vector<PairCell> aggregate_cells(const PreferenceDataset& d);

// Sum over records of y ln P(x,a1,a2) + (1-y) ln P(x,a2,a1), probabilities
// clipped to [clip, 1-clip]. The unclipped variant may return -inf.
double log_likelihood(const PreferenceFunction& P, const PreferenceDataset& d);
double log_likelihood_unclipped(const PreferenceFunction& P, const PreferenceDataset& d);
double log_likelihood_cells(const PreferenceFunction& P, const std::vector<PairCell>& cells,
                            bool clipped = true);

// Exact argmax by enumeration, ties broken by lowest member index.
int mle_fit(const FiniteClass& cls, const PreferenceDataset& d);

/* Projected gradient ascent of the logistic log-likelihood over |theta| <= B.
 * Step 1/L with L = 0.25 sum w |dphi|^2 (the logistic Hessian bound); stops at
 * projected-gradient norm <= 1e-8, throws ConvergenceError after max_iter.
 */
Eigen::VectorXd mle_fit(const LinearBTClass& cls, const PreferenceDataset& d,
                        int max_iter = 10000);
Eigen::VectorXd mle_fit_cells(const LinearBTClass& cls, const std::vector<PairCell>& cells,
                              int max_iter = 10000);

// Sum over records of (P - Q)^2 evaluated at the record's (x,a1,a2).
double sq_distance(const PreferenceFunction& P, const PreferenceFunction& Q,
                   const PreferenceDataset& d);

// {P in class : sq_distance(P, phat, d) <= beta^2/2}; always contains phat.
std::vector<int> version_space_indices(const FiniteClass& cls, const PreferenceFunction& phat,
                                       const PreferenceDataset& d, double beta);
FiniteClass version_space(const FiniteClass& cls, const PreferenceFunction& phat,
                          const PreferenceDataset& d, double beta);

// sup_P |P - phat|(x,a1,a2) / sqrt(lambda + sq_distance(P, phat, d)).
double pointwise_bonus(const FiniteClass& cls, const PreferenceFunction& phat,
                       const PreferenceDataset& d, double lambda, int x, int a1, int a2);

// Full table of pointwise bonuses; entries are symmetric in (a1,a2) and the
// in-sample distances are computed once per member.
std::vector<std::vector<double>> pointwise_bonus_table(const FiniteClass& cls,
                                                       const PreferenceFunction& phat,
                                                       const PreferenceDataset& d,
                                                       double lambda);

// sup_P |E_{x~d0}[P - phat](p1,p2)| / sqrt(lambda + sq_distance(...)/m),
// the expectation exact over d0 and the policy rows.
double pair_bonus_empirical(const FiniteClass& cls, const PreferenceFunction& phat,
                            const PreferenceDataset& history, double lambda, int m,
                            const Policy& p1, const Policy& p2, const GameConfig& cfg);
// Same sup together with the achieving member index (lowest on ties).
std::pair<double, int> pair_bonus_empirical_arg(const FiniteClass& cls,
                                                const PreferenceFunction& phat,
                                                const PreferenceDataset& history,
                                                double lambda, int m, const Policy& p1,
                                                const Policy& p2, const GameConfig& cfg);

// Sigma' = Sigma + E_{x~d0,a1~p1,a2~p2}[(phi(x,a1)-phi(x,a2)) (.)^T], exact.
Covariance covariance_update(const Covariance& cov, const LinearBTClass& cls,
                             const GameConfig& cfg, const Policy& p1, const Policy& p2);

// (1+e^B) |E_x[phi(x,p1) - phi(x,p2)]|_{Sigma^-1}.
double linear_bt_bonus(const Covariance& cov, const LinearBTClass& cls,
                       const GameConfig& cfg, const Policy& p1, const Policy& p2);

}  // namespace prefgame
