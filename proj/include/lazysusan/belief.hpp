#pragma once

#include "lazysusan/model.hpp"
#include "lazysusan/types.hpp"

namespace lazysusan {

struct DifficultyPrior {
  double alpha = 1.0;
  double beta = 1.0;
};

// Beta shape parameters induced by i ballots with k unique answers:
//   alpha = ((i-1) k / i + 1)^(1/theta),  beta = ((1-i) k / i + i)^theta.
// More repetition (small k) pulls difficulty down, scatter pulls it up, and
// theta controls how much scatter is explained away as bandwagoning.
DifficultyPrior difficulty_prior_params(long i, long k, double theta);

// Normalized prior mass per grid center, proportional to the Beta(alpha,beta)
// density. Computed in log space; extreme shapes may underflow far centers to
// exactly zero, which downstream code treats as log-mass -infinity.
std::vector<double> difficulty_prior_mass(const DifficultyPrior& prior, const DifficultyGrid& grid);

// Prior probability that the true answer is absent from i ballots at
// difficulty d: d^i. i = 0 gives 1.
double unseen_prior(double d, long i);

// Joint posterior over (answer hypothesis, difficulty bucket) given a ballot
// sequence. The per-hypothesis likelihood rows are kept in log space alongside
// the normalized masses, which makes appending one ballot O((k+1)·G) instead
// of refolding the whole history. That is what makes multi-step lookahead,
// which extends beliefs speculatively at every tree node, affordable.
class Belief {
 public:
  static Belief prior(DifficultyGrid grid, double theta);

  // Posterior after observing one more ballot with the given worker gamma.
  // Outcomes are always concrete tokens; a token outside the current answer
  // set opens a new hypothesis whose row is seeded from the unseen row.
  Belief extended(const AnswerId& ballot, double gamma) const;

  long ballot_count() const { return i_; }
  long unique_count() const { return static_cast<long>(counts_.size()); }
  double theta() const { return theta_; }
  const DifficultyGrid& grid() const { return grid_; }
  const std::map<AnswerId, long>& counts() const { return counts_; }

  // Normalized joint masses; rows sum to 1 together with unseen_masses().
  const std::map<AnswerId, std::vector<double>>& masses() const { return mass_; }
  const std::vector<double>& unseen_masses() const { return mass_unseen_; }

  // Unnormalized log-likelihood rows (no prior), exposed for tests.
  const std::map<AnswerId, std::vector<double>>& loglik_rows() const { return loglik_; }
  const std::vector<double>& unseen_loglik_row() const { return loglik_unseen_; }

  double marginal(const AnswerId& a) const;
  double unseen_marginal() const;
  double mean_difficulty() const;

 private:
  Belief() = default;

  void refresh_masses();

  DifficultyGrid grid_;
  double theta_ = 1.0;
  long i_ = 0;
  std::map<AnswerId, long> counts_;
  std::map<AnswerId, std::vector<double>> loglik_;
  std::vector<double> loglik_unseen_;
  std::map<AnswerId, std::vector<double>> mass_;
  std::vector<double> mass_unseen_;
};

// Folds a full history at once. worker_gammas[j] is the gamma in effect for
// ballot j at its arrival; it must match the history length.
Belief compute_belief(const BallotHistory& h, const std::vector<double>& worker_gammas,
                      double theta, const DifficultyGrid& grid);

// Highest-marginal seen answer; ties break to the lexicographically smallest
// token. The unseen hypothesis is not a submittable answer and never wins.
// Requires at least one ballot.
AnswerId map_answer(const Belief& b);

// Distribution of the next ballot under the current posterior, assuming the
// next worker has error parameter gamma_next. "seen" maps each current answer
// to its probability; "unseen" aggregates everything outside the answer set.
// Sums to 1 when include_unseen is set. Clearing it drops the unseen
// hypothesis from the marginalization without re-weighting, leaving a total of
// 1 - unseen_marginal(); that restricted form exists for ablation runs.
struct PredictiveDistribution {
  std::map<AnswerId, double> seen;
  double unseen = 0.0;
};

PredictiveDistribution predictive_distribution(const Belief& b, double gamma_next,
                                               bool include_unseen = true);

}  // namespace lazysusan
