#pragma once

#include "lazysusan/types.hpp"

namespace lazysusan {

struct EmRecord {
  std::string task_id;
  std::string worker_id;
  AnswerId answer;
};

// Ballots grouped by task. Tasks and workers are indexed in sorted-id order,
// so results do not depend on input row order beyond the within-task ballot
// sequence (which is meaningful: the bandwagon term reads prefix counts).
struct EmDataset {
  std::vector<std::string> task_ids;
  std::vector<BallotHistory> tasks;              // aligned with task_ids
  std::vector<std::vector<int>> task_workers;    // per task, worker index per ballot
  std::vector<std::string> worker_ids;           // sorted unique
  std::map<std::string, int> worker_index;

  static EmDataset from_records(const std::vector<EmRecord>& records);

  long task_count() const { return static_cast<long>(tasks.size()); }
  long worker_count() const { return static_cast<long>(worker_ids.size()); }
};

// Point estimates: one difficulty per task, one gamma per worker, one shared
// bandwagon parameter. No per-task difficulty grid here; maximum-likelihood
// estimation treats d_t as a free scalar evaluated at grid candidates.
struct EmParams {
  std::vector<double> d;
  std::vector<double> gamma;
  double theta = 1.0;

  static EmParams initial(const EmDataset& data, double d0 = 0.5, double gamma0 = 1.0,
                          double theta0 = 1.0);
};

// Posterior over the true answer of one task: its observed answers plus the
// event that the truth was never produced.
struct TaskPosterior {
  std::map<AnswerId, double> seen;
  double unseen = 0.0;
};

struct EStepResult {
  std::vector<TaskPosterior> posteriors;
  double observed_log_likelihood = 0.0;
};

// log p(v, ballots of task t | params), the complete-data log joint for one
// hypothesis: answer prior at d_t plus per-ballot likelihoods folded over
// prefix counts. v = nullopt is the unseen hypothesis.
double em_task_log_joint(const EmDataset& data, long t, const MaybeAnswer& v,
                         double d, const EmParams& params);

// Posterior responsibilities and the observed-data log likelihood at the
// current parameters. e_step distributes tasks across OpenMP threads into
// per-task slots; e_step_serial is the reference loop the tests compare
// against. Results are bit-identical.
EStepResult e_step(const EmDataset& data, const EmParams& params);
EStepResult e_step_serial(const EmDataset& data, const EmParams& params);

double observed_log_likelihood(const EmDataset& data, const EmParams& params);

// Sum over tasks and hypotheses of q * log-joint; the quantity the M-step
// pushes uphill.
double expected_complete_log_likelihood(const EmDataset& data,
                                        const std::vector<TaskPosterior>& posteriors,
                                        const EmParams& params);

// One block-coordinate ascent pass: every d_t by grid search (grid candidates
// plus the current value), every gamma_w by scan-and-refine on [0, 8], theta
// by log-scale scan-and-refine on [0.01, 16]. The d and gamma blocks are
// separable across tasks and workers respectively, so updating them jointly is
// an exact block maximization and parallelizes without changing results. Each
// block keeps its previous value unless the objective improves, which makes
// the expected complete-data log likelihood, and hence the observed one,
// non-decreasing.
void m_step(const EmDataset& data, const std::vector<TaskPosterior>& posteriors,
            const DifficultyGrid& grid, EmParams& params);

struct EmOptions {
  DifficultyGrid grid = DifficultyGrid::standard();
  int max_iterations = 100;
  double tolerance = 1e-8;  // absolute change in observed log likelihood
};

struct EmResult {
  EmParams params;
  std::vector<TaskPosterior> posteriors;
  std::vector<double> log_likelihood_trace;  // one entry per E-step
  int iterations = 0;
  bool converged = false;
};

EmResult run_em(const EmDataset& data, const EmParams& init, const EmOptions& options = {});

// Per-task plurality answers, ties to the smallest token. The baseline EM is
// judged against.
std::vector<AnswerId> majority_vote_answers(const EmDataset& data);

}  // namespace lazysusan
