#pragma once

#include <functional>

#include "lazysusan/belief.hpp"
#include "lazysusan/types.hpp"

namespace lazysusan {

enum class ActionType { Submit, Request };

struct Action {
  ActionType type = ActionType::Request;
  AnswerId answer;  // set iff type == Submit
};

// Utility of submitting a when a_star is true: correct_value on a match,
// wrong_value otherwise.
double value_of(const AnswerId& a, const AnswerId& a_star, const TaskConfig& cfg);

// Expected utility of submitting now. The submitted answer is map_answer(b);
// the expectation runs over the seen hypotheses, so mass on the unseen
// hypothesis contributes nothing unless penalize_unseen_on_submit is set.
// Requires at least one ballot.
double q_submit(const Belief& b, const TaskConfig& cfg);

// Expected utility of requesting another ballot with depth request actions
// still allowed (depth >= 1): ballot_cost plus the expectation, over the
// predictive outcome distribution with gamma_bar, of the successor value. A
// successor may submit or, when depth >= 2, request again. The aggregated
// unseen outcome is expanded as a single synthetic fresh token per node.
double q_request(const Belief& b, const TaskConfig& cfg, int depth);

// Submit iff q_submit >= q_request at the configured lookahead depth; ties go
// to Submit. With no ballots yet the only sensible move is Request.
Action decide(const Belief& b, const TaskConfig& cfg);

class WorkerStore {
 public:
  // Unknown ids are created on first touch with gamma = gamma_bar.
  WorkerProfile& get_or_create(const std::string& worker_id, double gamma_bar) {
    auto [it, inserted] = profiles_.try_emplace(worker_id);
    if (inserted) it->second.gamma = gamma_bar;
    return it->second;
  }

  const WorkerProfile* find(const std::string& worker_id) const {
    auto it = profiles_.find(worker_id);
    return it == profiles_.end() ? nullptr : &it->second;
  }

  const std::map<std::string, WorkerProfile>& profiles() const { return profiles_; }

 private:
  // Single-threaded by design: concurrent callers must serialize externally.
  std::map<std::string, WorkerProfile> profiles_;
};

// Scores every ballot of a finished task against the submitted answer a_star
// and nudges each worker's gamma: down by d_hat * eps when correct, up by
// (1 - d_hat) * eps when wrong, with eps = 1 / (answered_count + 1) evaluated
// before the count is bumped. gamma is clamped at 0. Ballots are processed in
// history order, so a worker with several ballots on one task compounds.
void update_workers(const BallotHistory& h, const AnswerId& a_star, double d_hat,
                    double gamma_bar, WorkerStore& store);

// One ballot as delivered by a stream. true_gamma is the generator-side error
// parameter, available only in simulation; the controller reads it just in
// gamma-oracle mode.
struct SourcedBallot {
  std::string worker_id;
  AnswerId answer;
  std::optional<double> true_gamma;
};

// Returns the next ballot or nullopt when the stream is out of workers.
using BallotSource = std::function<std::optional<SourcedBallot>()>;

// Compact view of a posterior, enough to follow a decision trace without
// serializing the whole joint.
struct BeliefDigest {
  AnswerId map_answer;
  double map_marginal = 0.0;
  double unseen_marginal = 0.0;
  double mean_difficulty = 0.0;
};

struct StepRecord {
  int step = 0;  // 1-based ballot index
  std::string worker_id;
  AnswerId ballot;
  double q_submit = 0.0;
  double q_request = 0.0;
  ActionType action = ActionType::Request;
  BeliefDigest belief;  // state after folding this ballot
};

struct EpisodeResult {
  AnswerId submitted;
  int ballots_used = 0;
  double ballot_cost_total = 0.0;  // sum of per-ballot costs, non-positive
  bool cap_reached = false;        // stopped by max_ballots with Request pending
  bool source_exhausted = false;   // stream ended before the policy submitted
  std::vector<StepRecord> trace;
  std::optional<Belief> final_belief;
  // Filled when ground truth is supplied.
  std::optional<bool> correct;
  double net_utility = 0.0;  // value_of(submitted) + ballot_cost_total
};

// Runs the request/submit loop for one task: pull a ballot, fold it into the
// belief (true gamma when gamma_oracle, else the store's current estimate for
// the worker, snapshot at arrival), then re-decide. Stops on Submit, on the
// cfg.max_ballots cap, or when the source dries up; the two forced stops
// submit the current best answer. Afterwards worker gammas in the store are
// updated against the submitted answer. Fails if the source yields nothing at
// all, since there is no answer to fall back on.
EpisodeResult run_task(const BallotSource& source, const TaskConfig& cfg, WorkerStore& store,
                       bool gamma_oracle, const std::optional<AnswerId>& ground_truth = std::nullopt);

}  // namespace lazysusan
