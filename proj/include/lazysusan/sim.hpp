#pragma once

#include <cstdint>

#include "lazysusan/controller.hpp"
#include "lazysusan/em.hpp"
#include "lazysusan/types.hpp"

namespace lazysusan {

// SplitMix64 step, used to spread structured coordinates into independent
// engine seeds. Not a statistical engine by itself.
std::uint64_t splitmix64(std::uint64_t x);

// Engine for one episode, derived from the master seed and the episode's
// coordinates. Episodes are therefore independent of execution order, which
// is what lets the parallel harness reproduce the serial one exactly.
Rng episode_rng(std::uint64_t master_seed, std::uint64_t a, std::uint64_t b, std::uint64_t c);

// Pre-generated worker stream for one simulated task. The generative process
// does not depend on the controller's actions, so every agent can replay a
// prefix of the same trace; that pairing removes between-agent sampling noise.
struct EpisodeTrace {
  AnswerId truth;
  std::vector<SourcedBallot> ballots;
};

// length ballots from length distinct one-shot workers, gamma ~ U[gamma_lo,
// gamma_hi) drawn first, then ballots in order. Truth is "0"; fresh wrong
// answers take "1", "2", ... as they appear.
EpisodeTrace generate_episode_trace(double difficulty, double gamma_lo, double gamma_hi,
                                    double theta_true, int length, Rng& rng);

struct AgentSpec {
  enum class Kind { LazySusan, MajorityVote };
  Kind kind = Kind::LazySusan;
  int param = 3;  // lookahead depth, or number of votes

  std::string name() const;
};

// TaskConfig the harness starts from. It switches the unseen-mass submit
// penalty on: under the literal submit rule a lone seen answer already scores
// the best attainable utility, so the policy would stop after every first
// ballot and no multi-ballot comparison could exist.
TaskConfig default_agent_task();

struct EpisodeOutcome {
  AnswerId submitted;
  bool correct = false;
  int ballots_used = 0;
  double cost = 0.0;
  double net_utility = 0.0;
  bool cap_reached = false;
};

// Runs one agent over a trace prefix. LazySusan plays the request/submit loop
// with a fresh worker store; majority vote takes the first `param` ballots and
// submits the plurality answer, smallest token on ties.
EpisodeOutcome run_agent(const AgentSpec& agent, const EpisodeTrace& trace,
                         const TaskConfig& cfg, bool gamma_oracle);

struct ExperimentConfig {
  TaskConfig task = default_agent_task();  // wrong_value and lookahead_depth overridden per row
  std::vector<double> difficulty_settings;
  int repetitions = 100;
  std::vector<double> cw_values{-100.0};
  std::vector<std::pair<double, double>> gamma_ranges{{0.0, 2.0}};
  double theta_true = 1.0;
  bool gamma_oracle = true;
  std::vector<AgentSpec> agents;
  std::uint64_t seed = 1;

  void validate() const;
};

struct EpisodeRecord {
  int gamma_range = 0;  // index into gamma_ranges
  double cw = 0.0;
  std::string agent;
  int difficulty_index = 0;
  int rep = 0;
  EpisodeOutcome outcome;
};

// Flat in a fixed order: gamma range, then difficulty, then rep, then cw,
// then agent.
struct ExperimentResult {
  ExperimentConfig config;
  std::vector<EpisodeRecord> episodes;
};

// Every (gamma range, difficulty, rep) triple generates one trace; all
// (cw, agent) pairs consume it. run_experiment spreads the triples over
// OpenMP threads writing into preallocated slots; run_experiment_serial is
// the reference loop. Both produce identical results.
ExperimentResult run_experiment(const ExperimentConfig& cfg);
ExperimentResult run_experiment_serial(const ExperimentConfig& cfg);

// Aggregate of one (gamma range, cw, agent, difficulty) cell, or of a whole
// (gamma range, cw, agent) row when difficulty_index = -1.
struct ReportRow {
  int gamma_range = 0;
  double gamma_lo = 0.0, gamma_hi = 0.0;
  double cw = 0.0;
  std::string agent;
  int difficulty_index = -1;
  double difficulty = -1.0;
  long episodes = 0;
  double accuracy_pct = 0.0;
  double avg_ballots = 0.0;
  double avg_cost = 0.0;
  double avg_net_utility = 0.0;
};

std::vector<ReportRow> summarize(const ExperimentResult& result);

// Accuracy of one controller under three generative regimes: easy tasks,
// hard tasks with scattered wrong answers, and hard tasks with strongly
// correlated ("bandwagon") wrong answers. The model is given the regime's
// true theta; what breaks it in the last regime is the evidence itself.
struct RegimeStudyConfig {
  TaskConfig task = default_agent_task();
  double easy_difficulty = 0.2;
  double hard_difficulty = 0.65;
  double theta_neutral = 1.0;
  double theta_scatter = 5.0;
  double theta_bandwagon = 0.05;
  double worker_gamma = 1.0;
  int episodes = 100;
  int depth = 3;
  std::uint64_t seed = 1;
};

struct RegimeResult {
  std::string name;
  double difficulty = 0.0;
  double theta = 0.0;
  long episodes = 0;
  double accuracy_pct = 0.0;
  double avg_ballots = 0.0;
};

std::vector<RegimeResult> adversarial_regime_study(const RegimeStudyConfig& cfg);

// Synthetic labelling corpus with known parameters, for exercising the
// parameter-estimation pipeline. Workers recur across tasks; each task gets
// ballots_per_task ballots from distinct workers.
// Few workers with widely mixed reliability: each worker leaves enough
// ballots for their gamma to be identifiable, which is what separates
// model-based aggregation from raw plurality.
struct PlantedConfig {
  int n_tasks = 200;
  int n_workers = 15;
  int ballots_per_task = 5;
  double gamma_lo = 0.0, gamma_hi = 2.0;
  double d_lo = 0.2, d_hi = 0.7;
  double theta_true = 0.5;
  std::uint64_t seed = 1;

  void validate() const;
};

struct PlantedDataset {
  std::vector<EmRecord> records;
  std::map<std::string, AnswerId> true_answers;     // by task id
  std::map<std::string, double> true_difficulties;  // by task id
  std::map<std::string, double> true_gammas;        // by worker id
  double theta_true = 0.0;
};

PlantedDataset generate_planted_dataset(const PlantedConfig& cfg);

}  // namespace lazysusan
