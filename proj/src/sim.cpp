#include "lazysusan/sim.hpp"

#include <algorithm>
#include <cmath>

#include "lazysusan/model.hpp"

namespace lazysusan {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Rng episode_rng(std::uint64_t master_seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t s = splitmix64(master_seed ^ splitmix64(a + 1));
  s = splitmix64(s ^ splitmix64(b + 0x100));
  s = splitmix64(s ^ splitmix64(c + 0x10000));
  return Rng(s);
}

EpisodeTrace generate_episode_trace(double difficulty, double gamma_lo, double gamma_hi,
                                    double theta_true, int length, Rng& rng) {
  if (length < 1) throw std::invalid_argument("trace length must be >= 1");
  if (!(gamma_hi >= gamma_lo && gamma_lo >= 0.0))
    throw std::invalid_argument("gamma range must satisfy 0 <= lo <= hi");

  EpisodeTrace trace;
  trace.truth = "0";
  trace.ballots.reserve(length);

  std::vector<double> gammas(length);
  for (int j = 0; j < length; ++j) gammas[j] = gamma_lo + (gamma_hi - gamma_lo) * uniform01(rng);

  BallotHistory history;
  long fresh_counter = 1;
  auto fresh = [&fresh_counter]() { return std::to_string(fresh_counter++); };

  for (int j = 0; j < length; ++j) {
    SourcedBallot sb;
    sb.worker_id = "w" + std::to_string(j);
    sb.true_gamma = gammas[j];
    sb.answer = sample_ballot(trace.truth, difficulty, gammas[j], history, theta_true, rng, fresh);
    history.append({sb.worker_id, sb.answer});
    trace.ballots.push_back(std::move(sb));
  }
  return trace;
}

TaskConfig default_agent_task() {
  TaskConfig t;
  t.penalize_unseen_on_submit = true;
  return t;
}

std::string AgentSpec::name() const {
  switch (kind) {
    case Kind::LazySusan: return "lazysusan(" + std::to_string(param) + ")";
    case Kind::MajorityVote: return "mv(" + std::to_string(param) + ")";
  }
  throw std::logic_error("unknown agent kind");
}

namespace {

EpisodeOutcome run_majority_vote(int votes, const EpisodeTrace& trace, const TaskConfig& cfg) {
  const int n = std::min<int>(votes, static_cast<int>(trace.ballots.size()));
  std::map<AnswerId, int> counts;
  for (int j = 0; j < n; ++j) counts[trace.ballots[j].answer] += 1;

  AnswerId best;
  int best_count = -1;
  for (const auto& [answer, count] : counts) {
    if (count > best_count) { best_count = count; best = answer; }
  }

  EpisodeOutcome out;
  out.submitted = best;
  out.ballots_used = n;
  out.cost = n * cfg.ballot_cost;
  out.correct = best == trace.truth;
  out.net_utility = value_of(best, trace.truth, cfg) + out.cost;
  return out;
}

EpisodeOutcome run_lazysusan(int depth, const EpisodeTrace& trace, const TaskConfig& cfg,
                             bool gamma_oracle) {
  TaskConfig c = cfg;
  c.lookahead_depth = depth;

  std::size_t next = 0;
  BallotSource source = [&]() -> std::optional<SourcedBallot> {
    if (next >= trace.ballots.size()) return std::nullopt;
    return trace.ballots[next++];
  };

  WorkerStore store;
  const EpisodeResult r = run_task(source, c, store, gamma_oracle, trace.truth);

  EpisodeOutcome out;
  out.submitted = r.submitted;
  out.ballots_used = r.ballots_used;
  out.cost = r.ballot_cost_total;
  out.correct = r.correct.value_or(false);
  out.net_utility = r.net_utility;
  out.cap_reached = r.cap_reached;
  return out;
}

}  // namespace

EpisodeOutcome run_agent(const AgentSpec& agent, const EpisodeTrace& trace,
                         const TaskConfig& cfg, bool gamma_oracle) {
  switch (agent.kind) {
    case AgentSpec::Kind::LazySusan: return run_lazysusan(agent.param, trace, cfg, gamma_oracle);
    case AgentSpec::Kind::MajorityVote: return run_majority_vote(agent.param, trace, cfg);
  }
  throw std::logic_error("unknown agent kind");
}

void ExperimentConfig::validate() const {
  task.validate();
  if (difficulty_settings.empty()) throw std::invalid_argument("no difficulty settings");
  for (double d : difficulty_settings)
    if (!(d > 0.0 && d < 1.0)) throw std::invalid_argument("difficulty settings must lie in (0,1)");
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  if (cw_values.empty()) throw std::invalid_argument("no cw values");
  for (double cw : cw_values)
    if (cw > 0.0) throw std::invalid_argument("cw values must be <= 0");
  if (gamma_ranges.empty()) throw std::invalid_argument("no gamma ranges");
  for (auto [lo, hi] : gamma_ranges)
    if (!(hi >= lo && lo >= 0.0)) throw std::invalid_argument("bad gamma range");
  if (!(theta_true > 0.0)) throw std::invalid_argument("theta_true must be positive");
  if (agents.empty()) throw std::invalid_argument("no agents");
  for (const auto& a : agents) {
    if (a.param < 1) throw std::invalid_argument("agent parameter must be >= 1");
    if (a.kind == AgentSpec::Kind::MajorityVote && a.param > task.max_ballots)
      throw std::invalid_argument("majority vote size exceeds the trace length");
  }
}

namespace {

template <bool Parallel>
ExperimentResult run_experiment_impl(const ExperimentConfig& cfg) {
  cfg.validate();

  const long n_ranges = static_cast<long>(cfg.gamma_ranges.size());
  const long n_diff = static_cast<long>(cfg.difficulty_settings.size());
  const long n_reps = cfg.repetitions;
  const long n_cw = static_cast<long>(cfg.cw_values.size());
  const long n_agents = static_cast<long>(cfg.agents.size());

  const long n_traces = n_ranges * n_diff * n_reps;
  const long per_trace = n_cw * n_agents;

  ExperimentResult result;
  result.config = cfg;
  result.episodes.resize(n_traces * per_trace);

  // One job per trace; every (cw, agent) pair replays it. Slot indexing keeps
  // the output order independent of the thread schedule.
  auto run_job = [&](long job) {
    const long rep = job % n_reps;
    const long di = (job / n_reps) % n_diff;
    const long gr = job / (n_reps * n_diff);

    Rng rng = episode_rng(cfg.seed, gr, di, rep);
    const auto [glo, ghi] = cfg.gamma_ranges[gr];
    const EpisodeTrace trace = generate_episode_trace(
        cfg.difficulty_settings[di], glo, ghi, cfg.theta_true, cfg.task.max_ballots, rng);

    for (long ci = 0; ci < n_cw; ++ci) {
      TaskConfig task = cfg.task;
      task.wrong_value = cfg.cw_values[ci];
      for (long ai = 0; ai < n_agents; ++ai) {
        EpisodeRecord& rec = result.episodes[job * per_trace + ci * n_agents + ai];
        rec.gamma_range = static_cast<int>(gr);
        rec.cw = cfg.cw_values[ci];
        rec.agent = cfg.agents[ai].name();
        rec.difficulty_index = static_cast<int>(di);
        rec.rep = static_cast<int>(rep);
        rec.outcome = run_agent(cfg.agents[ai], trace, task, cfg.gamma_oracle);
      }
    }
  };

  if constexpr (Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long job = 0; job < n_traces; ++job) run_job(job);
  } else {
    for (long job = 0; job < n_traces; ++job) run_job(job);
  }
  return result;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  return run_experiment_impl<true>(cfg);
}

ExperimentResult run_experiment_serial(const ExperimentConfig& cfg) {
  return run_experiment_impl<false>(cfg);
}

std::vector<ReportRow> summarize(const ExperimentResult& result) {
  const ExperimentConfig& cfg = result.config;

  struct Acc {
    long episodes = 0, correct = 0;
    double ballots = 0.0, cost = 0.0, net = 0.0;
  };
  // Key: gamma range, cw index, agent index, difficulty index (-1 = all).
  std::map<std::tuple<int, int, int, int>, Acc> cells;

  std::map<std::string, int> agent_idx;
  for (std::size_t a = 0; a < cfg.agents.size(); ++a) agent_idx[cfg.agents[a].name()] = static_cast<int>(a);
  std::map<double, int> cw_idx;
  for (std::size_t c = 0; c < cfg.cw_values.size(); ++c) cw_idx[cfg.cw_values[c]] = static_cast<int>(c);

  for (const auto& e : result.episodes) {
    const int ai = agent_idx.at(e.agent);
    const int ci = cw_idx.at(e.cw);
    for (int di : {e.difficulty_index, -1}) {
      Acc& acc = cells[{e.gamma_range, ci, ai, di}];
      acc.episodes += 1;
      acc.correct += e.outcome.correct ? 1 : 0;
      acc.ballots += e.outcome.ballots_used;
      acc.cost += e.outcome.cost;
      acc.net += e.outcome.net_utility;
    }
  }

  std::vector<ReportRow> rows;
  rows.reserve(cells.size());
  for (const auto& [key, acc] : cells) {
    const auto [gr, ci, ai, di] = key;
    ReportRow r;
    r.gamma_range = gr;
    r.gamma_lo = cfg.gamma_ranges[gr].first;
    r.gamma_hi = cfg.gamma_ranges[gr].second;
    r.cw = cfg.cw_values[ci];
    r.agent = cfg.agents[ai].name();
    r.difficulty_index = di;
    r.difficulty = di >= 0 ? cfg.difficulty_settings[di] : -1.0;
    r.episodes = acc.episodes;
    r.accuracy_pct = 100.0 * static_cast<double>(acc.correct) / static_cast<double>(acc.episodes);
    r.avg_ballots = acc.ballots / static_cast<double>(acc.episodes);
    r.avg_cost = acc.cost / static_cast<double>(acc.episodes);
    r.avg_net_utility = acc.net / static_cast<double>(acc.episodes);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<RegimeResult> adversarial_regime_study(const RegimeStudyConfig& cfg) {
  cfg.task.validate();
  if (cfg.episodes < 1) throw std::invalid_argument("episodes must be >= 1");

  struct Regime {
    std::string name;
    double difficulty, theta;
  };
  const std::vector<Regime> regimes{
      {"easy", cfg.easy_difficulty, cfg.theta_neutral},
      {"hard-scatter", cfg.hard_difficulty, cfg.theta_scatter},
      {"hard-bandwagon", cfg.hard_difficulty, cfg.theta_bandwagon},
  };

  std::vector<RegimeResult> out;
  for (std::size_t r = 0; r < regimes.size(); ++r) {
    TaskConfig task = cfg.task;
    task.theta = regimes[r].theta;  // the model knows the regime; the data still wins

    AgentSpec agent{AgentSpec::Kind::LazySusan, cfg.depth};
    long correct = 0;
    double ballots = 0.0;
    for (int ep = 0; ep < cfg.episodes; ++ep) {
      Rng rng = episode_rng(cfg.seed, 0xAD0 + r, 0, ep);
      const EpisodeTrace trace =
          generate_episode_trace(regimes[r].difficulty, cfg.worker_gamma, cfg.worker_gamma,
                                 regimes[r].theta, task.max_ballots, rng);
      const EpisodeOutcome o = run_agent(agent, trace, task, true);
      correct += o.correct ? 1 : 0;
      ballots += o.ballots_used;
    }

    RegimeResult res;
    res.name = regimes[r].name;
    res.difficulty = regimes[r].difficulty;
    res.theta = regimes[r].theta;
    res.episodes = cfg.episodes;
    res.accuracy_pct = 100.0 * static_cast<double>(correct) / static_cast<double>(cfg.episodes);
    res.avg_ballots = ballots / static_cast<double>(cfg.episodes);
    out.push_back(std::move(res));
  }
  return out;
}

void PlantedConfig::validate() const {
  if (n_tasks < 1 || n_workers < 1 || ballots_per_task < 1)
    throw std::invalid_argument("planted dataset sizes must be >= 1");
  if (ballots_per_task > n_workers)
    throw std::invalid_argument("ballots_per_task cannot exceed n_workers (one ballot per worker per task)");
  if (!(gamma_hi >= gamma_lo && gamma_lo >= 0.0)) throw std::invalid_argument("bad gamma range");
  if (!(d_lo > 0.0 && d_hi < 1.0 && d_hi >= d_lo)) throw std::invalid_argument("bad difficulty range");
  if (!(theta_true > 0.0)) throw std::invalid_argument("theta_true must be positive");
}

PlantedDataset generate_planted_dataset(const PlantedConfig& cfg) {
  cfg.validate();
  Rng rng = episode_rng(cfg.seed, 0x9147, 0, 0);

  PlantedDataset out;
  out.theta_true = cfg.theta_true;

  // Zero-padded ids keep lexicographic order equal to creation order.
  auto pad = [](long v, int width) {
    std::string s = std::to_string(v);
    return std::string(width - std::min<int>(width, static_cast<int>(s.size())), '0') + s;
  };

  std::vector<std::string> workers(cfg.n_workers);
  std::vector<double> gammas(cfg.n_workers);
  for (int w = 0; w < cfg.n_workers; ++w) {
    workers[w] = "w" + pad(w, 3);
    gammas[w] = cfg.gamma_lo + (cfg.gamma_hi - cfg.gamma_lo) * uniform01(rng);
    out.true_gammas[workers[w]] = gammas[w];
  }

  long fresh_counter = 0;
  std::vector<int> order(cfg.n_workers);
  for (int w = 0; w < cfg.n_workers; ++w) order[w] = w;

  for (int t = 0; t < cfg.n_tasks; ++t) {
    const std::string task_id = "q" + pad(t, 4);
    const AnswerId truth = "t" + pad(t, 4);
    const double d = cfg.d_lo + (cfg.d_hi - cfg.d_lo) * uniform01(rng);
    out.true_answers[task_id] = truth;
    out.true_difficulties[task_id] = d;

    // Fisher-Yates prefix: ballots_per_task distinct workers per task.
    for (int j = 0; j < cfg.ballots_per_task; ++j) {
      const int pick = j + static_cast<int>(uniform01(rng) * (cfg.n_workers - j));
      std::swap(order[j], order[pick]);
    }

    BallotHistory history;
    auto fresh = [&]() { return "x" + pad(fresh_counter++, 6); };
    for (int j = 0; j < cfg.ballots_per_task; ++j) {
      const int w = order[j];
      const AnswerId answer =
          sample_ballot(truth, d, gammas[w], history, cfg.theta_true, rng, fresh);
      history.append({workers[w], answer});
      out.records.push_back({task_id, workers[w], answer});
    }
  }
  return out;
}

}  // namespace lazysusan
