// Compares the OpenMP harnesses against their serial references on a
// mid-sized workload and confirms the outputs match. Wall times only; run on
// an otherwise idle machine for meaningful numbers.

#include <chrono>
#include <cstdio>

#include "lazysusan/em.hpp"
#include "lazysusan/sim.hpp"

using namespace lazysusan;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool same_episodes(const ExperimentResult& a, const ExperimentResult& b) {
  if (a.episodes.size() != b.episodes.size()) return false;
  for (std::size_t i = 0; i < a.episodes.size(); ++i) {
    const EpisodeOutcome& x = a.episodes[i].outcome;
    const EpisodeOutcome& y = b.episodes[i].outcome;
    if (x.submitted != y.submitted || x.ballots_used != y.ballots_used ||
        x.net_utility != y.net_utility)
      return false;
  }
  return true;
}

bool same_estep(const EStepResult& a, const EStepResult& b) {
  if (a.observed_log_likelihood != b.observed_log_likelihood) return false;
  if (a.posteriors.size() != b.posteriors.size()) return false;
  for (std::size_t t = 0; t < a.posteriors.size(); ++t) {
    if (a.posteriors[t].seen != b.posteriors[t].seen) return false;
    if (a.posteriors[t].unseen != b.posteriors[t].unseen) return false;
  }
  return true;
}

}  // namespace

int main() {
  {
    ExperimentConfig cfg;
    cfg.task.max_ballots = 30;
    cfg.difficulty_settings = {0.15, 0.35, 0.55, 0.75};
    cfg.repetitions = 25;
    cfg.cw_values = {-100.0};
    cfg.gamma_ranges = {{0.0, 2.0}};
    cfg.agents = {{AgentSpec::Kind::LazySusan, 3}, {AgentSpec::Kind::MajorityVote, 7}};
    cfg.seed = 7;

    auto t0 = Clock::now();
    const ExperimentResult serial = run_experiment_serial(cfg);
    const double ts = seconds_since(t0);

    t0 = Clock::now();
    const ExperimentResult parallel = run_experiment(cfg);
    const double tp = seconds_since(t0);

    std::printf("experiment harness (%zu episodes): serial %.3fs, openmp %.3fs, speedup %.2fx, outputs %s\n",
                serial.episodes.size(), ts, tp, ts / tp,
                same_episodes(serial, parallel) ? "identical" : "DIFFER");
  }

  {
    PlantedConfig pcfg;
    pcfg.n_tasks = 3000;
    pcfg.seed = 7;
    const PlantedDataset planted = generate_planted_dataset(pcfg);
    const EmDataset data = EmDataset::from_records(planted.records);
    const EmParams params = EmParams::initial(data);

    auto t0 = Clock::now();
    const EStepResult serial = e_step_serial(data, params);
    const double ts = seconds_since(t0);

    t0 = Clock::now();
    const EStepResult parallel = e_step(data, params);
    const double tp = seconds_since(t0);

    std::printf("e-step (%ld tasks): serial %.3fs, openmp %.3fs, speedup %.2fx, outputs %s\n",
                data.task_count(), ts, tp, ts / tp,
                same_estep(serial, parallel) ? "identical" : "DIFFER");
  }
  return 0;
}
