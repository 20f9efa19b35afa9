#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "lazysusan/em.hpp"
#include "lazysusan/model.hpp"
#include "lazysusan/sim.hpp"
#include "oracle.hpp"

using namespace lazysusan;

namespace {

std::vector<EmRecord> random_records(Rng& rng, int n_tasks, int n_workers, int per_task,
                                     int answer_pool) {
  std::vector<EmRecord> out;
  for (int t = 0; t < n_tasks; ++t) {
    for (int j = 0; j < per_task; ++j) {
      EmRecord r;
      r.task_id = "task" + std::to_string(t);
      r.worker_id = "worker" + std::to_string(static_cast<int>(uniform01(rng) * n_workers));
      r.answer = std::string(1, static_cast<char>('a' + static_cast<int>(uniform01(rng) * answer_pool)));
      out.push_back(std::move(r));
    }
  }
  return out;
}

EmParams random_params(Rng& rng, const EmDataset& data) {
  EmParams p = EmParams::initial(data);
  for (double& d : p.d) d = 0.1 + 0.8 * uniform01(rng);
  for (double& g : p.gamma) g = 0.1 + 2.0 * uniform01(rng);
  p.theta = 0.2 + 2.0 * uniform01(rng);
  return p;
}

}  // namespace

TEST_CASE("dataset grouping is sorted and order preserving") {
  const std::vector<EmRecord> records{
      {"t2", "wb", "x"}, {"t1", "wc", "y"}, {"t2", "wa", "z"}, {"t1", "wa", "y"},
  };
  const EmDataset data = EmDataset::from_records(records);

  REQUIRE(data.task_count() == 2);
  CHECK(data.task_ids[0] == "t1");
  CHECK(data.task_ids[1] == "t2");
  CHECK(data.worker_ids == std::vector<std::string>{"wa", "wb", "wc"});

  // Within-task ballot order follows the input row order.
  CHECK(data.tasks[0].ballots()[0].worker_id == "wc");
  CHECK(data.tasks[0].ballots()[1].worker_id == "wa");
  CHECK(data.tasks[1].ballots()[0].answer == "x");

  CHECK_THROWS_AS(EmDataset::from_records({{"", "w", "a"}}), std::invalid_argument);
}

TEST_CASE("expectation step matches the scanning reference") {
  Rng rng(20260815);
  for (int trial = 0; trial < 50; ++trial) {
    const auto records = random_records(rng, 6, 5, 4, 3);
    const EmDataset data = EmDataset::from_records(records);
    const EmParams params = random_params(rng, data);

    const EStepResult got = e_step(data, params);

    double expect_ll = 0.0;
    for (long t = 0; t < data.task_count(); ++t) {
      std::vector<oracle::OBallot> ob;
      std::vector<double> gammas;
      for (std::size_t j = 0; j < data.tasks[t].ballots().size(); ++j) {
        ob.push_back({data.tasks[t].ballots()[j].worker_id, data.tasks[t].ballots()[j].answer});
        gammas.push_back(params.gamma[data.task_workers[t][j]]);
      }
      const oracle::PointPosterior expect =
          oracle::point_posterior(ob, gammas, params.d[t], params.theta);
      expect_ll += expect.log_evidence;

      REQUIRE(got.posteriors[t].seen.size() == expect.seen.size());
      for (const auto& [answer, q] : expect.seen)
        CHECK(got.posteriors[t].seen.at(answer) == doctest::Approx(q).epsilon(1e-9));
      CHECK(got.posteriors[t].unseen == doctest::Approx(expect.unseen).epsilon(1e-9));

      double total = got.posteriors[t].unseen;
      for (const auto& [answer, q] : got.posteriors[t].seen) total += q;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(got.observed_log_likelihood == doctest::Approx(expect_ll).epsilon(1e-9));
  }
}

TEST_CASE("parallel and serial expectation steps agree bit for bit") {
  Rng rng(5);
  const auto records = random_records(rng, 40, 12, 5, 4);
  const EmDataset data = EmDataset::from_records(records);
  const EmParams params = random_params(rng, data);

  const EStepResult a = e_step(data, params);
  const EStepResult b = e_step_serial(data, params);

  CHECK(a.observed_log_likelihood == b.observed_log_likelihood);
  REQUIRE(a.posteriors.size() == b.posteriors.size());
  for (std::size_t t = 0; t < a.posteriors.size(); ++t) {
    CHECK(a.posteriors[t].seen == b.posteriors[t].seen);
    CHECK(a.posteriors[t].unseen == b.posteriors[t].unseen);
  }
}

TEST_CASE("maximization step pushes the expected complete log likelihood up") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const auto records = random_records(rng, 8, 6, 4, 3);
    const EmDataset data = EmDataset::from_records(records);
    EmParams params = random_params(rng, data);

    const EStepResult e = e_step(data, params);
    const double before = expected_complete_log_likelihood(data, e.posteriors, params);
    m_step(data, e.posteriors, DifficultyGrid::standard(), params);
    const double after = expected_complete_log_likelihood(data, e.posteriors, params);
    CHECK(after >= before - 1e-9);
  }
}

TEST_CASE("observed log likelihood never decreases across iterations") {
  Rng rng(20260815);
  for (int trial = 0; trial < 20; ++trial) {
    const auto records = random_records(rng, 10, 6, 4, 3);
    const EmDataset data = EmDataset::from_records(records);

    EmOptions options;
    options.max_iterations = 25;
    const EmResult result = run_em(data, EmParams::initial(data), options);

    REQUIRE(result.log_likelihood_trace.size() >= 2);
    for (std::size_t i = 1; i < result.log_likelihood_trace.size(); ++i)
      CHECK(result.log_likelihood_trace[i] >= result.log_likelihood_trace[i - 1] - 1e-6);
  }
}

TEST_CASE("run_em reaches its convergence check") {
  Rng rng(23);
  const auto records = random_records(rng, 12, 6, 4, 2);
  const EmDataset data = EmDataset::from_records(records);

  EmOptions options;
  options.max_iterations = 200;
  const EmResult result = run_em(data, EmParams::initial(data), options);
  CHECK(result.converged);
  CHECK(result.iterations < options.max_iterations);

  // Restarting from the fixed point changes nothing measurable.
  const EmResult again = run_em(data, result.params, options);
  CHECK(again.converged);
  CHECK(again.iterations == 2);
  CHECK(std::abs(again.log_likelihood_trace.back() - result.log_likelihood_trace.back()) < 1e-6);
}

TEST_CASE("task order does not matter") {
  Rng rng(31);
  auto records = random_records(rng, 10, 5, 4, 3);
  const EmDataset data = EmDataset::from_records(records);

  // Rotate whole task groups; within-task order is preserved.
  std::vector<EmRecord> rotated;
  for (const auto& r : records)
    if (r.task_id > "task4") rotated.push_back(r);
  for (const auto& r : records)
    if (r.task_id <= "task4") rotated.push_back(r);
  const EmDataset data2 = EmDataset::from_records(rotated);

  EmOptions options;
  options.max_iterations = 10;
  const EmResult a = run_em(data, EmParams::initial(data), options);
  const EmResult b = run_em(data2, EmParams::initial(data2), options);

  CHECK(a.log_likelihood_trace.back() == b.log_likelihood_trace.back());
  CHECK(a.params.theta == b.params.theta);
  CHECK(a.params.d == b.params.d);
  CHECK(a.params.gamma == b.params.gamma);
}

TEST_CASE("estimates move in the planted direction") {
  PlantedConfig cfg;
  cfg.n_tasks = 120;
  cfg.n_workers = 12;
  cfg.ballots_per_task = 5;
  cfg.theta_true = 0.5;
  cfg.seed = 99;
  const PlantedDataset planted = generate_planted_dataset(cfg);
  const EmDataset data = EmDataset::from_records(planted.records);

  EmOptions options;
  options.max_iterations = 60;
  const EmResult result = run_em(data, EmParams::initial(data), options);

  // Correlation between estimated and true worker gammas should be clearly
  // positive; exact recovery is not expected at this size.
  std::vector<double> est, truth;
  for (long w = 0; w < data.worker_count(); ++w) {
    est.push_back(result.params.gamma[w]);
    truth.push_back(planted.true_gammas.at(data.worker_ids[w]));
  }
  const auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const double me = mean(est), mt = mean(truth);
  double cov = 0.0, ve = 0.0, vt = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    cov += (est[i] - me) * (truth[i] - mt);
    ve += (est[i] - me) * (est[i] - me);
    vt += (truth[i] - mt) * (truth[i] - mt);
  }
  CHECK(cov / std::sqrt(ve * vt) > 0.5);
}

TEST_CASE("majority vote answers with deterministic ties") {
  const std::vector<EmRecord> records{
      {"t1", "w1", "b"}, {"t1", "w2", "a"}, {"t1", "w3", "b"},
      {"t2", "w1", "z"}, {"t2", "w2", "y"},
  };
  const EmDataset data = EmDataset::from_records(records);
  const std::vector<AnswerId> mv = majority_vote_answers(data);
  REQUIRE(mv.size() == 2);
  CHECK(mv[0] == "b");
  CHECK(mv[1] == "y");  // tie resolved to the smaller token
}
