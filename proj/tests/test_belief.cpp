#include <cmath>

#include "doctest.h"
#include "lazysusan/belief.hpp"
#include "oracle.hpp"

using namespace lazysusan;

namespace {

struct RandomHistory {
  BallotHistory history;
  std::vector<double> gammas;
};

RandomHistory random_history(Rng& rng, int max_len, int answer_pool) {
  RandomHistory out;
  const int len = 1 + static_cast<int>(uniform01(rng) * max_len);
  for (int j = 0; j < len; ++j) {
    const char a = static_cast<char>('a' + static_cast<int>(uniform01(rng) * answer_pool));
    out.history.append({"w" + std::to_string(j), std::string(1, a)});
    out.gammas.push_back(2.0 * uniform01(rng));
  }
  return out;
}

double total_mass(const Belief& b) {
  double s = b.unseen_marginal();
  for (const auto& [answer, m] : b.masses()) s += b.marginal(answer);
  return s;
}

}  // namespace

TEST_CASE("difficulty prior shape parameters") {
  // Five agreeing ballots at theta 1.
  DifficultyPrior p = difficulty_prior_params(5, 1, 1.0);
  CHECK(p.alpha == doctest::Approx(1.8).epsilon(1e-12));
  CHECK(p.beta == doctest::Approx(4.2).epsilon(1e-12));

  // Same evidence but bandwagoning explains repetition away: theta reshapes
  // both exponents.
  DifficultyPrior p2 = difficulty_prior_params(5, 1, 2.0);
  CHECK(p2.alpha == doctest::Approx(std::sqrt(1.8)).epsilon(1e-12));
  CHECK(p2.beta == doctest::Approx(4.2 * 4.2).epsilon(1e-12));

  // Full scatter: alpha = i^(1/theta), beta = 1.
  DifficultyPrior p3 = difficulty_prior_params(5, 5, 1.0);
  CHECK(p3.alpha == doctest::Approx(5.0));
  CHECK(p3.beta == doctest::Approx(1.0));

  CHECK_THROWS_AS(difficulty_prior_params(0, 1, 1.0), std::domain_error);
  CHECK_THROWS_AS(difficulty_prior_params(3, 0, 1.0), std::domain_error);
  CHECK_THROWS_AS(difficulty_prior_params(3, 4, 1.0), std::domain_error);
}

TEST_CASE("difficulty prior mass normalizes and leans the right way") {
  const DifficultyGrid grid = DifficultyGrid::standard();

  auto mean_difficulty = [&](long i, long k) {
    const auto mass = difficulty_prior_mass(difficulty_prior_params(i, k, 1.0), grid);
    double s = 0.0, mean = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      s += mass[g];
      mean += mass[g] * grid.centers[g];
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    return mean;
  };

  // Unanimous histories look easy, scattered ones look hard.
  CHECK(mean_difficulty(8, 1) < mean_difficulty(8, 4));
  CHECK(mean_difficulty(8, 4) < mean_difficulty(8, 8));
}

TEST_CASE("unseen prior") {
  CHECK(unseen_prior(0.3, 2) == doctest::Approx(0.09).epsilon(1e-15));
  CHECK(unseen_prior(0.3, 0) == 1.0);
  CHECK(unseen_prior(0.0, 3) == 0.0);
  CHECK_THROWS_AS(unseen_prior(1.5, 2), std::domain_error);
}

TEST_CASE("empty belief is all unseen, flat over difficulty") {
  const Belief b = Belief::prior(DifficultyGrid::standard(), 1.0);
  CHECK(b.ballot_count() == 0);
  CHECK(b.unseen_marginal() == doctest::Approx(1.0));
  for (double m : b.unseen_masses()) CHECK(m == doctest::Approx(0.1));
  CHECK_THROWS_AS(map_answer(b), std::logic_error);
}

TEST_CASE("posterior matches the enumeration reference") {
  const DifficultyGrid grid = DifficultyGrid::standard();
  Rng rng(20260815);

  for (int trial = 0; trial < 200; ++trial) {
    const double theta = 0.2 + 3.0 * uniform01(rng);
    const RandomHistory rh = random_history(rng, 6, 3);

    const Belief b = compute_belief(rh.history, rh.gammas, theta, grid);

    std::vector<oracle::OBallot> ob;
    for (const auto& ballot : rh.history.ballots()) ob.push_back({ballot.worker_id, ballot.answer});
    const oracle::JointPosterior expect = oracle::joint_posterior(ob, rh.gammas, theta, grid.centers);

    REQUIRE(b.masses().size() == expect.mass.size());
    for (const auto& [answer, mass] : expect.mass) {
      const auto it = b.masses().find(answer);
      REQUIRE(it != b.masses().end());
      for (std::size_t g = 0; g < grid.size(); ++g)
        CHECK(it->second[g] == doctest::Approx(mass[g]).epsilon(1e-9));
    }
    for (std::size_t g = 0; g < grid.size(); ++g)
      CHECK(b.unseen_masses()[g] == doctest::Approx(expect.unseen_mass[g]).epsilon(1e-9));

    CHECK(total_mass(b) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("extending one ballot equals refolding the longer history") {
  const DifficultyGrid grid = DifficultyGrid::standard();
  Rng rng(7);

  for (int trial = 0; trial < 50; ++trial) {
    RandomHistory rh = random_history(rng, 5, 3);
    const double theta = 0.5 + uniform01(rng);

    const Belief base = compute_belief(rh.history, rh.gammas, theta, grid);
    const double gamma_next = 2.0 * uniform01(rng);
    const AnswerId next = trial % 2 == 0 ? AnswerId("a") : AnswerId("zz-unseen");

    const Belief one_step = base.extended(next, gamma_next);

    rh.history.append({"wx", next});
    rh.gammas.push_back(gamma_next);
    const Belief refolded = compute_belief(rh.history, rh.gammas, theta, grid);

    for (const auto& [answer, m] : refolded.masses()) {
      const auto it = one_step.masses().find(answer);
      REQUIRE(it != one_step.masses().end());
      for (std::size_t g = 0; g < grid.size(); ++g)
        CHECK(it->second[g] == doctest::Approx(m[g]).epsilon(1e-12));
    }
  }
}

TEST_CASE("map answer prefers mass, then the smaller token") {
  const DifficultyGrid grid = DifficultyGrid::standard();
  BallotHistory h;
  h.append({"w0", "b"});
  h.append({"w1", "a"});
  const Belief b = compute_belief(h, {1.0, 1.0}, 1.0, grid);

  // One ballot each with equal gammas: marginals tie exactly by symmetry.
  CHECK(b.marginal("a") == doctest::Approx(b.marginal("b")).epsilon(1e-14));
  CHECK(map_answer(b) == "a");

  const Belief b2 = b.extended("b", 1.0);
  CHECK(map_answer(b2) == "b");
}

TEST_CASE("predictive distribution") {
  const DifficultyGrid grid = DifficultyGrid::standard();

  SUBCASE("no evidence: everything is unseen") {
    const Belief b = Belief::prior(grid, 1.0);
    const PredictiveDistribution pred = predictive_distribution(b, 1.0);
    CHECK(pred.seen.empty());
    CHECK(pred.unseen == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("sums to one with the unseen hypothesis included") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      const RandomHistory rh = random_history(rng, 6, 3);
      const Belief b = compute_belief(rh.history, rh.gammas, 1.0, grid);
      const PredictiveDistribution pred = predictive_distribution(b, 1.0);
      double total = pred.unseen;
      for (const auto& [answer, p] : pred.seen) total += p;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  SUBCASE("restricted marginalization drops exactly the unseen hypothesis mass") {
    BallotHistory h;
    h.append({"w0", "a"});
    h.append({"w1", "a"});
    h.append({"w2", "b"});
    const Belief b = compute_belief(h, {1.0, 1.0, 1.0}, 1.0, grid);
    const PredictiveDistribution pred = predictive_distribution(b, 1.0, false);
    double total = pred.unseen;
    for (const auto& [answer, p] : pred.seen) total += p;
    CHECK(total == doctest::Approx(1.0 - b.unseen_marginal()).epsilon(1e-12));
  }
}

TEST_CASE("mean difficulty tracks the evidence") {
  const DifficultyGrid grid = DifficultyGrid::standard();

  BallotHistory agree;
  BallotHistory scatter;
  for (int j = 0; j < 6; ++j) {
    agree.append({"w" + std::to_string(j), "a"});
    scatter.append({"w" + std::to_string(j), std::string(1, static_cast<char>('a' + j))});
  }
  const std::vector<double> gammas(6, 1.0);

  const Belief b_agree = compute_belief(agree, gammas, 1.0, grid);
  const Belief b_scatter = compute_belief(scatter, gammas, 1.0, grid);
  CHECK(b_agree.mean_difficulty() < b_scatter.mean_difficulty());
  CHECK(b_agree.mean_difficulty() > grid.centers.front() - 1e-12);
  CHECK(b_scatter.mean_difficulty() < grid.centers.back() + 1e-12);
}
