#include "lazysusan/belief.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lazysusan {

namespace {

// Per-ballot likelihoods are floored before taking logs so that a degenerate
// parameter corner (for example a zero-accuracy worker voting for the
// hypothesis) cannot poison a whole row with -infinity.
constexpr double kLikelihoodFloor = 1e-300;

double safe_log(double p) { return std::log(std::max(p, kLikelihoodFloor)); }

}  // namespace

DifficultyPrior difficulty_prior_params(long i, long k, double theta) {
  if (i < 1) throw std::domain_error("difficulty prior needs at least one ballot");
  if (k < 1 || k > i) throw std::domain_error("unique answer count must lie in [1, i]");
  if (!(theta > 0.0)) throw std::domain_error("theta must be positive");
  const double ratio = static_cast<double>(k) / static_cast<double>(i);
  const double di = static_cast<double>(i);
  DifficultyPrior p;
  p.alpha = std::pow((di - 1.0) * ratio + 1.0, 1.0 / theta);
  p.beta = std::pow((1.0 - di) * ratio + di, theta);
  return p;
}

std::vector<double> difficulty_prior_mass(const DifficultyPrior& prior, const DifficultyGrid& grid) {
  grid.validate();
  std::vector<double> logw(grid.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double d = grid.centers[g];
    logw[g] = (prior.alpha - 1.0) * std::log(d) + (prior.beta - 1.0) * std::log1p(-d);
    mx = std::max(mx, logw[g]);
  }
  std::vector<double> mass(grid.size());
  double sum = 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    mass[g] = std::exp(logw[g] - mx);
    sum += mass[g];
  }
  for (double& m : mass) m /= sum;
  return mass;
}

double unseen_prior(double d, long i) {
  if (!(d >= 0.0 && d <= 1.0)) throw std::domain_error("difficulty must lie in [0,1]");
  if (i < 0) throw std::domain_error("ballot count must be non-negative");
  return std::pow(d, static_cast<double>(i));
}

Belief Belief::prior(DifficultyGrid grid, double theta) {
  grid.validate();
  if (!(theta > 0.0)) throw std::domain_error("theta must be positive");
  Belief b;
  b.grid_ = std::move(grid);
  b.theta_ = theta;
  b.loglik_unseen_.assign(b.grid_.size(), 0.0);
  b.refresh_masses();
  return b;
}

Belief Belief::extended(const AnswerId& ballot, double gamma) const {
  Belief next = *this;
  const std::size_t gsz = grid_.size();
  const bool is_new = counts_.find(ballot) == counts_.end();

  // New hypothesis rows are seeded from the current unseen row: the ballots so
  // far score identically under "truth = this fresh token" and "truth unseen",
  // since the token matched none of them.
  std::vector<double> fresh_row;
  if (is_new) fresh_row = loglik_unseen_;

  for (std::size_t g = 0; g < gsz; ++g) {
    const double d = grid_.centers[g];
    for (auto& [answer, row] : next.loglik_) {
      row[g] += safe_log(ballot_likelihood(ballot, answer, d, gamma, counts_, i_, theta_));
    }
    next.loglik_unseen_[g] += safe_log(ballot_likelihood(ballot, std::nullopt, d, gamma, counts_, i_, theta_));
    if (is_new) fresh_row[g] += safe_log(accuracy(d, gamma));
  }
  if (is_new) next.loglik_[ballot] = std::move(fresh_row);

  next.counts_[ballot] += 1;
  next.i_ += 1;
  next.refresh_masses();
  return next;
}

void Belief::refresh_masses() {
  const std::size_t gsz = grid_.size();
  mass_unseen_.assign(gsz, 0.0);
  mass_.clear();

  if (i_ == 0) {
    // No evidence: all mass on the unseen hypothesis, flat over difficulty
    // (the alpha = beta = 1 limit of the ballot-induced prior).
    const double u = 1.0 / static_cast<double>(gsz);
    for (std::size_t g = 0; g < gsz; ++g) mass_unseen_[g] = u;
    return;
  }

  const long k = unique_count();
  const std::vector<double> dmass = difficulty_prior_mass(difficulty_prior_params(i_, k, theta_), grid_);

  std::vector<double> log_dmass(gsz);
  std::vector<double> log_unseen_p(gsz);   // log d^i
  std::vector<double> log_seen_p(gsz);     // log (1 - d^i)/k
  for (std::size_t g = 0; g < gsz; ++g) {
    const double d = grid_.centers[g];
    const double di = std::pow(d, static_cast<double>(i_));
    log_dmass[g] = std::log(std::max(dmass[g], 0.0));  // 0 -> -inf, exp recovers 0
    log_unseen_p[g] = static_cast<double>(i_) * std::log(d);
    log_seen_p[g] = std::log1p(-di) - std::log(static_cast<double>(k));
  }

  std::map<AnswerId, std::vector<double>> logpost;
  std::vector<double> logpost_unseen(gsz);
  double mx = -std::numeric_limits<double>::infinity();
  for (const auto& [answer, row] : loglik_) {
    auto& lp = logpost[answer];
    lp.resize(gsz);
    for (std::size_t g = 0; g < gsz; ++g) {
      lp[g] = row[g] + log_seen_p[g] + log_dmass[g];
      mx = std::max(mx, lp[g]);
    }
  }
  for (std::size_t g = 0; g < gsz; ++g) {
    logpost_unseen[g] = loglik_unseen_[g] + log_unseen_p[g] + log_dmass[g];
    mx = std::max(mx, logpost_unseen[g]);
  }
  if (!std::isfinite(mx)) throw std::runtime_error("belief update produced no finite posterior mass");

  double sum = 0.0;
  for (auto& [answer, lp] : logpost) {
    auto& m = mass_[answer];
    m.resize(gsz);
    for (std::size_t g = 0; g < gsz; ++g) {
      m[g] = std::exp(lp[g] - mx);
      sum += m[g];
    }
  }
  for (std::size_t g = 0; g < gsz; ++g) {
    mass_unseen_[g] = std::exp(logpost_unseen[g] - mx);
    sum += mass_unseen_[g];
  }
  for (auto& [answer, m] : mass_)
    for (double& x : m) x /= sum;
  for (double& x : mass_unseen_) x /= sum;
}

double Belief::marginal(const AnswerId& a) const {
  auto it = mass_.find(a);
  if (it == mass_.end()) return 0.0;
  double s = 0.0;
  for (double x : it->second) s += x;
  return s;
}

double Belief::unseen_marginal() const {
  double s = 0.0;
  for (double x : mass_unseen_) s += x;
  return s;
}

double Belief::mean_difficulty() const {
  double s = 0.0;
  for (std::size_t g = 0; g < grid_.size(); ++g) {
    double col = mass_unseen_[g];
    for (const auto& [answer, m] : mass_) col += m[g];
    s += grid_.centers[g] * col;
  }
  return s;
}

Belief compute_belief(const BallotHistory& h, const std::vector<double>& worker_gammas,
                      double theta, const DifficultyGrid& grid) {
  if (worker_gammas.size() != static_cast<std::size_t>(h.size()))
    throw std::invalid_argument("one gamma per ballot is required");
  Belief b = Belief::prior(grid, theta);
  for (std::size_t j = 0; j < worker_gammas.size(); ++j)
    b = b.extended(h.ballots()[j].answer, worker_gammas[j]);
  return b;
}

AnswerId map_answer(const Belief& b) {
  if (b.ballot_count() == 0) throw std::logic_error("map_answer requires at least one ballot");
  AnswerId best;
  double best_m = -1.0;
  // Map iteration is ordered, so "strictly greater" keeps the smallest token
  // among ties.
  for (const auto& [answer, m] : b.masses()) {
    double s = 0.0;
    for (double x : m) s += x;
    if (s > best_m) {
      best_m = s;
      best = answer;
    }
  }
  return best;
}

PredictiveDistribution predictive_distribution(const Belief& b, double gamma_next, bool include_unseen) {
  PredictiveDistribution out;
  for (const auto& [answer, m] : b.masses()) out.seen[answer] = 0.0;

  const auto& grid = b.grid();
  auto accumulate = [&](const MaybeAnswer& hyp, const std::vector<double>& hyp_mass) {
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double w = hyp_mass[g];
      if (w == 0.0) continue;
      const double d = grid.centers[g];
      for (auto& [answer, p] : out.seen)
        p += w * ballot_likelihood(answer, hyp, d, gamma_next, b.counts(), b.ballot_count(), b.theta());
      out.unseen += w * ballot_likelihood(std::nullopt, hyp, d, gamma_next, b.counts(), b.ballot_count(), b.theta());
    }
  };

  for (const auto& [answer, m] : b.masses()) accumulate(answer, m);
  // With include_unseen cleared the sum is deliberately left at
  // 1 - unseen_marginal(): the restricted marginalization is an ablation and
  // does not re-weight what remains.
  if (include_unseen) accumulate(std::nullopt, b.unseen_masses());
  return out;
}

}  // namespace lazysusan
