#include "lazysusan/controller.hpp"

#include <algorithm>
#include <cmath>

namespace lazysusan {

namespace {

// Fresh token used to expand the aggregated "unseen" outcome inside the
// lookahead. Never escapes: submissions always come from real ballots. The
// loop guards against the (far-fetched) case of real data using the prefix.
AnswerId synthetic_fresh_token(const std::map<AnswerId, long>& counts) {
  for (long n = 0;; ++n) {
    AnswerId candidate = "__new" + std::to_string(n);
    if (counts.find(candidate) == counts.end()) return candidate;
  }
}

double successor_value(const Belief& b, const TaskConfig& cfg, int remaining_requests) {
  const double submit = q_submit(b, cfg);
  if (remaining_requests < 1) return submit;
  return std::max(submit, q_request(b, cfg, remaining_requests));
}

}  // namespace

double value_of(const AnswerId& a, const AnswerId& a_star, const TaskConfig& cfg) {
  return a == a_star ? cfg.correct_value : cfg.wrong_value;
}

double q_submit(const Belief& b, const TaskConfig& cfg) {
  const AnswerId a_star = map_answer(b);  // throws on empty beliefs
  double q = 0.0;
  for (const auto& [answer, m] : b.masses())
    q += value_of(answer, a_star, cfg) * b.marginal(answer);
  if (cfg.penalize_unseen_on_submit) q += cfg.wrong_value * b.unseen_marginal();
  return q;
}

double q_request(const Belief& b, const TaskConfig& cfg, int depth) {
  if (depth < 1) throw std::invalid_argument("q_request needs at least one request step");

  const PredictiveDistribution pred =
      predictive_distribution(b, cfg.gamma_bar, cfg.predictive_includes_unseen);

  double q = cfg.ballot_cost;
  for (const auto& [answer, p] : pred.seen) {
    if (p == 0.0) continue;
    q += p * successor_value(b.extended(answer, cfg.gamma_bar), cfg, depth - 1);
  }
  if (pred.unseen > 0.0) {
    const AnswerId fresh = synthetic_fresh_token(b.counts());
    q += pred.unseen * successor_value(b.extended(fresh, cfg.gamma_bar), cfg, depth - 1);
  }
  return q;
}

Action decide(const Belief& b, const TaskConfig& cfg) {
  if (b.ballot_count() == 0) return {ActionType::Request, {}};
  const double qs = q_submit(b, cfg);
  const double qr = q_request(b, cfg, cfg.lookahead_depth);
  if (qs >= qr) return {ActionType::Submit, map_answer(b)};
  return {ActionType::Request, {}};
}

void update_workers(const BallotHistory& h, const AnswerId& a_star, double d_hat,
                    double gamma_bar, WorkerStore& store) {
  if (!(d_hat >= 0.0 && d_hat <= 1.0)) throw std::domain_error("d_hat must lie in [0,1]");
  for (const auto& ballot : h.ballots()) {
    WorkerProfile& w = store.get_or_create(ballot.worker_id, gamma_bar);
    const double eps = 1.0 / (static_cast<double>(w.answered_count) + 1.0);
    if (ballot.answer == a_star)
      w.gamma -= d_hat * eps;
    else
      w.gamma += (1.0 - d_hat) * eps;
    w.gamma = std::max(w.gamma, 0.0);
    w.answered_count += 1;
  }
}

EpisodeResult run_task(const BallotSource& source, const TaskConfig& cfg, WorkerStore& store,
                       bool gamma_oracle, const std::optional<AnswerId>& ground_truth) {
  cfg.validate();

  EpisodeResult result;
  Belief belief = Belief::prior(cfg.grid, cfg.theta);
  BallotHistory history;
  bool submitted = false;

  for (int step = 1; step <= cfg.max_ballots; ++step) {
    std::optional<SourcedBallot> sb = source();
    if (!sb) {
      result.source_exhausted = true;
      break;
    }

    double gamma = cfg.gamma_bar;
    if (gamma_oracle && sb->true_gamma)
      gamma = *sb->true_gamma;
    else
      gamma = store.get_or_create(sb->worker_id, cfg.gamma_bar).gamma;

    belief = belief.extended(sb->answer, gamma);
    history.append({sb->worker_id, sb->answer});
    result.ballots_used += 1;
    result.ballot_cost_total += cfg.ballot_cost;

    StepRecord rec;
    rec.step = step;
    rec.worker_id = sb->worker_id;
    rec.ballot = sb->answer;
    rec.q_submit = q_submit(belief, cfg);
    rec.q_request = q_request(belief, cfg, cfg.lookahead_depth);
    rec.action = rec.q_submit >= rec.q_request ? ActionType::Submit : ActionType::Request;
    rec.belief.map_answer = map_answer(belief);
    rec.belief.map_marginal = belief.marginal(rec.belief.map_answer);
    rec.belief.unseen_marginal = belief.unseen_marginal();
    rec.belief.mean_difficulty = belief.mean_difficulty();
    result.trace.push_back(rec);

    if (rec.action == ActionType::Submit) {
      submitted = true;
      break;
    }
  }

  if (history.size() == 0) throw std::runtime_error("ballot source yielded no ballots");
  if (!submitted && !result.source_exhausted) result.cap_reached = true;

  result.submitted = map_answer(belief);
  update_workers(history, result.submitted, belief.mean_difficulty(), cfg.gamma_bar, store);
  result.final_belief = std::move(belief);

  if (ground_truth) {
    result.correct = (result.submitted == *ground_truth);
    result.net_utility =
        value_of(result.submitted, *ground_truth, cfg) + result.ballot_cost_total;
  }
  return result;
}

}  // namespace lazysusan
