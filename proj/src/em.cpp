#include "lazysusan/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lazysusan/model.hpp"

namespace lazysusan {

namespace {

constexpr double kLikelihoodFloor = 1e-300;
constexpr double kGammaLo = 0.0, kGammaHi = 8.0;
constexpr double kThetaLo = 0.01, kThetaHi = 16.0;

double safe_log(double p) { return std::log(std::max(p, kLikelihoodFloor)); }

// Golden-section maximization of a unimodal objective on [lo, hi].
template <typename F>
double golden_max(F&& f, double lo, double hi) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 80 && (b - a) > 1e-10 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (f1 < f2) {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + inv_phi * (b - a); f2 = f(x2);
    } else {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - inv_phi * (b - a); f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

// Coarse scan over sorted candidates, golden refinement between the
// neighbours of the best one. Returns the argmax over everything evaluated.
template <typename F>
double scan_refine_max(F&& f, const std::vector<double>& candidates) {
  std::size_t best = 0;
  double best_f = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double fi = f(candidates[i]);
    if (fi > best_f) { best_f = fi; best = i; }
  }
  const double lo = candidates[best == 0 ? 0 : best - 1];
  const double hi = candidates[std::min(best + 1, candidates.size() - 1)];
  const double refined = golden_max(f, lo, hi);
  return f(refined) > best_f ? refined : candidates[best];
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

std::vector<double> logspace(double lo, double hi, int n) {
  std::vector<double> v = linspace(std::log(lo), std::log(hi), n);
  for (double& x : v) x = std::exp(x);
  return v;
}

// Answer prior at a point difficulty: d^i for the unseen hypothesis,
// (1 - d^i)/k shared by each seen answer.
double log_answer_prior(const MaybeAnswer& v, double d, long i, long k) {
  const double di = std::pow(d, static_cast<double>(i));
  if (!v) return static_cast<double>(i) * std::log(d);
  return std::log1p(-di) - std::log(static_cast<double>(k));
}

struct TaskEval {
  std::vector<MaybeAnswer> hypotheses;  // seen answers in token order, then unseen
  std::vector<double> log_joint;
};

TaskEval eval_task(const EmDataset& data, long t, const EmParams& params, double d_override) {
  const BallotHistory& task = data.tasks[t];
  const double d = d_override >= 0.0 ? d_override : params.d[t];

  TaskEval ev;
  for (const auto& [answer, count] : task.counts()) ev.hypotheses.emplace_back(answer);
  ev.hypotheses.emplace_back(std::nullopt);
  ev.log_joint.assign(ev.hypotheses.size(), 0.0);

  for (std::size_t h = 0; h < ev.hypotheses.size(); ++h)
    ev.log_joint[h] = log_answer_prior(ev.hypotheses[h], d, task.size(), task.unique_count());

  // Fold ballots against growing prefix counts; each ballot is scored with its
  // worker's current gamma.
  std::map<AnswerId, long> prefix;
  long seated = 0;
  const auto& ballots = task.ballots();
  for (std::size_t j = 0; j < ballots.size(); ++j) {
    const double gamma = params.gamma[data.task_workers[t][j]];
    for (std::size_t h = 0; h < ev.hypotheses.size(); ++h) {
      ev.log_joint[h] += safe_log(
          ballot_likelihood(ballots[j].answer, ev.hypotheses[h], d, gamma, prefix, seated, params.theta));
    }
    prefix[ballots[j].answer] += 1;
    seated += 1;
  }
  return ev;
}

struct TaskStepOut {
  TaskPosterior posterior;
  double log_likelihood = 0.0;
};

TaskStepOut task_e_step(const EmDataset& data, long t, const EmParams& params) {
  const TaskEval ev = eval_task(data, t, params, -1.0);

  double mx = -std::numeric_limits<double>::infinity();
  for (double lj : ev.log_joint) mx = std::max(mx, lj);
  double sum = 0.0;
  for (double lj : ev.log_joint) sum += std::exp(lj - mx);

  TaskStepOut out;
  out.log_likelihood = mx + std::log(sum);
  for (std::size_t h = 0; h < ev.hypotheses.size(); ++h) {
    const double q = std::exp(ev.log_joint[h] - mx) / sum;
    if (ev.hypotheses[h])
      out.posterior.seen[*ev.hypotheses[h]] = q;
    else
      out.posterior.unseen = q;
  }
  return out;
}

template <bool Parallel>
EStepResult e_step_impl(const EmDataset& data, const EmParams& params) {
  const long n = data.task_count();
  std::vector<TaskStepOut> slots(n);

  if constexpr (Parallel) {
#pragma omp parallel for schedule(static)
    for (long t = 0; t < n; ++t) slots[t] = task_e_step(data, t, params);
  } else {
    for (long t = 0; t < n; ++t) slots[t] = task_e_step(data, t, params);
  }

  // Accumulate serially in task order so parallel and serial runs agree to the
  // last bit.
  EStepResult result;
  result.posteriors.reserve(n);
  for (long t = 0; t < n; ++t) {
    result.observed_log_likelihood += slots[t].log_likelihood;
    result.posteriors.push_back(std::move(slots[t].posterior));
  }
  return result;
}

double posterior_weight(const TaskPosterior& q, const MaybeAnswer& v) {
  if (!v) return q.unseen;
  auto it = q.seen.find(*v);
  return it == q.seen.end() ? 0.0 : it->second;
}

double task_objective(const EmDataset& data, long t, const TaskPosterior& q,
                      const EmParams& params, double d) {
  const TaskEval ev = eval_task(data, t, params, d);
  double s = 0.0;
  for (std::size_t h = 0; h < ev.hypotheses.size(); ++h)
    s += posterior_weight(q, ev.hypotheses[h]) * ev.log_joint[h];
  return s;
}

// Sufficient statistics for one worker's gamma: expected correct and wrong
// counts per distinct task difficulty. The bandwagon factors of wrong ballots
// do not involve gamma, so they drop out of the argmax.
struct GammaStats {
  std::map<double, std::pair<double, double>> by_difficulty;  // d -> (correct, wrong)

  double objective(double gamma) const {
    double s = 0.0;
    for (const auto& [d, w] : by_difficulty) {
      const double a = accuracy(d, gamma);
      s += w.first * safe_log(a) + w.second * safe_log(1.0 - a);
    }
    return s;
  }
};

// theta appears only through wrong-ballot bandwagon factors:
// log(theta / (N + theta)) for a first-of-its-kind wrong answer and
// log(f / (N + theta)) otherwise. Collapse to weights per (N, fresh) pair.
struct ThetaStats {
  std::map<std::pair<long, bool>, double> weights;  // (N, fresh) -> weight

  double objective(double theta) const {
    const double lt = std::log(theta);
    double s = 0.0;
    for (const auto& [key, w] : weights) {
      double term = -std::log(static_cast<double>(key.first) + theta);
      if (key.second) term += lt;
      s += w * term;
    }
    return s;
  }
};

}  // namespace

EmDataset EmDataset::from_records(const std::vector<EmRecord>& records) {
  EmDataset data;

  std::map<std::string, std::vector<const EmRecord*>> by_task;
  for (const auto& r : records) {
    if (r.task_id.empty() || r.worker_id.empty() || r.answer.empty())
      throw std::invalid_argument("dataset records need non-empty task, worker and answer");
    by_task[r.task_id].push_back(&r);
    data.worker_index.emplace(r.worker_id, 0);
  }

  int w = 0;
  for (auto& [id, idx] : data.worker_index) {
    idx = w++;
    data.worker_ids.push_back(id);
  }

  for (auto& [task_id, rows] : by_task) {
    data.task_ids.push_back(task_id);
    BallotHistory h;
    std::vector<int> workers;
    for (const EmRecord* r : rows) {
      h.append({r->worker_id, r->answer});
      workers.push_back(data.worker_index.at(r->worker_id));
    }
    data.tasks.push_back(std::move(h));
    data.task_workers.push_back(std::move(workers));
  }
  return data;
}

EmParams EmParams::initial(const EmDataset& data, double d0, double gamma0, double theta0) {
  EmParams p;
  p.d.assign(data.task_count(), d0);
  p.gamma.assign(data.worker_count(), gamma0);
  p.theta = theta0;
  return p;
}

double em_task_log_joint(const EmDataset& data, long t, const MaybeAnswer& v,
                         double d, const EmParams& params) {
  const TaskEval ev = eval_task(data, t, params, d);
  for (std::size_t h = 0; h < ev.hypotheses.size(); ++h)
    if (ev.hypotheses[h] == v) return ev.log_joint[h];
  throw std::invalid_argument("hypothesis is not an answer of this task");
}

EStepResult e_step(const EmDataset& data, const EmParams& params) {
  return e_step_impl<true>(data, params);
}

EStepResult e_step_serial(const EmDataset& data, const EmParams& params) {
  return e_step_impl<false>(data, params);
}

double observed_log_likelihood(const EmDataset& data, const EmParams& params) {
  return e_step_serial(data, params).observed_log_likelihood;
}

double expected_complete_log_likelihood(const EmDataset& data,
                                        const std::vector<TaskPosterior>& posteriors,
                                        const EmParams& params) {
  if (posteriors.size() != static_cast<std::size_t>(data.task_count()))
    throw std::invalid_argument("one posterior per task is required");
  double s = 0.0;
  for (long t = 0; t < data.task_count(); ++t)
    s += task_objective(data, t, posteriors[t], params, params.d[t]);
  return s;
}

void m_step(const EmDataset& data, const std::vector<TaskPosterior>& posteriors,
            const DifficultyGrid& grid, EmParams& params) {
  if (posteriors.size() != static_cast<std::size_t>(data.task_count()))
    throw std::invalid_argument("one posterior per task is required");
  grid.validate();

  // Difficulties: separable across tasks. The current value rides along as a
  // candidate so a grid coarser than the incumbent can never lose ground.
  const long n = data.task_count();
#pragma omp parallel for schedule(static)
  for (long t = 0; t < n; ++t) {
    double best_d = params.d[t];
    double best_f = task_objective(data, t, posteriors[t], params, best_d);
    for (double c : grid.centers) {
      const double f = task_objective(data, t, posteriors[t], params, c);
      if (f > best_f) { best_f = f; best_d = c; }
    }
    params.d[t] = best_d;
  }

  // Worker gammas: collapse each worker's evidence, then optimize per worker.
  std::vector<GammaStats> stats(data.worker_count());
  for (long t = 0; t < n; ++t) {
    const auto& ballots = data.tasks[t].ballots();
    const double d = params.d[t];
    for (std::size_t j = 0; j < ballots.size(); ++j) {
      auto& bucket = stats[data.task_workers[t][j]].by_difficulty[d];
      for (const auto& [answer, q] : posteriors[t].seen) {
        if (answer == ballots[j].answer)
          bucket.first += q;
        else
          bucket.second += q;
      }
      bucket.second += posteriors[t].unseen;  // never correct under the unseen hypothesis
    }
  }

  const std::vector<double> gamma_candidates = linspace(kGammaLo, kGammaHi, 33);
  const long nw = data.worker_count();
#pragma omp parallel for schedule(static)
  for (long w = 0; w < nw; ++w) {
    auto obj = [&](double g) { return stats[w].objective(g); };
    const double cand = scan_refine_max(obj, gamma_candidates);
    if (obj(cand) > obj(params.gamma[w])) params.gamma[w] = cand;
  }

  // Shared theta: collapse wrong-ballot bandwagon terms over the whole
  // dataset. The objective need not be unimodal, hence the scan before the
  // refinement.
  ThetaStats tstats;
  for (long t = 0; t < n; ++t) {
    const auto& ballots = data.tasks[t].ballots();
    std::map<AnswerId, long> prefix;
    long seated = 0;
    for (std::size_t j = 0; j < ballots.size(); ++j) {
      const AnswerId& b = ballots[j].answer;
      auto pit = prefix.find(b);
      const long b_count = pit == prefix.end() ? 0 : pit->second;
      for (const auto& [answer, q] : posteriors[t].seen) {
        if (answer == b || q == 0.0) continue;
        long v_count = 0;
        if (auto vit = prefix.find(answer); vit != prefix.end()) v_count = vit->second;
        tstats.weights[{seated - v_count, b_count == 0}] += q;
      }
      if (posteriors[t].unseen > 0.0)
        tstats.weights[{seated, b_count == 0}] += posteriors[t].unseen;
      prefix[b] += 1;
      seated += 1;
    }
  }

  auto theta_obj = [&](double th) { return tstats.objective(th); };
  const double theta_cand = scan_refine_max(theta_obj, logspace(kThetaLo, kThetaHi, 49));
  if (theta_obj(theta_cand) > theta_obj(params.theta)) params.theta = theta_cand;
}

EmResult run_em(const EmDataset& data, const EmParams& init, const EmOptions& options) {
  if (init.d.size() != static_cast<std::size_t>(data.task_count()) ||
      init.gamma.size() != static_cast<std::size_t>(data.worker_count()))
    throw std::invalid_argument("initial parameters do not match the dataset");

  EmResult result;
  result.params = init;

  double prev = 0.0;
  for (int it = 0; it < options.max_iterations; ++it) {
    EStepResult e = e_step(data, result.params);
    result.posteriors = std::move(e.posteriors);
    result.log_likelihood_trace.push_back(e.observed_log_likelihood);
    result.iterations = it + 1;

    if (it > 0 && std::abs(e.observed_log_likelihood - prev) < options.tolerance) {
      result.converged = true;
      break;
    }
    prev = e.observed_log_likelihood;

    m_step(data, result.posteriors, options.grid, result.params);
  }
  return result;
}

std::vector<AnswerId> majority_vote_answers(const EmDataset& data) {
  std::vector<AnswerId> out;
  out.reserve(data.task_count());
  for (const auto& task : data.tasks) {
    AnswerId best;
    long best_count = -1;
    for (const auto& [answer, count] : task.counts()) {
      if (count > best_count) { best_count = count; best = answer; }
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace lazysusan
