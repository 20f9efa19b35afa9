#pragma once

#include <functional>
#include <random>

#include "lazysusan/types.hpp"

namespace lazysusan {

// P(worker answers correctly) = (1-d)^gamma. d in [0,1], gamma >= 0.
double accuracy(double d, double gamma);

// Two-choice variant, 1/2 + (1-d)^gamma / 2. Kept as a documented reference
// point; nothing downstream uses it.
double accuracy_binary_reference(double d, double gamma);

// One Chinese-restaurant view of a task: existing answers with their
// multiplicities plus a concentration parameter. total is the number of seated
// customers N; with N = 0 the new-table probability is 1 by construction.
struct Restaurant {
  std::map<AnswerId, long> tables;
  double theta = 1.0;
  long total = 0;

  double seat_probability(const AnswerId& t) const;  // f(t) / (N + theta)
  double new_table_probability() const;              // theta / (N + theta)
};

// Restaurant a wrong answer is drawn from under hypothesis v: the history with
// every copy of v removed. v = nullopt removes nothing.
Restaurant wrong_answer_restaurant(const BallotHistory& h, const MaybeAnswer& v, double theta);

// P(next ballot = b | true answer v, difficulty d, worker gamma, history).
// Both b and v may be the unseen symbol (nullopt): as b it aggregates all
// answers outside the history, as v it conditions on the truth being outside.
// A concrete b equal to a concrete v scores the accuracy branch; everything
// else goes through the wrong-answer restaurant.
double ballot_likelihood(const MaybeAnswer& b, const MaybeAnswer& v, double d, double gamma,
                         const BallotHistory& h, double theta);

// Same quantity computed from a count table (ballot_count = i). The belief
// engine folds ballots incrementally and never materializes a BallotHistory.
double ballot_likelihood(const MaybeAnswer& b, const MaybeAnswer& v, double d, double gamma,
                         const std::map<AnswerId, long>& counts, long ballot_count, double theta);

// Largest theta at which a single wrong ballot still outweighs the correct
// answer in expectation: (1 - 2a) / a with a = accuracy(d, gamma). Returns
// +infinity when a = 0; values <= 0 mean no positive theta is adversarial.
double adversarial_theta_threshold(double d, double gamma);

using Rng = std::mt19937_64;

// Uniform draw in [0,1) with an explicit 53-bit construction so the stream is
// reproducible across standard libraries.
double uniform01(Rng& rng);

using FreshAnswerSource = std::function<AnswerId()>;

// Draws one ballot from the generative model: the truth with probability
// accuracy(d, gamma), otherwise a seat from the wrong-answer restaurant, where
// a new table pulls a token from fresh(). Consumes at most two uniforms, in a
// fixed order, so sampling is reproducible.
AnswerId sample_ballot(const AnswerId& v, double d, double gamma, const BallotHistory& h,
                       double theta, Rng& rng, const FreshAnswerSource& fresh);

}  // namespace lazysusan
