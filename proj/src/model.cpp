#include "lazysusan/model.hpp"

#include <cmath>
#include <limits>

namespace lazysusan {

double accuracy(double d, double gamma) {
  if (!(d >= 0.0 && d <= 1.0)) throw std::domain_error("difficulty must lie in [0,1]");
  if (!(gamma >= 0.0)) throw std::domain_error("gamma must be non-negative");
  return std::pow(1.0 - d, gamma);
}

double accuracy_binary_reference(double d, double gamma) {
  return 0.5 * (1.0 + accuracy(d, gamma));
}

double Restaurant::seat_probability(const AnswerId& t) const {
  auto it = tables.find(t);
  if (it == tables.end()) throw std::domain_error("seat_probability: answer not in restaurant");
  return static_cast<double>(it->second) / (static_cast<double>(total) + theta);
}

double Restaurant::new_table_probability() const {
  return theta / (static_cast<double>(total) + theta);
}

Restaurant wrong_answer_restaurant(const BallotHistory& h, const MaybeAnswer& v, double theta) {
  if (!(theta > 0.0)) throw std::domain_error("theta must be positive");
  Restaurant r;
  r.theta = theta;
  r.tables = h.counts();
  r.total = h.size();
  if (v) {
    auto it = r.tables.find(*v);
    if (it != r.tables.end()) {
      r.total -= it->second;
      r.tables.erase(it);
    }
  }
  return r;
}

double ballot_likelihood(const MaybeAnswer& b, const MaybeAnswer& v, double d, double gamma,
                         const std::map<AnswerId, long>& counts, long ballot_count, double theta) {
  if (!(theta > 0.0)) throw std::domain_error("theta must be positive");
  const double a = accuracy(d, gamma);
  if (b && v && *b == *v) return a;

  // Wrong-answer (or unseen-truth) branch: restaurant over the history with v
  // removed. N and the per-answer counts are read off the count table.
  long removed = 0;
  if (v) {
    auto it = counts.find(*v);
    if (it != counts.end()) removed = it->second;
  }
  const double n = static_cast<double>(ballot_count - removed);
  const double denom = n + theta;

  double seat;  // restaurant mass of the observed outcome
  if (b) {
    auto it = counts.find(*b);
    const bool seen = it != counts.end() && !(v && *b == *v);
    seat = seen ? static_cast<double>(it->second) / denom : theta / denom;
    return (1.0 - a) * seat;
  }

  // b is the unseen symbol. The new-table mass is always part of it; when the
  // truth itself is unseen the accurate branch lands there too.
  double p = (1.0 - a) * theta / denom;
  if (!v) p += a;
  return p;
}

double ballot_likelihood(const MaybeAnswer& b, const MaybeAnswer& v, double d, double gamma,
                         const BallotHistory& h, double theta) {
  return ballot_likelihood(b, v, d, gamma, h.counts(), h.size(), theta);
}

double adversarial_theta_threshold(double d, double gamma) {
  const double a = accuracy(d, gamma);
  if (a == 0.0) return std::numeric_limits<double>::infinity();
  return (1.0 - 2.0 * a) / a;
}

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

AnswerId sample_ballot(const AnswerId& v, double d, double gamma, const BallotHistory& h,
                       double theta, Rng& rng, const FreshAnswerSource& fresh) {
  const double a = accuracy(d, gamma);
  const double u = uniform01(rng);
  if (u < a) return v;

  Restaurant r = wrong_answer_restaurant(h, v, theta);
  // Walk the tables in key order; the tail of the interval is the new table.
  double w = uniform01(rng) * (static_cast<double>(r.total) + r.theta);
  for (const auto& [answer, count] : r.tables) {
    w -= static_cast<double>(count);
    if (w < 0.0) return answer;
  }
  return fresh();
}

}  // namespace lazysusan
