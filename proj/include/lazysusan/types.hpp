#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lazysusan {

// Answers are opaque tokens compared by exact equality. Lexicographic order is
// used only when a deterministic tie-break is needed.
using AnswerId = std::string;

// nullopt plays a double role, matching the model: as an outcome it is the
// "some answer we have not seen yet" symbol, as a hypothesis it means the true
// answer is not among the ballots so far. Serialized as "⊥".
using MaybeAnswer = std::optional<AnswerId>;

inline const std::string kUnseenLabel = "⊥";

struct Ballot {
  std::string worker_id;
  AnswerId answer;
};

// Ordered multiset of ballots for one task. Append-only; per-answer counts are
// kept incrementally so f(a), i and k are O(log k).
class BallotHistory {
 public:
  void append(Ballot b) {
    counts_[b.answer] += 1;
    ballots_.push_back(std::move(b));
  }

  long size() const { return static_cast<long>(ballots_.size()); }
  long unique_count() const { return static_cast<long>(counts_.size()); }

  long count(const AnswerId& a) const {
    auto it = counts_.find(a);
    return it == counts_.end() ? 0 : it->second;
  }

  const std::vector<Ballot>& ballots() const { return ballots_; }
  // Ordered by answer token; iteration order is part of the determinism
  // contract for everything built on top.
  const std::map<AnswerId, long>& counts() const { return counts_; }

 private:
  std::vector<Ballot> ballots_;
  std::map<AnswerId, long> counts_;
};

// Discretized difficulty support. Centers must be strictly increasing and lie
// in the open interval (0,1); the posterior treats each center as carrying the
// prior mass of its surrounding bucket.
struct DifficultyGrid {
  std::vector<double> centers;

  static DifficultyGrid regular(int buckets) {
    if (buckets < 1) throw std::invalid_argument("difficulty grid needs at least one bucket");
    DifficultyGrid g;
    g.centers.reserve(buckets);
    for (int b = 0; b < buckets; ++b) g.centers.push_back((b + 0.5) / buckets);
    return g;
  }

  // Ten centers 0.05..0.95, the default discretization everywhere.
  static DifficultyGrid standard() { return regular(10); }

  std::size_t size() const { return centers.size(); }

  void validate() const {
    if (centers.empty()) throw std::invalid_argument("difficulty grid is empty");
    double prev = 0.0;
    for (double c : centers) {
      if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("difficulty grid centers must lie in (0,1)");
      if (!(c > prev)) throw std::invalid_argument("difficulty grid centers must be strictly increasing");
      prev = c;
    }
  }
};

struct WorkerProfile {
  double gamma = 1.0;
  long answered_count = 0;  // number of tasks this worker has been scored on
};

// Static parameters of one task run: utility function, model constants and
// controller limits. theta is the model's bandwagon parameter (may differ from
// the one a simulation generates ballots with).
struct TaskConfig {
  double correct_value = 0.0;    // V(a*), non-positive by convention
  double wrong_value = -100.0;   // V(a != a*)
  double ballot_cost = -1.0;     // added once per requested ballot
  double theta = 1.0;
  double gamma_bar = 1.0;        // prior mean error parameter for unknown workers
  int lookahead_depth = 3;       // request actions considered ahead, >= 1
  int max_ballots = 50;          // hard cap per task
  DifficultyGrid grid = DifficultyGrid::standard();

  // Submit utility ignores mass on the unseen hypothesis (that mass can never
  // make the submitted answer wrong in the model's own terms). Setting this
  // treats unseen mass as wrong instead.
  bool penalize_unseen_on_submit = false;
  // The lookahead's outcome distribution marginalizes over the unseen
  // hypothesis too. Clearing this restricts it to seen hypotheses.
  bool predictive_includes_unseen = true;

  void validate() const {
    if (correct_value > 0.0) throw std::invalid_argument("correct_value must be <= 0");
    if (wrong_value > correct_value) throw std::invalid_argument("wrong_value must be <= correct_value");
    if (ballot_cost >= 0.0) throw std::invalid_argument("ballot_cost must be negative");
    if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
    if (!(gamma_bar >= 0.0)) throw std::invalid_argument("gamma_bar must be non-negative");
    if (lookahead_depth < 1) throw std::invalid_argument("lookahead_depth must be >= 1");
    if (max_ballots < 1) throw std::invalid_argument("max_ballots must be >= 1");
    grid.validate();
  }
};

}  // namespace lazysusan
