#include "lazysusan/io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace lazysusan {

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

void reject_unknown_keys(const Json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw std::runtime_error(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (known.find(key) == known.end())
      throw std::runtime_error(where + ": unknown field \"" + key + "\"");
  }
}

template <typename T>
T field_or(const Json& j, const std::string& key, const T& fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw std::runtime_error(where + ": field \"" + key + "\" has the wrong type");
  }
}

}  // namespace

Json belief_to_json(const Belief& b) {
  Json hypotheses = Json::array();
  for (const auto& [answer, masses] : b.masses()) {
    hypotheses.push_back({{"answer", answer},
                          {"masses", masses},
                          {"marginal", b.marginal(answer)}});
  }
  hypotheses.push_back({{"answer", kUnseenLabel},
                        {"masses", b.unseen_masses()},
                        {"marginal", b.unseen_marginal()}});
  return Json{{"grid", b.grid().centers},
              {"theta", b.theta()},
              {"ballot_count", b.ballot_count()},
              {"hypotheses", hypotheses}};
}

Json step_record_to_json(const StepRecord& r) {
  return Json{{"step", r.step},
              {"worker_id", r.worker_id},
              {"ballot", r.ballot},
              {"q_submit", r.q_submit},
              {"q_request", r.q_request},
              {"action", r.action == ActionType::Submit ? "submit" : "request"},
              {"belief_digest",
               {{"map_answer", r.belief.map_answer},
                {"map_marginal", r.belief.map_marginal},
                {"unseen_marginal", r.belief.unseen_marginal},
                {"mean_difficulty", r.belief.mean_difficulty}}}};
}

Json episode_result_to_json(const EpisodeResult& r) {
  Json j{{"submitted", r.submitted},
         {"ballots_used", r.ballots_used},
         {"ballot_cost_total", r.ballot_cost_total},
         {"cap_reached", r.cap_reached},
         {"source_exhausted", r.source_exhausted}};
  if (r.correct) {
    j["correct"] = *r.correct;
    j["net_utility"] = r.net_utility;
  }
  return j;
}

namespace {

Json parse_jsonl_line(const std::string& line, const std::string& path, long line_no) {
  try {
    return Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
  }
}

std::string required_string(const Json& j, const char* key, const std::string& path, long line_no) {
  if (!j.contains(key) || !j.at(key).is_string())
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": missing string field \"" +
                             key + "\"");
  return j.at(key).get<std::string>();
}

}  // namespace

std::vector<SourcedBallot> load_sourced_ballots_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);

  std::vector<SourcedBallot> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const Json j = parse_jsonl_line(line, path, line_no);
    SourcedBallot sb;
    sb.worker_id = required_string(j, "worker_id", path, line_no);
    sb.answer = required_string(j, "answer", path, line_no);
    if (j.contains("gamma")) {
      if (!j.at("gamma").is_number())
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": \"gamma\" must be a number");
      sb.true_gamma = j.at("gamma").get<double>();
    }
    out.push_back(std::move(sb));
  }
  return out;
}

void save_sourced_ballots_jsonl(const std::vector<SourcedBallot>& ballots, const std::string& path) {
  std::ostringstream os;
  for (const auto& b : ballots) {
    Json j{{"worker_id", b.worker_id}, {"answer", b.answer}};
    if (b.true_gamma) j["gamma"] = *b.true_gamma;
    os << j.dump() << "\n";
  }
  write_text_file(path, os.str());
}

std::vector<EmRecord> load_em_records_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);

  std::vector<EmRecord> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const Json j = parse_jsonl_line(line, path, line_no);
    EmRecord r;
    r.task_id = required_string(j, "task_id", path, line_no);
    r.worker_id = required_string(j, "worker_id", path, line_no);
    r.answer = required_string(j, "answer", path, line_no);
    out.push_back(std::move(r));
  }
  return out;
}

void save_em_records_jsonl(const std::vector<EmRecord>& records, const std::string& path) {
  std::ostringstream os;
  for (const auto& r : records)
    os << Json{{"task_id", r.task_id}, {"worker_id", r.worker_id}, {"answer", r.answer}}.dump()
       << "\n";
  write_text_file(path, os.str());
}

Json em_result_to_json(const EmDataset& data, const EmResult& result) {
  Json tasks = Json::array();
  for (long t = 0; t < data.task_count(); ++t) {
    const TaskPosterior& q = result.posteriors[t];
    AnswerId best;
    double best_q = -1.0;
    Json posterior = Json::object();
    for (const auto& [answer, p] : q.seen) {
      posterior[answer] = p;
      if (p > best_q) { best_q = p; best = answer; }
    }
    posterior[kUnseenLabel] = q.unseen;
    tasks.push_back({{"task_id", data.task_ids[t]},
                     {"inferred", best},
                     {"posterior", posterior},
                     {"d", result.params.d[t]}});
  }

  Json workers = Json::array();
  for (long w = 0; w < data.worker_count(); ++w)
    workers.push_back({{"worker_id", data.worker_ids[w]}, {"gamma", result.params.gamma[w]}});

  return Json{{"tasks", tasks},
              {"workers", workers},
              {"theta", result.params.theta},
              {"log_likelihood_trace", result.log_likelihood_trace},
              {"iterations", result.iterations},
              {"converged", result.converged}};
}

std::string report_rows_to_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  os << "gamma_lo,gamma_hi,cw,agent,difficulty,episodes,accuracy_pct,avg_ballots,avg_cost,avg_net_utility\n";
  for (const auto& r : rows) {
    os << fixed(r.gamma_lo, 3) << ',' << fixed(r.gamma_hi, 3) << ',' << fixed(r.cw, 3) << ','
       << r.agent << ',' << (r.difficulty_index < 0 ? std::string("all") : fixed(r.difficulty, 3))
       << ',' << r.episodes << ',' << fixed(r.accuracy_pct, 4) << ',' << fixed(r.avg_ballots, 4)
       << ',' << fixed(r.avg_cost, 4) << ',' << fixed(r.avg_net_utility, 4) << '\n';
  }
  return os.str();
}

namespace {

Json report_row_to_json(const ReportRow& r) {
  Json j{{"gamma_lo", r.gamma_lo},
         {"gamma_hi", r.gamma_hi},
         {"cw", r.cw},
         {"agent", r.agent},
         {"episodes", r.episodes},
         {"accuracy_pct", r.accuracy_pct},
         {"avg_ballots", r.avg_ballots},
         {"avg_cost", r.avg_cost},
         {"avg_net_utility", r.avg_net_utility}};
  if (r.difficulty_index >= 0)
    j["difficulty"] = r.difficulty;
  else
    j["difficulty"] = "all";
  return j;
}

}  // namespace

Json experiment_summary_json(const ExperimentResult& result, const std::vector<ReportRow>& rows) {
  const ExperimentConfig& cfg = result.config;
  Json ranges = Json::array();
  for (auto [lo, hi] : cfg.gamma_ranges) ranges.push_back({lo, hi});
  Json agents = Json::array();
  for (const auto& a : cfg.agents) agents.push_back(a.name());

  Json jrows = Json::array();
  for (const auto& r : rows) jrows.push_back(report_row_to_json(r));

  return Json{{"seed", cfg.seed},
              {"config",
               {{"difficulty_settings", cfg.difficulty_settings},
                {"repetitions", cfg.repetitions},
                {"cw_values", cfg.cw_values},
                {"gamma_ranges", ranges},
                {"theta_true", cfg.theta_true},
                {"theta_model", cfg.task.theta},
                {"gamma_oracle", cfg.gamma_oracle},
                {"agents", agents},
                {"ballot_cost", cfg.task.ballot_cost},
                {"max_ballots", cfg.task.max_ballots}}},
              {"rows", jrows}};
}

Json regime_results_to_json(const std::vector<RegimeResult>& results) {
  Json arr = Json::array();
  for (const auto& r : results) {
    arr.push_back({{"name", r.name},
                   {"difficulty", r.difficulty},
                   {"theta", r.theta},
                   {"episodes", r.episodes},
                   {"accuracy_pct", r.accuracy_pct},
                   {"avg_ballots", r.avg_ballots}});
  }
  return Json{{"regimes", arr}};
}

TaskConfig task_config_from_json(const Json& j, TaskConfig cfg) {
  reject_unknown_keys(j, {"correct_value", "wrong_value", "ballot_cost", "theta", "gamma_bar",
                          "lookahead_depth", "max_ballots", "difficulty_grid",
                          "penalize_unseen_on_submit", "predictive_includes_unseen"},
                      "task");
  cfg.correct_value = field_or(j, "correct_value", cfg.correct_value, "task");
  cfg.wrong_value = field_or(j, "wrong_value", cfg.wrong_value, "task");
  cfg.ballot_cost = field_or(j, "ballot_cost", cfg.ballot_cost, "task");
  cfg.theta = field_or(j, "theta", cfg.theta, "task");
  cfg.gamma_bar = field_or(j, "gamma_bar", cfg.gamma_bar, "task");
  cfg.lookahead_depth = field_or(j, "lookahead_depth", cfg.lookahead_depth, "task");
  cfg.max_ballots = field_or(j, "max_ballots", cfg.max_ballots, "task");
  if (j.contains("difficulty_grid"))
    cfg.grid.centers = field_or(j, "difficulty_grid", cfg.grid.centers, "task");
  cfg.penalize_unseen_on_submit =
      field_or(j, "penalize_unseen_on_submit", cfg.penalize_unseen_on_submit, "task");
  cfg.predictive_includes_unseen =
      field_or(j, "predictive_includes_unseen", cfg.predictive_includes_unseen, "task");
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("task: ") + e.what());
  }
  return cfg;
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  reject_unknown_keys(j, {"task", "difficulty_settings", "repetitions", "cw_values",
                          "gamma_ranges", "theta_true", "gamma_oracle", "agents", "seed"},
                      "experiment");
  ExperimentConfig cfg;
  if (j.contains("task")) cfg.task = task_config_from_json(j.at("task"), cfg.task);
  cfg.difficulty_settings =
      field_or(j, "difficulty_settings", cfg.difficulty_settings, "experiment");
  cfg.repetitions = field_or(j, "repetitions", cfg.repetitions, "experiment");
  cfg.cw_values = field_or(j, "cw_values", cfg.cw_values, "experiment");
  if (j.contains("gamma_ranges")) {
    cfg.gamma_ranges.clear();
    for (const auto& r : j.at("gamma_ranges")) {
      if (!r.is_array() || r.size() != 2)
        throw std::runtime_error("experiment: each gamma range must be a [lo, hi] pair");
      cfg.gamma_ranges.emplace_back(r[0].get<double>(), r[1].get<double>());
    }
  }
  cfg.theta_true = field_or(j, "theta_true", cfg.theta_true, "experiment");
  cfg.gamma_oracle = field_or(j, "gamma_oracle", cfg.gamma_oracle, "experiment");
  cfg.seed = field_or(j, "seed", cfg.seed, "experiment");

  if (j.contains("agents")) {
    cfg.agents.clear();
    for (const auto& a : j.at("agents")) {
      AgentSpec spec;
      const std::string kind = field_or<std::string>(a, "kind", "", "experiment.agents");
      if (kind == "lazysusan")
        spec.kind = AgentSpec::Kind::LazySusan;
      else if (kind == "mv")
        spec.kind = AgentSpec::Kind::MajorityVote;
      else
        throw std::runtime_error("experiment.agents: kind must be \"lazysusan\" or \"mv\"");
      spec.param = field_or(a, "param", spec.param, "experiment.agents");
      cfg.agents.push_back(spec);
    }
  }
  if (cfg.agents.empty())
    cfg.agents = {{AgentSpec::Kind::LazySusan, 3}, {AgentSpec::Kind::MajorityVote, 7}};
  if (cfg.difficulty_settings.empty())
    for (int b = 0; b < 9; ++b) cfg.difficulty_settings.push_back(0.05 + 0.1 * b);

  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("experiment: ") + e.what());
  }
  return cfg;
}

RegimeStudyConfig regime_config_from_json(const Json& j) {
  reject_unknown_keys(j, {"task", "easy_difficulty", "hard_difficulty", "theta_neutral",
                          "theta_scatter", "theta_bandwagon", "worker_gamma", "episodes",
                          "depth", "seed"},
                      "regimes");
  RegimeStudyConfig cfg;
  if (j.contains("task")) cfg.task = task_config_from_json(j.at("task"), cfg.task);
  cfg.easy_difficulty = field_or(j, "easy_difficulty", cfg.easy_difficulty, "regimes");
  cfg.hard_difficulty = field_or(j, "hard_difficulty", cfg.hard_difficulty, "regimes");
  cfg.theta_neutral = field_or(j, "theta_neutral", cfg.theta_neutral, "regimes");
  cfg.theta_scatter = field_or(j, "theta_scatter", cfg.theta_scatter, "regimes");
  cfg.theta_bandwagon = field_or(j, "theta_bandwagon", cfg.theta_bandwagon, "regimes");
  cfg.worker_gamma = field_or(j, "worker_gamma", cfg.worker_gamma, "regimes");
  cfg.episodes = field_or(j, "episodes", cfg.episodes, "regimes");
  cfg.depth = field_or(j, "depth", cfg.depth, "regimes");
  cfg.seed = field_or(j, "seed", cfg.seed, "regimes");
  return cfg;
}

PlantedConfig planted_config_from_json(const Json& j) {
  reject_unknown_keys(j, {"n_tasks", "n_workers", "ballots_per_task", "gamma_lo", "gamma_hi",
                          "d_lo", "d_hi", "theta_true", "seed"},
                      "planted");
  PlantedConfig cfg;
  cfg.n_tasks = field_or(j, "n_tasks", cfg.n_tasks, "planted");
  cfg.n_workers = field_or(j, "n_workers", cfg.n_workers, "planted");
  cfg.ballots_per_task = field_or(j, "ballots_per_task", cfg.ballots_per_task, "planted");
  cfg.gamma_lo = field_or(j, "gamma_lo", cfg.gamma_lo, "planted");
  cfg.gamma_hi = field_or(j, "gamma_hi", cfg.gamma_hi, "planted");
  cfg.d_lo = field_or(j, "d_lo", cfg.d_lo, "planted");
  cfg.d_hi = field_or(j, "d_hi", cfg.d_hi, "planted");
  cfg.theta_true = field_or(j, "theta_true", cfg.theta_true, "planted");
  cfg.seed = field_or(j, "seed", cfg.seed, "planted");
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("planted: ") + e.what());
  }
  return cfg;
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace lazysusan
