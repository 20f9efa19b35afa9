#pragma once

#include <string>

#include "json.hpp"
#include "lazysusan/controller.hpp"
#include "lazysusan/em.hpp"
#include "lazysusan/sim.hpp"

namespace lazysusan {

using Json = nlohmann::json;

// {"grid":[...], "hypotheses":[{"answer": token or "⊥", "masses":[...],
//  "marginal": m}, ...]} with seen answers in token order and the unseen
// hypothesis last.
Json belief_to_json(const Belief& b);

Json step_record_to_json(const StepRecord& r);
Json episode_result_to_json(const EpisodeResult& r);

// One JSON object per line: {"worker_id","answer"} with an optional "gamma"
// carrying the generator-side value. Parse errors name the offending line.
std::vector<SourcedBallot> load_sourced_ballots_jsonl(const std::string& path);
void save_sourced_ballots_jsonl(const std::vector<SourcedBallot>& ballots, const std::string& path);

// One JSON object per line: {"task_id","worker_id","answer"}.
std::vector<EmRecord> load_em_records_jsonl(const std::string& path);
void save_em_records_jsonl(const std::vector<EmRecord>& records, const std::string& path);

Json em_result_to_json(const EmDataset& data, const EmResult& result);

std::string report_rows_to_csv(const std::vector<ReportRow>& rows);
Json experiment_summary_json(const ExperimentResult& result, const std::vector<ReportRow>& rows);
Json regime_results_to_json(const std::vector<RegimeResult>& results);

// Config readers throw std::runtime_error with the offending field in the
// message. Unknown keys are rejected to catch typos early. Fields absent from
// the JSON keep the base's values, so callers choose which defaults apply.
TaskConfig task_config_from_json(const Json& j, TaskConfig base = TaskConfig{});
ExperimentConfig experiment_config_from_json(const Json& j);
RegimeStudyConfig regime_config_from_json(const Json& j);
PlantedConfig planted_config_from_json(const Json& j);

Json load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace lazysusan
