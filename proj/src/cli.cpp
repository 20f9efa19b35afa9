#include "lazysusan/cli.hpp"

#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "lazysusan/io.hpp"

#ifndef LS_BUNDLED_DATA_DIR
#define LS_BUNDLED_DATA_DIR "."
#endif

namespace lazysusan {

namespace {

// Uniform error policy: any failure surfaces as one line on err, exit code 1.
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

TaskConfig decide_task_config(const DecideOptions& opt) {
  // Same baseline as the simulation harness; a config file may still switch
  // the submit rule back to the literal form.
  TaskConfig cfg = default_agent_task();
  if (opt.config_path) {
    Json j = load_json_file(*opt.config_path);
    cfg = task_config_from_json(j.contains("task") ? j.at("task") : j, cfg);
  }
  if (opt.depth) cfg.lookahead_depth = *opt.depth;
  if (opt.cw) cfg.wrong_value = *opt.cw;
  if (opt.theta) cfg.theta = *opt.theta;
  if (opt.grid_buckets) cfg.grid = DifficultyGrid::regular(*opt.grid_buckets);
  cfg.validate();
  return cfg;
}

}  // namespace

int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() {
    ExperimentConfig cfg = experiment_config_from_json(load_json_file(opt.config_path));
    if (opt.seed) cfg.seed = *opt.seed;

    const ExperimentResult result = opt.serial ? run_experiment_serial(cfg) : run_experiment(cfg);
    const std::vector<ReportRow> rows = summarize(result);

    std::filesystem::create_directories(opt.out_dir);
    const std::string report_path = opt.out_dir + "/report.csv";
    const std::string summary_path = opt.out_dir + "/summary.json";
    const std::string seeds_path = opt.out_dir + "/seeds.json";

    write_text_file(report_path, report_rows_to_csv(rows));
    write_text_file(summary_path, experiment_summary_json(result, rows).dump(2) + "\n");
    write_text_file(seeds_path,
                    Json{{"master_seed", cfg.seed},
                         {"episode_rng", "mt19937_64 seeded by splitmix64 over "
                                         "(master_seed, gamma_range, difficulty, rep)"}}
                            .dump(2) +
                        "\n");

    out << "episodes: " << result.episodes.size() << "\n";
    for (const auto& r : rows) {
      if (r.difficulty_index >= 0) continue;  // per-difficulty rows live in the CSV
      out << "gamma(" << r.gamma_lo << "," << r.gamma_hi << ") cw=" << r.cw << " " << r.agent
          << ": accuracy " << r.accuracy_pct << "% avg_net " << r.avg_net_utility
          << " avg_ballots " << r.avg_ballots << "\n";
    }
    out << "wrote " << report_path << ", " << summary_path << ", " << seeds_path << "\n";
    return 0;
  });
}

int cmd_decide(const DecideOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() {
    const TaskConfig cfg = decide_task_config(opt);
    const std::vector<SourcedBallot> ballots = load_sourced_ballots_jsonl(opt.ballots_path);
    if (ballots.empty()) throw std::runtime_error(opt.ballots_path + ": no ballots");

    std::size_t next = 0;
    BallotSource source = [&]() -> std::optional<SourcedBallot> {
      if (next >= ballots.size()) return std::nullopt;
      return ballots[next++];
    };

    WorkerStore store;
    const EpisodeResult result = run_task(source, cfg, store, opt.gamma_oracle);

    for (const auto& rec : result.trace) {
      out << "step " << rec.step << ": worker " << rec.worker_id << " answered \"" << rec.ballot
          << "\"  q_submit=" << rec.q_submit << " q_request=" << rec.q_request << " -> "
          << (rec.action == ActionType::Submit ? "submit" : "request") << "\n";
    }
    if (result.cap_reached) out << "ballot cap reached, submitting current best\n";
    if (result.source_exhausted) out << "ballot stream exhausted, submitting current best\n";
    out << "submitted: " << result.submitted << " after " << result.ballots_used << " ballots\n";

    const Json belief_json = belief_to_json(*result.final_belief);
    out << belief_json.dump(2) << "\n";

    if (opt.trace_path) {
      std::ostringstream os;
      for (const auto& rec : result.trace) os << step_record_to_json(rec).dump() << "\n";
      write_text_file(*opt.trace_path, os.str());
    }
    if (opt.belief_path) write_text_file(*opt.belief_path, belief_json.dump(2) + "\n");
    return 0;
  });
}

int cmd_em(const EmCliOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() {
    const std::vector<EmRecord> records = load_em_records_jsonl(opt.data_path);
    if (records.empty()) throw std::runtime_error(opt.data_path + ": no records");
    const EmDataset data = EmDataset::from_records(records);

    EmOptions options;
    if (opt.max_iterations) options.max_iterations = *opt.max_iterations;
    if (opt.grid_buckets) options.grid = DifficultyGrid::regular(*opt.grid_buckets);

    const EmParams init = EmParams::initial(data, 0.5, 1.0, opt.theta0.value_or(1.0));
    const EmResult result = run_em(data, init, options);

    write_text_file(opt.out_path, em_result_to_json(data, result).dump(2) + "\n");

    out << "tasks: " << data.task_count() << ", workers: " << data.worker_count() << "\n";
    out << "iterations: " << result.iterations << (result.converged ? " (converged)" : "")
        << ", theta: " << result.params.theta << "\n";
    out << "log likelihood: " << result.log_likelihood_trace.front() << " -> "
        << result.log_likelihood_trace.back() << "\n";
    out << "wrote " << opt.out_path << "\n";
    return 0;
  });
}

int cmd_generate(const GenerateOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() {
    Json j = load_json_file(opt.config_path);
    PlantedConfig cfg = planted_config_from_json(j.contains("planted") ? j.at("planted") : j);
    if (opt.seed) cfg.seed = *opt.seed;

    const PlantedDataset dataset = generate_planted_dataset(cfg);
    save_em_records_jsonl(dataset.records, opt.out_path);

    Json truth{{"theta_true", dataset.theta_true},
               {"answers", dataset.true_answers},
               {"difficulties", dataset.true_difficulties},
               {"gammas", dataset.true_gammas},
               {"seed", cfg.seed}};
    const std::string truth_path = opt.out_path + ".truth.json";
    write_text_file(truth_path, truth.dump(2) + "\n");

    out << "wrote " << dataset.records.size() << " records to " << opt.out_path << "\n";
    out << "ground truth in " << truth_path << "\n";
    return 0;
  });
}

int cmd_regimes(const RegimesOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() {
    RegimeStudyConfig cfg = regime_config_from_json(load_json_file(opt.config_path));
    if (opt.seed) cfg.seed = *opt.seed;

    const std::vector<RegimeResult> results = adversarial_regime_study(cfg);
    for (const auto& r : results) {
      out << r.name << ": difficulty " << r.difficulty << ", theta " << r.theta << ", accuracy "
          << r.accuracy_pct << "% over " << r.episodes << " episodes (avg " << r.avg_ballots
          << " ballots)\n";
    }
    if (opt.out_path) {
      write_text_file(*opt.out_path, regime_results_to_json(results).dump(2) + "\n");
      out << "wrote " << *opt.out_path << "\n";
    }
    return 0;
  });
}

int cmd_replay_sat(const ReplaySatOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() {
    const std::string path =
        opt.ballots_path.value_or(std::string(LS_BUNDLED_DATA_DIR) + "/sat_trace.jsonl");

    // The bundled trace is replayed under the default deployment settings:
    // strong wrong-answer penalty, unit ballot cost, depth-3 lookahead.
    DecideOptions decide;
    decide.ballots_path = path;
    decide.cw = -100.0;
    decide.depth = 3;
    const int rc = cmd_decide(decide, out, err);
    if (rc != 0) return rc;

    // Contrast with a 7-ballot plurality over the same stream.
    const std::vector<SourcedBallot> ballots = load_sourced_ballots_jsonl(path);
    std::map<AnswerId, int> counts;
    for (std::size_t j = 0; j < ballots.size() && j < 7; ++j) counts[ballots[j].answer] += 1;
    AnswerId best;
    int best_count = -1;
    for (const auto& [answer, count] : counts) {
      if (count > best_count) { best_count = count; best = answer; }
    }
    out << "mv(7) over the first seven ballots: " << best << "\n";
    return 0;
  });
}

int run_cli(int argc, char** argv) {
  CLI::App app{"decision-theoretic control for open-answer crowdsourcing"};
  app.require_subcommand(1);

  SimulateOptions sim_opt;
  auto* sim = app.add_subcommand("simulate", "run a simulated experiment from a config file");
  sim->add_option("--config", sim_opt.config_path, "experiment config (JSON)")->required();
  sim->add_option("--out", sim_opt.out_dir, "output directory")->required();
  std::uint64_t sim_seed = 0;
  auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "override the config seed");
  sim->add_flag("--serial", sim_opt.serial, "use the serial reference harness");

  DecideOptions dec_opt;
  auto* dec = app.add_subcommand("decide", "run the controller over a ballot file");
  dec->add_option("--ballots", dec_opt.ballots_path, "ballot stream (JSONL)")->required();
  std::string dec_config;
  auto* dec_config_opt = dec->add_option("--config", dec_config, "task config (JSON)");
  int dec_depth = 0;
  auto* dec_depth_opt = dec->add_option("--depth", dec_depth, "lookahead depth");
  double dec_cw = 0.0;
  auto* dec_cw_opt = dec->add_option("--cw", dec_cw, "utility of a wrong submission");
  double dec_theta = 0.0;
  auto* dec_theta_opt = dec->add_option("--theta", dec_theta, "bandwagon parameter");
  int dec_grid = 0;
  auto* dec_grid_opt = dec->add_option("--grid", dec_grid, "difficulty buckets");
  dec->add_flag("--gamma-oracle", dec_opt.gamma_oracle, "use per-ballot gamma fields");
  std::string dec_trace;
  auto* dec_trace_opt = dec->add_option("--trace", dec_trace, "write step records (JSONL)");
  std::string dec_belief;
  auto* dec_belief_opt = dec->add_option("--belief", dec_belief, "write the final belief (JSON)");

  EmCliOptions em_opt;
  auto* em = app.add_subcommand("em", "estimate parameters from a labelling corpus");
  em->add_option("--data", em_opt.data_path, "records (JSONL)")->required();
  em->add_option("--out", em_opt.out_path, "output (JSON)")->required();
  double em_theta = 0.0;
  auto* em_theta_opt = em->add_option("--theta", em_theta, "initial theta");
  int em_iters = 0;
  auto* em_iters_opt = em->add_option("--max-iters", em_iters, "iteration cap");
  int em_grid = 0;
  auto* em_grid_opt = em->add_option("--grid", em_grid, "difficulty buckets");

  GenerateOptions gen_opt;
  auto* gen = app.add_subcommand("generate", "write a synthetic labelling corpus");
  gen->add_option("--config", gen_opt.config_path, "generator config (JSON)")->required();
  gen->add_option("--out", gen_opt.out_path, "dataset path (JSONL)")->required();
  std::uint64_t gen_seed = 0;
  auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "override the config seed");

  RegimesOptions reg_opt;
  auto* reg = app.add_subcommand("regimes", "accuracy under contrasting generative regimes");
  reg->add_option("--config", reg_opt.config_path, "regime config (JSON)")->required();
  std::string reg_out;
  auto* reg_out_opt = reg->add_option("--out", reg_out, "output (JSON)");
  std::uint64_t reg_seed = 0;
  auto* reg_seed_opt = reg->add_option("--seed", reg_seed, "override the config seed");

  ReplaySatOptions sat_opt;
  auto* sat = app.add_subcommand("replay-sat", "replay the bundled SAT question trace");
  std::string sat_path;
  auto* sat_path_opt = sat->add_option("--ballots", sat_path, "alternative ballot file");

  CLI11_PARSE(app, argc, argv);

  if (sim->parsed()) {
    if (sim_seed_opt->count()) sim_opt.seed = sim_seed;
    return cmd_simulate(sim_opt, std::cout, std::cerr);
  }
  if (dec->parsed()) {
    if (dec_config_opt->count()) dec_opt.config_path = dec_config;
    if (dec_depth_opt->count()) dec_opt.depth = dec_depth;
    if (dec_cw_opt->count()) dec_opt.cw = dec_cw;
    if (dec_theta_opt->count()) dec_opt.theta = dec_theta;
    if (dec_grid_opt->count()) dec_opt.grid_buckets = dec_grid;
    if (dec_trace_opt->count()) dec_opt.trace_path = dec_trace;
    if (dec_belief_opt->count()) dec_opt.belief_path = dec_belief;
    return cmd_decide(dec_opt, std::cout, std::cerr);
  }
  if (em->parsed()) {
    if (em_theta_opt->count()) em_opt.theta0 = em_theta;
    if (em_iters_opt->count()) em_opt.max_iterations = em_iters;
    if (em_grid_opt->count()) em_opt.grid_buckets = em_grid;
    return cmd_em(em_opt, std::cout, std::cerr);
  }
  if (gen->parsed()) {
    if (gen_seed_opt->count()) gen_opt.seed = gen_seed;
    return cmd_generate(gen_opt, std::cout, std::cerr);
  }
  if (reg->parsed()) {
    if (reg_out_opt->count()) reg_opt.out_path = reg_out;
    if (reg_seed_opt->count()) reg_opt.seed = reg_seed;
    return cmd_regimes(reg_opt, std::cout, std::cerr);
  }
  if (sat->parsed()) {
    if (sat_path_opt->count()) sat_opt.ballots_path = sat_path;
    return cmd_replay_sat(sat_opt, std::cout, std::cerr);
  }
  return 1;
}

}  // namespace lazysusan
