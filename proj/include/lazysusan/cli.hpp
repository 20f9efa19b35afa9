#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace lazysusan {

// Each command takes a parsed option struct and reports through streams, so
// tests drive them without a process boundary. Exit code 0 on success, 1 on
// any error (bad input, bad config, I/O failure); errors go to err.

struct SimulateOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;  // overrides the config's seed
  bool serial = false;                // use the reference harness
};
int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err);

struct DecideOptions {
  std::string ballots_path;
  std::optional<std::string> config_path;  // task section; flags below override it
  std::optional<int> depth;
  std::optional<double> cw;
  std::optional<double> theta;
  std::optional<int> grid_buckets;
  bool gamma_oracle = false;  // use per-ballot "gamma" fields when present
  std::optional<std::string> trace_path;   // step records as JSONL
  std::optional<std::string> belief_path;  // final belief as JSON
};
int cmd_decide(const DecideOptions& opt, std::ostream& out, std::ostream& err);

struct EmCliOptions {
  std::string data_path;
  std::string out_path;
  std::optional<double> theta0;
  std::optional<int> max_iterations;
  std::optional<int> grid_buckets;
};
int cmd_em(const EmCliOptions& opt, std::ostream& out, std::ostream& err);

struct GenerateOptions {
  std::string config_path;
  std::string out_path;  // dataset JSONL; ground truth lands in <out>.truth.json
  std::optional<std::uint64_t> seed;
};
int cmd_generate(const GenerateOptions& opt, std::ostream& out, std::ostream& err);

struct RegimesOptions {
  std::string config_path;
  std::optional<std::string> out_path;
  std::optional<std::uint64_t> seed;
};
int cmd_regimes(const RegimesOptions& opt, std::ostream& out, std::ostream& err);

struct ReplaySatOptions {
  std::optional<std::string> ballots_path;  // defaults to the bundled trace
};
int cmd_replay_sat(const ReplaySatOptions& opt, std::ostream& out, std::ostream& err);

// argv-level entry point used by the binary.
int run_cli(int argc, char** argv);

}  // namespace lazysusan
