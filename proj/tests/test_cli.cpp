#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "lazysusan/cli.hpp"
#include "lazysusan/io.hpp"

using namespace lazysusan;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("ls_test_" + std::to_string(::getpid())) /
           std::to_string(counter()++);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("decide command") {
  TempDir tmp;
  const std::string ballots = tmp.file("ballots.jsonl");

  SUBCASE("unanimous stream submits that answer") {
    write_text_file(ballots,
                    "{\"worker_id\":\"w1\",\"answer\":\"42\"}\n"
                    "{\"worker_id\":\"w2\",\"answer\":\"42\"}\n"
                    "{\"worker_id\":\"w3\",\"answer\":\"42\"}\n"
                    "{\"worker_id\":\"w4\",\"answer\":\"42\"}\n"
                    "{\"worker_id\":\"w5\",\"answer\":\"42\"}\n"
                    "{\"worker_id\":\"w6\",\"answer\":\"42\"}\n");
    DecideOptions opt;
    opt.ballots_path = ballots;
    opt.trace_path = tmp.file("trace.jsonl");
    opt.belief_path = tmp.file("belief.json");

    std::ostringstream out, err;
    CHECK(cmd_decide(opt, out, err) == 0);
    CHECK(out.str().find("submitted: 42") != std::string::npos);
    CHECK(err.str().empty());

    // Trace lines are one JSON object per step with the digest attached.
    const std::string trace = read_text_file(*opt.trace_path);
    CHECK(std::count(trace.begin(), trace.end(), '\n') >= 1);
    const Json first = Json::parse(trace.substr(0, trace.find('\n')));
    CHECK(first.at("step") == 1);
    CHECK(first.at("belief_digest").contains("map_answer"));

    const Json belief = Json::parse(read_text_file(*opt.belief_path));
    CHECK(belief.contains("hypotheses"));
    CHECK(belief.at("hypotheses").back().at("answer") == "⊥");
  }

  SUBCASE("missing file fails with a message") {
    DecideOptions opt;
    opt.ballots_path = tmp.file("nope.jsonl");
    std::ostringstream out, err;
    CHECK(cmd_decide(opt, out, err) == 1);
    CHECK(err.str().find("nope.jsonl") != std::string::npos);
  }

  SUBCASE("malformed line is reported with its number") {
    write_text_file(ballots, "{\"worker_id\":\"w1\",\"answer\":\"42\"}\nnot json\n");
    DecideOptions opt;
    opt.ballots_path = ballots;
    std::ostringstream out, err;
    CHECK(cmd_decide(opt, out, err) == 1);
    CHECK(err.str().find(":2") != std::string::npos);
  }

  SUBCASE("empty file fails") {
    write_text_file(ballots, "");
    DecideOptions opt;
    opt.ballots_path = ballots;
    std::ostringstream out, err;
    CHECK(cmd_decide(opt, out, err) == 1);
    CHECK(err.str().find("no ballots") != std::string::npos);
  }
}

TEST_CASE("generate then estimate roundtrip") {
  TempDir tmp;
  const std::string config = tmp.file("planted.json");
  write_text_file(config,
                  "{\"n_tasks\": 20, \"n_workers\": 8, \"ballots_per_task\": 5,"
                  " \"theta_true\": 0.5, \"seed\": 11}\n");

  GenerateOptions gen;
  gen.config_path = config;
  gen.out_path = tmp.file("data.jsonl");
  std::ostringstream out, err;
  REQUIRE(cmd_generate(gen, out, err) == 0);
  CHECK(fs::exists(tmp.file("data.jsonl")));
  CHECK(fs::exists(tmp.file("data.jsonl.truth.json")));

  EmCliOptions em;
  em.data_path = gen.out_path;
  em.out_path = tmp.file("em.json");
  em.max_iterations = 15;
  std::ostringstream out2, err2;
  REQUIRE(cmd_em(em, out2, err2) == 0);

  const Json result = Json::parse(read_text_file(em.out_path));
  CHECK(result.at("tasks").size() == 20);
  CHECK(result.at("workers").size() == 8);
  REQUIRE(result.at("log_likelihood_trace").size() >= 2);
  const auto& trace = result.at("log_likelihood_trace");
  CHECK(trace.back().get<double>() >= trace.front().get<double>() - 1e-6);

  // Every inferred answer is one of that task's observed answers.
  const Json truth = Json::parse(read_text_file(gen.out_path + ".truth.json"));
  for (const auto& task : result.at("tasks")) {
    CHECK(task.at("posterior").contains(task.at("inferred").get<std::string>()));
  }
  CHECK(truth.at("theta_true").get<double>() == 0.5);
}

TEST_CASE("simulate command writes a deterministic report bundle") {
  TempDir tmp;
  const std::string config = tmp.file("exp.json");
  write_text_file(config, R"({
    "task": {"max_ballots": 10},
    "difficulty_settings": [0.2, 0.6],
    "repetitions": 3,
    "cw_values": [-30.0],
    "gamma_ranges": [[0.0, 1.0]],
    "agents": [{"kind": "lazysusan", "param": 2}, {"kind": "mv", "param": 7}],
    "seed": 77
  })");

  SimulateOptions opt;
  opt.config_path = config;
  opt.out_dir = tmp.file("run1");
  std::ostringstream out, err;
  REQUIRE(cmd_simulate(opt, out, err) == 0);
  CHECK(err.str().empty());

  for (const char* name : {"report.csv", "summary.json", "seeds.json"})
    CHECK(fs::exists(fs::path(opt.out_dir) / name));

  const std::string csv = read_text_file(opt.out_dir + "/report.csv");
  CHECK(csv.find("lazysusan(2)") != std::string::npos);
  CHECK(csv.find("mv(7)") != std::string::npos);
  CHECK(csv.find("all") != std::string::npos);

  SUBCASE("same seed, same bytes; serial harness matches too") {
    SimulateOptions again = opt;
    again.out_dir = tmp.file("run2");
    again.serial = true;
    std::ostringstream out2, err2;
    REQUIRE(cmd_simulate(again, out2, err2) == 0);
    CHECK(read_text_file(opt.out_dir + "/report.csv") ==
          read_text_file(again.out_dir + "/report.csv"));
    CHECK(read_text_file(opt.out_dir + "/summary.json") ==
          read_text_file(again.out_dir + "/summary.json"));
  }

  SUBCASE("seed override changes the outputs") {
    SimulateOptions other = opt;
    other.out_dir = tmp.file("run3");
    other.seed = 78;
    std::ostringstream out2, err2;
    REQUIRE(cmd_simulate(other, out2, err2) == 0);
    CHECK(read_text_file(opt.out_dir + "/report.csv") !=
          read_text_file(other.out_dir + "/report.csv"));
  }
}

TEST_CASE("config typos are rejected by name") {
  TempDir tmp;
  const std::string config = tmp.file("bad.json");
  write_text_file(config, "{\"difficulty_setings\": [0.2]}");

  SimulateOptions opt;
  opt.config_path = config;
  opt.out_dir = tmp.file("out");
  std::ostringstream out, err;
  CHECK(cmd_simulate(opt, out, err) == 1);
  CHECK(err.str().find("difficulty_setings") != std::string::npos);
}

TEST_CASE("bundled sat trace replays") {
  ReplaySatOptions opt;
  opt.ballots_path = std::string(LS_REPO_DIR) + "/data/sat_trace.jsonl";
  std::ostringstream out, err;
  REQUIRE(cmd_replay_sat(opt, out, err) == 0);
  CHECK(out.str().find("submitted: 215") != std::string::npos);
  CHECK(out.str().find("mv(7) over the first seven ballots: 43") != std::string::npos);
}

TEST_CASE("regimes command") {
  TempDir tmp;
  const std::string config = tmp.file("regimes.json");
  write_text_file(config, R"({
    "task": {"max_ballots": 20},
    "episodes": 10,
    "seed": 3
  })");

  RegimesOptions opt;
  opt.config_path = config;
  opt.out_path = tmp.file("regimes_out.json");
  std::ostringstream out, err;
  REQUIRE(cmd_regimes(opt, out, err) == 0);
  const Json j = Json::parse(read_text_file(*opt.out_path));
  CHECK(j.at("regimes").size() == 3);
}
