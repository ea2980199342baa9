#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "qasync/errors.hpp"
#include "qasync/experiment.hpp"
#include "qasync/serialization.hpp"

using namespace qasync;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({
  "name": "minimal",
  "T": 200,
  "seeds": [1],
  "problem": {"kind": "quadratic", "dimension": 2, "beta": 1.0, "sigma": 0.5},
  "delays": {"model": "constant", "tau": 3},
  "methods": [{"id": "mb", "type": "algorithm1", "inner": "sgd_convex_smooth", "q": 1.0}]
})";

const char* kMatrix = R"({
  "name": "matrix",
  "T": 512,
  "seeds": 4,
  "base_seed": 11,
  "problem": {"kind": "nonconvex_smooth", "dimension": 3, "beta": 1.0, "sigma": 1.0},
  "delays": {"model": "workers", "machines": 4},
  "methods": [
    {"id": "vanilla", "type": "vanilla_async_sgd", "eta": 0.05},
    {"id": "mb", "type": "algorithm1", "inner": "sgd_nonconvex", "q": 0.5, "tau_hat_q": "auto"},
    {"id": "sweep", "type": "algorithm2", "setting": "nonconvex_sgd"}
  ]
})";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qasync_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int line_count(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST(Serialization, CsvRoundTrip) {
  const DelaySequence d = staircase_adversarial(50, 7);
  std::stringstream ss;
  write_delays_csv(ss, d);
  EXPECT_EQ(ss.str().substr(0, 4), "d_t\n");
  EXPECT_EQ(read_delays_csv(ss), d);
}

TEST(Serialization, JsonRoundTrip) {
  const DelaySequence d = half_outlier(64);
  EXPECT_EQ(delays_from_json(delays_to_json(d)), d);
  EXPECT_THROW(delays_from_json("[0, 5]"), ProtocolError);
  EXPECT_THROW(delays_from_json("{\"a\": 1}"), ConfigurationError);
}

TEST(Serialization, FilesByExtensionAndContent) {
  const fs::path dir = scratch("files");
  const DelaySequence d = constant_delay(30, 4);
  save_delays((dir / "d.json").string(), d);
  save_delays((dir / "d.csv").string(), d);
  EXPECT_EQ(slurp(dir / "d.json").front(), '[');
  EXPECT_EQ(load_delays((dir / "d.json").string()), d);
  EXPECT_EQ(load_delays((dir / "d.csv").string()), d);
  EXPECT_THROW(load_delays((dir / "missing.csv").string()), ConfigurationError);
}

TEST(Serialization, StatsRecord) {
  const auto j = nlohmann::json::parse(stats_to_json(compute_stats(DelaySequence({0, 0, 0, 3, 4}))));
  EXPECT_EQ(j.at("T"), 5);
  EXPECT_DOUBLE_EQ(j.at("tau_avg").get<double>(), 1.4);
  EXPECT_EQ(j.at("tau_med"), 0);
  EXPECT_EQ(j.at("tau_max"), 4);
  const auto b = nlohmann::json::parse(bound_report_to_json(
      base_rate(RateSetting::nonconvex_sgd, RateConstants{1.0, 1.0, 0.0, 0.0, 0.0}, 4)));
  EXPECT_DOUBLE_EQ(b.at("value").get<double>(), 0.5);
  const auto g = nlohmann::json::parse(diagnostics_to_json(MiniBatchDiagnostics{10, 7, 21, 5, 3, false}));
  EXPECT_EQ(g.at("K_target"), 10);
  EXPECT_EQ(g.at("K_dispatched"), 7);
  EXPECT_EQ(g.at("used"), 21);
  EXPECT_EQ(g.at("discarded"), 5);
}

TEST(Config, MinimalRunGivesOneRow) {
  const ExperimentReport r = run_experiment(parse_config(kMinimal));
  ASSERT_EQ(r.cells.size(), 1u);
  EXPECT_EQ(r.cells[0].status, "ok");
  EXPECT_EQ(r.cells[0].used + r.cells[0].discarded <= 200, true);
  EXPECT_TRUE(r.cells[0].bound_value.has_value());
  const std::string csv = metrics_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "seed,method,T,final_metric,used,discarded,tau_avg,tau_med,tau_max,bound_value");
  EXPECT_EQ(line_count(csv), 2);
}

TEST(Config, IdenticalRunsIdenticalMetrics) {
  const ExperimentConfig c = parse_config(kMatrix);
  EXPECT_EQ(metrics_csv(run_experiment(c)), metrics_csv(run_experiment(c)));
}

TEST(Config, ThreadCountDoesNotMatter) {
  ExperimentConfig c = parse_config(kMatrix);
  c.threads = 1;
  const std::string one = metrics_csv(run_experiment(c));
  c.threads = 3;
  EXPECT_EQ(metrics_csv(run_experiment(c)), one);
  EXPECT_EQ(line_count(one), 1 + 3 * 4);
}

TEST(Config, BatchSweepTable) {
  const ExperimentConfig c = parse_config(R"({
    "T": 1000, "seeds": 3,
    "problem": {"kind": "quadratic", "dimension": 2, "sigma": 1.0},
    "delays": {"model": "constant", "tau": 4},
    "methods": [{"id": "bs", "type": "algorithm1", "inner": "sgd_convex_smooth",
                 "tau_hat_q": 4, "B": [1, 2, 4, 8, 16, 32]}]
  })");
  const ExperimentReport r = run_experiment(c);
  EXPECT_EQ(r.cells.size(), 18u);
  EXPECT_EQ(r.summaries.size(), 6u);
  const std::string table = batch_sweep_csv(r);
  const std::string header = table.substr(0, table.find('\n'));
  EXPECT_EQ(header, "method,stat,B=1,B=2,B=4,B=8,B=16,B=32");
  EXPECT_GE(line_count(table), 2);
}

TEST(Config, ScheduleErrorIsPerCell) {
  const ExperimentConfig c = parse_config(R"({
    "T": 10, "seeds": 2,
    "problem": {"kind": "quadratic"},
    "delays": {"model": "zero"},
    "methods": [
      {"id": "bad", "type": "algorithm1", "q": 0.1, "tau_hat_q": 4},
      {"id": "good", "type": "vanilla_async_sgd", "eta": 0.1}
    ]
  })");
  const ExperimentReport r = run_experiment(c);
  ASSERT_EQ(r.cells.size(), 4u);
  EXPECT_EQ(r.cells[0].status, "schedule_error");
  EXPECT_FALSE(r.cells[0].error.empty());
  EXPECT_EQ(r.cells[2].status, "ok");
  EXPECT_FALSE(r.all_ok());
}

TEST(Config, MalformedInputs) {
  EXPECT_THROW(parse_config("{not json"), ConfigurationError);
  EXPECT_THROW(parse_config(R"({"seeds": 1, "problem": {"kind": "quadratic"}})"), ConfigurationError);
  EXPECT_THROW(parse_config(R"({"T": 10, "seeds": 1, "problem": {"kind": "quadratic"},
                                "methods": [{"type": "vanilla"}], "extra": 1})"),
               ConfigurationError);
  EXPECT_THROW(parse_config(R"({"T": 10, "seeds": 1, "problem": {"kind": "cubic"},
                                "methods": [{"type": "vanilla"}]})"),
               ConfigurationError);
  EXPECT_THROW(parse_config(R"({"T": 10, "seeds": 1, "problem": {"kind": "quadratic"},
                                "delays": {"model": "inline", "values": [0, 3]},
                                "methods": [{"type": "vanilla"}]})"),
               ConfigurationError);
  EXPECT_THROW(parse_config(R"({"T": 10, "seeds": 1, "problem": {"kind": "quadratic"},
                                "methods": [{"type": "algorithm1", "tau_hat_q": "median"}]})"),
               ConfigurationError);
}

TEST(Config, SeedOverrideFromEnvironment) {
  ::setenv("ASYNC_OPT_SEED", "987", 1);
  const ExperimentConfig c = parse_config(kMatrix);
  ::unsetenv("ASYNC_OPT_SEED");
  EXPECT_EQ(c.base_seed, 987u);
  EXPECT_EQ(parse_config(kMatrix).base_seed, 11u);
}

TEST(Artifacts, WritesFiles) {
  ExperimentConfig c = parse_config(kMinimal);
  c.record_rounds = true;
  const fs::path dir = scratch("artifacts");
  write_artifacts(run_experiment(c), dir.string());
  EXPECT_TRUE(fs::exists(dir / "metrics.csv"));
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(summary.at("name"), "minimal");
  bool rounds = false;
  for (const auto& e : fs::directory_iterator(dir))
    rounds = rounds || e.path().filename().string().rfind("rounds_", 0) == 0;
  EXPECT_TRUE(rounds);
}

#ifdef QASYNC_CLI_PATH
namespace {

int cli(const std::string& args) {
  const std::string cmd = std::string("\"") + QASYNC_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  std::ofstream(dir / "ok.json") << kMinimal;
  std::ofstream(dir / "bad.json") << "{\"seeds\": 1";
  std::ofstream(dir / "sched.json") << R"({"T": 10, "seeds": 1, "problem": {"kind": "quadratic"},
      "methods": [{"type": "algorithm1", "q": 0.1, "tau_hat_q": 4}]})";
  EXPECT_EQ(cli("run " + (dir / "ok.json").string() + " -o " + (dir / "out").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "metrics.csv"));
  EXPECT_EQ(cli("run " + (dir / "bad.json").string() + " -o " + (dir / "out2").string()), 2);
  EXPECT_EQ(cli("run " + (dir / "sched.json").string() + " -o " + (dir / "out3").string()), 1);
  EXPECT_EQ(cli("frobnicate"), 2);
  EXPECT_EQ(cli("--help"), 0);
  EXPECT_EQ(cli("lowerbound --T 200 --taumax 20 --beta 1 --eta 0.5"), 0);
  EXPECT_EQ(cli("gen-delays staircase --T 20 --taumax 4 -o " + (dir / "s.csv").string()), 0);
  EXPECT_EQ(cli("stats " + (dir / "s.csv").string()), 0);
  EXPECT_EQ(cli("verify --only nope"), 2);
}
#endif
