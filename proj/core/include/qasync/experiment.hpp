#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qasync/bounds.hpp"
#include "qasync/delay_models.hpp"
#include "qasync/minibatch.hpp"
#include "qasync/optimizers.hpp"
#include "qasync/problems.hpp"

namespace qasync {

enum class MetricKind { grad_sq, suboptimality };

struct ProblemSpec {
  ProblemKind kind = ProblemKind::quadratic;
  int dimension = 1;
  double beta = 1.0;
  double G = 1.0;
  double D = 1.0;        // ball diameter for the Lipschitz problem
  double sigma = 0.0;
  double w1_scale = 1.0; // w1 = w1_scale * e_1 unless w1 is given
  std::optional<std::vector<double>> w1;
  std::optional<double> F;           // tuning constant, default f(w1) - f*
  std::optional<double> D_tuning;    // default ||w1 - w*|| (D for Lipschitz)
  std::optional<MetricKind> metric;  // default by problem kind
};

struct DelaySpec {
  std::string model = "zero";  // zero | constant | staircase | half_outlier | one_fast_machine
                               // | workers | file | inline
  Delay tau = 0;
  Delay tau_max = 1;
  Round n = 1;
  int machines = 1;
  double base_rate = 4.06;
  double fast_probability = 0.92;
  double slow_multiplier = 150.0;
  std::string path;
  std::vector<Delay> values;
};

enum class MethodType { vanilla_async_sgd, algorithm1, algorithm2 };

struct MethodSpec {
  std::string id;
  MethodType type = MethodType::vanilla_async_sgd;
  double eta = 0.1;                        // vanilla
  InnerMethod inner = InnerMethod::sgd_nonconvex;  // algorithm1
  double q = 1.0;
  std::optional<Delay> tau_hat_q;          // empty: realized q-quantile
  std::vector<std::int64_t> batches;       // empty: B = max{1, tau_hat}
  Strictness strictness = Strictness::exact;
  RateSetting setting = RateSetting::nonconvex_sgd;  // algorithm2
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::optional<Round> T;  // required unless the delay model fixes it
  std::vector<std::uint64_t> seeds;
  std::uint64_t base_seed = 0;
  int threads = 0;         // 0: hardware concurrency
  bool record_rounds = false;
  ProblemSpec problem;
  DelaySpec delays;
  std::vector<MethodSpec> methods;
};

// Throws ConfigurationError on malformed input. ASYNC_OPT_SEED, when set,
// replaces base_seed.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

struct CellResult {
  std::uint64_t seed;
  std::string method;  // id, with [B=..] for batch sweeps
  std::string method_id;
  std::optional<std::int64_t> batch;
  Round T = 0;
  std::optional<double> final_metric;
  std::int64_t used = 0;
  std::int64_t discarded = 0;
  double tau_avg = 0.0;
  Delay tau_med = 0;
  Delay tau_max = 0;
  std::optional<double> bound_value;
  std::string status = "ok";  // ok | incomplete | schedule_error | error
  std::string error;
  std::string rounds_csv;     // filled when record_rounds is set
};

struct MethodSummary {
  std::string method;
  std::string method_id;
  std::optional<std::int64_t> batch;
  int runs = 0;
  int failures = 0;
  double mean = 0.0;
  double stddev = 0.0;
  std::optional<double> bound_value;
};

struct ExperimentReport {
  std::string name;
  std::vector<CellResult> cells;        // method-major, seeds in config order
  std::vector<MethodSummary> summaries; // one per method label
  bool all_ok() const;
};

// Runs every (method, batch, seed) cell on a worker pool. Results do not
// depend on the number of threads.
ExperimentReport run_experiment(const ExperimentConfig& config);

// metrics.csv, summary.json, bsweep.csv (when any method sweeps B) and
// rounds_<label>_s<seed>.csv (when recorded) under dir.
void write_artifacts(const ExperimentReport& report, const std::string& dir);

// Columns seed, method, T, final_metric, used, discarded, tau_avg, tau_med,
// tau_max, bound_value.
std::string metrics_csv(const ExperimentReport& report);
std::string summary_json(const ExperimentReport& report);
// Rows per algorithm1 method with a batch list, one column per B.
std::string batch_sweep_csv(const ExperimentReport& report);

}  // namespace qasync
