#include <cstdio>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "qasync/bounds.hpp"
#include "qasync/delay_models.hpp"
#include "qasync/errors.hpp"
#include "qasync/experiment.hpp"
#include "qasync/serialization.hpp"
#include "qasync/verification.hpp"

using nlohmann::json;

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir, int threads) {
  qasync::ExperimentConfig cfg;
  try {
    cfg = qasync::load_config(config_path);
  } catch (const qasync::ConfigurationError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  if (threads > 0) cfg.threads = threads;
  qasync::ExperimentReport report;
  try {
    report = qasync::run_experiment(cfg);
  } catch (const qasync::ConfigurationError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  qasync::write_artifacts(report, out_dir);
  for (const auto& s : report.summaries) {
    std::cout << std::left << std::setw(24) << s.method << " runs " << s.runs << "  mean "
              << s.mean << "  std " << s.stddev;
    if (s.bound_value) std::cout << "  bound " << *s.bound_value;
    if (s.failures) std::cout << "  failures " << s.failures;
    std::cout << '\n';
  }
  for (const auto& c : report.cells) {
    if (c.status == "ok") continue;
    std::cerr << c.status << ": " << c.method << " seed " << c.seed << ": " << c.error << '\n';
  }
  std::cout << "wrote " << out_dir << "/metrics.csv\n";
  return report.all_ok() ? 0 : 1;
}

int cmd_verify(const std::optional<std::string>& only, bool quick, std::uint64_t seed) {
  qasync::VerifyOptions opts;
  opts.only = only;
  opts.quick = quick;
  opts.seed = seed;
  bool all = true;
  try {
    qasync::run_verification(opts, [&](const qasync::CheckResult& r) {
      all = all && r.passed;
      std::cout << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(18) << r.name << ' '
                << std::fixed << std::setprecision(2) << std::setw(7) << r.seconds << "s  "
                << std::defaultfloat << r.claim << "\n       " << r.detail << std::endl;
    });
  } catch (const qasync::ConfigurationError& e) {
    std::cerr << e.what() << "\nchecks:";
    for (const auto& n : qasync::check_names()) std::cerr << ' ' << n;
    std::cerr << '\n';
    return 2;
  }
  return all ? 0 : 1;
}

int cmd_stats(const std::string& path, bool quantiles) {
  const qasync::DelaySequence seq = qasync::load_delays(path);
  const qasync::DelayStats st = qasync::compute_stats(seq);
  json j = json::parse(qasync::stats_to_json(st));
  if (quantiles) {
    json pts = json::array();
    for (const auto& p : st.quantile_points())
      pts.push_back({{"q", p.q}, {"tau_q", p.tau}, {"count_le", p.count_le}});
    j["quantiles"] = pts;
  }
  if (auto m = qasync::minimal_machine_count(seq)) j["machines_needed"] = *m;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_lowerbound(qasync::Round T, qasync::Delay tau_max, double beta, double eta, double w1) {
  const qasync::LowerBoundCase c = qasync::lower_bound_construction(T, tau_max, beta, w1, eta);
  const qasync::LowerBoundReport r = qasync::verify_lower_bound(c);
  json j;
  j["construction"] = c.kind == qasync::LowerBoundKind::max_delay ? "max_delay" : "small_stepsize";
  j["T"] = T;
  j["tau_max"] = tau_max;
  j["beta"] = beta;
  j["eta"] = eta;
  j["w1"] = w1;
  j["w_star"] = c.w_star;
  j["initial_gap"] = c.initial_gap;
  j["avg_delay"] = qasync::compute_stats(c.delays).tau_avg();
  j["predicted"] = {{"avg_sq_grad", c.avg_sq_grad_bound}, {"avg_subopt", c.avg_subopt_bound}};
  j["simulated"] = {{"avg_sq_grad", r.avg_sq_grad}, {"avg_subopt", r.avg_subopt}};
  j["required"] = {{"avg_sq_grad", r.sq_grad_required}, {"avg_subopt", r.subopt_required}};
  if (c.kind == qasync::LowerBoundKind::max_delay)
    j["trajectory_max_rel_error"] = r.trajectory_max_rel_error;
  else
    j["sandwich_holds"] = r.sandwich_holds;
  j["passed"] = r.passed;
  std::cout << j.dump(2) << '\n';
  return r.passed ? 0 : 1;
}

struct GenArgs {
  std::string model;
  qasync::Round T = 100;
  qasync::Delay tau = 0;
  qasync::Delay tau_max = 1;
  qasync::Round n = 10;
  int machines = 4;
  double base_rate = 4.06;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gen(const GenArgs& a) {
  qasync::DelaySequence seq = [&]() {
    if (a.model == "zero") return qasync::constant_delay(a.T, 0);
    if (a.model == "constant") return qasync::constant_delay(a.T, a.tau);
    if (a.model == "staircase") return qasync::staircase_adversarial(a.T, a.tau_max);
    if (a.model == "half_outlier") return qasync::half_outlier(a.T);
    if (a.model == "one_fast_machine") return qasync::one_fast_machine(a.n, a.machines);
    if (a.model == "workers") {
      qasync::WorkerSchedule s;
      s.workers = a.machines;
      s.base_rate = a.base_rate;
      s.seed = a.seed;
      return qasync::simulate_workers(a.T, s);
    }
    throw qasync::ConfigurationError("unknown delay model '" + a.model + "'");
  }();
  if (a.out.empty() || a.out == "-")
    qasync::write_delays_csv(std::cout, seq);
  else
    qasync::save_delays(a.out, seq);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asynchronous stochastic optimization under arbitrary delays"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "results";
  int threads = 0;
  auto* run = app.add_subcommand("run", "Run an experiment matrix from a JSON config");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("-o,--out", out_dir, "Output directory");
  run->add_option("-j,--threads", threads, "Worker threads (0: all cores)");

  std::optional<std::string> only;
  bool quick = false;
  std::uint64_t verify_seed = qasync::VerifyOptions{}.seed;
  auto* verify = app.add_subcommand("verify", "Run the property battery");
  verify->add_option("--only", only, "Run a single check");
  verify->add_flag("--quick", quick, "Reduced repetitions");
  verify->add_option("--seed", verify_seed, "Seed for randomized checks");

  std::string stats_path;
  bool show_quantiles = false;
  auto* stats = app.add_subcommand("stats", "Delay statistics of a sequence (CSV or JSON)");
  stats->add_option("delays", stats_path, "Delay file")->required();
  stats->add_flag("--quantiles", show_quantiles, "List every quantile change point");

  qasync::Round lb_T = 1000;
  qasync::Delay lb_tau = 100;
  double lb_beta = 1.0, lb_eta = 0.0, lb_w1 = 1.0;
  auto* lb = app.add_subcommand("lowerbound", "Build and check the fixed-stepsize lower bound");
  lb->add_option("--T", lb_T, "Horizon")->required();
  lb->add_option("--taumax", lb_tau, "Maximal delay")->required();
  lb->add_option("--beta", lb_beta, "Smoothness")->required();
  lb->add_option("--eta", lb_eta, "Stepsize")->required();
  lb->add_option("--w1", lb_w1, "Initial point");

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen-delays", "Generate a delay sequence");
  gen->add_option("model", gen_args.model,
                  "zero | constant | staircase | half_outlier | one_fast_machine | workers")
      ->required();
  gen->add_option("--T", gen_args.T, "Horizon");
  gen->add_option("--tau", gen_args.tau, "Constant delay");
  gen->add_option("--taumax", gen_args.tau_max, "Staircase maximal delay");
  gen->add_option("--n", gen_args.n, "Fast-machine rounds");
  gen->add_option("--machines", gen_args.machines, "Number of machines");
  gen->add_option("--rate", gen_args.base_rate, "Poisson rate of the fast phase");
  gen->add_option("--seed", gen_args.seed, "Seed");
  gen->add_option("-o,--out", gen_args.out, "Output file (.csv or .json, '-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(config_path, out_dir, threads);
    if (*verify) return cmd_verify(only, quick, verify_seed);
    if (*stats) return cmd_stats(stats_path, show_quantiles);
    if (*lb) return cmd_lowerbound(lb_T, lb_tau, lb_beta, lb_eta, lb_w1);
    if (*gen) return cmd_gen(gen_args);
  } catch (const qasync::ConfigurationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
