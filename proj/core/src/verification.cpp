#include "qasync/verification.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <sstream>

#include "qasync/async_engine.hpp"
#include "qasync/bounds.hpp"
#include "qasync/errors.hpp"
#include "qasync/minibatch.hpp"
#include "qasync/optimizers.hpp"
#include "qasync/problems.hpp"
#include "qasync/sweep.hpp"

namespace qasync {

DelaySequence random_delay_sequence(std::mt19937_64& rng, Round T) {
  std::uniform_int_distribution<int> shape(0, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Delay> d(static_cast<std::size_t>(T), 0);
  const int kind = shape(rng);
  if (kind == 4 && T >= 2) {
    WorkerSchedule s;
    s.workers = std::uniform_int_distribution<int>(1, 12)(rng);
    s.seed = rng();
    return simulate_workers(T, s);
  }
  const Delay cap = std::uniform_int_distribution<Delay>(0, std::max<Round>(0, T - 1))(rng);
  const double p = unit(rng);
  for (Round t = 1; t <= T; ++t) {
    const Delay hi = std::min<Delay>(t - 1, cap);
    Delay v = 0;
    switch (kind) {
      case 0:  // uniform up to a cap
        v = std::uniform_int_distribution<Delay>(0, hi)(rng);
        break;
      case 1:  // sparse outliers reaching back to the start
        v = unit(rng) < p ? std::uniform_int_distribution<Delay>(0, t - 1)(rng) : 0;
        break;
      case 2:  // bursts of large delay
        v = (t / std::max<Delay>(1, cap / 4 + 1)) % 2 == 0 ? hi : 0;
        break;
      default:  // constant
        v = hi;
        break;
    }
    d[static_cast<std::size_t>(t - 1)] = v;
  }
  return DelaySequence(std::move(d));
}

namespace {

using Clock = std::chrono::steady_clock;

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

struct Check {
  const char* name;
  const char* claim;
  bool (*run)(const VerifyOptions&, std::string&);
};

int reps(const VerifyOptions& o, int full) { return o.quick ? std::max(1, full / 10) : full; }

// Drives mini-batching around a never-finishing probe; the only question is
// how many batches the filter lets through.
RoundLog probe_run(const DelaySequence& delays, std::int64_t B, AcceptanceFilter filter) {
  Problem problem = make_quadratic(1, 1.0);
  GradientOracle oracle(problem, 0.0, 0);
  const Round T = delays.horizon();
  auto probe = std::make_unique<FixedPointProbe>(Vector::Ones(1), static_cast<int>(T + 1));
  AsyncMiniBatch wrapper(std::move(probe), B, std::move(filter));
  return run(wrapper, oracle, delays).log;
}

bool check_lemma1(const VerifyOptions& o, std::string& detail) {
  std::mt19937_64 rng(o.seed);
  int failures = 0;
  const int n = reps(o, 500);
  for (int i = 0; i < n; ++i) {
    const Round T = std::uniform_int_distribution<Round>(1, 512)(rng);
    const std::int64_t B = std::uniform_int_distribution<std::int64_t>(1, 16)(rng);
    const DelaySequence delays = random_delay_sequence(rng, T);
    const RoundLog log = probe_run(delays, B, make_filter(Strictness::exact));
    if (!verify_lemma_updates(log, delays, B).passed) ++failures;
  }
  detail = std::to_string(n) + " sequences, " + std::to_string(failures) + " failures";
  return failures == 0;
}

bool check_mutation(const VerifyOptions& o, std::string& detail) {
  // Off-by-two filter; the counting verifier has to notice.
  AcceptanceFilter broken = [](const FilterContext& c) {
    return c.query_start_rounds[static_cast<std::size_t>(c.query_index - 1)] <
           c.round - c.delay - 1;
  };
  std::mt19937_64 rng(o.seed ^ 0x5eed);
  int detected = 0;
  const int n = reps(o, 200);
  for (int i = 0; i < n; ++i) {
    const Round T = std::uniform_int_distribution<Round>(1, 512)(rng);
    const std::int64_t B = std::uniform_int_distribution<std::int64_t>(1, 16)(rng);
    const DelaySequence delays = random_delay_sequence(rng, T);
    if (!verify_lemma_updates(probe_run(delays, B, broken), delays, B).passed) ++detected;
  }
  detail = "corrupted filter caught on " + std::to_string(detected) + "/" + std::to_string(n) +
           " sequences";
  return detected > 0;
}

Problem problem_for(RateSetting s) {
  if (s == RateSetting::psgd_convex_lipschitz) return make_convex_lipschitz(2, 1.0, 2.0);
  if (s == RateSetting::nonconvex_sgd) return make_nonconvex_smooth(2, 1.0);
  return make_quadratic(2, 1.0);
}

bool check_lemma2(const VerifyOptions& o, std::string& detail) {
  std::mt19937_64 rng(o.seed + 2);
  std::uniform_real_distribution<double> sig(0.0, 3.0), pos(0.5, 2.0);
  int failures = 0, applicable = 0, total = 0;
  double tightest = 0.0;
  const int n = reps(o, 200);
  for (int i = 0; i < n; ++i) {
    const Round T = std::uniform_int_distribution<Round>(2, 512)(rng);
    const DelaySequence delays = random_delay_sequence(rng, T);
    for (auto setting : {RateSetting::nonconvex_sgd, RateSetting::acsa_convex_smooth,
                         RateSetting::sgd_convex_smooth, RateSetting::psgd_convex_lipschitz}) {
      RateConstants c{pos(rng), pos(rng), pos(rng), pos(rng), sig(rng)};
      Problem problem = problem_for(setting);
      if (setting == RateSetting::psgd_convex_lipschitz) c.D = 2.0;
      const SweepSchedule schedule(setting, c);
      GradientOracle oracle(problem, c.sigma, rng());
      Vector w1 = Vector::Zero(2);
      w1[0] = 0.5;
      const SweepResult r = run_algorithm2(schedule, problem, oracle, delays, w1, rng());
      const SweepLemmaReport rep = verify_lemma_sweep(r, delays, schedule);
      ++total;
      if (!rep.applicable) continue;
      ++applicable;
      tightest = std::max(tightest, rep.tightest_ratio);
      if (!rep.passed) ++failures;
    }
  }
  detail = std::to_string(applicable) + "/" + std::to_string(total) +
           " runs with a completed epoch, " + std::to_string(failures) +
           " failures, tightest ratio " + num(tightest);
  return failures == 0 && applicable > 0;
}

bool check_lowerbound(const VerifyOptions&, std::string& detail) {
  const double beta = 1.0, w1 = 1.0;
  const LowerBoundCase c = lower_bound_construction(1000, 100, beta, w1, 6.1 / (beta * 101.0));
  const LowerBoundReport r = verify_lower_bound(c);
  const LowerBoundCase odd = lower_bound_construction(1000, 101, beta, w1, 6.1 / (beta * 102.0));
  const LowerBoundReport ro = verify_lower_bound(odd);
  detail = "trajectory rel err " + num(r.trajectory_max_rel_error) + ", avg ||grad||^2 " +
           num(r.avg_sq_grad) + " >= " + num(r.sq_grad_required) + "; odd tau_max " +
           (ro.passed ? "ok" : "FAILED");
  return c.kind == LowerBoundKind::max_delay && r.passed && ro.passed;
}

bool check_smallstep(const VerifyOptions&, std::string& detail) {
  bool ok = true;
  std::ostringstream os;
  for (double eta : {1e-4, 1e-2}) {
    const LowerBoundCase c = lower_bound_small_stepsize(1000, 1.0, eta, 1.0);
    const LowerBoundReport r = verify_lower_bound(c);
    ok = ok && r.passed;
    os << "eta=" << eta << ": sandwich " << (r.sandwich_holds ? "ok" : "broken") << ", subopt "
       << num(r.avg_subopt) << " >= " << num(r.subopt_required) << "; ";
  }
  detail = os.str();
  return ok;
}

bool check_machines(const VerifyOptions& o, std::string& detail) {
  std::mt19937_64 rng(o.seed + 5);
  int failures = 0;
  double worst = 0.0;
  const int n = reps(o, 100);
  for (int i = 0; i < n; ++i) {
    WorkerSchedule s;
    s.workers = std::uniform_int_distribution<int>(2, 16)(rng);
    s.seed = rng();
    const Round T = std::uniform_int_distribution<Round>(200, 3000)(rng);
    const DelaySequence seq = simulate_workers(T, s);
    const MachineBoundReport r = machine_bound_check(seq);
    const auto witness = minimal_machine_count(seq);
    if (!r.applicable || !r.passed || !witness || *witness > s.workers) ++failures;
    worst = std::max(worst, r.average_delay / r.bound);
  }
  detail = std::to_string(n) + " schedules, " + std::to_string(failures) +
           " failures, max avg/(M-1) " + num(worst);
  return failures == 0;
}

bool check_quantiles(const VerifyOptions& o, std::string& detail) {
  std::mt19937_64 rng(o.seed + 6);
  int failures = 0;
  const int n = reps(o, 500);
  for (int i = 0; i < n; ++i) {
    const Round T = std::uniform_int_distribution<Round>(1, 1000)(rng);
    const DelayStats st = compute_stats(random_delay_sequence(rng, T));
    if (st.tau_avg() > 0 && static_cast<double>(st.tau_med()) > 2.0 * st.tau_avg()) ++failures;
    Delay prev = 0;
    for (int j = 1; j <= 100; ++j) {
      const Delay v = st.quantile(j / 100.0);
      if (v < prev) {
        ++failures;
        break;
      }
      prev = v;
    }
    if (st.quantile(1.0) != st.tau_max()) ++failures;
  }
  detail = std::to_string(n) + " sequences, " + std::to_string(failures) + " failures";
  return failures == 0;
}

struct BaseCase {
  RateSetting setting;
  const char* label;
};

bool check_base_rates(const VerifyOptions& o, std::string& detail) {
  const double sigma = 1.0;
  const int seeds = reps(o, 400);
  std::ostringstream os;
  bool ok = true;
  for (BaseCase bc : {BaseCase{RateSetting::nonconvex_sgd, "rsgd"},
                      BaseCase{RateSetting::sgd_convex_smooth, "sgd"},
                      BaseCase{RateSetting::psgd_convex_lipschitz, "psgd"},
                      BaseCase{RateSetting::acsa_convex_smooth, "acsa"}}) {
    for (int K : {16, 64, 256}) {
      const int d = 4;
      Problem problem = bc.setting == RateSetting::nonconvex_sgd ? make_nonconvex_smooth(d, 1.0)
                        : bc.setting == RateSetting::psgd_convex_lipschitz
                            ? make_convex_lipschitz(d, 1.0, 1.0)
                            : make_quadratic(d, 1.0);
      Vector w1 = Vector::Zero(d);
      w1[0] = bc.setting == RateSetting::psgd_convex_lipschitz ? 0.5 : 1.0;
      if (bc.setting == RateSetting::nonconvex_sgd) w1 = Vector::Ones(d);
      RateConstants c;
      c.sigma = sigma;
      c.beta = 1.0;
      c.G = 1.0;
      c.F = problem.value(w1);
      c.D = bc.setting == RateSetting::psgd_convex_lipschitz ? 1.0 : w1.norm();
      const double bound = base_rate(bc.setting, c, K).value;
      double sum = 0.0;
      for (int s = 0; s < seeds; ++s) {
        const std::uint64_t seed = o.seed * 1000003ULL + static_cast<std::uint64_t>(s * 7919 + K);
        GradientOracle oracle(problem, sigma, seed);
        std::unique_ptr<QueryAlgorithm> algo;
        switch (bc.setting) {
          case RateSetting::nonconvex_sgd:
            algo = sgd_nonconvex(problem, w1, K, sigma, c.F, seed + 1);
            break;
          case RateSetting::sgd_convex_smooth:
            algo = sgd_convex_smooth(problem, w1, K, sigma, c.D, seed + 1);
            break;
          case RateSetting::psgd_convex_lipschitz:
            algo = psgd_convex_lipschitz(problem, w1, K, sigma, c.D, c.G);
            break;
          case RateSetting::acsa_convex_smooth:
            algo = acsa_accelerated(problem, w1, K, sigma, c.D);
            break;
        }
        const Vector w = run_synchronous(*algo, oracle).w_hat;
        sum += bc.setting == RateSetting::nonconvex_sgd ? problem.gradient(w).squaredNorm()
                                                        : problem.suboptimality(w);
      }
      const double mean = sum / seeds;
      const bool pass = mean <= 1.05 * bound;
      ok = ok && pass;
      os << bc.label << " K=" << K << " " << num(mean) << "/" << num(bound) << (pass ? "" : " FAIL")
         << "; ";
    }
  }
  detail = os.str();
  return ok;
}

struct MiniBatchCase {
  Problem problem = make_quadratic(8, 1.0);
  Vector w1 = Vector::Unit(8, 0);
  double sigma = 1.0;
  Round T = 4096;
  Delay tau = 8;
};

bool check_theorem_minibatch(const VerifyOptions& o, std::string& detail) {
  MiniBatchCase mc;
  const DelaySequence delays = constant_delay(mc.T, mc.tau);
  MiniBatchConfig cfg;
  cfg.q = 1.0;
  cfg.tau_hat_q = mc.tau;
  const MiniBatchSchedule sched = derive_schedule(mc.T, cfg, mc.sigma);
  RateConstants c;
  c.beta = 1.0;
  c.D = 1.0;
  c.sigma = sched.sigma_eff;
  const double bound = base_rate(RateSetting::acsa_convex_smooth, c, sched.K).value;
  const int seeds = reps(o, 200);
  double sum = 0.0;
  int incomplete = 0;
  for (int s = 0; s < seeds; ++s) {
    GradientOracle oracle(mc.problem, mc.sigma, o.seed + 100 + static_cast<std::uint64_t>(s));
    auto factory = [&](int K) -> std::unique_ptr<QueryAlgorithm> {
      return acsa_accelerated(mc.problem, mc.w1, K, sched.sigma_eff, 1.0);
    };
    const MiniBatchResult r = run_algorithm1(factory, cfg, oracle, delays);
    if (!r.diagnostics.completed) ++incomplete;
    sum += mc.problem.suboptimality(r.output);
  }
  const double mean = sum / seeds;
  detail = "K=" + std::to_string(sched.K) + " B=" + std::to_string(sched.B) + ", mean " +
           num(mean) + " <= 1.05 x " + num(bound) + ", incomplete " + std::to_string(incomplete);
  return incomplete == 0 && mean <= 1.05 * bound;
}

bool check_relaxed(const VerifyOptions& o, std::string& detail) {
  MiniBatchCase mc;
  const DelaySequence delays = constant_delay(mc.T, mc.tau);
  MiniBatchConfig cfg;
  cfg.tau_hat_q = mc.tau;
  cfg.strictness = Strictness::relaxed_k_minus_2;
  const MiniBatchSchedule sched = derive_schedule(mc.T, cfg, mc.sigma);
  int violations = 0;
  std::int64_t accepted = 0;
  const int seeds = reps(o, 200);
  for (int s = 0; s < seeds; ++s) {
    GradientOracle oracle(mc.problem, mc.sigma, o.seed + 300 + static_cast<std::uint64_t>(s));
    auto factory = [&](int K) -> std::unique_ptr<QueryAlgorithm> {
      return acsa_accelerated(mc.problem, mc.w1, K, sched.sigma_eff, 1.0);
    };
    const MiniBatchResult r = run_algorithm1(factory, cfg, oracle, delays);
    // Point ids count queries from 1, so they are the query indices.
    for (const RoundRecord& rec : r.log.rounds) {
      if (!rec.accepted) continue;
      ++accepted;
      if (rec.source_point_id + 2 < rec.played_point_id) ++violations;
    }
  }
  detail = std::to_string(accepted) + " accepted gradients, " + std::to_string(violations) +
           " older than k-2";
  return violations == 0;
}

bool check_variance(const VerifyOptions& o, std::string& detail) {
  const int draws = o.quick ? 2000 : 10000;
  const double sigma = 1.0;
  std::ostringstream os;
  bool ok = true;
  for (std::int64_t B : {1, 4, 16}) {
    Problem problem = make_quadratic(3, 1.0);
    const Vector w = Vector::Ones(3);
    GradientOracle oracle(problem, sigma, o.seed + static_cast<std::uint64_t>(B));
    const DelaySequence delays(std::vector<Delay>(static_cast<std::size_t>(draws * B), 0));
    AsyncMiniBatch wrapper(std::make_unique<FixedPointProbe>(w, draws), B,
                           make_filter(Strictness::exact));
    wrapper.record_batches(true);
    run(wrapper, oracle, delays);
    const auto& batches = wrapper.dispatched_batches();
    Vector mean = Vector::Zero(3);
    for (const Vector& b : batches) mean += b;
    mean /= static_cast<double>(batches.size());
    double ss = 0.0;
    for (const Vector& b : batches) ss += (b - mean).squaredNorm();
    const double var = ss / static_cast<double>(batches.size() - 1);
    const double ratio = var / (sigma * sigma / static_cast<double>(B));
    const bool pass = ratio >= 0.9 && ratio <= 1.1 && static_cast<int>(batches.size()) == draws;
    ok = ok && pass;
    os << "B=" << B << " ratio " << num(ratio) << (pass ? "" : " FAIL") << "; ";
  }
  detail = os.str();
  return ok;
}

bool check_adaptivity(const VerifyOptions& o, std::string& detail) {
  const Round T = 4096;
  const DelaySequence delays = half_outlier(T);
  const DelayStats stats = compute_stats(delays);
  Problem problem = make_quadratic(8, 1.0);
  const Vector w1 = Vector::Unit(8, 0);
  RateConstants c;
  c.beta = 1.0;
  c.F = problem.value(w1);
  c.sigma = 1.0;
  const SweepSchedule schedule(RateSetting::nonconvex_sgd, c);
  const EnvelopeResult env = quantile_bound_envelope(RateSetting::nonconvex_sgd, stats, c);
  const double at_max = envelope_at_max_delay(RateSetting::nonconvex_sgd, stats, c);
  const int seeds = reps(o, 200);
  double sum = 0.0;
  for (int s = 0; s < seeds; ++s) {
    GradientOracle oracle(problem, c.sigma, o.seed + 500 + static_cast<std::uint64_t>(s));
    const SweepResult r = run_algorithm2(schedule, problem, oracle, delays, w1,
                                         o.seed + 900 + static_cast<std::uint64_t>(s));
    sum += problem.gradient(r.final_output).squaredNorm();
  }
  const double mean = sum / seeds;
  detail = "mean " + num(mean) + " <= envelope " + num(env.value) + " (q=" + num(env.q) +
           "), q=1 envelope " + num(at_max);
  return mean <= env.value && env.value < 0.5 * at_max;
}

const std::vector<Check>& battery() {
  static const std::vector<Check> checks{
      {"lemma1", "mini-batch dispatch count meets the quantile counting bound", check_lemma1},
      {"lemma2", "sweep stops only when qT < 2(B+tau_q)K for the next epoch", check_lemma2},
      {"lowerbound", "staircase delays force the max-delay lower bound", check_lowerbound},
      {"smallstep", "small fixed stepsizes obey the slow-progress lower bound", check_smallstep},
      {"machines", "average delay of M machines is at most M-1", check_machines},
      {"quantiles", "median delay <= 2 x average delay, quantiles monotone", check_quantiles},
      {"base_rates", "base optimizers meet their explicit-constant rates", check_base_rates},
      {"theorem_minibatch", "mini-batched AC-SA inherits the base rate", check_theorem_minibatch},
      {"adaptivity", "doubling sweep meets the best-quantile envelope", check_adaptivity},
      {"relaxed", "relaxed filter never accepts gradients older than k-2", check_relaxed},
      {"variance", "batch means have variance sigma^2/B", check_variance},
      {"mutation", "an off-by-two filter is rejected by the counting verifier", check_mutation},
  };
  return checks;
}

}  // namespace

std::vector<std::string> check_names() {
  std::vector<std::string> names;
  for (const Check& c : battery()) names.emplace_back(c.name);
  return names;
}

std::vector<CheckResult> run_verification(const VerifyOptions& options,
                                          const std::function<void(const CheckResult&)>& on_result) {
  if (options.only) {
    const auto names = check_names();
    if (std::find(names.begin(), names.end(), *options.only) == names.end())
      throw ConfigurationError("unknown check '" + *options.only + "'");
  }
  std::vector<CheckResult> results;
  for (const Check& c : battery()) {
    if (options.only && *options.only != c.name) continue;
    CheckResult r{c.name, c.claim, false, {}, 0.0};
    const auto start = Clock::now();
    try {
      r.passed = c.run(options, r.detail);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (on_result) on_result(r);
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace qasync
