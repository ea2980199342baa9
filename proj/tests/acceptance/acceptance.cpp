// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qasync/async_engine.hpp"
#include "qasync/bounds.hpp"
#include "qasync/delay_models.hpp"
#include "qasync/minibatch.hpp"
#include "qasync/optimizers.hpp"
#include "qasync/problems.hpp"
#include "qasync/sweep.hpp"

using namespace qasync;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool ok = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double time_limit;  // seconds, <= 0 for none
  std::function<Outcome()> body;
};

// Queries the same point forever; used to isolate batch noise.
class FixedQuery final : public QueryAlgorithm {
 public:
  FixedQuery(Vector w, int budget) : QueryAlgorithm(budget), w_(std::move(w)) {}
  Vector snapshot() const override { return w_; }

 protected:
  Vector next_query() override { return w_; }
  void consume(const Vector&) override {}
  Vector output() override { return w_; }

 private:
  Vector w_;
};

std::unique_ptr<QueryAlgorithm> unlimited_probe() {
  return std::make_unique<FixedQuery>(Vector::Zero(1), 1 << 30);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// ---- 1: update counting ----------------------------------------------------

Outcome counting() {
  oracle::SeqGen gen(1001);
  const Problem p = make_quadratic(1, 1.0);
  int failures = 0, mismatches = 0;
  for (int rep = 0; rep < 500; ++rep) {
    const oracle::Seq d = gen(gen.uniform(1, 512));
    const std::int64_t B = gen.uniform(1, 16);
    GradientOracle o(p, 0.0, 0);
    AsyncMiniBatch w(unlimited_probe(), B, make_filter(Strictness::exact));
    const RunResult r = run(w, o, DelaySequence(d));
    const std::int64_t dispatched = r.log.used / B;
    if (dispatched < oracle::counting_sup(d, B)) ++failures;
    if (dispatched != oracle::simulate_filter(d, B, false).dispatches) ++mismatches;
  }
  return {failures == 0 && mismatches == 0,
          "failures " + std::to_string(failures) + ", filter mismatches " + std::to_string(mismatches) +
              " over 500 sequences"};
}

// ---- 2: sweep inequality -----------------------------------------------------

Outcome sweep_inequality() {
  oracle::SeqGen gen(1002);
  const RateSetting settings[] = {RateSetting::nonconvex_sgd, RateSetting::acsa_convex_smooth,
                                  RateSetting::sgd_convex_smooth, RateSetting::psgd_convex_lipschitz};
  int failures = 0, checked = 0;
  double tightest = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const oracle::Seq d = gen(gen.uniform(2, 512));
    const DelaySequence seq(d);
    const auto T = static_cast<std::int64_t>(d.size());
    std::vector<std::int64_t> tau(static_cast<std::size_t>(T) + 1);
    for (std::int64_t k = 1; k <= T; ++k)
      tau[static_cast<std::size_t>(k)] = oracle::quantile(d, static_cast<double>(k) / static_cast<double>(T));
    for (int s = 0; s < 4; ++s) {
      RateConstants c{0.5 + gen.unit(), 0.5 + gen.unit(), 0.5 + gen.unit(), 0.5 + gen.unit(), 2 * gen.unit()};
      Problem problem = make_quadratic(2, 1.0);
      Vector w1 = Vector::Ones(2);
      if (settings[s] == RateSetting::nonconvex_sgd) problem = make_nonconvex_smooth(2, 1.0);
      if (settings[s] == RateSetting::psgd_convex_lipschitz) {
        c.D = 2.0;
        problem = make_convex_lipschitz(2, 1.0, 2.0);
        w1 = Vector::Constant(2, 0.5);
      }
      const SweepSchedule sched(settings[s], c);
      GradientOracle o(problem, c.sigma, static_cast<std::uint64_t>(rep * 4 + s));
      const SweepResult r = run_algorithm2(sched, problem, o, seq, w1, static_cast<std::uint64_t>(rep));
      const int I = r.completed_epochs();
      if (I == 0) continue;
      ++checked;
      const double K = std::ldexp(1.0, I);
      const double B = static_cast<double>(oracle::sweep_batch(s, K, c.beta, c.F, c.D, c.G, c.sigma));
      bool ok = true;
      for (std::int64_t k = 1; k <= T; ++k) {
        const double rhs = 2 * (B + static_cast<double>(tau[static_cast<std::size_t>(k)])) * K;
        tightest = std::max(tightest, static_cast<double>(k) / rhs);
        ok = ok && static_cast<double>(k) < rhs;
      }
      ok = ok && verify_lemma_sweep(r, seq, sched).passed;
      if (!ok) ++failures;
    }
  }
  return {failures == 0 && checked > 0,
          "failures " + std::to_string(failures) + " of " + std::to_string(checked) +
              " runs with a completed epoch" + fmt(", tightest ratio %.4f", tightest)};
}

// ---- 3: staircase lower bound --------------------------------------------------

Outcome staircase_lower_bound() {
  const Round T = 1000;
  const Delay tau = 100;
  const double beta = 1.0, w1 = 1.0, eta = 6.1 / (beta * 101.0);
  oracle::Seq d(static_cast<std::size_t>(T), 0);
  for (Delay t = 1; t <= tau + 1; ++t) d[static_cast<std::size_t>(t - 1)] = t - 1;
  const std::vector<double> ref = oracle::delayed_gd_scalar(d, beta, 0.0, w1, eta);

  const LowerBoundCase c = lower_bound_construction(T, tau, beta, w1, eta);
  Outcome out;
  if (c.kind != LowerBoundKind::max_delay) return {false, "construction redirected to the small-step case"};
  std::vector<Delay> lib(c.delays.values().begin(), c.delays.values().end());
  if (lib != d) return {false, "delay sequence differs from the hand-built staircase"};

  GradientOracle o(c.problem, 0.0, 0);
  VanillaAsyncSgd sgd(Vector::Constant(1, w1), eta, true);
  EngineOptions opts;
  opts.history = HistoryMode::full;
  run(sgd, o, c.delays, opts);
  double rel = 0;
  for (Round t = 1; t <= tau + 2; ++t) {
    const double closed = w1 * (1 - eta * beta * static_cast<double>(t - 1));
    const auto i = static_cast<std::size_t>(t - 1);
    rel = std::max(rel, std::abs(sgd.trajectory()[i][0] - closed) / std::abs(closed));
    rel = std::max(rel, std::abs(ref[i] - closed) / std::abs(closed));
  }
  double avg = 0;
  for (const Vector& w : sgd.trajectory()) avg += beta * beta * w[0] * w[0];
  avg /= static_cast<double>(T);
  const double F = 0.5 * beta * w1 * w1;
  const double need = 4 * (1 + static_cast<double>(tau)) * beta * F / static_cast<double>(T);
  const LowerBoundReport rep = verify_lower_bound(c, 1e-12);
  out.ok = rel <= 1e-12 && avg >= need && rep.passed;
  out.detail = fmt("trajectory rel err %.2e; avg grad^2 %.4g >= %.4g", rel, avg, need);
  return out;
}

// ---- 4: small-stepsize lower bound ------------------------------------------------

Outcome small_step_lower_bound() {
  const Round T = 1000;
  const double beta = 1.0, w1 = 1.0;
  Outcome out;
  for (double eta : {1e-4, 1e-2}) {
    const double eps = std::min(beta, 1.0 / (2 * eta * static_cast<double>(T)));
    const double w_star = -1.0, gap = w1 - w_star;
    const double F = 0.5 * eps * gap * gap;
    const double denom = std::max(1.0, 2 * beta * eta * static_cast<double>(T));

    const LowerBoundCase c = lower_bound_small_stepsize(T, beta, eta, w1);
    GradientOracle o(c.problem, 0.0, 0);
    VanillaAsyncSgd sgd(Vector::Constant(1, w1), eta, true);
    run(sgd, o, c.delays);
    bool sandwich = c.w_star == w_star;
    double g2 = 0, sub = 0;
    for (const Vector& w : sgd.trajectory()) {
      const double off = w[0] - w_star;
      sandwich = sandwich && off >= 0.5 * gap && off <= gap;
      g2 += eps * eps * off * off;
      sub += 0.5 * eps * off * off;
    }
    g2 /= static_cast<double>(T);
    sub /= static_cast<double>(T);
    const double need_g2 = beta * F / (2 * denom), need_sub = beta * gap * gap / (8 * denom);
    const bool ok = sandwich && g2 >= need_g2 && sub >= need_sub && verify_lower_bound(c).passed;
    out.ok = out.ok && ok;
    out.detail += fmt("eta=%g: ", eta) + (sandwich ? "sandwich ok" : "sandwich broken") +
                  fmt(", grad^2 %.3g >= %.3g", g2, need_g2) + fmt(", subopt %.3g >= %.3g; ", sub, need_sub);
  }
  return out;
}

// ---- 5: machine bound ------------------------------------------------------------

Outcome machine_bound() {
  std::mt19937_64 rng(1005);
  int failures = 0;
  double worst = 0;
  for (int rep = 0; rep < 100; ++rep) {
    WorkerSchedule s;
    s.workers = std::uniform_int_distribution<int>(2, 16)(rng);
    s.base_rate = 4.06;
    s.seed = rng();
    const Round T = std::uniform_int_distribution<Round>(100, 5000)(rng);
    const DelaySequence seq = simulate_workers(T, s);
    const double avg = oracle::average({seq.values().begin(), seq.values().end()});
    worst = std::max(worst, avg / static_cast<double>(s.workers - 1));
    if (avg > static_cast<double>(s.workers - 1)) ++failures;
    if (!machine_bound_check(seq).passed) ++failures;
  }
  return {failures == 0, "failures " + std::to_string(failures) + fmt(", max avg/(M-1) %.4f", worst)};
}

// ---- 6: quantile relations ------------------------------------------------------------

Outcome quantile_relations() {
  oracle::SeqGen gen(1006);
  int failures = 0;
  for (int rep = 0; rep < 500; ++rep) {
    const oracle::Seq d = gen(gen.uniform(1, 512));
    const DelayStats st = compute_stats(DelaySequence(d));
    const double avg = oracle::average(d);
    if (st.tau_med() != oracle::quantile(d, 0.5)) ++failures;
    if (avg > 0 && static_cast<double>(st.tau_med()) > 2 * avg) ++failures;
    Delay prev = 0;
    for (int j = 1; j <= 100; ++j) {
      const Delay v = st.quantile(j / 100.0);
      if (v < prev) ++failures;
      prev = v;
    }
  }
  return {failures == 0, "failures " + std::to_string(failures) + " over 500 sequences"};
}

// ---- 7: base optimizer bounds --------------------------------------------------------

Outcome base_bounds() {
  const double sigma = 1.0;
  const int seeds = 400;
  Outcome out;
  std::ostringstream detail;
  for (int K : {16, 64, 256}) {
    double rsgd = 0, sgd = 0, psgd = 0, acsa = 0;
    const Problem nc = make_nonconvex_smooth(3, 1.0);
    const Vector nc_w1 = Vector::Ones(3);
    const double F = nc.value(nc_w1) - *nc.optimal_value;
    const Problem quad = make_quadratic(3, 1.0);
    const Vector q_w1 = Vector::Unit(3, 0);
    const double D = 1.0;
    const double G = 1.0, Dl = 2.0;
    const Problem lip = make_convex_lipschitz(3, G, Dl);
    const Vector l_w1 = Vector::Constant(3, 0.45 * Dl / std::sqrt(3.0));
    for (int s = 0; s < seeds; ++s) {
      const auto seed = static_cast<std::uint64_t>(K * 100000 + s);
      {
        GradientOracle o(nc, sigma, seed);
        auto a = sgd_nonconvex(nc, nc_w1, K, sigma, F, seed + 7);
        rsgd += nc.gradient(run_synchronous(*a, o).w_hat).squaredNorm();
      }
      {
        GradientOracle o(quad, sigma, seed + 1);
        auto a = sgd_convex_smooth(quad, q_w1, K, sigma, D, seed + 8);
        sgd += quad.suboptimality(run_synchronous(*a, o).w_hat);
      }
      {
        GradientOracle o(lip, sigma, seed + 2);
        auto a = psgd_convex_lipschitz(lip, l_w1, K, sigma, Dl, G);
        psgd += lip.suboptimality(run_synchronous(*a, o).w_hat);
      }
      {
        GradientOracle o(quad, sigma, seed + 3);
        auto a = acsa_accelerated(quad, q_w1, K, sigma, D);
        acsa += quad.suboptimality(run_synchronous(*a, o).w_hat);
      }
    }
    const double mr = rsgd / seeds, ms = sgd / seeds, mp = psgd / seeds, ma = acsa / seeds;
    const double br = oracle::rsgd_bound(1.0, F, sigma, K), bs = oracle::sgd_convex_bound(1.0, D, sigma, K);
    const double bp = oracle::psgd_bound(Dl, G, sigma, K), ba = oracle::acsa_bound(1.0, D, sigma, K);
    out.ok = out.ok && mr <= 1.05 * br && ms <= 1.05 * bs && mp <= 1.05 * bp && ma <= 1.05 * ba;
    detail << "K=" << K << " ratios " << fmt("%.3f/%.3f/", mr / br, ms / bs) << fmt("%.3f/%.3f; ", mp / bp, ma / ba);
  }
  out.detail = detail.str() + "(rsgd/sgd/psgd/acsa mean over bound)";
  return out;
}

// ---- 8 and 10: mini-batched AC-SA on constant delay ---------------------------------

struct AcsaRun {
  double subopt;
  RoundLog log;
};

AcsaRun acsa_minibatch(std::uint64_t seed, Strictness strictness) {
  static const Problem p = make_quadratic(2, 1.0);
  const Vector w1 = Vector::Unit(2, 0);
  const double sigma = 1.0;
  GradientOracle o(p, sigma, seed);
  MiniBatchConfig cfg;
  cfg.q = 1.0;
  cfg.tau_hat_q = 8;
  cfg.strictness = strictness;
  auto factory = [&](int K) { return acsa_accelerated(p, w1, K, sigma / std::sqrt(8.0), 1.0); };
  MiniBatchResult r = run_algorithm1(factory, cfg, o, constant_delay(4096, 8));
  return {p.suboptimality(r.output), std::move(r.log)};
}

Outcome minibatch_theorem() {
  const int seeds = 200;
  double sum = 0;
  for (int s = 0; s < seeds; ++s) sum += acsa_minibatch(80000 + s, Strictness::exact).subopt;
  const double mean = sum / seeds;
  const double K = std::floor(4096.0 / 17.0);
  const double bound = oracle::acsa_bound(1.0, 1.0, 1.0 / std::sqrt(8.0), K);
  return {mean <= 1.05 * bound, fmt("K=%g, mean %.4g <= 1.05 x %.4g", K, mean, bound)};
}

Outcome relaxed_staleness() {
  const int seeds = 200;
  int violations = 0;
  std::int64_t stale = 0;
  oracle::Seq cd(4096);
  for (std::int64_t t = 1; t <= 4096; ++t) cd[static_cast<std::size_t>(t - 1)] = std::min<std::int64_t>(t - 1, 8);
  // the hand filter runs for as many dispatches as the library's budget
  const oracle::FilterTrace tr = oracle::simulate_filter(cd, 8, true, 4096 / 17);
  for (int s = 0; s < seeds; ++s) {
    const AcsaRun r = acsa_minibatch(80000 + s, Strictness::relaxed_k_minus_2);
    for (std::size_t i = 0; i < r.log.rounds.size(); ++i) {
      const RoundRecord& rec = r.log.rounds[i];
      if (!rec.accepted) continue;
      if (rec.source_point_id + 2 < rec.played_point_id) ++violations;
      stale += rec.source_point_id < rec.played_point_id;
      if (i < tr.query_at.size()) {
        const auto src_round = static_cast<std::size_t>(rec.t - rec.d_t - 1);
        if (tr.query_at[src_round] + 2 < tr.query_at[i]) ++violations;
        if (!tr.accepted[i]) ++violations;
      }
    }
  }
  return {violations == 0,
          "violations " + std::to_string(violations) + ", stale accepted gradients " + std::to_string(stale)};
}

// ---- 9: adaptivity ---------------------------------------------------------------

Outcome adaptivity() {
  const Round T = 4096;
  const DelaySequence seq = half_outlier(T);
  const oracle::Seq d(seq.values().begin(), seq.values().end());
  const Problem p = make_quadratic(2, 1.0);
  const Vector w1 = Vector::Unit(2, 0);
  const double beta = 1.0, sigma = 1.0, F = p.value(w1) - *p.optimal_value;
  const SweepSchedule sched(RateSetting::nonconvex_sgd, RateConstants{beta, F, 0.0, 0.0, sigma});

  double best = std::numeric_limits<double>::infinity(), best_q = 0;
  const double Td = static_cast<double>(T);
  for (Round k = 1; k <= T; ++k) {
    const double q = static_cast<double>(k) / Td;
    const double v = oracle::nonconvex_envelope(static_cast<double>(oracle::quantile(d, q)), q, Td, beta, F, sigma);
    if (v < best) {
      best = v;
      best_q = q;
    }
  }
  const double at_one =
      oracle::nonconvex_envelope(static_cast<double>(*std::max_element(d.begin(), d.end())), 1.0, Td, beta, F, sigma);

  const int seeds = 200;
  double sum = 0;
  for (int s = 0; s < seeds; ++s) {
    GradientOracle o(p, sigma, 90000 + s);
    const SweepResult r = run_algorithm2(sched, p, o, seq, w1, 91000 + s);
    sum += p.gradient(r.final_output).squaredNorm();
  }
  const double mean = sum / seeds;
  return {mean <= best && best < 0.5 * at_one,
          fmt("mean %.4g <= envelope %.4g", mean, best) + fmt(" at q=%.4f; q=1 envelope %.4g", best_q, at_one)};
}

// ---- 11: variance reduction -----------------------------------------------------------

Outcome variance() {
  const Problem p = make_quadratic(3, 1.0);
  const Vector w = Vector::Constant(3, 0.4);
  const double sigma = 1.0;
  const int draws = 10000;
  Outcome out;
  for (std::int64_t B : {1, 4, 16}) {
    GradientOracle o(p, sigma, 1100 + static_cast<std::uint64_t>(B));
    AsyncMiniBatch mb(std::make_unique<FixedQuery>(w, draws), B, make_filter(Strictness::exact));
    mb.record_batches(true);
    run(mb, o, constant_delay(draws * B, 0));
    const Vector g = p.gradient(w);
    double ss = 0;
    for (const Vector& b : mb.dispatched_batches()) ss += (b - g).squaredNorm();
    const double n = static_cast<double>(mb.dispatched_batches().size());
    const double ratio = ss / n / (sigma * sigma / static_cast<double>(B));
    out.ok = out.ok && n == draws && ratio >= 0.9 && ratio <= 1.1;
    out.detail += fmt("B=%g ratio %.4f; ", static_cast<double>(B), ratio);
  }
  return out;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "dispatch count reaches the quantile counting bound", 30, counting},
      {2, "doubling sweep stops before the next epoch fits", 60, sweep_inequality},
      {3, "staircase delays force the predicted slow trajectory", 1, staircase_lower_bound},
      {4, "small stepsizes stay far from the optimum", 1, small_step_lower_bound},
      {5, "average delay is below machines minus one", 30, machine_bound},
      {6, "median is at most twice the mean; quantiles are monotone", 10, quantile_relations},
      {7, "base optimizers meet their explicit-constant guarantees", 300, base_bounds},
      {8, "mini-batched AC-SA meets its guarantee on constant delay", 0, minibatch_theorem},
      {9, "doubling sweep meets the best-quantile envelope", 300, adaptivity},
      {10, "relaxed filter accepts gradients at most two queries old", 0, relaxed_staleness},
      {11, "batch means have variance sigma^2/B", 10, variance},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (c.time_limit > 0 && secs >= c.time_limit) {
      o.ok = false;
      o.detail += fmt(" [over time limit %.0f s]", c.time_limit);
    }
    if (!o.ok) ++failed;
    std::printf("%s %2d %-58s %7.2fs  %s\n", o.ok ? "PASS" : "FAIL", c.id, c.title, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
