#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "qasync/bounds.hpp"
#include "qasync/errors.hpp"

using namespace qasync;

namespace {

const RateSetting kSettings[] = {RateSetting::nonconvex_sgd, RateSetting::sgd_convex_smooth,
                                 RateSetting::acsa_convex_smooth, RateSetting::psgd_convex_lipschitz};

double sum(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

TEST(BaseRate, MatchesReferenceFormulas) {
  oracle::SeqGen gen(71);
  for (int rep = 0; rep < 200; ++rep) {
    const RateConstants c{0.1 + 5 * gen.unit(), 0.1 + 5 * gen.unit(), 0.1 + 5 * gen.unit(),
                          0.1 + 5 * gen.unit(), 3 * gen.unit()};
    const double K = static_cast<double>(gen.uniform(1, 5000));
    auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
    EXPECT_TRUE(near(base_rate(RateSetting::nonconvex_sgd, c, K).value, oracle::rsgd_bound(c.beta, c.F, c.sigma, K)));
    EXPECT_TRUE(near(base_rate(RateSetting::sgd_convex_smooth, c, K).value,
                     oracle::sgd_convex_bound(c.beta, c.D, c.sigma, K)));
    EXPECT_TRUE(near(base_rate(RateSetting::acsa_convex_smooth, c, K).value,
                     oracle::acsa_bound(c.beta, c.D, c.sigma, K)));
    EXPECT_TRUE(near(base_rate(RateSetting::psgd_convex_lipschitz, c, K).value,
                     oracle::psgd_bound(c.D, c.G, c.sigma, K)));
  }
}

TEST(BaseRate, ValueIsSumOfTerms) {
  const RateConstants c{1.0, 2.0, 3.0, 4.0, 0.5};
  for (auto s : kSettings) {
    const BoundReport r = base_rate(s, c, 17);
    EXPECT_DOUBLE_EQ(r.value, sum(r.terms));
    EXPECT_FALSE(r.formula_id.empty());
    EXPECT_EQ(r.setting, s);
  }
}

TEST(MinibatchRate, InheritsEffectiveNoiseAndBudget) {
  const RateConstants c{1.0, 1.0, 1.0, 1.0, 2.0};
  const BoundReport r = minibatch_rate(RateSetting::acsa_convex_smooth, c, 4096, 1.0, 8);
  EXPECT_NEAR(r.value, oracle::acsa_bound(1, 1, 2.0 / std::sqrt(8.0), 240), 1e-12);
  EXPECT_NEAR(minibatch_rate(RateSetting::nonconvex_sgd, c, 100, 1.0, 0).value, oracle::rsgd_bound(1, 1, 2, 100),
              1e-12);
  EXPECT_THROW(minibatch_rate(RateSetting::nonconvex_sgd, c, 10, 0.1, 4), ScheduleError);
}

TEST(CorollaryRates, Scaling) {
  const RateConstants c{1.0, 1.0, 1.0, 1.0, 1.0};
  for (auto s : {RateSetting::nonconvex_sgd, RateSetting::sgd_convex_smooth}) {
    const BoundReport a = corollary_rates(s, 1000, 0.5, 7, c);
    const BoundReport b = corollary_rates(s, 2000, 0.5, 7, c);
    ASSERT_EQ(a.terms.size(), 2u);
    EXPECT_NEAR(b.terms[0], a.terms[0] / 2, 1e-15);
    EXPECT_NEAR(b.terms[1], a.terms[1] / std::sqrt(2.0), 1e-15);
  }
  const BoundReport acsa = corollary_rates(RateSetting::acsa_convex_smooth, 1000, 0.5, 7, c);
  const BoundReport sgd = corollary_rates(RateSetting::sgd_convex_smooth, 1000, 0.5, 7, c);
  EXPECT_NEAR(acsa.terms[0] / sgd.terms[0], 8.0 / 500.0, 1e-15);
  EXPECT_NEAR(acsa.terms[1], sgd.terms[1], 1e-15);
  const BoundReport psgd = corollary_rates(RateSetting::psgd_convex_lipschitz, 1000, 0.5, 3, c);
  EXPECT_NEAR(psgd.value, (2.0 + 1.0) / std::sqrt(500.0), 1e-15);
}

TEST(AdaptiveRate, ConstantVariants) {
  const RateConstants c{1.0, 1.0, 1.0, 1.0, 1.0};
  const double qT = 0.5 * 1024;
  const BoundReport stated = adaptive_rate(RateSetting::acsa_convex_smooth, c, 1024, 0.5, 3);
  const BoundReport proof =
      adaptive_rate(RateSetting::acsa_convex_smooth, c, 1024, 0.5, 3, ConstantVariant::proof_derivation);
  EXPECT_NEAR(stated.terms[0], 192.0 * 49 / (qT * qT), 1e-15);
  EXPECT_NEAR(stated.terms[1], 72.0 / std::sqrt(qT), 1e-15);
  EXPECT_NEAR(proof.terms[1], 48.0 / std::sqrt(qT), 1e-15);
  EXPECT_EQ(stated.terms[0], proof.terms[0]);

  const BoundReport ps = adaptive_rate(RateSetting::psgd_convex_lipschitz, c, 1024, 0.5, 3);
  const BoundReport pp =
      adaptive_rate(RateSetting::psgd_convex_lipschitz, c, 1024, 0.5, 3, ConstantVariant::proof_derivation);
  EXPECT_NEAR(ps.terms[0], std::sqrt(32.0 * 7) / std::sqrt(qT), 1e-15);
  EXPECT_NEAR(ps.terms[1], std::sqrt(48.0) / std::sqrt(qT), 1e-15);
  EXPECT_NEAR(pp.terms[1], std::sqrt(96.0) / std::sqrt(qT), 1e-15);

  EXPECT_NEAR(adaptive_rate(RateSetting::nonconvex_sgd, c, 1024, 0.5, 3).value,
              oracle::nonconvex_envelope(3, 0.5, 1024, 1, 1, 1), 1e-13);
  EXPECT_NEAR(adaptive_rate(RateSetting::sgd_convex_smooth, c, 1024, 0.5, 3).value,
              12.0 * 7 / qT + std::sqrt(288.0) / std::sqrt(qT), 1e-13);
}

TEST(AdaptiveRate, RejectsBadQuantile) {
  const RateConstants c{1.0, 1.0, 1.0, 1.0, 1.0};
  for (double q : {0.0, -0.1, 1.0000001, 2.0})
    EXPECT_THROW(adaptive_rate(RateSetting::nonconvex_sgd, c, 100, q, 0), ParameterError) << q;
  EXPECT_THROW(corollary_rates(RateSetting::nonconvex_sgd, 100, 0.0, 0, c), ParameterError);
  EXPECT_THROW(minibatch_rate(RateSetting::nonconvex_sgd, c, 100, 1.5, 0), ParameterError);
}

TEST(Settings, NamesAndValidation) {
  for (auto s : kSettings) { EXPECT_EQ(rate_setting_from_string(to_string(s)), s); }
  EXPECT_THROW(rate_setting_from_string("adam"), ConfigurationError);
  EXPECT_THROW(validate_constants(RateSetting::nonconvex_sgd, RateConstants{1, 0, 1, 1, 1}), ConfigurationError);
  EXPECT_THROW(validate_constants(RateSetting::psgd_convex_lipschitz, RateConstants{1, 1, 1, 0, 1}),
               ConfigurationError);
  EXPECT_THROW(validate_constants(RateSetting::sgd_convex_smooth, RateConstants{1, 1, 1, 1, -1}),
               ConfigurationError);
  EXPECT_NO_THROW(validate_constants(RateSetting::psgd_convex_lipschitz, RateConstants{0, 0, 1, 1, 0}));
}

TEST(LowerBound, SmallStaircaseTrajectory) {
  const LowerBoundCase c = lower_bound_construction(20, 4, 1.0, 1.0, 2.0);
  ASSERT_EQ(c.kind, LowerBoundKind::max_delay);
  EXPECT_DOUBLE_EQ(compute_stats(c.delays).tau_avg(), 4.0 * 5.0 / 40.0);
  const auto ref = oracle::delayed_gd_scalar({c.delays.values().begin(), c.delays.values().end()}, 1.0, 0.0, 1.0, 2.0);
  ASSERT_EQ(c.predicted_trajectory.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_DOUBLE_EQ(c.predicted_trajectory[i], 1.0 - 2.0 * static_cast<double>(i));
    EXPECT_DOUBLE_EQ(ref[i], c.predicted_trajectory[i]);
  }
  const LowerBoundReport r = verify_lower_bound(c);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.trajectory_max_rel_error, 0.0);
  EXPECT_GE(r.avg_sq_grad, 4.0 * 5.0 * 0.5 / 20.0);
}

TEST(LowerBound, ManyShapes) {
  for (Delay tau : {1, 2, 3, 10, 31, 100}) {
    for (double mult : {1.01, 2.0, 10.0}) {
      const double beta = 0.5 + 0.1 * static_cast<double>(tau % 7);
      const double eta = mult * 6.0 / (beta * (1.0 + static_cast<double>(tau)));
      const LowerBoundCase c = lower_bound_construction(10 * (tau + 2), tau, beta, -0.7, eta);
      ASSERT_EQ(c.kind, LowerBoundKind::max_delay);
      const LowerBoundReport r = verify_lower_bound(c);
      EXPECT_TRUE(r.passed) << "tau " << tau << " mult " << mult;
      EXPECT_LE(r.trajectory_max_rel_error, 1e-12);
      if (tau % 2) { EXPECT_DOUBLE_EQ(r.sq_grad_required, 0.5 * c.avg_sq_grad_bound); }
    }
  }
}

TEST(LowerBound, SmallStepRedirect) {
  const LowerBoundCase c = lower_bound_construction(1000, 100, 1.0, 1.0, 6.0 / 101.0);
  EXPECT_EQ(c.kind, LowerBoundKind::small_stepsize);
  EXPECT_EQ(c.delays.horizon(), 1000);
  EXPECT_TRUE(verify_lower_bound(c).passed);
}

TEST(LowerBound, SmallStepBranches) {
  // eps = 1 / (2 eta T) when eta T is large, beta otherwise
  const LowerBoundCase big = lower_bound_small_stepsize(1000, 1.0, 1e-2, 1.0);
  EXPECT_DOUBLE_EQ(*big.problem.optimal_value, 0.0);
  EXPECT_DOUBLE_EQ(big.problem.value(Vector::Constant(1, 0.0)), 0.5 * (1.0 / 20.0));
  EXPECT_EQ(big.w_star, -1.0);
  const LowerBoundCase tiny = lower_bound_small_stepsize(1000, 1.0, 1e-4, -2.0);
  EXPECT_EQ(tiny.w_star, 1.0);
  EXPECT_DOUBLE_EQ(tiny.initial_gap, 0.5 * 9.0);
  for (const auto* c : {&big, &tiny}) {
    const LowerBoundReport r = verify_lower_bound(*c);
    EXPECT_TRUE(r.sandwich_holds);
    EXPECT_TRUE(r.passed);
  }
  EXPECT_THROW(lower_bound_small_stepsize(0, 1.0, 0.1, 1.0), ParameterError);
  EXPECT_THROW(lower_bound_construction(10, 2, 1.0, 1.0, 0.0), ParameterError);
}

TEST(LowerBound, SmallStepHoldsUnderDelays) {
  oracle::SeqGen gen(72);
  for (int rep = 0; rep < 50; ++rep) {
    const DelaySequence d(gen(gen.uniform(1, 300)));
    const double eta = 1e-3 * (1 + gen.unit());
    EXPECT_TRUE(verify_lower_bound(lower_bound_small_stepsize(d, 1.0, eta, 0.5)).passed) << rep;
  }
}

TEST(MachineBound, OnlyForSimulatedSequences) {
  const MachineBoundReport scripted = machine_bound_check(staircase_adversarial(100, 5));
  EXPECT_FALSE(scripted.applicable);
  WorkerSchedule s;
  s.workers = 5;
  s.seed = 3;
  const MachineBoundReport sim = machine_bound_check(simulate_workers(2000, s));
  EXPECT_TRUE(sim.applicable);
  EXPECT_DOUBLE_EQ(sim.bound, 4.0);
  EXPECT_TRUE(sim.passed);
}
