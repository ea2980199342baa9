#include "qasync/bounds.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <string>
#include <utility>

#include "qasync/async_engine.hpp"
#include "qasync/errors.hpp"
#include "qasync/optimizers.hpp"

namespace qasync {

const char* to_string(RateSetting s) {
  switch (s) {
    case RateSetting::nonconvex_sgd:
      return "nonconvex_sgd";
    case RateSetting::sgd_convex_smooth:
      return "sgd_convex_smooth";
    case RateSetting::acsa_convex_smooth:
      return "acsa_convex_smooth";
    case RateSetting::psgd_convex_lipschitz:
      return "psgd_convex_lipschitz";
  }
  return "unknown";
}

RateSetting rate_setting_from_string(const std::string& name) {
  for (auto s : {RateSetting::nonconvex_sgd, RateSetting::sgd_convex_smooth,
                 RateSetting::acsa_convex_smooth, RateSetting::psgd_convex_lipschitz}) {
    if (name == to_string(s)) return s;
  }
  throw ConfigurationError("unknown setting '" + name + "'");
}

void validate_constants(RateSetting setting, const RateConstants& c) {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw ConfigurationError(std::string(what) + " must be positive");
  };
  if (!(c.sigma >= 0.0)) throw ConfigurationError("sigma must be nonnegative");
  switch (setting) {
    case RateSetting::nonconvex_sgd:
      positive(c.beta, "beta");
      positive(c.F, "F");
      break;
    case RateSetting::sgd_convex_smooth:
    case RateSetting::acsa_convex_smooth:
      positive(c.beta, "beta");
      positive(c.D, "D");
      break;
    case RateSetting::psgd_convex_lipschitz:
      positive(c.D, "D");
      positive(c.G, "G");
      break;
  }
}

namespace {

BoundReport make_report(RateSetting setting, std::string id, std::string source,
                        std::map<std::string, double> inputs, std::vector<double> terms) {
  BoundReport r;
  r.setting = setting;
  r.formula_id = std::move(id);
  r.source = std::move(source);
  r.inputs = std::move(inputs);
  r.terms = std::move(terms);
  for (double t : r.terms) r.value += t;
  return r;
}

void check_q(double q) {
  if (!(q > 0.0 && q <= 1.0)) throw ParameterError("q must lie in (0, 1]");
}

}  // namespace

BoundReport base_rate(RateSetting setting, const RateConstants& c, double K) {
  validate_constants(setting, c);
  if (!(K >= 1.0)) throw ParameterError("base rate needs K >= 1");
  const double s = c.sigma;
  std::map<std::string, double> in{{"K", K}, {"sigma", s}};
  switch (setting) {
    case RateSetting::nonconvex_sgd:
      in.insert({{"beta", c.beta}, {"F", c.F}});
      return make_report(setting, "base.nonconvex_sgd", "random-iterate SGD, smooth nonconvex", in,
                         {2.0 * c.beta * c.F / K, std::sqrt(8.0 * s * s * c.beta * c.F / K)});
    case RateSetting::sgd_convex_smooth:
      in.insert({{"beta", c.beta}, {"D", c.D}});
      return make_report(setting, "base.sgd_convex_smooth", "random-iterate SGD, smooth convex",
                         in, {c.beta * c.D * c.D / K, 2.0 * s * c.D / std::sqrt(K)});
    case RateSetting::acsa_convex_smooth:
      in.insert({{"beta", c.beta}, {"D", c.D}});
      return make_report(setting, "base.acsa_convex_smooth", "AC-SA, smooth convex", in,
                         {4.0 * c.beta * c.D * c.D / (K * (K + 1.0)),
                          4.0 * s * c.D / std::sqrt(3.0 * K)});
    case RateSetting::psgd_convex_lipschitz:
      in.insert({{"D", c.D}, {"G", c.G}});
      return make_report(setting, "base.psgd_convex_lipschitz",
                         "projected SGD, Lipschitz convex", in,
                         {2.0 * c.D * std::sqrt(c.G * c.G + s * s) / std::sqrt(K)});
  }
  throw ParameterError("unknown setting");
}

BoundReport minibatch_rate(RateSetting setting, const RateConstants& c, Round T, double q,
                           Delay tau_hat) {
  check_q(q);
  if (tau_hat < 0) throw ParameterError("tau_hat must be >= 0");
  const double B = std::max<double>(1.0, static_cast<double>(tau_hat));
  const double K = std::floor(q * static_cast<double>(T) / (1.0 + 2.0 * static_cast<double>(tau_hat)) + 1e-9);
  if (K < 1.0) throw ScheduleError("horizon too short for this quantile bound (K = 0)");
  RateConstants inner = c;
  inner.sigma = c.sigma / std::sqrt(B);
  BoundReport r = base_rate(setting, inner, K);
  r.formula_id = std::string("minibatch.") + to_string(setting);
  r.source = "base guarantee inherited through asynchronous mini-batching";
  r.inputs["T"] = static_cast<double>(T);
  r.inputs["q"] = q;
  r.inputs["tau_hat_q"] = static_cast<double>(tau_hat);
  r.inputs["B"] = B;
  r.inputs["sigma"] = c.sigma;
  r.inputs["sigma_eff"] = inner.sigma;
  return r;
}

BoundReport corollary_rates(RateSetting setting, Round T, double q, Delay tau_hat,
                            const RateConstants& c) {
  check_q(q);
  validate_constants(setting, c);
  if (tau_hat < 0) throw ParameterError("tau_hat must be >= 0");
  const double qT = q * static_cast<double>(T);
  const double tau = static_cast<double>(tau_hat);
  std::map<std::string, double> in{{"T", static_cast<double>(T)}, {"q", q}, {"tau_hat_q", tau},
                                   {"sigma", c.sigma}};
  const std::string src = "mini-batched rate, unit constants (trend checks only)";
  switch (setting) {
    case RateSetting::nonconvex_sgd:
      in.insert({{"beta", c.beta}, {"F", c.F}});
      return make_report(setting, "order.nonconvex_sgd", src, in,
                         {(1.0 + tau) * c.beta * c.F / qT,
                          c.sigma * std::sqrt(c.beta * c.F) / std::sqrt(qT)});
    case RateSetting::sgd_convex_smooth:
      in.insert({{"beta", c.beta}, {"D", c.D}});
      return make_report(setting, "order.sgd_convex_smooth", src, in,
                         {(1.0 + tau) * c.beta * c.D * c.D / qT, c.D * c.sigma / std::sqrt(qT)});
    case RateSetting::acsa_convex_smooth:
      in.insert({{"beta", c.beta}, {"D", c.D}});
      return make_report(setting, "order.acsa_convex_smooth", src, in,
                         {(1.0 + tau) * (1.0 + tau) * c.beta * c.D * c.D / (qT * qT),
                          c.D * c.sigma / std::sqrt(qT)});
    case RateSetting::psgd_convex_lipschitz:
      in.insert({{"D", c.D}, {"G", c.G}});
      return make_report(setting, "order.psgd_convex_lipschitz", src, in,
                         {c.D * std::sqrt(1.0 + tau) * c.G / std::sqrt(qT),
                          c.D * c.sigma / std::sqrt(qT)});
  }
  throw ParameterError("unknown setting");
}

BoundReport adaptive_rate(RateSetting setting, const RateConstants& c, Round T, double q,
                          Delay tau_q, ConstantVariant variant) {
  check_q(q);
  validate_constants(setting, c);
  const double qT = q * static_cast<double>(T);
  const double lead = 1.0 + 2.0 * static_cast<double>(tau_q);
  const bool stated = variant == ConstantVariant::theorem_statement;
  std::map<std::string, double> in{{"T", static_cast<double>(T)}, {"q", q},
                                   {"tau_q", static_cast<double>(tau_q)}, {"sigma", c.sigma}};
  const std::string src = stated ? "quantile-adaptive sweep guarantee (stated constants)"
                                 : "quantile-adaptive sweep guarantee (proof constants)";
  switch (setting) {
    case RateSetting::nonconvex_sgd:
      in.insert({{"beta", c.beta}, {"F", c.F}});
      return make_report(setting, "adaptive.nonconvex_sgd", src, in,
                         {24.0 * lead * c.beta * c.F / qT,
                          24.0 * c.sigma * std::sqrt(c.beta * c.F) / std::sqrt(qT)});
    case RateSetting::acsa_convex_smooth:
      in.insert({{"beta", c.beta}, {"D", c.D}});
      return make_report(setting, "adaptive.acsa_convex_smooth", src, in,
                         {192.0 * lead * lead * c.beta * c.D * c.D / (qT * qT),
                          (stated ? 72.0 : 48.0) * c.sigma * c.D / std::sqrt(qT)});
    case RateSetting::sgd_convex_smooth:
      in.insert({{"beta", c.beta}, {"D", c.D}});
      return make_report(setting, "adaptive.sgd_convex_smooth", src, in,
                         {12.0 * lead * c.beta * c.D * c.D / qT,
                          std::sqrt(288.0) * c.sigma * c.D / std::sqrt(qT)});
    case RateSetting::psgd_convex_lipschitz:
      in.insert({{"D", c.D}, {"G", c.G}});
      return make_report(setting, "adaptive.psgd_convex_lipschitz", src, in,
                         {c.D * c.G * std::sqrt(32.0 * lead) / std::sqrt(qT),
                          std::sqrt(stated ? 48.0 : 96.0) * c.D * c.sigma / std::sqrt(qT)});
  }
  throw ParameterError("unknown setting");
}

// ---- lower bounds ----------------------------------------------------------

LowerBoundCase lower_bound_construction(Round T, Delay tau_max, double beta, double w1,
                                        double eta) {
  if (!(beta > 0.0)) throw ParameterError("lower bound: beta must be positive");
  if (!(eta > 0.0)) throw ParameterError("lower bound: eta must be positive");
  DelaySequence delays = staircase_adversarial(T, tau_max);
  const double tm = static_cast<double>(tau_max);
  if (!(eta > 6.0 / (beta * (1.0 + tm)))) {
    return lower_bound_small_stepsize(delays, beta, eta, w1);
  }
  Problem problem = make_quadratic(1, beta);
  std::vector<double> trajectory;
  trajectory.reserve(static_cast<std::size_t>(tau_max) + 2);
  for (Round t = 1; t <= tau_max + 2; ++t)
    trajectory.push_back(w1 * (1.0 - eta * beta * static_cast<double>(t - 1)));
  const double F = 0.5 * beta * w1 * w1;
  const double Td = static_cast<double>(T);
  return LowerBoundCase{LowerBoundKind::max_delay,
                        std::move(delays),
                        std::move(problem),
                        w1,
                        eta,
                        beta,
                        0.0,
                        F,
                        std::move(trajectory),
                        4.0 * (1.0 + tm) * beta * F / Td,
                        (1.0 + tm) * beta * w1 * w1 / Td};
}

LowerBoundCase lower_bound_small_stepsize(const DelaySequence& delays, double beta, double eta,
                                          double w1) {
  if (!(beta > 0.0)) throw ParameterError("lower bound: beta must be positive");
  if (!(eta > 0.0)) throw ParameterError("lower bound: eta must be positive");
  const double Td = static_cast<double>(delays.horizon());
  const double eps = std::min(beta, 1.0 / (2.0 * eta * Td));
  const double w_star = w1 >= 0.0 ? -1.0 : 1.0;
  Problem problem = make_quadratic(1, eps, Vector::Constant(1, w_star));
  const double gap = w1 - w_star;
  const double F = 0.5 * eps * gap * gap;
  const double denom = std::max(1.0, 2.0 * beta * eta * Td);
  return LowerBoundCase{LowerBoundKind::small_stepsize,
                        delays,
                        std::move(problem),
                        w1,
                        eta,
                        beta,
                        w_star,
                        F,
                        {},
                        beta * F / (2.0 * denom),
                        beta * gap * gap / (8.0 * denom)};
}

LowerBoundCase lower_bound_small_stepsize(Round T, double beta, double eta, double w1) {
  if (T < 1) throw ParameterError("lower bound: T must be >= 1");
  return lower_bound_small_stepsize(DelaySequence(std::vector<Delay>(static_cast<std::size_t>(T), 0)),
                                    beta, eta, w1);
}

LowerBoundReport verify_lower_bound(const LowerBoundCase& c, double trajectory_tol) {
  GradientOracle oracle(c.problem, 0.0, 0);
  VanillaAsyncSgd sgd(Vector::Constant(1, c.w1), c.eta, /*record_trajectory=*/true);
  EngineOptions opts;
  opts.history = HistoryMode::full;
  run(sgd, oracle, c.delays, opts);

  const auto& traj = sgd.trajectory();
  LowerBoundReport rep;
  const double f_star = *c.problem.optimal_value;
  for (const Vector& w : traj) {
    rep.avg_sq_grad += c.problem.gradient(w).squaredNorm();
    rep.avg_subopt += c.problem.value(w) - f_star;
  }
  rep.avg_sq_grad /= static_cast<double>(traj.size());
  rep.avg_subopt /= static_cast<double>(traj.size());

  bool trajectory_ok = true;
  if (c.kind == LowerBoundKind::max_delay) {
    for (std::size_t i = 0; i < c.predicted_trajectory.size() && i < traj.size(); ++i) {
      const double pred = c.predicted_trajectory[i];
      const double err = std::abs(traj[i][0] - pred) / std::max(std::abs(pred), DBL_MIN);
      rep.trajectory_max_rel_error = std::max(rep.trajectory_max_rel_error, err);
    }
    trajectory_ok = rep.trajectory_max_rel_error <= trajectory_tol;
    const Delay tau_max = c.predicted_trajectory.empty()
                              ? 0
                              : static_cast<Delay>(c.predicted_trajectory.size()) - 2;
    const double slack = tau_max % 2 == 0 ? 1.0 : 0.5;
    rep.sq_grad_required = slack * c.avg_sq_grad_bound;
    rep.subopt_required = slack * c.avg_subopt_bound;
  } else {
    const double gap = c.w1 - c.w_star;
    for (const Vector& w : traj) {
      const double off = w[0] - c.w_star;
      // gap > 0 when w* = -1; mirror for the other sign.
      const double lo = gap > 0 ? 0.5 * gap : gap;
      const double hi = gap > 0 ? gap : 0.5 * gap;
      if (off < lo || off > hi) rep.sandwich_holds = false;
    }
    rep.sq_grad_required = c.avg_sq_grad_bound;
    rep.subopt_required = c.avg_subopt_bound;
  }
  rep.passed = trajectory_ok && rep.sandwich_holds && rep.avg_sq_grad >= rep.sq_grad_required &&
               rep.avg_subopt >= rep.subopt_required;
  return rep;
}

MachineBoundReport machine_bound_check(const DelaySequence& seq) {
  const double avg = compute_stats(seq).tau_avg();
  if (seq.origin() != DelayOrigin::machine_simulated) return {false, avg, 0.0, false};
  const double bound = static_cast<double>(seq.machines() - 1);
  return {true, avg, bound, avg <= bound};
}

}  // namespace qasync
