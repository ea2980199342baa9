#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qasync/delay_models.hpp"
#include "qasync/problems.hpp"

namespace qasync {

enum class RateSetting {
  nonconvex_sgd,          // E||grad f(w)||^2, SGD
  sgd_convex_smooth,      // E f(w) - f*, SGD
  acsa_convex_smooth,     // E f(w) - f*, accelerated SGD
  psgd_convex_lipschitz,  // E f(w) - min f, projected SGD
};

const char* to_string(RateSetting s);
RateSetting rate_setting_from_string(const std::string& name);

// Problem constants consumed by the rate expressions. Each setting reads only
// the constants it needs: nonconvex (beta, F), convex smooth (beta, D),
// Lipschitz (D, G); sigma everywhere.
struct RateConstants {
  double beta = 0.0;
  double F = 0.0;
  double D = 0.0;
  double G = 0.0;
  double sigma = 0.0;
};

void validate_constants(RateSetting setting, const RateConstants& c);

// Where the two statements of the adaptive rate disagree on a constant, pick
// the one printed in the theorem or the one its proof arrives at.
enum class ConstantVariant { theorem_statement, proof_derivation };

struct BoundReport {
  RateSetting setting;
  std::string formula_id;
  std::map<std::string, double> inputs;
  std::vector<double> terms;  // additive terms, value = sum
  double value = 0.0;
  std::string source;         // which guarantee the number belongs to
};

// Non-asymptotic guarantee of the base method after K queries at variance
// sigma^2 (explicit constants):
//   nonconvex   2 beta F / K + sqrt(8 sigma^2 beta F / K)
//   sgd convex  beta D^2 / K + 2 sigma D / sqrt(K)
//   acsa        4 beta D^2 / (K (K+1)) + 4 sigma D / sqrt(3K)
//   psgd        2 D sqrt(G^2 + sigma^2) / sqrt(K)
BoundReport base_rate(RateSetting setting, const RateConstants& c, double K);

// Base rate evaluated at (sigma / sqrt(max{1, tau_hat}), floor(qT / (1 + 2 tau_hat))),
// the guarantee inherited through asynchronous mini-batching.
BoundReport minibatch_rate(RateSetting setting, const RateConstants& c, Round T, double q,
                           Delay tau_hat);

// Order-of-magnitude rate of the mini-batched method, unit constants:
//   nonconvex   (1+tau) beta F / (qT) + sigma sqrt(beta F) / sqrt(qT)
//   sgd convex  (1+tau) beta D^2 / (qT) + D sigma / sqrt(qT)
//   acsa        (1+tau)^2 beta D^2 / (qT)^2 + D sigma / sqrt(qT)
//   psgd        D (sqrt(1+tau) G + sigma) / sqrt(qT)
BoundReport corollary_rates(RateSetting setting, Round T, double q, Delay tau_hat,
                            const RateConstants& c);

// Quantile-adaptive guarantee of the doubling sweep for one q:
//   nonconvex   24 (1+2tau) beta F / (qT) + 24 sigma sqrt(beta F) / sqrt(qT)
//   acsa        192 (1+2tau)^2 beta D^2 / (qT)^2 + {72 | 48} sigma D / sqrt(qT)
//   sgd convex  12 (1+2tau) beta D^2 / (qT) + sqrt(288) sigma D / sqrt(qT)
//   psgd        (D G sqrt(32 (1+2tau)) + {sqrt(48) | sqrt(96)} D sigma) / sqrt(qT)
// The braces list {theorem_statement | proof_derivation}.
BoundReport adaptive_rate(RateSetting setting, const RateConstants& c, Round T, double q,
                          Delay tau_q, ConstantVariant variant = ConstantVariant::theorem_statement);

// ---- lower bounds for fixed-stepsize vanilla asynchronous SGD ----------------

enum class LowerBoundKind { max_delay, small_stepsize };

struct LowerBoundCase {
  LowerBoundKind kind;
  DelaySequence delays;
  Problem problem;
  double w1;
  double eta;
  double beta;
  double w_star;
  double initial_gap;                       // f(w1) - f(w*)
  std::vector<double> predicted_trajectory; // w_1..w_{tau_max+2} (max_delay only)
  double avg_sq_grad_bound;                 // lower bound on (1/T) sum ||grad f(w_t)||^2
  double avg_subopt_bound;                  // lower bound on (1/T) sum f(w_t) - f*
};

// Staircase delays with tau_max and f(w) = (beta/2) w^2. Requires
// eta > 6 / (beta (1 + tau_max)); a smaller eta yields the small-stepsize
// case on the same delays instead.
LowerBoundCase lower_bound_construction(Round T, Delay tau_max, double beta, double w1, double eta);

// f(w) = (eps/2)(w - w*)^2 with eps = min{beta, 1/(2 eta T)} and w* = -1 for
// w1 >= 0 (else +1). Holds for any delay sequence; zero delays by default.
LowerBoundCase lower_bound_small_stepsize(Round T, double beta, double eta, double w1);
LowerBoundCase lower_bound_small_stepsize(const DelaySequence& delays, double beta, double eta,
                                          double w1);

struct LowerBoundReport {
  double trajectory_max_rel_error = 0.0;  // max_delay only
  bool sandwich_holds = true;             // small_stepsize only
  double avg_sq_grad = 0.0;
  double avg_subopt = 0.0;
  double sq_grad_required = 0.0;          // bound after any parity adjustment
  double subopt_required = 0.0;
  bool passed = false;
};

// Simulates deterministic vanilla asynchronous SGD on the case and checks
// every predicted quantity. Odd tau_max gets a factor 2 slack on the averaged
// bounds; the trajectory check is exact for any parity.
LowerBoundReport verify_lower_bound(const LowerBoundCase& c, double trajectory_tol = 1e-12);

struct MachineBoundReport {
  bool applicable;
  double average_delay;
  double bound;  // M - 1
  bool passed;
};

// (1/T) sum d_t <= M - 1 for sequences produced by M machines.
MachineBoundReport machine_bound_check(const DelaySequence& seq);

}  // namespace qasync
