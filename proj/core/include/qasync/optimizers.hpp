#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "qasync/problems.hpp"
#include "qasync/streaming.hpp"
#include "qasync/types.hpp"

namespace qasync {

struct OptimizerOutput {
  Vector w_hat;
  std::vector<Vector> trace;  // query points, filled when tracing is enabled
};

// K-query stochastic first-order method. Callers alternate query() and
// respond() exactly K times, then call finalize(). Any other order throws
// ContractViolation.
class QueryAlgorithm {
 public:
  explicit QueryAlgorithm(int budget);
  virtual ~QueryAlgorithm() = default;

  QueryAlgorithm(const QueryAlgorithm&) = delete;
  QueryAlgorithm& operator=(const QueryAlgorithm&) = delete;

  const Vector& query();
  void respond(const Vector& gradient);
  OptimizerOutput finalize();

  int budget() const { return budget_; }
  int responses() const { return responses_; }
  bool awaiting_response() const { return awaiting_; }
  bool finished() const { return responses_ == budget_; }

  // Best current estimate without finalizing; used when a run is cut short.
  virtual Vector snapshot() const = 0;

  void enable_trace(bool on) { tracing_ = on; }

 protected:
  virtual Vector next_query() = 0;
  virtual void consume(const Vector& gradient) = 0;
  virtual Vector output() = 0;

 private:
  int budget_;
  int responses_ = 0;
  bool awaiting_ = false;
  bool finalized_ = false;
  bool tracing_ = false;
  Vector current_;
  std::vector<Vector> trace_;
};

using QueryAlgorithmFactory = std::function<std::unique_ptr<QueryAlgorithm>(int budget)>;

// Fixed-step SGD; w_{k+1} = w_k - step * g_k.
enum class SgdOutputRule { uniform_random_iterate, last_iterate };

class Sgd final : public QueryAlgorithm {
 public:
  Sgd(Vector w1, int budget, double step, SgdOutputRule rule, std::uint64_t seed);

  double step() const { return step_; }
  Vector snapshot() const override { return w_; }

 protected:
  Vector next_query() override;
  void consume(const Vector& g) override;
  Vector output() override;

 private:
  Vector w_;
  double step_;
  SgdOutputRule rule_;
  std::mt19937_64 rng_;
  int pick_;  // 0-based index of the returned iterate
  std::optional<Vector> picked_;
  int seen_ = 0;
};

// Projected subgradient method with fixed step, returns the average of the
// query points.
class ProjectedSgd final : public QueryAlgorithm {
 public:
  ProjectedSgd(Vector w1, int budget, double step, Domain domain);

  double step() const { return step_; }
  Vector snapshot() const override;

 protected:
  Vector next_query() override;
  void consume(const Vector& g) override;
  Vector output() override;

 private:
  Vector w_;
  double step_;
  Domain domain_;
  Vector sum_;
  int count_ = 0;
};

// AC-SA with alpha_t = 2/(t+1), gamma_t = gamma * t:
//   md_t = (1 - alpha_t) ag_{t-1} + alpha_t x_{t-1}   (query point)
//   x_t  = x_{t-1} - gamma_t g(md_t)
//   ag_t = (1 - alpha_t) ag_{t-1} + alpha_t x_t
// with x_0 = ag_0 = w1; the output is ag_K.
class AcSa final : public QueryAlgorithm {
 public:
  AcSa(Vector w1, int budget, double gamma);

  double gamma() const { return gamma_; }
  Vector snapshot() const override { return aggregate_; }

 protected:
  Vector next_query() override;
  void consume(const Vector& g) override;
  Vector output() override;

 private:
  Vector x_;
  Vector aggregate_;
  double gamma_;
  int t_ = 0;
};

// Queries one fixed point forever and records every response.
class FixedPointProbe final : public QueryAlgorithm {
 public:
  FixedPointProbe(Vector point, int budget);

  const std::vector<Vector>& responses_seen() const { return seen_; }
  Vector snapshot() const override { return point_; }

 protected:
  Vector next_query() override { return point_; }
  void consume(const Vector& g) override { seen_.push_back(g); }
  Vector output() override { return point_; }

 private:
  Vector point_;
  std::vector<Vector> seen_;
};

// ---- tuned stepsizes --------------------------------------------------------

// min{1/beta, sqrt(2F/(sigma^2 beta K))}; sigma = 0 selects 1/beta.
double rsgd_nonconvex_step(double beta, double F, double sigma, int K);
// min{1/beta, sqrt(D^2/(sigma^2 K))}.
double sgd_convex_smooth_step(double beta, double D, double sigma, int K);
// D / sqrt((G^2 + sigma^2) K).
double psgd_step(double D, double G, double sigma, int K);
// min{1/(4 beta), sqrt(3 D^2 / (4 sigma^2 K (K+1)^2))}.
double acsa_gamma(double beta, double D, double sigma, int K);

// ---- constructors with the tuned schedules ---------------------------------

struct TuningConstants {
  std::optional<double> beta;
  std::optional<double> F;  // >= f(w1) - f*
  std::optional<double> D;  // >= ||w1 - w*|| or the domain diameter
  std::optional<double> G;
};

std::unique_ptr<Sgd> sgd_nonconvex(const Problem& problem, const Vector& w1, int K,
                                   double sigma_in, double F, std::uint64_t seed);
std::unique_ptr<Sgd> sgd_convex_smooth(const Problem& problem, const Vector& w1, int K,
                                       double sigma_in, double D, std::uint64_t seed);
std::unique_ptr<ProjectedSgd> psgd_convex_lipschitz(const Problem& problem, const Vector& w1,
                                                    int K, double sigma_in, double D, double G);
std::unique_ptr<AcSa> acsa_accelerated(const Problem& problem, const Vector& w1, int K,
                                       double sigma_in, double D);

enum class InnerMethod { sgd_nonconvex, sgd_convex_smooth, psgd_convex_lipschitz, acsa };

const char* to_string(InnerMethod m);
InnerMethod inner_method_from_string(const std::string& name);

// Factory building the tuned method for a budget K at variance sigma_in.
QueryAlgorithmFactory tuned_factory(InnerMethod method, const Problem& problem, const Vector& w1,
                                    double sigma_in, const TuningConstants& constants,
                                    std::uint64_t seed);

// Drives a QueryAlgorithm with direct (undelayed) oracle access.
OptimizerOutput run_synchronous(QueryAlgorithm& algorithm, GradientOracle& oracle);

// Vanilla asynchronous SGD: every received gradient, however stale, is
// applied immediately, w_{t+1} = w_t - eta * g_t. Never finishes on its own;
// the engine stops it at the horizon.
class VanillaAsyncSgd final : public StreamingAlgorithm {
 public:
  VanillaAsyncSgd(Vector w1, double eta, bool record_trajectory = false);

  PlayedPoint play() override;
  bool receive(const Delivery& delivery) override;
  bool done() const override { return false; }
  Vector output() const override { return w_; }
  bool open_ended() const override { return true; }

  // w_1, w_2, ... as played, when recording is on.
  const std::vector<Vector>& trajectory() const { return trajectory_; }

 private:
  Vector w_;
  double eta_;
  std::uint64_t id_ = 1;
  bool record_;
  std::vector<Vector> trajectory_;
};

void write_trace_csv(std::ostream& out, const std::vector<Vector>& trace);

}  // namespace qasync
