#include "qasync/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "qasync/errors.hpp"

namespace qasync {

QueryAlgorithm::QueryAlgorithm(int budget) : budget_(budget) {
  if (budget < 1) throw ParameterError("query budget K must be >= 1");
}

const Vector& QueryAlgorithm::query() {
  if (awaiting_) throw ContractViolation("query() called twice without a response");
  if (finished()) throw ContractViolation("query budget exhausted");
  current_ = next_query();
  if (tracing_) trace_.push_back(current_);
  awaiting_ = true;
  return current_;
}

void QueryAlgorithm::respond(const Vector& gradient) {
  if (!awaiting_) throw ContractViolation("respond() called without an outstanding query");
  awaiting_ = false;
  ++responses_;
  consume(gradient);
}

OptimizerOutput QueryAlgorithm::finalize() {
  if (!finished()) throw ContractViolation("finalize() called before K responses");
  if (finalized_) throw ContractViolation("finalize() called twice");
  finalized_ = true;
  return {output(), std::move(trace_)};
}

// ---- SGD -------------------------------------------------------------------

Sgd::Sgd(Vector w1, int budget, double step, SgdOutputRule rule, std::uint64_t seed)
    : QueryAlgorithm(budget), w_(std::move(w1)), step_(step), rule_(rule), rng_(seed) {
  if (!(step > 0.0)) throw ParameterError("sgd: step must be positive");
  pick_ = rule_ == SgdOutputRule::uniform_random_iterate
              ? std::uniform_int_distribution<int>(0, budget - 1)(rng_)
              : budget - 1;
}

Vector Sgd::next_query() {
  if (seen_ == pick_) picked_ = w_;
  ++seen_;
  return w_;
}

void Sgd::consume(const Vector& g) { w_ -= step_ * g; }

Vector Sgd::output() {
  if (rule_ == SgdOutputRule::last_iterate) return w_;
  return *picked_;
}

// ---- projected SGD ---------------------------------------------------------

ProjectedSgd::ProjectedSgd(Vector w1, int budget, double step, Domain domain)
    : QueryAlgorithm(budget), w_(std::move(w1)), step_(step), domain_(std::move(domain)),
      sum_(Vector::Zero(w_.size())) {
  if (!(step > 0.0)) throw ParameterError("psgd: step must be positive");
  if (!domain_.contains(w_)) throw DomainError("psgd: w1 outside the domain");
}

Vector ProjectedSgd::snapshot() const { return count_ > 0 ? Vector(sum_ / count_) : w_; }

Vector ProjectedSgd::next_query() {
  sum_ += w_;
  ++count_;
  return w_;
}

void ProjectedSgd::consume(const Vector& g) { w_ = domain_.project(w_ - step_ * g); }

Vector ProjectedSgd::output() { return domain_.project(sum_ / count_); }

// ---- AC-SA -----------------------------------------------------------------

AcSa::AcSa(Vector w1, int budget, double gamma)
    : QueryAlgorithm(budget), x_(w1), aggregate_(std::move(w1)), gamma_(gamma) {
  if (!(gamma > 0.0)) throw ParameterError("acsa: gamma must be positive");
}

Vector AcSa::next_query() {
  const double alpha = 2.0 / (t_ + 2.0);  // alpha_{t+1}
  return (1.0 - alpha) * aggregate_ + alpha * x_;
}

void AcSa::consume(const Vector& g) {
  ++t_;
  const double alpha = 2.0 / (t_ + 1.0);
  x_ -= (gamma_ * t_) * g;
  aggregate_ = (1.0 - alpha) * aggregate_ + alpha * x_;
}

Vector AcSa::output() { return aggregate_; }

// ---- probe -----------------------------------------------------------------

FixedPointProbe::FixedPointProbe(Vector point, int budget)
    : QueryAlgorithm(budget), point_(std::move(point)) {}

// ---- stepsize schedules ----------------------------------------------------

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw ParameterError(std::string(what) + " must be positive");
}

}  // namespace

double rsgd_nonconvex_step(double beta, double F, double sigma, int K) {
  require_positive(beta, "beta");
  require_positive(F, "F");
  if (sigma == 0.0) return 1.0 / beta;
  return std::min(1.0 / beta, std::sqrt(2.0 * F / (sigma * sigma * beta * K)));
}

double sgd_convex_smooth_step(double beta, double D, double sigma, int K) {
  require_positive(beta, "beta");
  require_positive(D, "D");
  if (sigma == 0.0) return 1.0 / beta;
  return std::min(1.0 / beta, std::sqrt(D * D / (sigma * sigma * K)));
}

double psgd_step(double D, double G, double sigma, int K) {
  require_positive(D, "D");
  require_positive(G, "G");
  return D / std::sqrt((G * G + sigma * sigma) * K);
}

double acsa_gamma(double beta, double D, double sigma, int K) {
  require_positive(beta, "beta");
  require_positive(D, "D");
  if (sigma == 0.0) return 1.0 / (4.0 * beta);
  const double k = K;
  return std::min(1.0 / (4.0 * beta),
                  std::sqrt(3.0 * D * D / (4.0 * sigma * sigma * k * (k + 1.0) * (k + 1.0))));
}

namespace {

double need_beta(const Problem& problem) {
  if (!problem.smoothness) throw ConfigurationError("method requires a smoothness constant beta");
  return *problem.smoothness;
}

}  // namespace

std::unique_ptr<Sgd> sgd_nonconvex(const Problem& problem, const Vector& w1, int K,
                                   double sigma_in, double F, std::uint64_t seed) {
  const double beta = need_beta(problem);
  return std::make_unique<Sgd>(w1, K, rsgd_nonconvex_step(beta, F, sigma_in, K),
                               SgdOutputRule::uniform_random_iterate, seed);
}

std::unique_ptr<Sgd> sgd_convex_smooth(const Problem& problem, const Vector& w1, int K,
                                       double sigma_in, double D, std::uint64_t seed) {
  const double beta = need_beta(problem);
  return std::make_unique<Sgd>(w1, K, sgd_convex_smooth_step(beta, D, sigma_in, K),
                               SgdOutputRule::uniform_random_iterate, seed);
}

std::unique_ptr<ProjectedSgd> psgd_convex_lipschitz(const Problem& problem, const Vector& w1,
                                                    int K, double sigma_in, double D, double G) {
  if (!problem.domain().bounded())
    throw ConfigurationError("projected SGD requires a bounded domain");
  if (problem.domain().diameter() > D * (1.0 + 1e-12))
    throw ConfigurationError("projected SGD: D is smaller than the domain diameter");
  return std::make_unique<ProjectedSgd>(w1, K, psgd_step(D, G, sigma_in, K), problem.domain());
}

std::unique_ptr<AcSa> acsa_accelerated(const Problem& problem, const Vector& w1, int K,
                                       double sigma_in, double D) {
  const double beta = need_beta(problem);
  return std::make_unique<AcSa>(w1, K, acsa_gamma(beta, D, sigma_in, K));
}

const char* to_string(InnerMethod m) {
  switch (m) {
    case InnerMethod::sgd_nonconvex:
      return "sgd_nonconvex";
    case InnerMethod::sgd_convex_smooth:
      return "sgd_convex_smooth";
    case InnerMethod::psgd_convex_lipschitz:
      return "psgd_convex_lipschitz";
    case InnerMethod::acsa:
      return "acsa";
  }
  return "unknown";
}

InnerMethod inner_method_from_string(const std::string& name) {
  for (auto m : {InnerMethod::sgd_nonconvex, InnerMethod::sgd_convex_smooth,
                 InnerMethod::psgd_convex_lipschitz, InnerMethod::acsa}) {
    if (name == to_string(m)) return m;
  }
  throw ConfigurationError("unknown inner method '" + name + "'");
}

QueryAlgorithmFactory tuned_factory(InnerMethod method, const Problem& problem, const Vector& w1,
                                    double sigma_in, const TuningConstants& c,
                                    std::uint64_t seed) {
  auto need = [](const std::optional<double>& v, const char* what) {
    if (!v) throw ConfigurationError(std::string("method requires constant ") + what);
    return *v;
  };
  switch (method) {
    case InnerMethod::sgd_nonconvex: {
      const double F = need(c.F, "F");
      need_beta(problem);
      return [=](int K) -> std::unique_ptr<QueryAlgorithm> {
        return sgd_nonconvex(problem, w1, K, sigma_in, F, seed);
      };
    }
    case InnerMethod::sgd_convex_smooth: {
      const double D = need(c.D, "D");
      need_beta(problem);
      return [=](int K) -> std::unique_ptr<QueryAlgorithm> {
        return sgd_convex_smooth(problem, w1, K, sigma_in, D, seed);
      };
    }
    case InnerMethod::psgd_convex_lipschitz: {
      const double D = need(c.D, "D");
      const double G = need(c.G, "G");
      if (!problem.domain().bounded())
        throw ConfigurationError("projected SGD requires a bounded domain");
      return [=](int K) -> std::unique_ptr<QueryAlgorithm> {
        return psgd_convex_lipschitz(problem, w1, K, sigma_in, D, G);
      };
    }
    case InnerMethod::acsa: {
      const double D = need(c.D, "D");
      need_beta(problem);
      return [=](int K) -> std::unique_ptr<QueryAlgorithm> {
        return acsa_accelerated(problem, w1, K, sigma_in, D);
      };
    }
  }
  throw ConfigurationError("unknown inner method");
}

OptimizerOutput run_synchronous(QueryAlgorithm& algorithm, GradientOracle& oracle) {
  while (!algorithm.finished()) {
    const Vector& w = algorithm.query();
    algorithm.respond(oracle.sample(w));
  }
  return algorithm.finalize();
}

// ---- vanilla asynchronous SGD ----------------------------------------------

VanillaAsyncSgd::VanillaAsyncSgd(Vector w1, double eta, bool record_trajectory)
    : w_(std::move(w1)), eta_(eta), record_(record_trajectory) {
  if (!(eta > 0.0)) throw ParameterError("vanilla async SGD: eta must be positive");
}

PlayedPoint VanillaAsyncSgd::play() {
  if (record_) trajectory_.push_back(w_);
  return {id_, w_};
}

bool VanillaAsyncSgd::receive(const Delivery& delivery) {
  w_ -= eta_ * delivery.gradient;
  ++id_;
  return true;
}

void write_trace_csv(std::ostream& out, const std::vector<Vector>& trace) {
  out << "k";
  const Eigen::Index d = trace.empty() ? 0 : trace.front().size();
  for (Eigen::Index i = 0; i < d; ++i) out << ",w" << i;
  out << ",norm\n";
  out.precision(17);
  for (std::size_t k = 0; k < trace.size(); ++k) {
    out << (k + 1);
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << trace[k][i];
    out << ',' << trace[k].norm() << '\n';
  }
}

}  // namespace qasync
