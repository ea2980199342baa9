#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>

#include "qasync/types.hpp"

namespace qasync {

enum class DomainKind { unconstrained, ball };

// Feasible set of a problem: all of R^d, or a closed Euclidean ball.
struct Domain {
  DomainKind kind = DomainKind::unconstrained;
  Vector center;
  double radius = 0.0;

  static Domain unconstrained();
  static Domain ball(Vector center, double radius);

  bool contains(const Vector& w, double rel_tol = 1e-12) const;
  Vector project(const Vector& w) const;
  bool bounded() const { return kind == DomainKind::ball; }
  double diameter() const;
};

enum class ProblemKind { quadratic, nonconvex_smooth, convex_lipschitz };

const char* to_string(ProblemKind kind);

// Analytic objective f with (sub)gradient. Implementations are immutable.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual double value(const Vector& w) const = 0;
  virtual Vector gradient(const Vector& w) const = 0;
};

// Benchmark objective plus the constants the optimizer schedules consume.
// Constants that do not apply to a problem class are left empty.
class Problem {
 public:
  Problem(ProblemKind kind, int dimension, std::shared_ptr<const Objective> objective,
          Domain domain);

  ProblemKind kind() const { return kind_; }
  int dimension() const { return dimension_; }
  const Domain& domain() const { return domain_; }

  double value(const Vector& w) const { return objective_->value(w); }
  Vector gradient(const Vector& w) const { return objective_->gradient(w); }

  // f(w) - f*; requires a known optimal value.
  double suboptimality(const Vector& w) const;

  std::optional<double> smoothness;     // beta
  std::optional<double> lipschitz;      // G
  std::optional<double> optimal_value;  // f*, or a certified lower bound
  std::optional<Vector> minimizer;      // w*
  bool convex = false;

 private:
  ProblemKind kind_;
  int dimension_;
  std::shared_ptr<const Objective> objective_;
  Domain domain_;
};

// f(w) = (beta/2) ||w - w_star||^2 on R^d.
Problem make_quadratic(int dimension, double beta, const Vector& w_star);
Problem make_quadratic(int dimension, double beta);

// f(w) = (beta/2) sum_i w_i^2 / (1 + w_i^2). Separable, smooth with Hessian
// eigenvalues in [-beta/4, beta], f* = 0 attained at the origin, nonconvex
// for |w_i| > 1/sqrt(3).
Problem make_nonconvex_smooth(int dimension, double beta);

// f(w) = G ||w - w_star|| restricted to the ball of diameter D centred at
// `center`. w_star must lie in that ball.
Problem make_convex_lipschitz(int dimension, double G, double D, const Vector& w_star,
                              const Vector& center);
Problem make_convex_lipschitz(int dimension, double G, double D);

// Unbiased stochastic gradient oracle with isotropic Gaussian noise scaled so
// that E||xi||^2 = sigma^2 exactly. Stateful: each call advances the stream.
class GradientOracle {
 public:
  GradientOracle(Problem problem, double sigma, std::uint64_t seed);

  Vector sample(const Vector& w);

  const Problem& problem() const { return problem_; }
  double sigma() const { return sigma_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t calls() const { return calls_; }

 private:
  Problem problem_;
  double sigma_;
  std::uint64_t seed_;
  std::uint64_t calls_ = 0;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace qasync
