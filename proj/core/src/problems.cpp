#include "qasync/problems.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "qasync/errors.hpp"

namespace qasync {

Domain Domain::unconstrained() { return Domain{}; }

Domain Domain::ball(Vector center, double radius) {
  if (!(radius > 0.0)) throw ParameterError("ball radius must be positive");
  Domain d;
  d.kind = DomainKind::ball;
  d.center = std::move(center);
  d.radius = radius;
  return d;
}

bool Domain::contains(const Vector& w, double rel_tol) const {
  if (kind == DomainKind::unconstrained) return true;
  return (w - center).norm() <= radius * (1.0 + rel_tol);
}

Vector Domain::project(const Vector& w) const {
  if (kind == DomainKind::unconstrained) return w;
  const Vector offset = w - center;
  const double dist = offset.norm();
  if (dist <= radius) return w;
  return center + offset * (radius / dist);
}

double Domain::diameter() const {
  return kind == DomainKind::ball ? 2.0 * radius : std::numeric_limits<double>::infinity();
}

const char* to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::quadratic:
      return "quadratic";
    case ProblemKind::nonconvex_smooth:
      return "nonconvex_smooth";
    case ProblemKind::convex_lipschitz:
      return "convex_lipschitz";
  }
  return "unknown";
}

Problem::Problem(ProblemKind kind, int dimension, std::shared_ptr<const Objective> objective,
                 Domain domain)
    : kind_(kind), dimension_(dimension), objective_(std::move(objective)),
      domain_(std::move(domain)) {}

double Problem::suboptimality(const Vector& w) const {
  if (!optimal_value) throw ConfigurationError("problem has no known optimal value");
  return value(w) - *optimal_value;
}

namespace {

class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(double beta, Vector w_star) : beta_(beta), w_star_(std::move(w_star)) {}

  double value(const Vector& w) const override {
    return 0.5 * beta_ * (w - w_star_).squaredNorm();
  }
  Vector gradient(const Vector& w) const override { return beta_ * (w - w_star_); }

 private:
  double beta_;
  Vector w_star_;
};

class SmoothWellObjective final : public Objective {
 public:
  explicit SmoothWellObjective(double beta) : scale_(0.5 * beta) {}

  double value(const Vector& w) const override {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double x2 = w[i] * w[i];
      sum += x2 / (1.0 + x2);
    }
    return scale_ * sum;
  }

  Vector gradient(const Vector& w) const override {
    Vector g(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double s = 1.0 + w[i] * w[i];
      g[i] = scale_ * 2.0 * w[i] / (s * s);
    }
    return g;
  }

 private:
  double scale_;
};

class NormObjective final : public Objective {
 public:
  NormObjective(double G, Vector w_star) : G_(G), w_star_(std::move(w_star)) {}

  double value(const Vector& w) const override { return G_ * (w - w_star_).norm(); }

  Vector gradient(const Vector& w) const override {
    const Vector offset = w - w_star_;
    const double n = offset.norm();
    // kink: the zero vector is a valid subgradient
    if (n == 0.0) return Vector::Zero(w.size());
    return (G_ / n) * offset;
  }

 private:
  double G_;
  Vector w_star_;
};

void check_dimension(int dimension) {
  if (dimension < 1) throw ParameterError("dimension must be >= 1");
}

}  // namespace

Problem make_quadratic(int dimension, double beta, const Vector& w_star) {
  check_dimension(dimension);
  if (!(beta > 0.0)) throw ParameterError("quadratic: beta must be positive");
  if (w_star.size() != dimension) throw ParameterError("quadratic: w_star has wrong dimension");
  Problem p(ProblemKind::quadratic, dimension,
            std::make_shared<QuadraticObjective>(beta, w_star), Domain::unconstrained());
  p.smoothness = beta;
  p.optimal_value = 0.0;
  p.minimizer = w_star;
  p.convex = true;
  return p;
}

Problem make_quadratic(int dimension, double beta) {
  check_dimension(dimension);
  return make_quadratic(dimension, beta, Vector::Zero(dimension));
}

Problem make_nonconvex_smooth(int dimension, double beta) {
  check_dimension(dimension);
  if (!(beta > 0.0)) throw ParameterError("nonconvex_smooth: beta must be positive");
  Problem p(ProblemKind::nonconvex_smooth, dimension, std::make_shared<SmoothWellObjective>(beta),
            Domain::unconstrained());
  p.smoothness = beta;
  p.optimal_value = 0.0;
  p.minimizer = Vector::Zero(dimension);
  p.convex = false;
  return p;
}

Problem make_convex_lipschitz(int dimension, double G, double D, const Vector& w_star,
                              const Vector& center) {
  check_dimension(dimension);
  if (!(G > 0.0)) throw ParameterError("convex_lipschitz: G must be positive");
  if (!(D > 0.0)) throw ParameterError("convex_lipschitz: D must be positive");
  if (w_star.size() != dimension || center.size() != dimension)
    throw ParameterError("convex_lipschitz: point has wrong dimension");
  Domain domain = Domain::ball(center, 0.5 * D);
  if (!domain.contains(w_star)) throw ParameterError("convex_lipschitz: w_star outside the ball");
  Problem p(ProblemKind::convex_lipschitz, dimension, std::make_shared<NormObjective>(G, w_star),
            std::move(domain));
  p.lipschitz = G;
  p.optimal_value = 0.0;
  p.minimizer = w_star;
  p.convex = true;
  return p;
}

Problem make_convex_lipschitz(int dimension, double G, double D) {
  check_dimension(dimension);
  return make_convex_lipschitz(dimension, G, D, Vector::Zero(dimension), Vector::Zero(dimension));
}

GradientOracle::GradientOracle(Problem problem, double sigma, std::uint64_t seed)
    : problem_(std::move(problem)), sigma_(sigma), seed_(seed), rng_(seed) {
  if (!(sigma >= 0.0)) throw ParameterError("oracle: sigma must be nonnegative");
}

Vector GradientOracle::sample(const Vector& w) {
  if (w.size() != problem_.dimension()) throw DomainError("oracle: point has wrong dimension");
  if (!problem_.domain().contains(w)) throw DomainError("oracle: point outside the domain");
  ++calls_;
  Vector g = problem_.gradient(w);
  if (sigma_ > 0.0) {
    const double per_coord = sigma_ / std::sqrt(static_cast<double>(w.size()));
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] += per_coord * normal_(rng_);
  }
  return g;
}

}  // namespace qasync
