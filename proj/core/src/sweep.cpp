#include "qasync/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <utility>

#include "qasync/errors.hpp"
#include "qasync/optimizers.hpp"

namespace qasync {

namespace {

constexpr double kBatchCap = 4.0e18;

std::int64_t ceil_batch(double x) {
  if (!(x > 1.0)) return 1;
  const double c = std::ceil(x - 1e-12 * x);
  if (c >= kBatchCap) return static_cast<std::int64_t>(kBatchCap);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(c));
}

std::uint64_t epoch_seed(std::uint64_t seed, int i) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(i);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

SweepSchedule::SweepSchedule(RateSetting setting, RateConstants constants)
    : setting_(setting), constants_(constants) {
  validate_constants(setting_, constants_);
}

std::int64_t SweepSchedule::epoch_length(int i) {
  if (i < 1 || i > 62) throw ParameterError("epoch index out of range");
  return std::int64_t{1} << (i - 1);
}

std::int64_t SweepSchedule::batch_size(int i) const {
  const double K = static_cast<double>(epoch_length(i));
  const auto& c = constants_;
  const double s2 = c.sigma * c.sigma;
  switch (setting_) {
    case RateSetting::nonconvex_sgd:
      return ceil_batch(s2 * K / (2.0 * c.beta * c.F));
    case RateSetting::acsa_convex_smooth:
      return ceil_batch(s2 * K * (K + 1.0) * (K + 1.0) / (12.0 * c.beta * c.beta * c.D * c.D));
    case RateSetting::sgd_convex_smooth:
      return ceil_batch(s2 * K / (c.beta * c.beta * c.D * c.D));
    case RateSetting::psgd_convex_lipschitz:
      return ceil_batch(s2 / (c.G * c.G));
  }
  throw ParameterError("unknown setting");
}

double SweepSchedule::inner_step(int i) const {
  const auto& c = constants_;
  switch (setting_) {
    case RateSetting::nonconvex_sgd:
    case RateSetting::sgd_convex_smooth:
      return 1.0 / c.beta;
    case RateSetting::acsa_convex_smooth:
      return 1.0 / (4.0 * c.beta);
    case RateSetting::psgd_convex_lipschitz: {
      const double B = static_cast<double>(batch_size(i));
      const double K = static_cast<double>(epoch_length(i));
      return c.D / std::sqrt((c.G * c.G + c.sigma * c.sigma / B) * K);
    }
  }
  throw ParameterError("unknown setting");
}

bool SweepSchedule::deterministic_branch_binding(int i) const {
  const auto& c = constants_;
  if (c.sigma == 0.0) return true;
  const double K = static_cast<double>(epoch_length(i));
  const double var = c.sigma * c.sigma / static_cast<double>(batch_size(i));
  const double tol = 1.0 - 1e-12;
  switch (setting_) {
    case RateSetting::nonconvex_sgd:
      return std::sqrt(2.0 * c.F / (var * c.beta * K)) >= tol / c.beta;
    case RateSetting::sgd_convex_smooth:
      return std::sqrt(c.D * c.D / (var * K)) >= tol / c.beta;
    case RateSetting::acsa_convex_smooth:
      return std::sqrt(3.0 * c.D * c.D / (4.0 * var * K * (K + 1.0) * (K + 1.0))) >=
             tol / (4.0 * c.beta);
    case RateSetting::psgd_convex_lipschitz:
      return true;
  }
  return false;
}

namespace {

double epoch_metric(RateSetting setting, const Problem& problem, const Vector& w) {
  if (setting == RateSetting::nonconvex_sgd) return problem.gradient(w).squaredNorm();
  return problem.suboptimality(w);
}

// Chains one AsyncMiniBatch per epoch through a single engine run.
class SweepDriver final : public StreamingAlgorithm {
 public:
  SweepDriver(const SweepSchedule& schedule, const Problem& problem, Vector w1,
              std::uint64_t seed, Strictness strictness)
      : schedule_(schedule), problem_(problem), w1_(std::move(w1)), seed_(seed),
        filter_(make_filter(strictness)) {}

  PlayedPoint play() override {
    if (!epoch_ || epoch_->done()) start_epoch();
    return epoch_->play();
  }

  bool receive(const Delivery& delivery) override {
    const bool accepted = epoch_->receive(delivery);
    last_round_ = delivery.round;
    (accepted ? current_.used : current_.discarded) += 1;
    if (epoch_->done()) {
      current_.rounds_consumed = delivery.round - current_.first_round + 1;
      current_.completed = true;
      outputs_.push_back(epoch_->result().w_hat);
      if (problem_.optimal_value || schedule_.setting() == RateSetting::nonconvex_sgd)
        current_.metric = epoch_metric(schedule_.setting(), problem_, outputs_.back());
      epochs_.push_back(current_);
      next_id_ = epoch_->next_point_id();
    }
    return accepted;
  }

  bool done() const override { return false; }
  Vector output() const override { return outputs_.empty() ? w1_ : outputs_.back(); }
  bool open_ended() const override { return true; }

  SweepResult finish(RoundLog log) {
    SweepResult r;
    if (epoch_ && !epoch_->done()) {
      current_.rounds_consumed = last_round_ - current_.first_round + 1;
      epochs_.push_back(current_);
    }
    r.outputs = std::move(outputs_);
    r.final_output = r.outputs.empty() ? w1_ : r.outputs.back();
    r.epochs = std::move(epochs_);
    r.log = std::move(log);
    return r;
  }

 private:
  void start_epoch() {
    ++i_;
    const std::int64_t K64 = SweepSchedule::epoch_length(i_);
    if (K64 > std::numeric_limits<int>::max()) throw ScheduleError("epoch budget overflows");
    const int K = static_cast<int>(K64);
    const std::int64_t B = schedule_.batch_size(i_);
    const double step = schedule_.inner_step(i_);
    std::unique_ptr<QueryAlgorithm> inner;
    switch (schedule_.setting()) {
      case RateSetting::nonconvex_sgd:
      case RateSetting::sgd_convex_smooth:
        inner = std::make_unique<Sgd>(w1_, K, step, SgdOutputRule::uniform_random_iterate,
                                      epoch_seed(seed_, i_));
        break;
      case RateSetting::acsa_convex_smooth:
        inner = std::make_unique<AcSa>(w1_, K, step);
        break;
      case RateSetting::psgd_convex_lipschitz:
        inner = std::make_unique<ProjectedSgd>(w1_, K, step, problem_.domain());
        break;
    }
    const Round first = last_round_ + 1;
    epoch_ = std::make_unique<AsyncMiniBatch>(std::move(inner), B, filter_, first, next_id_);
    current_ = EpochLog{i_, K64, B, first, 0, 0, 0, false, std::nullopt};
  }

  const SweepSchedule& schedule_;
  const Problem& problem_;
  Vector w1_;
  std::uint64_t seed_;
  AcceptanceFilter filter_;
  int i_ = 0;
  Round last_round_ = 0;
  std::uint64_t next_id_ = 1;
  std::unique_ptr<AsyncMiniBatch> epoch_;
  EpochLog current_{};
  std::vector<Vector> outputs_;
  std::vector<EpochLog> epochs_;
};

}  // namespace

SweepResult run_algorithm2(const SweepSchedule& schedule, const Problem& problem,
                           GradientOracle& oracle, const DelaySequence& delays, const Vector& w1,
                           std::uint64_t seed, Strictness strictness) {
  if (w1.size() != problem.dimension()) throw DomainError("w1 has the wrong dimension");
  SweepDriver driver(schedule, problem, w1, seed, strictness);
  RunResult rr = run(driver, oracle, delays);
  return driver.finish(std::move(rr.log));
}

SweepLemmaReport verify_lemma_sweep(const SweepResult& result, const DelaySequence& delays,
                                    const SweepSchedule& schedule) {
  SweepLemmaReport rep{false, true, 0, 0, 0.0, 0.0};
  const int I = result.completed_epochs();
  if (I == 0) return rep;
  rep.applicable = true;
  rep.K_next = SweepSchedule::epoch_length(I + 1);
  rep.B_next = schedule.batch_size(I + 1);
  const DelayStats stats = compute_stats(delays);
  for (const QuantilePoint& p : stats.quantile_points()) {
    // count_le = qT exactly; compare in long double to keep large B exact enough
    const long double rhs = 2.0L * (static_cast<long double>(rep.B_next) + p.tau) *
                            static_cast<long double>(rep.K_next);
    const double ratio = static_cast<double>(static_cast<long double>(p.count_le) / rhs);
    if (ratio > rep.tightest_ratio) {
      rep.tightest_ratio = ratio;
      rep.tightest_q = p.q;
    }
    if (!(static_cast<long double>(p.count_le) < rhs)) rep.passed = false;
  }
  return rep;
}

EnvelopeResult quantile_bound_envelope(RateSetting setting, const DelayStats& stats,
                                       const RateConstants& constants, ConstantVariant variant) {
  EnvelopeResult best{0.0, 0, std::numeric_limits<double>::infinity()};
  const Round T = stats.horizon();
  for (const QuantilePoint& p : stats.quantile_points()) {
    const double v = adaptive_rate(setting, constants, T, p.q, p.tau, variant).value;
    if (v < best.value) best = {p.q, p.tau, v};
  }
  return best;
}

double envelope_at_max_delay(RateSetting setting, const DelayStats& stats,
                             const RateConstants& constants, ConstantVariant variant) {
  return adaptive_rate(setting, constants, stats.horizon(), 1.0, stats.tau_max(), variant).value;
}

void write_epoch_csv(std::ostream& out, const SweepResult& result) {
  out << "i,K_i,B_i,rounds_consumed,used,discarded,metric\n";
  for (const EpochLog& e : result.epochs) {
    out << e.i << ',' << e.K << ',' << e.B << ',' << e.rounds_consumed << ',' << e.used << ','
        << e.discarded << ',';
    if (e.metric) out << *e.metric;
    out << '\n';
  }
}

}  // namespace qasync
