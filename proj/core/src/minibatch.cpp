#include "qasync/minibatch.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "qasync/errors.hpp"

namespace qasync {

const char* to_string(Strictness s) {
  return s == Strictness::exact ? "exact" : "relaxed_k_minus_2";
}

Strictness strictness_from_string(const std::string& name) {
  if (name == "exact") return Strictness::exact;
  if (name == "relaxed_k_minus_2" || name == "relaxed") return Strictness::relaxed_k_minus_2;
  throw ConfigurationError("unknown strictness '" + name + "'");
}

AcceptanceFilter make_filter(Strictness strictness) {
  if (strictness == Strictness::exact) {
    return [](const FilterContext& c) {
      return c.query_start_rounds[static_cast<std::size_t>(c.query_index - 1)] <=
             c.round - c.delay;
    };
  }
  return [](const FilterContext& c) {
    const std::int64_t ref = std::max<std::int64_t>(c.query_index - 2, 1);
    return c.query_start_rounds[static_cast<std::size_t>(ref - 1)] <= c.round - c.delay;
  };
}

namespace {

void check_quantile_args(Round T, double q, Delay tau_hat_q) {
  if (T < 1) throw ParameterError("schedule: T must be >= 1");
  if (!(q > 0.0 && q <= 1.0)) throw ParameterError("schedule: q must lie in (0, 1]");
  if (tau_hat_q < 0) throw ParameterError("schedule: tau_hat_q must be >= 0");
}

int checked_budget(double k_real) {
  const double k = std::floor(k_real + 1e-9);
  if (k < 1.0) throw ScheduleError("horizon too short for this quantile bound (K = 0)");
  if (k > 2147483647.0) throw ScheduleError("inner budget K overflows");
  return static_cast<int>(k);
}

}  // namespace

MiniBatchSchedule derive_schedule(Round T, double q, Delay tau_hat_q, double sigma) {
  check_quantile_args(T, q, tau_hat_q);
  const std::int64_t B = std::max<std::int64_t>(1, tau_hat_q);
  const int K = checked_budget(q * static_cast<double>(T) / (1.0 + 2.0 * static_cast<double>(tau_hat_q)));
  return {B, K, sigma / std::sqrt(static_cast<double>(B))};
}

MiniBatchSchedule derive_schedule(Round T, const MiniBatchConfig& config, double sigma) {
  if (!config.batch_override) return derive_schedule(T, config.q, config.tau_hat_q, sigma);
  check_quantile_args(T, config.q, config.tau_hat_q);
  const std::int64_t B = *config.batch_override;
  if (B < 1) throw ParameterError("schedule: batch size must be >= 1");
  const int K = checked_budget(config.q * static_cast<double>(T) /
                               static_cast<double>(B + config.tau_hat_q));
  return {B, K, sigma / std::sqrt(static_cast<double>(B))};
}

// ---- AsyncMiniBatch --------------------------------------------------------

AsyncMiniBatch::AsyncMiniBatch(std::unique_ptr<QueryAlgorithm> inner, std::int64_t batch_size,
                               AcceptanceFilter filter, Round first_round,
                               std::uint64_t first_point_id)
    : inner_(std::move(inner)), batch_size_(batch_size), filter_(std::move(filter)),
      next_round_(first_round), point_id_(first_point_id) {
  if (!inner_) throw ParameterError("mini-batching needs an inner algorithm");
  if (batch_size_ < 1) throw ParameterError("batch size must be >= 1");
  if (!filter_) throw ParameterError("mini-batching needs an acceptance filter");
}

void AsyncMiniBatch::begin_query(Round t) {
  current_ = inner_->query();
  if (started_) ++point_id_;
  started_ = true;
  starts_.push_back(t);
  accumulator_ = Vector::Zero(current_.size());
  filled_ = 0;
}

PlayedPoint AsyncMiniBatch::play() {
  if (done()) throw ContractViolation("mini-batching already finished");
  if (!inner_->awaiting_response()) begin_query(next_round_);
  return {point_id_, current_};
}

bool AsyncMiniBatch::receive(const Delivery& delivery) {
  if (!started_ || done()) throw ContractViolation("receive() without a played query");
  next_round_ = delivery.round + 1;
  const FilterContext ctx{delivery.round, delivery.delay, static_cast<std::int64_t>(starts_.size()),
                          starts_};
  if (!filter_(ctx)) return false;

  accumulator_ += delivery.gradient / static_cast<double>(batch_size_);
  if (++filled_ == batch_size_) {
    if (record_batches_) batches_.push_back(accumulator_);
    inner_->respond(accumulator_);
    if (inner_->finished()) finalized_ = inner_->finalize();
  }
  return true;
}

Vector AsyncMiniBatch::output() const {
  return finalized_ ? finalized_->w_hat : inner_->snapshot();
}

// ---- Algorithm 1 driver ----------------------------------------------------

MiniBatchResult run_algorithm1(const QueryAlgorithmFactory& factory, const MiniBatchConfig& config,
                               GradientOracle& oracle, const DelaySequence& delays,
                               const AcceptanceFilter& filter_override) {
  const MiniBatchSchedule schedule = derive_schedule(delays.horizon(), config, oracle.sigma());
  AsyncMiniBatch wrapper(factory(schedule.K), schedule.B,
                         filter_override ? filter_override : make_filter(config.strictness));
  RunResult run_result = run(wrapper, oracle, delays);
  MiniBatchDiagnostics diag{schedule.K, wrapper.dispatched(), run_result.log.used,
                            run_result.log.discarded, schedule.B, run_result.completed};
  return {std::move(run_result.output), std::move(run_result.log), diag, schedule};
}

std::int64_t lemma_update_supremum(const DelayStats& stats, std::int64_t B) {
  std::int64_t best = 0;
  for (const QuantilePoint& p : stats.quantile_points()) {
    best = std::max<std::int64_t>(best, p.count_le / (B + p.tau));
  }
  return best;
}

LemmaUpdateReport verify_lemma_updates(const RoundLog& log, const DelaySequence& delays,
                                       std::int64_t B, std::int64_t K_target) {
  if (B < 1) throw ParameterError("lemma check: B must be >= 1");
  const std::int64_t sup = lemma_update_supremum(compute_stats(delays), B);
  const std::int64_t required = K_target > 0 ? std::min(sup, K_target) : sup;
  const std::int64_t dispatched = log.used / B;
  return {sup, required, dispatched, dispatched >= required};
}

}  // namespace qasync
