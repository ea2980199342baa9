#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qasync/async_engine.hpp"
#include "qasync/delay_models.hpp"
#include "qasync/optimizers.hpp"
#include "qasync/streaming.hpp"

namespace qasync {

enum class Strictness {
  exact,               // accept iff t_k <= t - d_t
  relaxed_k_minus_2,   // accept iff t_{max(k-2,1)} <= t - d_t
};

const char* to_string(Strictness s);
Strictness strictness_from_string(const std::string& name);

// Arguments of the stale-gradient filter for one delivery.
struct FilterContext {
  Round round;                                  // t
  Delay delay;                                  // d_t
  std::int64_t query_index;                     // k, 1-based within the run
  std::span<const Round> query_start_rounds;    // t_1..t_k
};

using AcceptanceFilter = std::function<bool(const FilterContext&)>;

AcceptanceFilter make_filter(Strictness strictness);

struct MiniBatchConfig {
  double q = 1.0;
  Delay tau_hat_q = 0;
  std::optional<std::int64_t> batch_override;  // experimental B, bypassing max{1, tau_hat}
  Strictness strictness = Strictness::exact;
};

struct MiniBatchSchedule {
  std::int64_t B;
  int K;
  double sigma_eff;
};

// B = max{1, tau_hat}, K = floor(qT / (1 + 2 tau_hat)), sigma_eff = sigma/sqrt(B).
// Throws ScheduleError when K = 0.
MiniBatchSchedule derive_schedule(Round T, double q, Delay tau_hat_q, double sigma);
// Same, honouring config.batch_override: K = floor(qT / (B + tau_hat)).
MiniBatchSchedule derive_schedule(Round T, const MiniBatchConfig& config, double sigma);

// Asynchronous mini-batching around a K-query algorithm: the current query is
// played every round, fresh-enough gradients are averaged with weight 1/B and
// the mean is sent to the inner algorithm after B acceptances.
class AsyncMiniBatch final : public StreamingAlgorithm {
 public:
  AsyncMiniBatch(std::unique_ptr<QueryAlgorithm> inner, std::int64_t batch_size,
                 AcceptanceFilter filter, Round first_round = 1,
                 std::uint64_t first_point_id = 1);

  PlayedPoint play() override;
  bool receive(const Delivery& delivery) override;
  bool done() const override { return finalized_.has_value(); }
  Vector output() const override;

  std::int64_t batch_size() const { return batch_size_; }
  int dispatched() const { return inner_->responses(); }
  int target() const { return inner_->budget(); }
  std::span<const Round> query_start_rounds() const { return starts_; }
  // Id that the next query point will carry.
  std::uint64_t next_point_id() const { return point_id_ + (started_ ? 1 : 0); }
  const std::vector<Vector>& dispatched_batches() const { return batches_; }
  void record_batches(bool on) { record_batches_ = on; }
  // Only valid once done().
  const OptimizerOutput& result() const { return *finalized_; }

 private:
  void begin_query(Round t);

  std::unique_ptr<QueryAlgorithm> inner_;
  std::int64_t batch_size_;
  AcceptanceFilter filter_;
  Round next_round_;
  std::uint64_t point_id_;
  bool started_ = false;
  Vector current_;
  Vector accumulator_;
  std::int64_t filled_ = 0;
  std::vector<Round> starts_;
  std::optional<OptimizerOutput> finalized_;
  bool record_batches_ = false;
  std::vector<Vector> batches_;
};

struct MiniBatchDiagnostics {
  int K_target;
  int K_dispatched;
  std::int64_t used;
  std::int64_t discarded;
  std::int64_t B;
  bool completed;
};

struct MiniBatchResult {
  Vector output;
  RoundLog log;
  MiniBatchDiagnostics diagnostics;
  MiniBatchSchedule schedule;
};

// Derives the schedule from (T, config, sigma), builds the inner method with
// factory(K) and runs it through the engine. An incomplete run (horizon
// exhausted before K dispatches) is reported, not thrown; its output is the
// inner algorithm's current snapshot.
MiniBatchResult run_algorithm1(const QueryAlgorithmFactory& factory, const MiniBatchConfig& config,
                               GradientOracle& oracle, const DelaySequence& delays,
                               const AcceptanceFilter& filter_override = {});

// sup_q floor(qT / (B + tau_q)), exact over the quantile change points.
std::int64_t lemma_update_supremum(const DelayStats& stats, std::int64_t B);

struct LemmaUpdateReport {
  std::int64_t supremum;
  std::int64_t required;    // min(supremum, K_target)
  std::int64_t dispatched;  // from the log: used / B
  bool passed;
};

// Checks that the run dispatched at least min(K_target, sup_q floor(qT/(B+tau_q)))
// batches. K_target <= 0 means an unbounded inner budget.
LemmaUpdateReport verify_lemma_updates(const RoundLog& log, const DelaySequence& delays,
                                       std::int64_t B, std::int64_t K_target = 0);

}  // namespace qasync
