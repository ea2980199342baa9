#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "qasync/async_engine.hpp"
#include "qasync/bounds.hpp"
#include "qasync/delay_models.hpp"
#include "qasync/minibatch.hpp"
#include "qasync/problems.hpp"

namespace qasync {

// Doubling schedule: K_i = 2^{i-1} and a per-setting batch size B_i sized so
// that the inner method's deterministic stepsize branch is the binding one.
class SweepSchedule {
 public:
  SweepSchedule(RateSetting setting, RateConstants constants);

  RateSetting setting() const { return setting_; }
  const RateConstants& constants() const { return constants_; }

  static std::int64_t epoch_length(int i);   // K_i, i >= 1
  std::int64_t batch_size(int i) const;      // B_i, i >= 1

  // Fixed inner stepsize used in every epoch: 1/beta (SGD), 1/(4 beta)
  // (AC-SA); for projected SGD it depends on K_i.
  double inner_step(int i) const;

  // Whether the tuned-min formula at variance sigma^2/B_i selects the same
  // deterministic branch. Only meaningful for the smooth settings.
  bool deterministic_branch_binding(int i) const;

 private:
  RateSetting setting_;
  RateConstants constants_;
};

struct EpochLog {
  int i;
  std::int64_t K;
  std::int64_t B;
  Round first_round;
  Round rounds_consumed;
  std::int64_t used;
  std::int64_t discarded;
  bool completed;
  std::optional<double> metric;  // metric of the epoch output, filled by callers
};

struct SweepResult {
  std::vector<Vector> outputs;  // one per completed epoch
  Vector final_output;          // last output, or w1 when no epoch completed
  std::vector<EpochLog> epochs; // completed epochs followed by the partial one, if any
  RoundLog log;
  int completed_epochs() const { return static_cast<int>(outputs.size()); }
};

// Runs epochs i = 1, 2, ... each with a fresh inner method A(K_i) started at
// w1 and batch size B_i, until the horizon runs out mid-epoch. The partial
// epoch's work is discarded.
SweepResult run_algorithm2(const SweepSchedule& schedule, const Problem& problem,
                           GradientOracle& oracle, const DelaySequence& delays, const Vector& w1,
                           std::uint64_t seed, Strictness strictness = Strictness::exact);

struct SweepLemmaReport {
  bool applicable;  // false when no epoch completed
  bool passed;
  std::int64_t K_next;
  std::int64_t B_next;
  double tightest_q;
  double tightest_ratio;  // qT / (2 (B_{I+1} + tau_q) K_{I+1}), must stay < 1
};

// Checks qT < 2 (B_{I+1} + tau_q) K_{I+1} at every quantile change point.
SweepLemmaReport verify_lemma_sweep(const SweepResult& result, const DelaySequence& delays,
                                    const SweepSchedule& schedule);

struct EnvelopeResult {
  double q;
  Delay tau_q;
  double value;
};

// inf over q of the setting's adaptive rate, exact over the quantile change
// points of the sequence.
EnvelopeResult quantile_bound_envelope(RateSetting setting, const DelayStats& stats,
                                       const RateConstants& constants,
                                       ConstantVariant variant = ConstantVariant::theorem_statement);
// The same expression at q = 1 (tau_1 = tau_max).
double envelope_at_max_delay(RateSetting setting, const DelayStats& stats,
                             const RateConstants& constants,
                             ConstantVariant variant = ConstantVariant::theorem_statement);

// Columns i, K_i, B_i, rounds_consumed, used, discarded, metric.
void write_epoch_csv(std::ostream& out, const SweepResult& result);

}  // namespace qasync
