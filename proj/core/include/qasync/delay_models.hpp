#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qasync/types.hpp"

namespace qasync {

enum class DelayOrigin { scripted, machine_simulated };

// Immutable delay sequence d_1..d_T with d_t <= t-1 for every t.
class DelaySequence {
 public:
  // Throws ProtocolError if the sequence is empty or infeasible.
  explicit DelaySequence(std::vector<Delay> delays, DelayOrigin origin = DelayOrigin::scripted,
                         int machines = 0);

  Round horizon() const { return static_cast<Round>(delays_.size()); }
  // 1-based access, t in [1, T].
  Delay at(Round t) const { return delays_[static_cast<std::size_t>(t - 1)]; }
  std::span<const Delay> values() const { return delays_; }

  DelayOrigin origin() const { return origin_; }
  // Worker count for machine_simulated sequences, 0 otherwise.
  int machines() const { return machines_; }

  friend bool operator==(const DelaySequence&, const DelaySequence&) = default;

 private:
  std::vector<Delay> delays_;
  DelayOrigin origin_;
  int machines_;
};

// Point on the quantile function: q = count_le / T is the largest q whose
// q-quantile equals `tau`.
struct QuantilePoint {
  Delay tau;
  Round count_le;  // #{t : d_t <= tau}
  double q;
};

// Summary statistics of a delay sequence. The quantile is the minimal
// integer tau with Pr(d <= tau) >= q and Pr(d >= tau) >= 1-q under the
// uniform distribution over the sequence.
class DelayStats {
 public:
  explicit DelayStats(std::span<const Delay> delays);

  Round horizon() const { return static_cast<Round>(sorted_.size()); }
  double tau_avg() const { return tau_avg_; }
  Delay tau_med() const { return quantile(0.5); }
  Delay tau_max() const { return sorted_.back(); }

  // q in (0, 1]; throws ParameterError otherwise.
  Delay quantile(double q) const;

  // One entry per distinct delay value, increasing in tau. These are exactly
  // the points where the quantile function changes value.
  std::vector<QuantilePoint> quantile_points() const;

  std::span<const Delay> sorted() const { return sorted_; }

 private:
  std::vector<Delay> sorted_;
  double tau_avg_;
};

DelayStats compute_stats(const DelaySequence& seq);

// Rounds with Pr(d <= tau) >= q must number at least this many.
Round required_count(double q, Round horizon);

// ---- generators -----------------------------------------------------------

// d_t = min(tau, t-1).
DelaySequence constant_delay(Round T, Delay tau);

// d_t = t-1 for t <= tau_max+1, 0 afterwards.
DelaySequence staircase_adversarial(Round T, Delay tau_max);

// d_t = 0 for t <= T/2+1, t-1 otherwise. T even, T >= 4.
DelaySequence half_outlier(Round T);

// One worker n times faster than the M-1 others: d_t = 0 for t <= n, t-1
// otherwise, with T = n + M - 1.
DelaySequence one_fast_machine(Round n, int M);

// Per-worker compute-time model: with probability fast_probability the time
// is shift + Poisson(base_rate), otherwise shift + Poisson(slow_multiplier *
// base_rate). A fixed_compute_time replaces the random draw (testing aid).
struct WorkerSchedule {
  int workers = 1;
  double base_rate = 4.06;
  double fast_probability = 0.92;
  double slow_multiplier = 150.0;
  std::int64_t shift = 1;
  std::uint64_t seed = 0;
  std::optional<std::int64_t> fixed_compute_time;
};

// Two-phase simulation. Workers start at time 0 on w_1; each delivered
// gradient is one round. A worker that delivers at round t restarts on the
// model current at round t+1. Ties are delivered lowest worker index first.
DelaySequence simulate_workers(Round T, const WorkerSchedule& schedule);

// Witness that the sequence can be produced by a set of machines: the number
// of machines needed, or nullopt if no machine assignment exists.
std::optional<int> minimal_machine_count(const DelaySequence& seq);

}  // namespace qasync
