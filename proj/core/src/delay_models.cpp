#include "qasync/delay_models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <random>
#include <string>
#include <utility>

#include "qasync/errors.hpp"

namespace qasync {

DelaySequence::DelaySequence(std::vector<Delay> delays, DelayOrigin origin, int machines)
    : delays_(std::move(delays)), origin_(origin),
      machines_(origin == DelayOrigin::machine_simulated ? machines : 0) {
  if (delays_.empty()) throw ProtocolError("delay sequence must be nonempty");
  for (std::size_t i = 0; i < delays_.size(); ++i) {
    const Round t = static_cast<Round>(i) + 1;
    if (delays_[i] < 0 || delays_[i] > t - 1) {
      throw ProtocolError("infeasible delay d_" + std::to_string(t) + " = " +
                          std::to_string(delays_[i]) + " (must lie in [0, t-1])");
    }
  }
  if (origin_ == DelayOrigin::machine_simulated && machines_ < 1)
    throw ParameterError("machine-simulated sequence needs a worker count >= 1");
}

Round required_count(double q, Round horizon) {
  // Tolerance absorbs q = n/T round-off so that n rounds suffice.
  return static_cast<Round>(std::ceil(q * static_cast<double>(horizon) - 1e-9));
}

DelayStats::DelayStats(std::span<const Delay> delays) : sorted_(delays.begin(), delays.end()) {
  if (sorted_.empty()) throw ParameterError("delay statistics need a nonempty sequence");
  std::sort(sorted_.begin(), sorted_.end());
  // Delays are integers bounded by T, so the integer sum is exact.
  const long double sum = std::accumulate(sorted_.begin(), sorted_.end(), 0.0L);
  tau_avg_ = static_cast<double>(sum / static_cast<long double>(sorted_.size()));
}

Delay DelayStats::quantile(double q) const {
  if (!(q > 0.0 && q <= 1.0)) throw ParameterError("quantile level must lie in (0, 1]");
  // The minimal valid value is the smallest observed delay whose empirical
  // CDF reaches q; such a value also leaves at least 1-q of the mass at or
  // above it.
  const Round need = std::max<Round>(1, required_count(q, horizon()));
  return sorted_[static_cast<std::size_t>(std::min(need, horizon()) - 1)];
}

std::vector<QuantilePoint> DelayStats::quantile_points() const {
  std::vector<QuantilePoint> points;
  const Round T = horizon();
  for (std::size_t i = 0; i < sorted_.size(); ++i) {
    if (i + 1 < sorted_.size() && sorted_[i + 1] == sorted_[i]) continue;
    const Round count = static_cast<Round>(i) + 1;
    points.push_back({sorted_[i], count, static_cast<double>(count) / static_cast<double>(T)});
  }
  return points;
}

DelayStats compute_stats(const DelaySequence& seq) { return DelayStats(seq.values()); }

DelaySequence constant_delay(Round T, Delay tau) {
  if (T < 1) throw ParameterError("constant_delay: T must be >= 1");
  if (tau < 0 || tau > T - 1) throw ParameterError("constant_delay: tau must lie in [0, T-1]");
  std::vector<Delay> d(static_cast<std::size_t>(T));
  for (Round t = 1; t <= T; ++t) d[static_cast<std::size_t>(t - 1)] = std::min(tau, t - 1);
  return DelaySequence(std::move(d));
}

DelaySequence staircase_adversarial(Round T, Delay tau_max) {
  if (tau_max < 1 || tau_max > T - 2)
    throw ParameterError("staircase_adversarial: tau_max must lie in [1, T-2]");
  std::vector<Delay> d(static_cast<std::size_t>(T), 0);
  for (Round t = 1; t <= tau_max + 1; ++t) d[static_cast<std::size_t>(t - 1)] = t - 1;
  return DelaySequence(std::move(d));
}

DelaySequence half_outlier(Round T) {
  if (T < 4 || T % 2 != 0) throw ParameterError("half_outlier: T must be even and >= 4");
  std::vector<Delay> d(static_cast<std::size_t>(T), 0);
  for (Round t = T / 2 + 2; t <= T; ++t) d[static_cast<std::size_t>(t - 1)] = t - 1;
  return DelaySequence(std::move(d));
}

DelaySequence one_fast_machine(Round n, int M) {
  if (n < 1) throw ParameterError("one_fast_machine: n must be >= 1");
  if (M < 2) throw ParameterError("one_fast_machine: M must be >= 2");
  const Round T = n + M - 1;
  std::vector<Delay> d(static_cast<std::size_t>(T), 0);
  for (Round t = n + 1; t <= T; ++t) d[static_cast<std::size_t>(t - 1)] = t - 1;
  return DelaySequence(std::move(d));
}

namespace {

// splitmix64 finalizer; derives independent per-worker stream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class ComputeTimeStream {
 public:
  ComputeTimeStream(const WorkerSchedule& s, int worker)
      : schedule_(&s), rng_(mix_seed(s.seed, static_cast<std::uint64_t>(worker))),
        pick_(s.fast_probability), fast_(s.base_rate),
        slow_(s.slow_multiplier * s.base_rate) {}

  std::int64_t next() {
    if (schedule_->fixed_compute_time) return *schedule_->fixed_compute_time;
    const std::int64_t draw = pick_(rng_) ? fast_(rng_) : slow_(rng_);
    return schedule_->shift + draw;
  }

 private:
  const WorkerSchedule* schedule_;
  std::mt19937_64 rng_;
  std::bernoulli_distribution pick_;
  std::poisson_distribution<std::int64_t> fast_;
  std::poisson_distribution<std::int64_t> slow_;
};

struct Completion {
  std::int64_t time;
  int worker;
  bool operator>(const Completion& o) const {
    return time != o.time ? time > o.time : worker > o.worker;
  }
};

}  // namespace

DelaySequence simulate_workers(Round T, const WorkerSchedule& schedule) {
  if (T < 1) throw ParameterError("simulate_workers: T must be >= 1");
  if (schedule.workers < 1) throw ParameterError("simulate_workers: need at least one worker");
  if (!(schedule.base_rate > 0.0)) throw ParameterError("simulate_workers: P must be positive");
  if (!(schedule.fast_probability >= 0.0 && schedule.fast_probability <= 1.0))
    throw ParameterError("simulate_workers: mixture weight must lie in [0, 1]");
  if (schedule.shift < 1 && !schedule.fixed_compute_time)
    throw ParameterError("simulate_workers: shift must be >= 1 so compute times are >= 1");
  if (schedule.fixed_compute_time && *schedule.fixed_compute_time < 1)
    throw ParameterError("simulate_workers: fixed compute time must be >= 1");

  const int M = schedule.workers;
  std::vector<ComputeTimeStream> streams;
  streams.reserve(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) streams.emplace_back(schedule, m);

  // Round whose model each worker is currently computing on.
  std::vector<Round> source(static_cast<std::size_t>(M), 1);
  std::priority_queue<Completion, std::vector<Completion>, std::greater<>> events;
  for (int m = 0; m < M; ++m) events.push({streams[static_cast<std::size_t>(m)].next(), m});

  std::vector<Delay> delays;
  delays.reserve(static_cast<std::size_t>(T));
  for (Round t = 1; t <= T; ++t) {
    const Completion c = events.top();
    events.pop();
    const auto m = static_cast<std::size_t>(c.worker);
    delays.push_back(t - source[m]);
    source[m] = t + 1;
    events.push({c.time + streams[m].next(), c.worker});
  }
  return DelaySequence(std::move(delays), DelayOrigin::machine_simulated, M);
}

std::optional<int> minimal_machine_count(const DelaySequence& seq) {
  // Round t's gradient was computed on w_s, s = t - d_t. A machine that
  // delivered at round s-1 restarts on w_s, so rounds with s > 1 must each
  // continue a distinct earlier delivery; rounds with s = 1 need a fresh
  // machine.
  const Round T = seq.horizon();
  std::vector<char> continued(static_cast<std::size_t>(T) + 1, 0);
  int fresh = 0;
  for (Round t = 1; t <= T; ++t) {
    const Round s = t - seq.at(t);
    if (s == 1) {
      ++fresh;
      continue;
    }
    auto& slot = continued[static_cast<std::size_t>(s - 1)];
    if (slot) return std::nullopt;
    slot = 1;
  }
  return fresh;
}

}  // namespace qasync
