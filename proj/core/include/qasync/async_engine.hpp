#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "qasync/delay_models.hpp"
#include "qasync/problems.hpp"
#include "qasync/streaming.hpp"
#include "qasync/types.hpp"

namespace qasync {

struct RoundRecord {
  Round t;
  std::uint64_t played_point_id;
  Delay d_t;
  std::uint64_t source_point_id;  // point played at round t - d_t
  bool accepted;
  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct RoundLog {
  std::vector<RoundRecord> rounds;
  std::int64_t used = 0;
  std::int64_t discarded = 0;

  Round played() const { return static_cast<Round>(rounds.size()); }
  friend bool operator==(const RoundLog&, const RoundLog&) = default;
};

// Columns t, d_t, accepted.
void write_round_log_csv(std::ostream& out, const RoundLog& log);

enum class HistoryMode {
  full,    // keep every played point
  pruned,  // drop points no future round can reference
};

enum class ExhaustionPolicy {
  report,  // return with completed = false
  raise,   // throw BudgetError
};

struct EngineOptions {
  HistoryMode history = HistoryMode::pruned;
  ExhaustionPolicy on_exhausted = ExhaustionPolicy::report;
};

struct RunResult {
  Vector output;
  RoundLog log;
  bool completed;              // algorithm reported done() within the horizon
  std::size_t peak_history;    // distinct points held at once
};

// Runs the round protocol for t = 1..T: the algorithm plays w_t, the oracle is
// sampled at the stored point w_{t - d_t}, and (g_t, d_t) is delivered. The
// run ends early once the algorithm reports done().
RunResult run(StreamingAlgorithm& algorithm, GradientOracle& oracle, const DelaySequence& delays,
              const EngineOptions& options = {});

}  // namespace qasync
