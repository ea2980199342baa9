#include "qasync/async_engine.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "qasync/errors.hpp"

namespace qasync {

void write_round_log_csv(std::ostream& out, const RoundLog& log) {
  out << "t,d_t,accepted\n";
  for (const auto& r : log.rounds) out << r.t << ',' << r.d_t << ',' << (r.accepted ? 1 : 0) << '\n';
}

namespace {

struct StoredPoint {
  Vector point;
  Round last_played;
};

// earliest[t] = min_{s >= t} (s - d_s), the oldest round any delivery at or
// after round t can refer back to.
std::vector<Round> earliest_source(const DelaySequence& delays) {
  const Round T = delays.horizon();
  std::vector<Round> earliest(static_cast<std::size_t>(T) + 2, T + 1);
  for (Round t = T; t >= 1; --t) {
    earliest[static_cast<std::size_t>(t)] =
        std::min(earliest[static_cast<std::size_t>(t) + 1], t - delays.at(t));
  }
  return earliest;
}

}  // namespace

RunResult run(StreamingAlgorithm& algorithm, GradientOracle& oracle, const DelaySequence& delays,
              const EngineOptions& options) {
  const Round T = delays.horizon();
  std::vector<std::uint64_t> played_ids;
  played_ids.reserve(static_cast<std::size_t>(T));
  std::map<std::uint64_t, StoredPoint> history;
  const std::vector<Round> earliest =
      options.history == HistoryMode::pruned ? earliest_source(delays) : std::vector<Round>{};

  RunResult result{Vector{}, RoundLog{}, false, 0};
  result.log.rounds.reserve(static_cast<std::size_t>(T));

  for (Round t = 1; t <= T && !algorithm.done(); ++t) {
    const PlayedPoint played = algorithm.play();
    if (!played_ids.empty() && played.id < played_ids.back())
      throw ContractViolation("point ids must be nondecreasing");
    auto [it, inserted] = history.try_emplace(played.id, StoredPoint{played.point, t});
    if (!inserted) it->second.last_played = t;
    played_ids.push_back(played.id);

    const Delay d = delays.at(t);
    const Round source_round = t - d;
    const std::uint64_t source_id = played_ids[static_cast<std::size_t>(source_round - 1)];
    const auto src = history.find(source_id);
    if (src == history.end())
      throw ProtocolError("point for round " + std::to_string(source_round) + " was discarded");

    // Drawn at delivery time; the noise stream never depends on the delays.
    const Vector g = oracle.sample(src->second.point);
    const bool accepted = algorithm.receive(Delivery{t, d, source_id, g});
    result.log.rounds.push_back({t, played.id, d, source_id, accepted});
    (accepted ? result.log.used : result.log.discarded) += 1;

    if (options.history == HistoryMode::pruned) {
      const Round keep_from = earliest[static_cast<std::size_t>(t) + 1];
      while (!history.empty() && history.begin()->second.last_played < keep_from &&
             history.begin()->first != played.id) {
        history.erase(history.begin());
      }
    }
    result.peak_history = std::max(result.peak_history, history.size());
  }

  result.completed = algorithm.done() || algorithm.open_ended();
  if (!result.completed && options.on_exhausted == ExhaustionPolicy::raise) {
    throw BudgetError("algorithm needs more than the " + std::to_string(T) + " available rounds");
  }
  result.output = algorithm.output();
  return result;
}

}  // namespace qasync
