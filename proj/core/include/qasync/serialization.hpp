#pragma once

#include <iosfwd>
#include <string>

#include "qasync/bounds.hpp"
#include "qasync/delay_models.hpp"
#include "qasync/minibatch.hpp"

namespace qasync {

// One-column CSV with header d_t.
void write_delays_csv(std::ostream& out, const DelaySequence& seq);
DelaySequence read_delays_csv(std::istream& in);

// Plain JSON array of integers.
std::string delays_to_json(const DelaySequence& seq);
DelaySequence delays_from_json(const std::string& text);

// Loads either format, picked by the first non-space character.
DelaySequence load_delays(const std::string& path);
void save_delays(const std::string& path, const DelaySequence& seq);

// Flat record {T, tau_avg, tau_med, tau_max}.
std::string stats_to_json(const DelayStats& stats, int indent = -1);
std::string bound_report_to_json(const BoundReport& report, int indent = -1);
// {K_target, K_dispatched, used, discarded}
std::string diagnostics_to_json(const MiniBatchDiagnostics& diag, int indent = -1);

}  // namespace qasync
