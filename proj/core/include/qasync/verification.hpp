#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qasync/delay_models.hpp"

namespace qasync {

struct CheckResult {
  std::string name;
  std::string claim;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyOptions {
  std::optional<std::string> only;
  std::uint64_t seed = 20240611;
  // Fewer repetitions everywhere; for smoke runs, not for sign-off.
  bool quick = false;
};

std::vector<std::string> check_names();

// Runs the named battery (or a single check). Throws ConfigurationError for
// an unknown name.
std::vector<CheckResult> run_verification(const VerifyOptions& options,
                                          const std::function<void(const CheckResult&)>& on_result = {});

// Feasible random delay sequence of length T drawn from a mix of shapes
// (uniform, sparse outliers, bursts, constant, worker simulation).
DelaySequence random_delay_sequence(std::mt19937_64& rng, Round T);

}  // namespace qasync
