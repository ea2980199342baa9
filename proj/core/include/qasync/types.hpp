#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace qasync {

using Vector = Eigen::VectorXd;

// 1-based round index t and integer delay d_t.
using Round = std::int64_t;
using Delay = std::int64_t;

}  // namespace qasync
