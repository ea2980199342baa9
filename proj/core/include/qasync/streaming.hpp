#pragma once

#include <cstdint>

#include "qasync/types.hpp"

namespace qasync {

// Point played in the current round. `id` changes exactly when the point
// changes, so the engine can store each distinct point once.
struct PlayedPoint {
  std::uint64_t id;
  const Vector& point;
};

// What the environment hands back at round t: a stochastic gradient taken at
// w_{t - delay}.
struct Delivery {
  Round round;
  Delay delay;
  std::uint64_t source_point_id;
  const Vector& gradient;
};

// Algorithm in the asynchronous round protocol: each round it plays a point,
// then receives one (possibly stale) gradient.
class StreamingAlgorithm {
 public:
  virtual ~StreamingAlgorithm() = default;

  virtual PlayedPoint play() = 0;
  // Returns whether the gradient was used.
  virtual bool receive(const Delivery& delivery) = 0;
  virtual bool done() const = 0;
  virtual Vector output() const = 0;
  // True for methods without a query budget, which are complete whenever the
  // horizon ends.
  virtual bool open_ended() const { return false; }
};

}  // namespace qasync
