#pragma once

#include <optional>

namespace wsnsync {

/// Reference time of the head node, in seconds since simulation start.
using RefTime = double;

/// Affine hardware clock: T(t) = (1 + skew) t + offset.
struct ClockParams {
  double skew = 0.0;    ///< normalized frequency difference (epsilon)
  double offset = 0.0;  ///< seconds (theta)

  double ratio() const { return 1.0 + skew; }
};

/// Hardware clock reading at reference time t.
double hw_read(const ClockParams& params, RefTime t);

/// Current segment of a piecewise-linear logical clock driven by a hardware
/// clock. Only the latest synchronization point is kept.
struct LogicalClockState {
  double last_sync_hw_time = 0.0;
  double last_sync_logical_time = 0.0;
  double est_skew = 0.0;
  double est_offset = 0.0;
};

/// Logical time for a hardware reading in the current segment.
/// Throws ClockOrderError when hw_time precedes the segment start.
double logical_read(const LogicalClockState& state, double hw_time);

/// Starts a new segment at at_hw_time. An absent skew or offset is taken as
/// zero, so a skew-only update never moves the clock and an offset-only
/// update runs the clock at the raw hardware rate afterwards.
LogicalClockState apply_sync(const LogicalClockState& state, double at_hw_time,
                             std::optional<double> new_skew,
                             std::optional<double> new_offset);

}  // namespace wsnsync
