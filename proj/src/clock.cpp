#include "wsnsync/clock.hpp"

#include <string>

#include "wsnsync/errors.hpp"

namespace wsnsync {

double hw_read(const ClockParams& params, RefTime t) {
  return (1.0 + params.skew) * t + params.offset;
}

double logical_read(const LogicalClockState& state, double hw_time) {
  if (hw_time < state.last_sync_hw_time) {
    throw ClockOrderError("logical_read: hw time " + std::to_string(hw_time) +
                          " precedes segment start " +
                          std::to_string(state.last_sync_hw_time));
  }
  return state.last_sync_logical_time +
         (hw_time - state.last_sync_hw_time) / (1.0 + state.est_skew) -
         state.est_offset;
}

LogicalClockState apply_sync(const LogicalClockState& state, double at_hw_time,
                             std::optional<double> new_skew,
                             std::optional<double> new_offset) {
  LogicalClockState next;
  next.last_sync_hw_time = at_hw_time;
  next.last_sync_logical_time = logical_read(state, at_hw_time);
  next.est_skew = new_skew.value_or(0.0);
  next.est_offset = new_offset.value_or(0.0);
  return next;
}

}  // namespace wsnsync
