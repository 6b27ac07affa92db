#include "wsnsync/protocol.hpp"

#include <cstdio>

#include "wsnsync/errors.hpp"

namespace wsnsync {

namespace {

std::string format_time(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.15e", t);
  return buf;
}

}  // namespace

std::string to_diagnostic_line(const Beacon& msg) {
  return "BEACON seq=" + std::to_string(msg.seq) + " t1=" + format_time(msg.t1_departure) +
         " bundle=0";
}

std::string to_diagnostic_line(const Report& msg) {
  std::string line = "REPORT sensor=" + std::to_string(msg.sensor_id) +
                     " t1=" + format_time(msg.t1_ref) + " t2=" + format_time(msg.t2_arrival) +
                     " t3=" + format_time(msg.t3_departure) +
                     " bundle=" + std::to_string(msg.bundle.size());
  for (const auto& rec : msg.bundle) {
    line += " m" + std::to_string(rec.measurement_id) + "@" + format_time(rec.local_time);
  }
  return line;
}

std::string to_diagnostic_line(const SyncRequest& msg) {
  return "REQUEST seq=" + std::to_string(msg.seq) + " t1=" + format_time(msg.t1) + " bundle=0";
}

std::string to_diagnostic_line(const SyncResponse& msg) {
  return "RESPONSE seq=" + std::to_string(msg.seq) + " t1=" + format_time(msg.t1) +
         " t2=" + format_time(msg.t2) + " t3=" + format_time(msg.t3) + " bundle=0";
}

std::string to_diagnostic_line(const DataReport& msg) {
  return "DATA sensor=" + std::to_string(msg.sensor_id) + " m" +
         std::to_string(msg.record.measurement_id) + "@" + format_time(msg.record.local_time) +
         " bundle=1";
}

std::string scheme_name(const SchemeKind& scheme) {
  if (const auto* p = std::get_if<ProposedReverse>(&scheme)) {
    return "proposed_" + std::string(to_string(p->estimator));
  }
  return std::get<ConventionalTwoWay>(scheme).with_gmlle ? "two_way_gmlle" : "two_way";
}

double two_way_offset(const TwoWayExchange& ex) {
  return ((ex.t2 - ex.t1) - (ex.t4 - ex.t3)) / 2.0;
}

// ---------------------------------------------------------------------------

ReverseSensor::ReverseSensor(std::uint32_t id, SkewEstimatorKind estimator, int bundle_size,
                             double hw_start)
    : id_(id), bundle_size_(bundle_size), estimator_(estimator), clock_{hw_start, hw_start, 0.0, 0.0} {
  if (bundle_size < 1) throw ConfigError("bundle_size", "must be >= 1");
}

std::optional<double> ReverseSensor::on_beacon(const Beacon& beacon, double hw_arrival) {
  ++n_rx_;
  last_t1_ = beacon.t1_departure;
  last_t2_ = logical_read(clock_, hw_arrival);
  have_beacon_ = true;

  auto ratio = estimator_.update({beacon.t1_departure, hw_arrival});
  if (ratio) {
    skew_estimate_ = *ratio - 1.0;
    clock_ = apply_sync(clock_, hw_arrival, skew_estimate_, std::nullopt);
  }
  return ratio;
}

MeasurementRecord ReverseSensor::record_measurement(std::uint64_t id, double data, double hw_now) {
  MeasurementRecord rec{id, data, logical_read(clock_, hw_now)};
  pending_.push_back(rec);
  return rec;
}

bool ReverseSensor::report_due() const {
  return have_beacon_ && pending_.size() >= static_cast<std::size_t>(bundle_size_);
}

Report ReverseSensor::emit_report(double hw_now) {
  if (!have_beacon_) throw InsufficientDataError("no beacon received yet");
  if (pending_.empty()) throw InsufficientDataError("no pending measurements");
  Report report;
  report.sensor_id = id_;
  report.bundle = std::move(pending_);
  pending_.clear();
  report.t1_ref = last_t1_;
  report.t2_arrival = last_t2_;
  report.t3_departure = logical_read(clock_, hw_now);
  ++n_tx_;
  return report;
}

std::optional<Report> ReverseSensor::poll_report(double hw_now) {
  if (!report_due()) return std::nullopt;
  return emit_report(hw_now);
}

std::vector<MeasurementEstimate> head_on_report(SensorLedger& ledger, const Report& report,
                                                double t4_ref_arrival) {
  const double offset = two_way_offset(
      {report.t1_ref, report.t2_arrival, report.t3_departure, t4_ref_arrival});
  ledger.last_offset_estimate = offset;
  ledger.last_update_ref_time = t4_ref_arrival;
  ++ledger.updates;

  std::vector<MeasurementEstimate> out;
  out.reserve(report.bundle.size());
  for (const auto& rec : report.bundle) {
    out.push_back({rec.measurement_id, rec.local_time - offset});
  }
  return out;
}

// ---------------------------------------------------------------------------

ConventionalSensor::ConventionalSensor(std::uint32_t id, bool with_gmlle, double hw_start)
    : id_(id), with_gmlle_(with_gmlle), clock_{hw_start, hw_start, 0.0, 0.0} {}

SyncRequest ConventionalSensor::start_exchange(double hw_now) {
  ++n_tx_;
  return {next_seq_++, logical_read(clock_, hw_now), hw_now};
}

std::optional<double> ConventionalSensor::on_response(const SyncResponse& response,
                                                      double hw_arrival) {
  ++n_rx_;
  const double t4 = logical_read(clock_, hw_arrival);
  // Offset of the sensor's logical clock relative to the head.
  const double offset = -two_way_offset({response.t1, response.t2, response.t3, t4});

  std::optional<double> ratio;
  if (with_gmlle_) {
    // Initiator midpoints on the sensor hardware clock: the slope is 1/R.
    if (auto slope = gmlle_.update({response.t1_hw, response.t2, response.t3, hw_arrival})) {
      ratio = 1.0 / *slope;
      skew_estimate_ = *ratio - 1.0;
    }
  }
  clock_ = apply_sync(clock_, hw_arrival, skew_estimate_, offset);
  return ratio;
}

DataReport ConventionalSensor::report_measurement(std::uint64_t id, double data, double hw_now) {
  ++n_tx_;
  return {id_, {id, data, logical_read(clock_, hw_now)}};
}

SyncResponse head_respond(const SyncRequest& request, RefTime arrival, double processing_time) {
  return {request.seq, request.t1, request.t1_hw, arrival, arrival + processing_time};
}

RefTime conventional_exchange(ConventionalSensor& sensor, const ClockParams& sensor_clock,
                              RefTime start, double uplink_delay, double downlink_delay,
                              double processing_time) {
  const SyncRequest request = sensor.start_exchange(hw_read(sensor_clock, start));
  const RefTime at_head = start + uplink_delay;
  const SyncResponse response = head_respond(request, at_head, processing_time);
  const RefTime back = at_head + processing_time + downlink_delay;
  sensor.on_response(response, hw_read(sensor_clock, back));
  return back;
}

// ---------------------------------------------------------------------------

double predict_error_conventional(double t_m, double delay, double skew_or_error,
                                  bool compensated) {
  if (compensated) return t_m * skew_or_error;
  return (delay + t_m) * skew_or_error;
}

double predict_error_reverse(double t_m, double delay, double skew_error) {
  return (2.0 * delay + t_m) * skew_error / 2.0;
}

}  // namespace wsnsync
