#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "wsnsync/clock.hpp"
#include "wsnsync/estimators.hpp"

namespace wsnsync {

// ---------------------------------------------------------------------------
// Messages

/// Timestamped head-node beacon; doubles as the "Request" of a reverse
/// two-way exchange.
struct Beacon {
  std::uint64_t seq = 0;
  double t1_departure = 0.0;
};

struct MeasurementRecord {
  std::uint64_t measurement_id = 0;
  double data = 0.0;
  double local_time = 0.0;  ///< sensor logical clock at occurrence
};

/// Report/Response message: bundled measurements plus the sensor's half of
/// the reverse exchange elicited by the most recent beacon.
struct Report {
  std::uint32_t sensor_id = 0;
  std::vector<MeasurementRecord> bundle;
  double t1_ref = 0.0;
  double t2_arrival = 0.0;
  double t3_departure = 0.0;
};

/// Sensor-initiated request of a conventional exchange.
struct SyncRequest {
  std::uint64_t seq = 0;
  double t1 = 0.0;     ///< sensor logical clock
  double t1_hw = 0.0;  ///< sensor hardware clock, kept for frequency estimation
};

struct SyncResponse {
  std::uint64_t seq = 0;
  double t1 = 0.0;
  double t1_hw = 0.0;
  double t2 = 0.0;  ///< head clock at request arrival
  double t3 = 0.0;  ///< head clock at response departure
};

/// Separate measurement report of the conventional schemes.
struct DataReport {
  std::uint32_t sensor_id = 0;
  MeasurementRecord record;
};

std::string to_diagnostic_line(const Beacon& msg);
std::string to_diagnostic_line(const Report& msg);
std::string to_diagnostic_line(const SyncRequest& msg);
std::string to_diagnostic_line(const SyncResponse& msg);
std::string to_diagnostic_line(const DataReport& msg);

// ---------------------------------------------------------------------------
// Schemes

struct ProposedReverse {
  SkewEstimatorKind estimator = SkewEstimatorKind::CR;
  int bundle_size = 1;
};

struct ConventionalTwoWay {
  bool with_gmlle = false;
};

using SchemeKind = std::variant<ProposedReverse, ConventionalTwoWay>;

/// "proposed_cr", "two_way_gmlle", "two_way", ...
std::string scheme_name(const SchemeKind& scheme);

/// Offset of the responder's clock relative to the initiator's clock,
/// ((t2 - t1) - (t4 - t3)) / 2.
double two_way_offset(const TwoWayExchange& ex);

// ---------------------------------------------------------------------------
// Proposed scheme: sensor side

/// Sensor node of the proposed scheme. Recovers the head's clock frequency
/// from any timestamped beacon, never adjusts its offset, and answers the
/// most recent beacon inside its measurement reports.
class ReverseSensor {
 public:
  /// `hw_start` is the hardware reading at power-up; the unsynchronized
  /// logical clock equals the hardware clock from there on.
  ReverseSensor(std::uint32_t id, SkewEstimatorKind estimator, int bundle_size, double hw_start = 0.0);

  /// Feeds (t1, hw_arrival) to the skew estimator, applies a skew-only sync
  /// and stores (t1, t2) for the next report. Returns the new ratio
  /// estimate, if the estimator produced one.
  std::optional<double> on_beacon(const Beacon& beacon, double hw_arrival);

  /// Timestamps a measurement with the logical clock and queues it.
  MeasurementRecord record_measurement(std::uint64_t id, double data, double hw_now);

  /// True when N_BM measurements are pending and a beacon has been heard.
  bool report_due() const;

  /// Emits all pending measurements in one report. Throws
  /// InsufficientDataError before the first beacon or with nothing pending.
  Report emit_report(double hw_now);

  std::optional<Report> poll_report(double hw_now);

  double logical_time(double hw_time) const { return logical_read(clock_, hw_time); }

  const LogicalClockState& clock() const { return clock_; }
  std::optional<double> skew_estimate() const { return skew_estimate_; }
  std::size_t pending() const { return pending_.size(); }
  bool has_beacon() const { return have_beacon_; }
  double last_beacon_t1() const { return last_t1_; }
  double last_beacon_t2() const { return last_t2_; }
  std::uint32_t id() const { return id_; }
  int bundle_size() const { return bundle_size_; }
  std::uint64_t n_tx() const { return n_tx_; }
  std::uint64_t n_rx() const { return n_rx_; }

 private:
  std::uint32_t id_;
  int bundle_size_;
  OneWaySkewEstimator estimator_;
  LogicalClockState clock_;
  std::optional<double> skew_estimate_;
  bool have_beacon_ = false;
  double last_t1_ = 0.0;
  double last_t2_ = 0.0;
  std::vector<MeasurementRecord> pending_;
  std::uint64_t n_tx_ = 0;
  std::uint64_t n_rx_ = 0;
};

// ---------------------------------------------------------------------------
// Proposed scheme: head side

/// Per-sensor offset bookkeeping kept at the head.
struct SensorLedger {
  double last_offset_estimate = 0.0;
  double last_update_ref_time = 0.0;
  std::uint64_t updates = 0;

  bool valid() const { return updates > 0; }
};

struct MeasurementEstimate {
  std::uint64_t measurement_id = 0;
  double estimated_ref_time = 0.0;
};

/// Completes the reverse exchange: estimates the sensor offset from
/// (t1, t2, t3, t4), records it in the ledger and maps every bundled
/// measurement with that single offset.
std::vector<MeasurementEstimate> head_on_report(SensorLedger& ledger, const Report& report,
                                                double t4_ref_arrival);

// ---------------------------------------------------------------------------
// Conventional two-way schemes

/// Sensor node running sender-initiated (TPSN-like) exchanges every SI,
/// with optional GMLLE frequency compensation.
class ConventionalSensor {
 public:
  ConventionalSensor(std::uint32_t id, bool with_gmlle, double hw_start = 0.0);

  SyncRequest start_exchange(double hw_now);

  /// Applies the offset (and, with GMLLE, the skew) correction. Returns the
  /// sensor-to-head frequency ratio estimate when one is available.
  std::optional<double> on_response(const SyncResponse& response, double hw_arrival);

  /// Timestamps a measurement and sends it to the head as its own message.
  DataReport report_measurement(std::uint64_t id, double data, double hw_now);

  double logical_time(double hw_time) const { return logical_read(clock_, hw_time); }

  const LogicalClockState& clock() const { return clock_; }
  std::optional<double> skew_estimate() const { return skew_estimate_; }
  bool with_gmlle() const { return with_gmlle_; }
  std::uint64_t n_tx() const { return n_tx_; }
  std::uint64_t n_rx() const { return n_rx_; }

 private:
  std::uint32_t id_;
  bool with_gmlle_;
  GmlleEstimator gmlle_;
  LogicalClockState clock_;
  std::optional<double> skew_estimate_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t n_tx_ = 0;
  std::uint64_t n_rx_ = 0;
};

/// Head side of a conventional exchange (the head clock is the reference).
SyncResponse head_respond(const SyncRequest& request, RefTime arrival, double processing_time = 0.0);

/// Runs one complete conventional exchange starting at reference time
/// `start` with the given uplink/downlink delays and returns the reference
/// time at which the response reached the sensor.
RefTime conventional_exchange(ConventionalSensor& sensor, const ClockParams& sensor_clock,
                              RefTime start, double uplink_delay, double downlink_delay,
                              double processing_time = 0.0);

// ---------------------------------------------------------------------------
// Analytic measurement-time error predictors (deterministic delay)

/// Conventional exchanges: (d + T_m) eps without skew compensation,
/// T_m * skew_error with compensation.
double predict_error_conventional(double t_m, double delay, double skew_or_error, bool compensated);

/// Reverse exchanges: (2d + T_m) skew_error / 2.
double predict_error_reverse(double t_m, double delay, double skew_error);

}  // namespace wsnsync
