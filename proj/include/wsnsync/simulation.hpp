#pragma once

#include <cstdint>
#include <vector>

#include "wsnsync/clock.hpp"
#include "wsnsync/delay.hpp"
#include "wsnsync/gateway.hpp"
#include "wsnsync/protocol.hpp"

namespace wsnsync {

/// One intermediate node between the sensor and the head. `uplink` and
/// `downlink` describe the link from this gateway to its parent.
struct GatewaySpec {
  ClockParams clock;
  DelaySpec uplink;
  DelaySpec downlink;
};

/// Gateway chain ordered from the head outward; empty means single hop.
struct Topology {
  GatewayMode mode = GatewayMode::PacketRelay;
  std::vector<GatewaySpec> gateways;
};

struct RunConfig {
  SchemeKind scheme = ProposedReverse{};
  double si = 1.0;
  double horizon = 3600.0;
  std::size_t n_measurements = 100;
  double warmup = 360.0;
  DelaySpec delay;  ///< sensor <-> parent link, both directions
  ClockParams sensor{1e-4, 1.0};
  std::uint64_t seed = 1;
  Topology topology;
  double processing_time = 0.0;
  bool trace = false;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

enum class TraceKind { Skew, MeasurementTime };

struct TraceSample {
  TraceKind kind = TraceKind::Skew;
  double time = 0.0;   ///< reference time the sample was taken (head processing time for measurements)
  double error = 0.0;  ///< skew error, or estimated minus true measurement time
};

struct RunReport {
  double skew_mse = 0.0;       ///< NaN when the scheme has no skew estimator
  double meas_time_mse = 0.0;  ///< over measurements occurring after warmup; NaN if none
  std::uint64_t n_tx = 0;      ///< sensor transmissions
  std::uint64_t n_rx = 0;      ///< sensor receptions
  std::size_t skew_samples = 0;
  std::size_t meas_samples = 0;
  std::vector<std::uint64_t> node_tx;  ///< index 0 = head, last = sensor
  std::vector<std::uint64_t> node_rx;
  std::size_t translate_flags = 0;
  std::size_t causality_clamps = 0;  ///< deliveries earlier than the receiver's last event
  std::vector<TraceSample> traces;
};

/// Runs one deterministic discrete-event simulation of the configured
/// scheme. Identical configs (seed included) give bit-identical reports.
RunReport run_simulation(const RunConfig& cfg);

/// n arrival times i.i.d. uniform on (0, horizon], sorted: a Poisson
/// process conditioned on its count.
std::vector<double> generate_measurement_schedule(std::size_t n, double horizon, std::uint64_t seed);

/// Number of periodic sync events at 0, si, 2 si, ... strictly before horizon.
std::size_t sync_event_count(double si, double horizon);

}  // namespace wsnsync
