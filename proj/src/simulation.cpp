#include "wsnsync/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <unordered_map>
#include <variant>

#include "wsnsync/errors.hpp"

namespace wsnsync {

void RunConfig::validate() const {
  if (!(si > 0.0)) throw ConfigError("si", "must be > 0");
  if (!(horizon > 0.0)) throw ConfigError("horizon", "must be > 0");
  if (!(warmup >= 0.0)) throw ConfigError("warmup", "must be >= 0");
  if (!(warmup < horizon)) throw ConfigError("warmup", "must be < horizon");
  if (!(processing_time >= 0.0)) throw ConfigError("processing_time", "must be >= 0");
  if (!(sensor.ratio() > 0.0)) throw ConfigError("sensor/skew", "1 + skew must be > 0");
  try {
    delay.validate();
  } catch (const ConfigError& e) {
    throw ConfigError("delay/" + e.field(), "invalid delay");
  }
  if (const auto* p = std::get_if<ProposedReverse>(&scheme); p && p->bundle_size < 1) {
    throw ConfigError("scheme/bundle_size", "must be >= 1");
  }
  if (std::holds_alternative<ConventionalTwoWay>(scheme) &&
      topology.mode == GatewayMode::TimeTranslate && !topology.gateways.empty()) {
    throw ConfigError("topology/mode", "time translation requires the proposed scheme");
  }
  for (std::size_t i = 0; i < topology.gateways.size(); ++i) {
    const auto& g = topology.gateways[i];
    const std::string at = "topology/gateways/" + std::to_string(i);
    if (!(g.clock.ratio() > 0.0)) throw ConfigError(at + "/skew", "1 + skew must be > 0");
    try {
      g.uplink.validate();
      g.downlink.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(at + "/" + e.field(), "invalid delay");
    }
  }
}

std::size_t sync_event_count(double si, double horizon) {
  return static_cast<std::size_t>(std::ceil(horizon / si * (1.0 - 1e-12)));
}

std::vector<double> generate_measurement_schedule(std::size_t n, double horizon,
                                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> times(n);
  // 1 - U maps [0, 1) onto (0, 1].
  for (auto& t : times) t = horizon * (1.0 - unit(rng));
  std::sort(times.begin(), times.end());
  return times;
}

namespace {

using Message = std::variant<Beacon, Report, SyncRequest, SyncResponse, DataReport>;

// Tie-break classes for simultaneous events.
enum Priority : int { kDelivery = 0, kTimer = 1, kMeasurement = 2, kFlush = 3 };

struct SyncTimer {
  std::uint64_t k = 0;
};
struct MeasurementEvent {
  std::uint64_t id = 0;
};
struct FlushEvent {};
struct Delivery {
  std::size_t to = 0;
  std::size_t from = 0;
  Message msg;
};

using Payload = std::variant<SyncTimer, MeasurementEvent, FlushEvent, Delivery>;

struct Event {
  double time = 0.0;
  int priority = 0;
  std::uint64_t seq = 0;
  Payload payload;
};

struct EventLater {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    if (a.priority != b.priority) return a.priority > b.priority;
    return a.seq > b.seq;
  }
};

struct Link {
  DelaySampler down;
  DelaySampler up;
};

/// Time-translating gateway: a proposed-scheme node toward its parent and a
/// head toward its child.
struct TranslatingGateway {
  ReverseSensor upstream;
  SensorLedger child_ledger;
  std::uint64_t next_beacon_seq = 0;
};

class Simulator {
 public:
  explicit Simulator(const RunConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const std::size_t gateways = cfg_.topology.gateways.size();
    sensor_node_ = gateways + 1;
    node_tx_.assign(sensor_node_ + 1, 0);
    node_rx_.assign(sensor_node_ + 1, 0);
    node_last_time_.assign(sensor_node_ + 1, -std::numeric_limits<double>::infinity());

    // links_[j] connects node j to node j - 1.
    links_.reserve(sensor_node_ + 1);
    links_.push_back(Link{DelaySampler(cfg_.delay, 0), DelaySampler(cfg_.delay, 0)});
    for (std::size_t j = 1; j <= sensor_node_; ++j) {
      const DelaySpec& down = j == sensor_node_ ? cfg_.delay : cfg_.topology.gateways[j - 1].downlink;
      const DelaySpec& up = j == sensor_node_ ? cfg_.delay : cfg_.topology.gateways[j - 1].uplink;
      links_.push_back(Link{DelaySampler(down, derive_seed(cfg_.seed, 2 * j)),
                            DelaySampler(up, derive_seed(cfg_.seed, 2 * j + 1))});
    }

    if (cfg_.topology.mode == GatewayMode::TimeTranslate) {
      for (std::size_t j = 0; j < gateways; ++j) {
        translators_.push_back(
            TranslatingGateway{ReverseSensor(static_cast<std::uint32_t>(j + 1), SkewEstimatorKind::CR, 1,
                                             hw_read(cfg_.topology.gateways[j].clock, 0.0)),
                               {},
                               0});
      }
    }

    if (const auto* p = std::get_if<ProposedReverse>(&cfg_.scheme)) {
      reverse_.emplace(static_cast<std::uint32_t>(sensor_node_), p->estimator, p->bundle_size,
                       hw_read(cfg_.sensor, 0.0));
    } else {
      conventional_.emplace(static_cast<std::uint32_t>(sensor_node_),
                            std::get<ConventionalTwoWay>(cfg_.scheme).with_gmlle, hw_read(cfg_.sensor, 0.0));
    }
  }

  RunReport run() {
    sync_events_ = sync_event_count(cfg_.si, cfg_.horizon);
    if (sync_events_ > 0) push(0.0, kTimer, SyncTimer{0});

    measurement_times_ =
        generate_measurement_schedule(cfg_.n_measurements, cfg_.horizon, derive_seed(cfg_.seed, 0));
    for (std::size_t i = 0; i < measurement_times_.size(); ++i) {
      push(measurement_times_[i], kMeasurement, MeasurementEvent{i});
    }
    if (reverse_) push(cfg_.horizon, kFlush, FlushEvent{});

    while (!queue_.empty()) {
      Event ev = queue_.top();
      queue_.pop();
      std::visit([&](auto& p) { handle(ev.time, p); }, ev.payload);
    }
    return finish();
  }

 private:
  template <typename P>
  void push(double time, int priority, P payload) {
    queue_.push(Event{time, priority, next_seq_++, Payload{std::move(payload)}});
  }

  ClockParams node_clock(std::size_t node) const {
    if (node == sensor_node_) return cfg_.sensor;
    return cfg_.topology.gateways[node - 1].clock;
  }

  double hw(std::size_t node, double t) const { return hw_read(node_clock(node), t); }

  void send(std::size_t from, std::size_t to, Message msg, double t) {
    ++node_tx_[from];
    const double d = to > from ? links_[to].down.sample() : links_[from].up.sample();
    push(t + d, kDelivery, Delivery{to, from, std::move(msg)});
  }

  void record_skew(double t, double ratio) {
    if (!(t > cfg_.warmup)) return;
    const double err = (ratio - 1.0) - cfg_.sensor.skew;
    skew_sq_sum_ += err * err;
    ++skew_samples_;
    if (cfg_.trace) traces_.push_back({TraceKind::Skew, t, err});
  }

  /// Scored when the measurement itself occurred after warmup; bundles can
  /// carry records stamped long before the head processes them.
  void record_measurement(double t, std::uint64_t id, double estimate) {
    if (!(measurement_times_[id] > cfg_.warmup)) return;
    const double err = estimate - measurement_times_[id];
    meas_sq_sum_ += err * err;
    ++meas_samples_;
    if (cfg_.trace) traces_.push_back({TraceKind::MeasurementTime, t, err});
  }

  // -- timers ---------------------------------------------------------------

  void handle(double t, SyncTimer& timer) {
    if (timer.k + 1 < sync_events_) {
      push(static_cast<double>(timer.k + 1) * cfg_.si, kTimer, SyncTimer{timer.k + 1});
    }
    if (reverse_) {
      send(0, 1, Beacon{timer.k, t}, t);
    } else {
      const double at = touch(sensor_node_, t);
      send(sensor_node_, sensor_node_ - 1, conventional_->start_exchange(hw(sensor_node_, at)), at);
    }
  }

  void handle(double t, MeasurementEvent& ev) {
    const double at = touch(sensor_node_, t);
    const double data = static_cast<double>(ev.id);
    if (reverse_) {
      reverse_->record_measurement(ev.id, data, hw(sensor_node_, at));
      if (auto report = reverse_->poll_report(hw(sensor_node_, at))) {
        send(sensor_node_, sensor_node_ - 1, std::move(*report), at);
      }
    } else {
      send(sensor_node_, sensor_node_ - 1,
           conventional_->report_measurement(ev.id, data, hw(sensor_node_, at)), at);
    }
  }

  void handle(double t, FlushEvent&) {
    if (reverse_->pending() == 0 || !reverse_->has_beacon()) return;
    const double at = touch(sensor_node_, t);
    send(sensor_node_, sensor_node_ - 1, reverse_->emit_report(hw(sensor_node_, at)), at);
  }

  // -- deliveries ------------------------------------------------------------

  /// Per-node monotonic event time; a delivery that would land before the
  /// receiver's previous event (negative sampled delay) is clamped.
  double touch(std::size_t node, double t) {
    if (t < node_last_time_[node]) {
      ++causality_clamps_;
      return node_last_time_[node];
    }
    node_last_time_[node] = t;
    return t;
  }

  void handle(double t, Delivery& d) {
    ++node_rx_[d.to];
    const double at = touch(d.to, t);
    std::visit([&](auto& msg) { deliver(at, d.to, d.from, msg); }, d.msg);
  }

  bool is_gateway(std::size_t node) const { return node != 0 && node != sensor_node_; }
  bool translating() const { return cfg_.topology.mode == GatewayMode::TimeTranslate; }

  void deliver(double t, std::size_t node, std::size_t, Beacon& beacon) {
    if (is_gateway(node)) {
      if (!translating()) {
        send(node, node + 1, beacon, t);
        return;
      }
      auto& gw = translators_[node - 1];
      const double hw_now = hw(node, t);
      gw.upstream.on_beacon(beacon, hw_now);
      // Downstream beacons start once the gateway is frequency-locked.
      if (gw.upstream.skew_estimate()) {
        send(node, node + 1, Beacon{gw.next_beacon_seq++, gw.upstream.logical_time(hw_now)}, t);
      }
      return;
    }
    const double hw_now = hw(sensor_node_, t);
    if (auto ratio = reverse_->on_beacon(beacon, hw_now)) record_skew(t, *ratio);
    if (auto report = reverse_->poll_report(hw_now)) {
      send(sensor_node_, sensor_node_ - 1, std::move(*report), t);
    }
  }

  void deliver(double t, std::size_t node, std::size_t, Report& report) {
    if (node == 0) {
      for (const auto& est : head_on_report(head_ledger_, report, t)) {
        record_measurement(t, est.measurement_id, est.estimated_ref_time);
      }
      return;
    }
    if (!translating()) {
      send(node, node - 1, std::move(report), t);
      return;
    }
    auto& gw = translators_[node - 1];
    const double hw_now = hw(node, t);
    // Estimate the child's offset from the exchange the report carries.
    head_on_report(gw.child_ledger, report, gw.upstream.logical_time(hw_now));
    ForwardResult fwd = gateway_forward(GatewayMode::TimeTranslate, std::move(report), gw.child_ledger);
    if (fwd.flagged) ++translate_flags_;
    fwd.report.sensor_id = static_cast<std::uint32_t>(node);
    fwd.report.t1_ref = gw.upstream.last_beacon_t1();
    fwd.report.t2_arrival = gw.upstream.last_beacon_t2();
    fwd.report.t3_departure = gw.upstream.logical_time(hw_now);
    send(node, node - 1, std::move(fwd.report), t);
  }

  void deliver(double t, std::size_t node, std::size_t, SyncRequest& request) {
    if (node != 0) {
      send(node, node - 1, request, t);
      return;
    }
    const SyncResponse response = head_respond(request, t, cfg_.processing_time);
    send(0, 1, response, t + cfg_.processing_time);
  }

  void deliver(double t, std::size_t node, std::size_t, SyncResponse& response) {
    if (node != sensor_node_) {
      send(node, node + 1, response, t);
      return;
    }
    if (auto ratio = conventional_->on_response(response, hw(sensor_node_, t))) {
      record_skew(t, *ratio);
    }
  }

  void deliver(double t, std::size_t node, std::size_t, DataReport& report) {
    if (node != 0) {
      send(node, node - 1, report, t);
      return;
    }
    record_measurement(t, report.record.measurement_id, report.record.local_time);
  }

  RunReport finish() {
    RunReport r;
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    const bool has_skew = reverse_ || conventional_->with_gmlle();
    r.skew_samples = skew_samples_;
    r.skew_mse = has_skew && skew_samples_ > 0 ? skew_sq_sum_ / static_cast<double>(skew_samples_) : nan;
    r.meas_samples = meas_samples_;
    r.meas_time_mse = meas_samples_ > 0 ? meas_sq_sum_ / static_cast<double>(meas_samples_) : nan;
    r.n_tx = reverse_ ? reverse_->n_tx() : conventional_->n_tx();
    r.n_rx = reverse_ ? reverse_->n_rx() : conventional_->n_rx();
    r.node_tx = node_tx_;
    r.node_rx = node_rx_;
    r.translate_flags = translate_flags_;
    r.causality_clamps = causality_clamps_;
    r.traces = std::move(traces_);
    return r;
  }

  RunConfig cfg_;
  std::size_t sensor_node_ = 1;
  std::size_t sync_events_ = 0;
  std::vector<Link> links_;
  std::vector<TranslatingGateway> translators_;
  std::optional<ReverseSensor> reverse_;
  std::optional<ConventionalSensor> conventional_;
  SensorLedger head_ledger_;
  std::vector<double> measurement_times_;

  std::priority_queue<Event, std::vector<Event>, EventLater> queue_;
  std::uint64_t next_seq_ = 0;

  std::vector<std::uint64_t> node_tx_;
  std::vector<std::uint64_t> node_rx_;
  std::vector<double> node_last_time_;
  double skew_sq_sum_ = 0.0;
  std::size_t skew_samples_ = 0;
  double meas_sq_sum_ = 0.0;
  std::size_t meas_samples_ = 0;
  std::size_t translate_flags_ = 0;
  std::size_t causality_clamps_ = 0;
  std::vector<TraceSample> traces_;
};

}  // namespace

RunReport run_simulation(const RunConfig& cfg) {
  return Simulator(cfg).run();
}

}  // namespace wsnsync
