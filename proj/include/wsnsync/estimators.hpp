#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <variant>

namespace wsnsync {

/// A timestamped one-way message: departure time carried in the message
/// (sender frame) and arrival time on the receiver's hardware clock.
struct OneWayObservation {
  double t_d = 0.0;
  double t_a = 0.0;
};

/// Joint offset / frequency-ratio estimate.
struct MleEstimate {
  double offset = 0.0;
  double ratio = 1.0;
};

/// Closed-form joint maximum-likelihood estimator of clock offset and
/// frequency ratio from one-way timestamps under white Gaussian delay with a
/// known mean.
///
/// Statistics are accumulated relative to the first observation with
/// running means and co-moments, so long streams (t_d ~ 1e3 s, sigma ~ 1e-9 s)
/// keep full precision. The ratio estimate does not depend on the known mean
/// delay; only the offset does.
class JointMle {
 public:
  explicit JointMle(double known_mean_delay = 0.0) : known_mean_delay_(known_mean_delay) {}

  void ingest(const OneWayObservation& obs);

  /// Throws DegenerateDesignError if fewer than two distinct t_d values.
  MleEstimate estimate() const;

  std::size_t count() const { return n_; }
  double known_mean_delay() const { return known_mean_delay_; }

  // Raw sums over all ingested observations.
  double sum_td() const;
  double sum_td2() const;
  double sum_ta() const;
  double sum_td_ta() const;

 private:
  double known_mean_delay_;
  std::size_t n_ = 0;
  double base_td_ = 0.0;
  double base_ta_ = 0.0;
  double mean_x_ = 0.0;
  double mean_y_ = 0.0;
  double m2_x_ = 0.0;
  double c_xy_ = 0.0;
};

/// Lower bound on the offset variance of any unbiased estimator for the
/// given departure-time design (n = design.size()).
double crlb_offset(std::span<const double> design, double sigma);

/// Lower bound on the frequency-ratio variance for the given design.
double crlb_skew(std::span<const double> design, double sigma);

/// Cumulative-ratio estimator: ratio of elapsed arrival time to elapsed
/// departure time since the first message. Holds four scalars only.
class CrEstimator {
 public:
  /// Returns no estimate on the first (baseline) call.
  /// Throws DegenerateDesignError if obs.t_d does not exceed the baseline.
  std::optional<double> update(const OneWayObservation& obs);

  std::optional<double> estimate() const;
  bool has_baseline() const { return td0_ == td0_; }

 private:
  static constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();
  double td0_ = kUnset;
  double ta0_ = kUnset;
  double td_last_ = kUnset;
  double ta_last_ = kUnset;
};

/// Lower bound 2 sigma^2 / span^2 on the cumulative-ratio variance.
double cr_lower_bound(double t_d_span, double sigma);

/// Scalar exponentially weighted recursive least squares on the
/// baseline-subtracted regression-through-origin model y = R x + noise.
class RlsEstimator {
 public:
  explicit RlsEstimator(double forgetting = 1.0, double initial_p = 1e12,
                        double initial_ratio = 1.0);

  std::optional<double> update(const OneWayObservation& obs);

  std::optional<double> estimate() const;
  double gain_denominator() const { return p_; }
  double forgetting() const { return lambda_; }

 private:
  double ratio_;
  double p_;
  double lambda_;
  bool has_baseline_ = false;
  bool has_estimate_ = false;
  double td0_ = 0.0;
  double ta0_ = 0.0;
};

/// Two-way message exchange. t1 and t4 are on the initiator's clock, t2 and
/// t3 on the responder's clock.
struct TwoWayExchange {
  double t1 = 0.0;
  double t2 = 0.0;
  double t3 = 0.0;
  double t4 = 0.0;
};

/// Two-way ML-like frequency estimator for symmetric Gaussian delays:
/// least-squares slope of responder midpoints (t2+t3)/2 against initiator
/// midpoints (t1+t4)/2. The returned slope is the responder-to-initiator
/// frequency ratio.
class GmlleEstimator {
 public:
  std::optional<double> update(const TwoWayExchange& ex);

  /// Throws InsufficientDataError until two distinct midpoints are seen.
  double estimate() const;
  std::size_t count() const { return n_; }

 private:
  std::size_t n_ = 0;
  double base_init_ = 0.0;
  double base_resp_ = 0.0;
  double mean_x_ = 0.0;
  double mean_y_ = 0.0;
  double m2_x_ = 0.0;
  double c_xy_ = 0.0;
};

enum class SkewEstimatorKind { CR, RLS, MLE };

std::string_view to_string(SkewEstimatorKind kind);
SkewEstimatorKind skew_estimator_from_string(std::string_view name);

/// One-way frequency-ratio tracker used by sensor nodes.
class OneWaySkewEstimator {
 public:
  explicit OneWaySkewEstimator(SkewEstimatorKind kind = SkewEstimatorKind::CR);

  /// Ingests one observation; returns the current ratio estimate if any.
  std::optional<double> update(const OneWayObservation& obs);

  SkewEstimatorKind kind() const { return kind_; }

 private:
  SkewEstimatorKind kind_;
  std::variant<CrEstimator, RlsEstimator, JointMle> impl_;
};

}  // namespace wsnsync
