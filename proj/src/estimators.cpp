#include "wsnsync/estimators.hpp"

#include <string>

#include "wsnsync/errors.hpp"

namespace wsnsync {

namespace {

struct DesignMoments {
  double n = 0.0;
  double mean = 0.0;
  double mean_sq = 0.0;
  double popvar = 0.0;
};

DesignMoments design_moments(std::span<const double> design) {
  if (design.size() < 2) throw DegenerateDesignError("design needs at least two points");
  DesignMoments m;
  m.n = static_cast<double>(design.size());
  for (double t : design) m.mean += t;
  m.mean /= m.n;
  for (double t : design) {
    m.popvar += (t - m.mean) * (t - m.mean);
    m.mean_sq += t * t;
  }
  m.popvar /= m.n;
  m.mean_sq /= m.n;
  if (!(m.popvar > 0.0)) throw DegenerateDesignError("design points are all equal");
  return m;
}

}  // namespace

void JointMle::ingest(const OneWayObservation& obs) {
  if (n_ == 0) {
    base_td_ = obs.t_d;
    base_ta_ = obs.t_a;
  }
  const double x = obs.t_d - base_td_;
  const double y = obs.t_a - base_ta_;
  ++n_;
  const double inv_n = 1.0 / static_cast<double>(n_);
  const double dx = x - mean_x_;
  mean_x_ += dx * inv_n;
  mean_y_ += (y - mean_y_) * inv_n;
  m2_x_ += dx * (x - mean_x_);
  c_xy_ += dx * (y - mean_y_);
}

MleEstimate JointMle::estimate() const {
  if (n_ < 2 || !(m2_x_ > 0.0)) {
    throw DegenerateDesignError("joint MLE needs two distinct departure times");
  }
  MleEstimate est;
  est.ratio = c_xy_ / m2_x_;
  const double intercept = mean_y_ - est.ratio * mean_x_;
  est.offset = base_ta_ + intercept - est.ratio * base_td_ - known_mean_delay_;
  return est;
}

double JointMle::sum_td() const {
  return static_cast<double>(n_) * (base_td_ + mean_x_);
}

double JointMle::sum_ta() const {
  return static_cast<double>(n_) * (base_ta_ + mean_y_);
}

double JointMle::sum_td2() const {
  const double n = static_cast<double>(n_);
  return n * base_td_ * base_td_ + 2.0 * base_td_ * n * mean_x_ + (m2_x_ + n * mean_x_ * mean_x_);
}

double JointMle::sum_td_ta() const {
  const double n = static_cast<double>(n_);
  return n * base_td_ * base_ta_ + base_td_ * n * mean_y_ + base_ta_ * n * mean_x_ +
         (c_xy_ + n * mean_x_ * mean_y_);
}

double crlb_offset(std::span<const double> design, double sigma) {
  const auto m = design_moments(design);
  return sigma * sigma * m.mean_sq / (m.n * m.popvar);
}

double crlb_skew(std::span<const double> design, double sigma) {
  const auto m = design_moments(design);
  return sigma * sigma / (m.n * m.popvar);
}

std::optional<double> CrEstimator::update(const OneWayObservation& obs) {
  if (!has_baseline()) {
    td0_ = obs.t_d;
    ta0_ = obs.t_a;
    return std::nullopt;
  }
  if (!(obs.t_d > td0_)) {
    throw DegenerateDesignError("cumulative ratio needs t_d beyond the baseline");
  }
  td_last_ = obs.t_d;
  ta_last_ = obs.t_a;
  return estimate();
}

std::optional<double> CrEstimator::estimate() const {
  if (td_last_ != td_last_) return std::nullopt;
  return (ta_last_ - ta0_) / (td_last_ - td0_);
}

double cr_lower_bound(double t_d_span, double sigma) {
  if (!(t_d_span > 0.0)) throw DegenerateDesignError("span must be positive");
  return 2.0 * sigma * sigma / (t_d_span * t_d_span);
}

RlsEstimator::RlsEstimator(double forgetting, double initial_p, double initial_ratio)
    : ratio_(initial_ratio), p_(initial_p), lambda_(forgetting) {
  if (!(forgetting > 0.0 && forgetting <= 1.0)) {
    throw ConfigError("forgetting", "must lie in (0, 1]");
  }
  if (!(initial_p > 0.0)) throw ConfigError("initial_p", "must be > 0");
}

std::optional<double> RlsEstimator::update(const OneWayObservation& obs) {
  if (!has_baseline_) {
    td0_ = obs.t_d;
    ta0_ = obs.t_a;
    has_baseline_ = true;
    return std::nullopt;
  }
  const double x = obs.t_d - td0_;
  const double y = obs.t_a - ta0_;
  const double gain = p_ * x / (lambda_ + p_ * x * x);
  ratio_ += gain * (y - ratio_ * x);
  p_ = (p_ - gain * x * p_) / lambda_;
  has_estimate_ = true;
  return ratio_;
}

std::optional<double> RlsEstimator::estimate() const {
  if (!has_estimate_) return std::nullopt;
  return ratio_;
}

std::optional<double> GmlleEstimator::update(const TwoWayExchange& ex) {
  const double init_mid = 0.5 * (ex.t1 + ex.t4);
  const double resp_mid = 0.5 * (ex.t2 + ex.t3);
  if (n_ == 0) {
    base_init_ = init_mid;
    base_resp_ = resp_mid;
  }
  const double x = init_mid - base_init_;
  const double y = resp_mid - base_resp_;
  ++n_;
  const double inv_n = 1.0 / static_cast<double>(n_);
  const double dx = x - mean_x_;
  mean_x_ += dx * inv_n;
  mean_y_ += (y - mean_y_) * inv_n;
  m2_x_ += dx * (x - mean_x_);
  c_xy_ += dx * (y - mean_y_);
  if (!(m2_x_ > 0.0)) return std::nullopt;
  return c_xy_ / m2_x_;
}

double GmlleEstimator::estimate() const {
  if (n_ < 2 || !(m2_x_ > 0.0)) {
    throw InsufficientDataError("GMLLE needs two exchanges with distinct midpoints");
  }
  return c_xy_ / m2_x_;
}

std::string_view to_string(SkewEstimatorKind kind) {
  switch (kind) {
    case SkewEstimatorKind::CR: return "cr";
    case SkewEstimatorKind::RLS: return "rls";
    case SkewEstimatorKind::MLE: return "mle";
  }
  return "?";
}

SkewEstimatorKind skew_estimator_from_string(std::string_view name) {
  if (name == "cr") return SkewEstimatorKind::CR;
  if (name == "rls") return SkewEstimatorKind::RLS;
  if (name == "mle") return SkewEstimatorKind::MLE;
  throw ConfigError("estimator", "unknown skew estimator '" + std::string(name) + "'");
}

OneWaySkewEstimator::OneWaySkewEstimator(SkewEstimatorKind kind) : kind_(kind) {
  switch (kind) {
    case SkewEstimatorKind::CR: impl_ = CrEstimator{}; break;
    case SkewEstimatorKind::RLS: impl_ = RlsEstimator{}; break;
    case SkewEstimatorKind::MLE: impl_ = JointMle{}; break;
  }
}

std::optional<double> OneWaySkewEstimator::update(const OneWayObservation& obs) {
  struct Visitor {
    const OneWayObservation& obs;
    std::optional<double> operator()(CrEstimator& e) const { return e.update(obs); }
    std::optional<double> operator()(RlsEstimator& e) const { return e.update(obs); }
    std::optional<double> operator()(JointMle& e) const {
      e.ingest(obs);
      if (e.count() < 2) return std::nullopt;
      return e.estimate().ratio;
    }
  };
  return std::visit(Visitor{obs}, impl_);
}

}  // namespace wsnsync
