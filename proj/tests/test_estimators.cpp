#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "wsnsync/delay.hpp"
#include "wsnsync/errors.hpp"
#include "wsnsync/estimators.hpp"

using namespace wsnsync;

namespace {

constexpr double kRatio = 1.0001;
constexpr double kTheta = 1.0;

// Closed-form bounds for the arithmetic design 0, 1, ..., n-1 (unit spacing):
// popvar = (n^2 - 1) / 12, mean(t^2) = (n - 1)(2n - 1) / 6.
double arithmetic_crlb_skew(double n, double sigma) { return sigma * sigma / (n * (n * n - 1.0) / 12.0); }
double arithmetic_crlb_offset(double n, double sigma) {
  return arithmetic_crlb_skew(n, sigma) * (n - 1.0) * (2.0 * n - 1.0) / 6.0;
}

std::vector<OneWayObservation> noisy_stream(std::size_t n, double sigma, double mean_delay, std::uint64_t seed) {
  DelaySampler d(DelaySpec::gaussian(mean_delay, sigma), seed);
  std::vector<OneWayObservation> obs(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k);
    obs[k] = {t, kRatio * t + kTheta + d.sample()};
  }
  return obs;
}

struct Running {
  double n = 0, sum = 0, sum_sq = 0;
  void add(double x) {
    n += 1;
    sum += x;
    sum_sq += x * x;
  }
  double mean() const { return sum / n; }
  double variance() const { return (sum_sq - sum * sum / n) / (n - 1); }
  double mse() const { return sum_sq / n; }
};

}  // namespace

TEST_CASE("mle_ingest maintains raw sums") {
  JointMle one;
  one.ingest({1.0, 2.0});
  CHECK(one.count() == 1);
  CHECK(one.sum_td() == 1.0);
  CHECK(one.sum_ta() == 2.0);
  CHECK(one.sum_td2() == 1.0);
  CHECK(one.sum_td_ta() == 2.0);

  JointMle two;
  two.ingest({1.0, 2.0});
  two.ingest({3.0, 4.0});
  CHECK(two.sum_td() == 4.0);
  CHECK(two.sum_td2() == 10.0);
  CHECK(two.sum_ta() == 6.0);
  CHECK(two.sum_td_ta() == 14.0);

  JointMle reversed;
  reversed.ingest({3.0, 4.0});
  reversed.ingest({1.0, 2.0});
  CHECK(reversed.sum_td() == two.sum_td());
  CHECK(reversed.sum_td2() == two.sum_td2());
  CHECK(reversed.sum_ta() == two.sum_ta());
  CHECK(reversed.sum_td_ta() == two.sum_td_ta());
}

TEST_CASE("mle_estimate") {
  SUBCASE("zero-noise recovery") {
    JointMle mle(0.001);
    for (double t : {0.0, 1.0, 2.0}) mle.ingest({t, kRatio * t + kTheta + 0.001});
    const auto est = mle.estimate();
    CHECK(est.ratio == doctest::Approx(kRatio).epsilon(1e-14));
    CHECK(est.offset == doctest::Approx(kTheta).epsilon(1e-14));
  }

  SUBCASE("degenerate design") {
    JointMle mle;
    mle.ingest({5.0, 1.0});
    CHECK_THROWS_AS(mle.estimate(), DegenerateDesignError);
    mle.ingest({5.0, 2.0});
    CHECK_THROWS_AS(mle.estimate(), DegenerateDesignError);
  }

  SUBCASE("matches a batch least-squares oracle") {
    const auto obs = noisy_stream(500, 1e-6, 0.0, 77);
    std::vector<double> x, y;
    JointMle mle;
    for (const auto& o : obs) {
      mle.ingest(o);
      x.push_back(o.t_d);
      y.push_back(o.t_a);
    }
    const auto line = oracle::batch_ls(x, y);
    CHECK(std::abs(mle.estimate().ratio - static_cast<double>(line.slope)) < 1e-14);
    CHECK(std::abs(mle.estimate().offset - static_cast<double>(line.intercept)) < 1e-12);
  }
}

TEST_CASE("CRLB formulas") {
  const std::vector<double> design{0.0, 1.0, 2.0};
  CHECK(crlb_skew(design, 1e-9) == doctest::Approx(5e-19).epsilon(1e-12));
  CHECK(crlb_offset(design, 1e-9) == doctest::Approx(5e-19 * 5.0 / 3.0).epsilon(1e-12));
  CHECK(crlb_skew(design, 1e-8) == doctest::Approx(100.0 * crlb_skew(design, 1e-9)));
  CHECK(crlb_offset(design, 1e-8) == doctest::Approx(100.0 * crlb_offset(design, 1e-9)));
  CHECK_THROWS_AS(crlb_skew(std::vector<double>{1.0, 1.0}, 1e-9), DegenerateDesignError);
  CHECK_THROWS_AS(crlb_offset(std::vector<double>{1.0}, 1e-9), DegenerateDesignError);
}

TEST_CASE("cumulative ratio estimator") {
  CrEstimator cr;
  CHECK_FALSE(cr.update({0.0, 1.0}).has_value());
  const auto est = cr.update({10.0, 11.001});
  REQUIRE(est.has_value());
  CHECK(*est == doctest::Approx(1.0001).epsilon(1e-13));
  CHECK_THROWS_AS(cr.update({0.0, 5.0}), DegenerateDesignError);

  static_assert(sizeof(CrEstimator) == 4 * sizeof(double));
}

TEST_CASE("cr_lower_bound") {
  CHECK(cr_lower_bound(1000.0, 1e-9) == doctest::Approx(2e-24).epsilon(1e-12));
  CHECK(cr_lower_bound(3600.0, 1e-9) == doctest::Approx(1.543e-25).epsilon(1e-3));
  CHECK(cr_lower_bound(2000.0, 1e-9) == doctest::Approx(cr_lower_bound(1000.0, 1e-9) / 4.0));
  CHECK_THROWS_AS(cr_lower_bound(0.0, 1e-9), DegenerateDesignError);
}

TEST_CASE("RLS estimator") {
  SUBCASE("noiseless data converges within 10 updates") {
    RlsEstimator rls;
    rls.update({0.0, kTheta});
    double est = 0.0;
    for (int k = 1; k <= 10; ++k) est = *rls.update({double(k), kRatio * k + kTheta});
    CHECK(std::abs(est - kRatio) / kRatio <= 1e-12);
    CHECK(rls.gain_denominator() > 0.0);
  }

  SUBCASE("one post-baseline point gives y/x") {
    RlsEstimator rls;
    rls.update({2.0, 3.0});
    CHECK(*rls.update({7.0, 8.5}) == doctest::Approx(5.5 / 5.0).epsilon(1e-10));
  }

  SUBCASE("lambda = 1 equals batch least squares through the origin") {
    const auto obs = noisy_stream(400, 1e-6, 0.0, 31);
    RlsEstimator rls;
    std::vector<double> x, y;
    double est = 0.0;
    for (const auto& o : obs) {
      if (auto r = rls.update(o)) est = *r;
      else continue;
      x.push_back(o.t_d - obs[0].t_d);
      y.push_back(o.t_a - obs[0].t_a);
    }
    const double ref = static_cast<double>(oracle::batch_rto(x, y));
    CHECK(std::abs(est - ref) / ref <= 1e-9);
  }

  SUBCASE("invalid forgetting factor") { CHECK_THROWS_AS(RlsEstimator(0.0), ConfigError); }
}

TEST_CASE("GMLLE midpoint fit") {
  SUBCASE("zero-noise symmetric delays") {
    GmlleEstimator g;
    const double d = 5e-7;
    for (int j = 0; j < 20; ++j) {
      const double t1 = j * 1.0;
      const double t2 = kRatio * (t1 + d) + kTheta;
      g.update({t1, t2, t2, t1 + 2 * d});
    }
    CHECK(g.estimate() == doctest::Approx(kRatio).epsilon(1e-12));
  }

  SUBCASE("two-point line") {
    GmlleEstimator g;
    CHECK_FALSE(g.update({0.0, kTheta, kTheta, 0.0}).has_value());
    CHECK_THROWS_AS(g.estimate(), InsufficientDataError);
    const auto slope = g.update({100.0, kTheta + 100.0 * kRatio, kTheta + 100.0 * kRatio, 100.0});
    REQUIRE(slope.has_value());
    CHECK(*slope == doctest::Approx(kRatio).epsilon(1e-12));
  }

  SUBCASE("matches the batch midpoint oracle") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 1e-6);
    GmlleEstimator g;
    std::vector<double> mh, ms;
    for (int j = 0; j < 300; ++j) {
      const TwoWayExchange ex{j * 2.0 + noise(rng), 3.0 + j * 2.0 * kRatio + noise(rng),
                              3.0 + j * 2.0 * kRatio + 1e-4 + noise(rng), j * 2.0 + 1e-3 + noise(rng)};
      g.update(ex);
      mh.push_back(0.5 * (ex.t1 + ex.t4));
      ms.push_back(0.5 * (ex.t2 + ex.t3));
    }
    CHECK(std::abs(g.estimate() - static_cast<double>(oracle::batch_ls(mh, ms).slope)) < 1e-13);
  }
}

TEST_CASE("Monte-Carlo: joint MLE is unbiased and efficient" * doctest::timeout(120)) {
  const std::size_t n = 1000, runs = 10'000;
  const double sigma = 1e-9, mean_delay = 333.56e-9;
  Running ratio, offset;
  for (std::size_t r = 0; r < runs; ++r) {
    JointMle mle(mean_delay);
    for (const auto& o : noisy_stream(n, sigma, mean_delay, 1000 + r)) mle.ingest(o);
    const auto est = mle.estimate();
    ratio.add(est.ratio - kRatio);
    offset.add(est.offset - kTheta);
  }
  const double crlb_r = arithmetic_crlb_skew(n, sigma);
  const double crlb_t = arithmetic_crlb_offset(n, sigma);
  CHECK(std::abs(ratio.mse() / crlb_r - 1.0) <= 0.10);
  CHECK(std::abs(ratio.variance() / crlb_r - 1.0) <= 0.10);
  CHECK(std::abs(offset.variance() / crlb_t - 1.0) <= 0.10);
  CHECK(std::abs(ratio.mean()) <= 4.0 * std::sqrt(crlb_r / runs));
  CHECK(std::abs(offset.mean()) <= 4.0 * std::sqrt(crlb_t / runs));
}

TEST_CASE("Monte-Carlo: cumulative ratio attains 2 sigma^2 / span^2") {
  const std::size_t runs = 10'000;
  const double sigma = 1e-9;
  std::mt19937_64 rng(17);
  std::normal_distribution<double> noise(0.0, sigma);
  Running err;
  for (std::size_t r = 0; r < runs; ++r) {
    CrEstimator cr;
    cr.update({0.0, kTheta + noise(rng)});
    err.add(*cr.update({1000.0, kRatio * 1000.0 + kTheta + noise(rng)}) - kRatio);
  }
  CHECK(std::abs(err.variance() / 2e-24 - 1.0) <= 0.10);
  CHECK(std::abs(err.mean()) <= 4.0 * std::sqrt(2e-24 / runs));
}

TEST_CASE("Monte-Carlo: GMLLE is worse than the joint MLE at equal message budget") {
  // 1000 messages: 1000 one-way beacons, or 500 exchanges of two messages,
  // both at one event per second.
  const std::size_t runs = 2000, budget = 1000;
  const double sigma = 1e-6;
  Running mle_err, gmlle_err;
  for (std::size_t r = 0; r < runs; ++r) {
    JointMle mle;
    for (const auto& o : noisy_stream(budget, sigma, 0.0, 50'000 + r)) mle.ingest(o);
    mle_err.add(mle.estimate().ratio - kRatio);

    DelaySampler down(DelaySpec::gaussian(0.0, sigma), 90'000 + 2 * r);
    DelaySampler up(DelaySpec::gaussian(0.0, sigma), 90'001 + 2 * r);
    GmlleEstimator g;
    for (std::size_t j = 0; j < budget / 2; ++j) {
      const double t1 = static_cast<double>(j);
      const double at = t1 + down.sample();
      const double t2 = kRatio * at + kTheta;
      g.update({t1, t2, t2, at + up.sample()});
    }
    gmlle_err.add(g.estimate() - kRatio);
  }
  // Expected ratio is 4; require a clear margin.
  CHECK(gmlle_err.mse() > 2.0 * mle_err.mse());
}

TEST_CASE("skew estimators ignore a constant shift of arrival times") {
  const auto obs = noisy_stream(200, 1e-9, 0.0, 8);
  const double c = 0.731;
  JointMle mle_a, mle_b;
  CrEstimator cr_a, cr_b;
  RlsEstimator rls_a, rls_b;
  double cra = 0, crb = 0, rla = 0, rlb = 0;
  for (const auto& o : obs) {
    const OneWayObservation shifted{o.t_d, o.t_a + c};
    mle_a.ingest(o);
    mle_b.ingest(shifted);
    if (auto e = cr_a.update(o)) cra = *e;
    if (auto e = cr_b.update(shifted)) crb = *e;
    if (auto e = rls_a.update(o)) rla = *e;
    if (auto e = rls_b.update(shifted)) rlb = *e;
  }
  CHECK(std::abs(mle_a.estimate().ratio - mle_b.estimate().ratio) <= 1e-14);
  CHECK(std::abs(cra - crb) <= 1e-14);
  CHECK(std::abs(rla - rlb) <= 1e-14);
  CHECK(mle_b.estimate().offset - mle_a.estimate().offset == doctest::Approx(c).epsilon(1e-9));
}

TEST_CASE("zero-noise exactness of all four estimators") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> skew(-1e-3, 1e-3), offset(-10.0, 10.0), spacing(0.01, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double ratio = 1.0 + skew(rng), theta = offset(rng), gap = spacing(rng);
    JointMle mle;
    CrEstimator cr;
    RlsEstimator rls;
    GmlleEstimator g;
    double cr_est = 0, rls_est = 0;
    for (int k = 0; k < 12; ++k) {
      const double t = k * gap;
      const OneWayObservation o{t, ratio * t + theta};
      mle.ingest(o);
      if (auto e = cr.update(o)) cr_est = *e;
      if (auto e = rls.update(o)) rls_est = *e;
      const double t2 = ratio * t + theta;
      g.update({t, t2, t2, t});
    }
    CHECK(std::abs(mle.estimate().ratio - ratio) / ratio <= 1e-12);
    CHECK(std::abs(cr_est - ratio) / ratio <= 1e-12);
    CHECK(std::abs(rls_est - ratio) / ratio <= 1e-12);
    CHECK(std::abs(g.estimate() - ratio) / ratio <= 1e-12);
  }
}

TEST_CASE("one-way tracker dispatch") {
  for (auto kind : {SkewEstimatorKind::CR, SkewEstimatorKind::RLS, SkewEstimatorKind::MLE}) {
    OneWaySkewEstimator est(kind);
    CHECK(est.kind() == kind);
    CHECK_FALSE(est.update({0.0, 1.0}).has_value());
    const auto r = est.update({10.0, 1.0 + 10.0 * kRatio});
    REQUIRE(r.has_value());
    CHECK(*r == doctest::Approx(kRatio).epsilon(1e-9));
    CHECK(skew_estimator_from_string(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(skew_estimator_from_string("kalman"), ConfigError);
}
