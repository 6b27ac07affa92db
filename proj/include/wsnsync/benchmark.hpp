#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "wsnsync/clock.hpp"
#include "wsnsync/delay.hpp"

namespace wsnsync {

/// Estimators compared by the Monte-Carlo benchmark. MleOffset reports the
/// offset half of the joint MLE; the others report the frequency ratio.
enum class BenchEstimator { Mle, MleOffset, Cr, Rls, Gmlle };

std::string_view to_string(BenchEstimator kind);
BenchEstimator bench_estimator_from_string(std::string_view name);

struct BenchmarkConfig {
  std::vector<BenchEstimator> kinds{BenchEstimator::Mle, BenchEstimator::Cr, BenchEstimator::Rls,
                                    BenchEstimator::Gmlle};
  DelaySpec delay = DelaySpec::gaussian(kDefaultMeanDelay, 1e-9);
  std::size_t messages = 100;  ///< message budget per run
  double interval = 1.0;       ///< spacing of beacons and of exchanges
  std::size_t runs = 10'000;
  std::uint64_t seed = 1;
  ClockParams clock{1e-4, 1.0};
  unsigned threads = 0;  ///< 0 = hardware concurrency

  void validate() const;
};

/// One point of an MSE-versus-k curve.
///
/// One-way estimators: k is the message index (k + 1 messages received,
/// departures 0, interval, ..., k interval). GMLLE: k is the exchange index,
/// one exchange (two messages) per interval. `budget` counts messages so the
/// curves can be aligned.
struct BenchmarkRow {
  BenchEstimator estimator = BenchEstimator::Mle;
  std::size_t k = 0;
  std::size_t budget = 0;
  double span = 0.0;        ///< t_d(k) - t_d(0)
  double mse = 0.0;
  double mean_error = 0.0;
  double variance = 0.0;    ///< unbiased sample variance of the error
  double bound = 0.0;       ///< matching lower bound at this k
};

struct BenchmarkResult {
  std::vector<BenchmarkRow> rows;

  /// Row for (estimator, k); throws std::out_of_range if absent.
  const BenchmarkRow& at(BenchEstimator kind, std::size_t k) const;
  std::vector<BenchmarkRow> curve(BenchEstimator kind) const;
};

/// Monte-Carlo MSE of every requested estimator at every k. One-way
/// observations follow t_a = R t_d + theta + d(k); exchanges are initiated by
/// the head with independent downlink and uplink delay streams. Results are
/// bit-identical for a given seed regardless of thread count.
BenchmarkResult estimator_benchmark(const BenchmarkConfig& cfg);

}  // namespace wsnsync
