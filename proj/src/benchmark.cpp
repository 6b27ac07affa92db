#include "wsnsync/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "wsnsync/errors.hpp"
#include "wsnsync/estimators.hpp"

namespace wsnsync {

std::string_view to_string(BenchEstimator kind) {
  switch (kind) {
    case BenchEstimator::Mle: return "mle";
    case BenchEstimator::MleOffset: return "mle_offset";
    case BenchEstimator::Cr: return "cr";
    case BenchEstimator::Rls: return "rls";
    case BenchEstimator::Gmlle: return "gmlle";
  }
  return "?";
}

BenchEstimator bench_estimator_from_string(std::string_view name) {
  for (auto k : {BenchEstimator::Mle, BenchEstimator::MleOffset, BenchEstimator::Cr,
                 BenchEstimator::Rls, BenchEstimator::Gmlle}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("estimators", "unknown estimator '" + std::string(name) + "'");
}

void BenchmarkConfig::validate() const {
  if (kinds.empty()) throw ConfigError("estimators", "must not be empty");
  if (messages < 4) throw ConfigError("messages", "must be >= 4");
  if (!(interval > 0.0)) throw ConfigError("interval", "must be > 0");
  if (runs < 1) throw ConfigError("runs", "must be >= 1");
  delay.validate();
}

const BenchmarkRow& BenchmarkResult::at(BenchEstimator kind, std::size_t k) const {
  for (const auto& r : rows) {
    if (r.estimator == kind && r.k == k) return r;
  }
  throw std::out_of_range("no benchmark row for " + std::string(to_string(kind)) + " k=" +
                          std::to_string(k));
}

std::vector<BenchmarkRow> BenchmarkResult::curve(BenchEstimator kind) const {
  std::vector<BenchmarkRow> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out),
               [&](const BenchmarkRow& r) { return r.estimator == kind; });
  return out;
}

namespace {

// Streaming mean / second central moment with pairwise merge.
struct Moments {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;
  double sum_sq = 0.0;

  void add(double x) {
    n += 1.0;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
    sum_sq += x * x;
  }

  void merge(const Moments& o) {
    if (o.n == 0.0) return;
    const double total = n + o.n;
    const double d = o.mean - mean;
    mean += d * o.n / total;
    m2 += o.m2 + d * d * n * o.n / total;
    sum_sq += o.sum_sq;
    n = total;
  }
};

constexpr std::size_t kChunk = 250;

struct Layout {
  std::size_t one_way_rows = 0;   // k = 1 .. messages - 1
  std::size_t exchange_rows = 0;  // k = 1 .. messages / 2 - 1
};

std::size_t rows_for(BenchEstimator kind, const Layout& layout) {
  return kind == BenchEstimator::Gmlle ? layout.exchange_rows : layout.one_way_rows;
}

/// Accumulates error moments for a contiguous block of runs.
std::vector<std::vector<Moments>> simulate_block(const BenchmarkConfig& cfg, const Layout& layout,
                                                 std::size_t first_run, std::size_t last_run) {
  std::vector<std::vector<Moments>> acc(cfg.kinds.size());
  for (std::size_t i = 0; i < cfg.kinds.size(); ++i) acc[i].resize(rows_for(cfg.kinds[i], layout));

  const double ratio = cfg.clock.ratio();
  const std::size_t exchanges = cfg.messages / 2;
  std::vector<OneWayObservation> one_way(cfg.messages);
  std::vector<TwoWayExchange> two_way(exchanges);

  for (std::size_t run = first_run; run < last_run; ++run) {
    DelaySampler forward(cfg.delay, derive_seed(cfg.seed, 3 * run));
    for (std::size_t k = 0; k < cfg.messages; ++k) {
      const double t_d = static_cast<double>(k) * cfg.interval;
      one_way[k] = {t_d, ratio * t_d + cfg.clock.offset + forward.sample()};
    }
    DelaySampler down(cfg.delay, derive_seed(cfg.seed, 3 * run + 1));
    DelaySampler up(cfg.delay, derive_seed(cfg.seed, 3 * run + 2));
    for (std::size_t j = 0; j < exchanges; ++j) {
      const double t1 = static_cast<double>(j) * cfg.interval;
      const double at_sensor = t1 + down.sample();
      const double t2 = hw_read(cfg.clock, at_sensor);
      two_way[j] = {t1, t2, t2, at_sensor + up.sample()};
    }

    for (std::size_t i = 0; i < cfg.kinds.size(); ++i) {
      auto& cells = acc[i];
      switch (cfg.kinds[i]) {
        case BenchEstimator::Mle:
        case BenchEstimator::MleOffset: {
          JointMle mle(cfg.delay.mean);
          mle.ingest(one_way[0]);
          for (std::size_t k = 1; k < cfg.messages; ++k) {
            mle.ingest(one_way[k]);
            const auto est = mle.estimate();
            cells[k - 1].add(cfg.kinds[i] == BenchEstimator::Mle ? est.ratio - ratio
                                                                : est.offset - cfg.clock.offset);
          }
          break;
        }
        case BenchEstimator::Cr: {
          CrEstimator cr;
          cr.update(one_way[0]);
          for (std::size_t k = 1; k < cfg.messages; ++k) cells[k - 1].add(*cr.update(one_way[k]) - ratio);
          break;
        }
        case BenchEstimator::Rls: {
          RlsEstimator rls;
          rls.update(one_way[0]);
          for (std::size_t k = 1; k < cfg.messages; ++k) cells[k - 1].add(*rls.update(one_way[k]) - ratio);
          break;
        }
        case BenchEstimator::Gmlle: {
          GmlleEstimator gmlle;
          gmlle.update(two_way[0]);
          for (std::size_t j = 1; j < exchanges; ++j) {
            const auto slope = gmlle.update(two_way[j]);
            cells[j - 1].add(slope.value_or(gmlle.estimate()) - ratio);
          }
          break;
        }
      }
    }
  }
  return acc;
}

double bound_for(BenchEstimator kind, std::size_t k, const BenchmarkConfig& cfg) {
  std::vector<double> design(k + 1);
  for (std::size_t j = 0; j <= k; ++j) design[j] = static_cast<double>(j) * cfg.interval;
  const double sigma = cfg.delay.sigma;
  switch (kind) {
    case BenchEstimator::Mle:
    case BenchEstimator::Rls:
      return crlb_skew(design, sigma);
    case BenchEstimator::MleOffset:
      return crlb_offset(design, sigma);
    case BenchEstimator::Cr:
      return cr_lower_bound(static_cast<double>(k) * cfg.interval, sigma);
    case BenchEstimator::Gmlle:
      // Midpoint noise is the mean of two independent delays.
      return crlb_skew(design, sigma / std::sqrt(2.0));
  }
  return 0.0;
}

}  // namespace

BenchmarkResult estimator_benchmark(const BenchmarkConfig& cfg) {
  cfg.validate();
  const Layout layout{cfg.messages - 1, cfg.messages / 2 - 1};

  const std::size_t chunks = (cfg.runs + kChunk - 1) / kChunk;
  std::vector<std::vector<std::vector<Moments>>> partial(chunks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < chunks; c = next++) {
      partial[c] = simulate_block(cfg, layout, c * kChunk, std::min(cfg.runs, (c + 1) * kChunk));
    }
  };
  unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));
  {
    std::vector<std::jthread> pool;
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
  }

  BenchmarkResult result;
  for (std::size_t i = 0; i < cfg.kinds.size(); ++i) {
    const BenchEstimator kind = cfg.kinds[i];
    for (std::size_t r = 0; r < rows_for(kind, layout); ++r) {
      Moments m;
      for (const auto& chunk : partial) m.merge(chunk[i][r]);
      BenchmarkRow row;
      row.estimator = kind;
      row.k = r + 1;
      row.budget = kind == BenchEstimator::Gmlle ? 2 * (row.k + 1) : row.k + 1;
      row.span = static_cast<double>(row.k) * cfg.interval;
      row.mse = m.sum_sq / m.n;
      row.mean_error = m.mean;
      row.variance = m.n > 1.0 ? m.m2 / (m.n - 1.0) : 0.0;
      row.bound = bound_for(kind, row.k, cfg);
      result.rows.push_back(row);
    }
  }
  return result;
}

}  // namespace wsnsync
