#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wsnsync/benchmark.hpp"
#include "wsnsync/simulation.hpp"

namespace wsnsync {

/// Sweep axes; each present axis must be non-empty.
struct SweepAxes {
  std::vector<SchemeKind> schemes;
  std::vector<double> si;
  std::vector<int> bundle_size;
  std::size_t seeds = 1;  ///< seeds base, base + 1, ...
};

/// Parsed experiment file: one base run plus optional sweep and benchmark
/// sections.
struct ExperimentConfig {
  RunConfig run;
  SweepAxes sweep;
  BenchmarkConfig bench;
  std::uint64_t hash = 0;  ///< FNV-1a of the canonical JSON text
};

/// Validates and converts a JSON document. Unknown keys and invalid values
/// raise ConfigError with a "/path/to/field" locator.
ExperimentConfig parse_experiment_config(const nlohmann::json& doc,
                                         std::optional<std::uint64_t> seed_override = {});

/// Reads and parses a config file. Syntax errors carry the parser's
/// line/column diagnostic.
ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        std::optional<std::uint64_t> seed_override = {});

std::string hash_hex(std::uint64_t hash);

/// One expanded sweep cell.
struct SweepCell {
  RunConfig config;
  RunReport report;
};

/// Cross product schemes x si x bundle_size x seeds in that nesting order.
/// The bundle axis only expands proposed schemes. Cells run concurrently;
/// the returned order is the expansion order.
std::vector<SweepCell> run_sweep(const ExperimentConfig& cfg, unsigned threads = 0);

// CSV writers. Headers are fixed strings.
inline constexpr const char* kRunReportHeader =
    "scheme,si,n_bm,seed,config_hash,skew_mse,meas_time_mse,n_tx,n_rx";
inline constexpr const char* kTraceHeader = "seed,config_hash,kind,time,error";
inline constexpr const char* kAggregateHeader =
    "scheme,si,n_bm,seeds,config_hash,mean_skew_mse,mean_meas_time_mse,n_tx,n_rx";
inline constexpr const char* kBenchHeader =
    "estimator,k,budget,span,mse,mean_error,variance,bound,seed,config_hash";

std::string format_number(double value);
void write_run_row(std::ostream& os, const RunConfig& cfg, const RunReport& report, std::uint64_t hash);
void write_trace(std::ostream& os, const RunConfig& cfg, const RunReport& report, std::uint64_t hash);
void write_aggregate(std::ostream& os, const std::vector<SweepCell>& cells, std::uint64_t hash);
void write_bench(std::ostream& os, const BenchmarkResult& result, const BenchmarkConfig& cfg,
                 std::uint64_t hash);

// Command entry points. Exit codes: 0 success, 2 config error, 3 runtime error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

struct CommandOptions {
  std::filesystem::path config;
  std::filesystem::path output_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

int cmd_run(const CommandOptions& opts, std::ostream& log, std::ostream& err);
int cmd_sweep(const CommandOptions& opts, std::ostream& log, std::ostream& err);
int cmd_bench_estimators(const CommandOptions& opts, std::ostream& log, std::ostream& err);

}  // namespace wsnsync
