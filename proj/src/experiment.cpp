#include "wsnsync/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <thread>

#include "wsnsync/errors.hpp"

namespace wsnsync {

using nlohmann::json;

namespace {

bool is_count(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

/// Object view that rejects unknown keys and reports typed lookups with the
/// full field path.
class ObjectReader {
 public:
  ObjectReader(const json& node, std::string path, std::set<std::string> allowed)
      : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(where(), "expected an object");
    for (const auto& item : node_.items()) {
      if (!allowed.count(item.key())) throw ConfigError(where(item.key()), "unknown key");
    }
  }

  bool has(const std::string& key) const { return node_.contains(key); }
  const json& raw(const std::string& key) const { return node_.at(key); }
  std::string where(const std::string& key = {}) const {
    return key.empty() ? (path_.empty() ? "/" : path_) : path_ + "/" + key;
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number()) throw ConfigError(where(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(where(key), "must be finite");
    return x;
  }

  std::uint64_t unsigned_int(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!is_count(v)) throw ConfigError(where(key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_boolean()) throw ConfigError(where(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_string()) throw ConfigError(where(key), "expected a string");
    return v.get<std::string>();
  }

  const json& array(const std::string& key) const {
    const json& v = node_.at(key);
    if (!v.is_array()) throw ConfigError(where(key), "expected an array");
    if (v.empty()) throw ConfigError(where(key), "sweep axis must not be empty");
    return v;
  }

 private:
  const json& node_;
  std::string path_;
};

/// Re-throws a ConfigError raised by a value validator under `prefix`.
template <typename F>
void validated(const std::string& prefix, F&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    const auto colon = what.find(": ");
    throw ConfigError(prefix + "/" + e.field(), colon == std::string::npos ? what : what.substr(colon + 2));
  }
}

DelaySpec parse_delay(const json& node, const std::string& path, const DelaySpec& base) {
  ObjectReader r(node, path, {"kind", "mean", "sigma", "rho"});
  DelaySpec spec = base;
  validated(path, [&] { spec.kind = delay_kind_from_string(r.string("kind", std::string(to_string(base.kind)))); });
  spec.mean = r.number("mean", base.mean);
  spec.sigma = r.number("sigma", base.sigma);
  spec.rho = r.number("rho", base.rho);
  validated(path, [&] { spec.validate(); });
  return spec;
}

ClockParams parse_clock(const ObjectReader& r, const ClockParams& base) {
  ClockParams p{r.number("skew", base.skew), r.number("offset", base.offset)};
  if (!(p.ratio() > 0.0)) throw ConfigError(r.where("skew"), "1 + skew must be > 0");
  return p;
}

SchemeKind parse_scheme(const json& node, const std::string& path) {
  ObjectReader r(node, path, {"kind", "estimator", "bundle_size", "gmlle"});
  const std::string kind = r.string("kind", "proposed");
  if (kind == "proposed") {
    if (r.has("gmlle")) throw ConfigError(r.where("gmlle"), "only valid for kind two_way");
    ProposedReverse p;
    validated(path, [&] { p.estimator = skew_estimator_from_string(r.string("estimator", "cr")); });
    const auto n = r.unsigned_int("bundle_size", 1);
    if (n < 1) throw ConfigError(r.where("bundle_size"), "must be >= 1");
    p.bundle_size = static_cast<int>(n);
    return p;
  }
  if (kind == "two_way") {
    if (r.has("estimator")) throw ConfigError(r.where("estimator"), "only valid for kind proposed");
    if (r.has("bundle_size")) throw ConfigError(r.where("bundle_size"), "only valid for kind proposed");
    return ConventionalTwoWay{r.boolean("gmlle", false)};
  }
  throw ConfigError(r.where("kind"), "expected 'proposed' or 'two_way'");
}

Topology parse_topology(const json& node, const DelaySpec& link_default) {
  ObjectReader r(node, "/topology", {"mode", "gateways"});
  Topology t;
  validated("/topology", [&] { t.mode = gateway_mode_from_string(r.string("mode", "relay")); });
  if (!r.has("gateways")) return t;
  const json& list = r.raw("gateways");
  if (!list.is_array()) throw ConfigError(r.where("gateways"), "expected an array");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string at = "/topology/gateways/" + std::to_string(i);
    ObjectReader g(list[i], at, {"skew", "offset", "uplink", "downlink"});
    GatewaySpec spec;
    spec.clock = parse_clock(g, ClockParams{});
    spec.uplink = g.has("uplink") ? parse_delay(g.raw("uplink"), at + "/uplink", link_default) : link_default;
    spec.downlink =
        g.has("downlink") ? parse_delay(g.raw("downlink"), at + "/downlink", link_default) : link_default;
    t.gateways.push_back(spec);
  }
  return t;
}

void parse_sweep(const json& node, ExperimentConfig& cfg) {
  ObjectReader r(node, "/sweep", {"schemes", "si", "bundle_size", "seeds"});
  if (r.has("schemes")) {
    const json& list = r.array("schemes");
    for (std::size_t i = 0; i < list.size(); ++i) {
      cfg.sweep.schemes.push_back(parse_scheme(list[i], "/sweep/schemes/" + std::to_string(i)));
    }
  }
  if (r.has("si")) {
    const json& list = r.array("si");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string at = "/sweep/si/" + std::to_string(i);
      if (!list[i].is_number() || !(list[i].get<double>() > 0.0)) throw ConfigError(at, "must be a number > 0");
      cfg.sweep.si.push_back(list[i].get<double>());
    }
  }
  if (r.has("bundle_size")) {
    const json& list = r.array("bundle_size");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string at = "/sweep/bundle_size/" + std::to_string(i);
      if (!is_count(list[i]) || list[i].get<std::uint64_t>() < 1) {
        throw ConfigError(at, "must be an integer >= 1");
      }
      cfg.sweep.bundle_size.push_back(static_cast<int>(list[i].get<std::uint64_t>()));
    }
  }
  cfg.sweep.seeds = r.unsigned_int("seeds", 1);
  if (cfg.sweep.seeds < 1) throw ConfigError(r.where("seeds"), "must be >= 1");
}

void parse_bench(const json& node, ExperimentConfig& cfg) {
  ObjectReader r(node, "/bench", {"estimators", "messages", "interval", "runs", "threads"});
  if (r.has("estimators")) {
    cfg.bench.kinds.clear();
    const json& list = r.array("estimators");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string at = "/bench/estimators/" + std::to_string(i);
      if (!list[i].is_string()) throw ConfigError(at, "expected a string");
      validated("/bench", [&] { cfg.bench.kinds.push_back(bench_estimator_from_string(list[i].get<std::string>())); });
    }
  }
  cfg.bench.messages = r.unsigned_int("messages", cfg.bench.messages);
  cfg.bench.interval = r.number("interval", cfg.bench.interval);
  cfg.bench.runs = r.unsigned_int("runs", cfg.bench.runs);
  cfg.bench.threads = static_cast<unsigned>(r.unsigned_int("threads", 0));
  validated("/bench", [&] { cfg.bench.validate(); });
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& doc, std::optional<std::uint64_t> seed_override) {
  ObjectReader r(doc, "", {"scheme", "si", "horizon", "n_measurements", "warmup", "delay", "sensor", "seed",
                           "topology", "processing_time", "trace", "sweep", "bench"});
  ExperimentConfig cfg;
  RunConfig& run = cfg.run;
  if (r.has("scheme")) run.scheme = parse_scheme(r.raw("scheme"), "/scheme");
  run.si = r.number("si", run.si);
  run.horizon = r.number("horizon", run.horizon);
  run.n_measurements = r.unsigned_int("n_measurements", run.n_measurements);
  run.warmup = r.number("warmup", run.warmup);
  if (r.has("delay")) run.delay = parse_delay(r.raw("delay"), "/delay", run.delay);
  if (r.has("sensor")) {
    ObjectReader s(r.raw("sensor"), "/sensor", {"skew", "offset"});
    run.sensor = parse_clock(s, run.sensor);
  }
  run.seed = r.unsigned_int("seed", run.seed);
  if (seed_override) run.seed = *seed_override;
  if (r.has("topology")) run.topology = parse_topology(r.raw("topology"), run.delay);
  run.processing_time = r.number("processing_time", run.processing_time);
  run.trace = r.boolean("trace", false);
  validated("", [&] { run.validate(); });

  if (r.has("sweep")) parse_sweep(r.raw("sweep"), cfg);
  cfg.bench.delay = run.delay;
  cfg.bench.clock = run.sensor;
  cfg.bench.seed = run.seed;
  if (r.has("bench")) parse_bench(r.raw("bench"), cfg);

  json canonical = doc;
  canonical["seed"] = run.seed;
  cfg.hash = fnv1a(canonical.dump());
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), e.what());
  }
  return parse_experiment_config(doc, seed_override);
}

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

// ---------------------------------------------------------------------------

std::vector<SweepCell> run_sweep(const ExperimentConfig& cfg, unsigned threads) {
  const auto schemes = cfg.sweep.schemes.empty() ? std::vector<SchemeKind>{cfg.run.scheme} : cfg.sweep.schemes;
  const auto sis = cfg.sweep.si.empty() ? std::vector<double>{cfg.run.si} : cfg.sweep.si;

  std::vector<SweepCell> cells;
  for (const auto& scheme : schemes) {
    std::vector<int> bundles{1};
    if (const auto* p = std::get_if<ProposedReverse>(&scheme)) {
      bundles = cfg.sweep.bundle_size.empty() ? std::vector<int>{p->bundle_size} : cfg.sweep.bundle_size;
    }
    for (double si : sis) {
      for (int n_bm : bundles) {
        for (std::size_t s = 0; s < cfg.sweep.seeds; ++s) {
          RunConfig rc = cfg.run;
          rc.scheme = scheme;
          if (auto* p = std::get_if<ProposedReverse>(&rc.scheme)) p->bundle_size = n_bm;
          rc.si = si;
          rc.seed = cfg.run.seed + s;
          rc.validate();
          cells.push_back({rc, {}});
        }
      }
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) cells[i].report = run_simulation(cells[i].config);
  };
  unsigned n = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  n = static_cast<unsigned>(std::min<std::size_t>(n, cells.size()));
  {
    std::vector<std::jthread> pool;
    for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
  }
  return cells;
}

// ---------------------------------------------------------------------------

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9e", value);
  return buf;
}

namespace {

int bundle_of(const RunConfig& cfg) {
  if (const auto* p = std::get_if<ProposedReverse>(&cfg.scheme)) return p->bundle_size;
  return 1;
}

}  // namespace

void write_run_row(std::ostream& os, const RunConfig& cfg, const RunReport& report, std::uint64_t hash) {
  os << scheme_name(cfg.scheme) << ',' << format_number(cfg.si) << ',' << bundle_of(cfg) << ',' << cfg.seed
     << ',' << hash_hex(hash) << ',' << format_number(report.skew_mse) << ','
     << format_number(report.meas_time_mse) << ',' << report.n_tx << ',' << report.n_rx << '\n';
}

void write_trace(std::ostream& os, const RunConfig& cfg, const RunReport& report, std::uint64_t hash) {
  for (const auto& s : report.traces) {
    os << cfg.seed << ',' << hash_hex(hash) << ',' << (s.kind == TraceKind::Skew ? "skew" : "meas_time") << ','
       << format_number(s.time) << ',' << format_number(s.error) << '\n';
  }
}

void write_aggregate(std::ostream& os, const std::vector<SweepCell>& cells, std::uint64_t hash) {
  // Consecutive cells differing only by seed form one group.
  std::size_t i = 0;
  while (i < cells.size()) {
    const RunConfig& head = cells[i].config;
    std::size_t j = i;
    double skew = 0.0, meas = 0.0;
    while (j < cells.size() && scheme_name(cells[j].config.scheme) == scheme_name(head.scheme) &&
           cells[j].config.si == head.si && bundle_of(cells[j].config) == bundle_of(head)) {
      skew += cells[j].report.skew_mse;
      meas += cells[j].report.meas_time_mse;
      ++j;
    }
    const double n = static_cast<double>(j - i);
    os << scheme_name(head.scheme) << ',' << format_number(head.si) << ',' << bundle_of(head) << ',' << (j - i)
       << ',' << hash_hex(hash) << ',' << format_number(skew / n) << ',' << format_number(meas / n) << ','
       << cells[i].report.n_tx << ',' << cells[i].report.n_rx << '\n';
    i = j;
  }
}

void write_bench(std::ostream& os, const BenchmarkResult& result, const BenchmarkConfig& cfg, std::uint64_t hash) {
  for (const auto& r : result.rows) {
    os << to_string(r.estimator) << ',' << r.k << ',' << r.budget << ',' << format_number(r.span) << ','
       << format_number(r.mse) << ',' << format_number(r.mean_error) << ',' << format_number(r.variance) << ','
       << format_number(r.bound) << ',' << cfg.seed << ',' << hash_hex(hash) << '\n';
  }
}

// ---------------------------------------------------------------------------

namespace {

template <typename Body>
int guarded(const CommandOptions& opts, std::ostream& err, Body&& body) {
  try {
    const ExperimentConfig cfg = load_experiment_config(opts.config, opts.seed);
    std::filesystem::create_directories(opts.output_dir);
    body(cfg);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

std::ofstream open_csv(const std::filesystem::path& path, const char* header) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << header << '\n';
  return os;
}

}  // namespace

int cmd_run(const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(opts, err, [&](const ExperimentConfig& cfg) {
    const RunReport report = run_simulation(cfg.run);
    auto os = open_csv(opts.output_dir / "run_report.csv", kRunReportHeader);
    write_run_row(os, cfg.run, report, cfg.hash);
    if (cfg.run.trace) {
      auto ts = open_csv(opts.output_dir / "trace.csv", kTraceHeader);
      write_trace(ts, cfg.run, report, cfg.hash);
    }
    if (!opts.quiet) {
      log << scheme_name(cfg.run.scheme) << " si=" << cfg.run.si << " skew_mse=" << format_number(report.skew_mse)
          << " meas_time_mse=" << format_number(report.meas_time_mse) << " n_tx=" << report.n_tx
          << " n_rx=" << report.n_rx << '\n';
    }
  });
}

int cmd_sweep(const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(opts, err, [&](const ExperimentConfig& cfg) {
    const auto cells = run_sweep(cfg);
    auto os = open_csv(opts.output_dir / "cells.csv", kRunReportHeader);
    for (const auto& c : cells) write_run_row(os, c.config, c.report, cfg.hash);
    auto agg = open_csv(opts.output_dir / "aggregate.csv", kAggregateHeader);
    write_aggregate(agg, cells, cfg.hash);
    if (!opts.quiet) log << cells.size() << " cells written to " << opts.output_dir.string() << '\n';
  });
}

int cmd_bench_estimators(const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(opts, err, [&](const ExperimentConfig& cfg) {
    const auto result = estimator_benchmark(cfg.bench);
    auto os = open_csv(opts.output_dir / "mse_vs_k.csv", kBenchHeader);
    write_bench(os, result, cfg.bench, cfg.hash);
    if (!opts.quiet) {
      log << result.rows.size() << " rows (" << cfg.bench.runs << " runs) written to " << opts.output_dir.string()
          << '\n';
    }
  });
}

}  // namespace wsnsync
