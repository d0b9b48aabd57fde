#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bcounter/middleware/strategy.hpp"

namespace bcounter::sim {

struct PartitionFault {
  std::vector<int> side;  // DCs cut off from the rest
  double start_ms = 0;
  double end_ms = 0;
};

struct CrashFault {
  int dc = 0;
  int node = 0;
  double start_ms = 0;
  double end_ms = 0;
};

struct ReconfigureFault {
  int dc = 0;
  double at_ms = 0;
};

struct SimConfig {
  int dcs = 3;
  std::vector<std::string> dc_names{"us-east", "us-west", "eu"};
  /// Round-trip times; entry [i][j] is measured from i, and the one-way
  /// latency from i to j is half of it.
  std::vector<std::vector<double>> rtt_ms{{0, 83, 96}, {83, 0, 163}, {96, 163, 0}};
  double store_read_ms = 2.0;
  double store_write_ms = 4.0;
  double store_jitter_ms = 1.0;
  double intra_dc_ms = 1.0;
  double jitter_ms = 0.0;

  std::vector<int> clients{10, 10, 10};
  double inc_fraction = 0.2;
  double dec_fraction = 0.8;
  double think_ms = 100.0;
  OpFlag flag = OpFlag::Global;

  int counters = 1;
  Count initial = 6000;
  Count bound = 0;
  Polarity polarity = Polarity::Lower;

  mw::StrategyKind strategy = mw::StrategyKind::Bcsrv;
  mw::MiddlewareConfig middleware;

  std::vector<PartitionFault> partitions;
  std::vector<CrashFault> crashes;
  std::vector<ReconfigureFault> reconfigurations;

  double duration_ms = 10000.0;
  /// Clients start no new operation after this instant; unset means the end
  /// of the run.
  std::optional<double> load_stop_ms;
  double bucket_ms = 1000.0;
  std::uint64_t seed = 1;

  double load_stop() const { return load_stop_ms.value_or(duration_ms); }
  /// Load stopped and every scheduled fault ended.
  double quiescent_at() const;
  std::string key(int i) const { return "c" + std::to_string(i); }
  int total_clients() const;
};

/// Error with the 1-based line it refers to (0 when not tied to a line).
struct ConfigError {
  int line = 0;
  std::string message;
  std::string to_string() const;
};

/// Applies one `key = value` setting. Returns an error message on failure.
std::optional<std::string> apply_setting(SimConfig& cfg, std::string_view key,
                                         std::string_view value);
/// Parses a scenario file on top of the defaults.
std::optional<ConfigError> parse_config(std::string_view text, SimConfig& cfg);
/// Checks cross-field constraints.
std::optional<std::string> validate(const SimConfig& cfg);
/// Every setting, in the file format, so the output can be parsed back.
std::string to_text(const SimConfig& cfg);

struct MetricsRow {
  double time_s = 0;
  std::string strategy;
  std::int64_t attempted = 0;
  std::int64_t succeeded = 0;
  std::int64_t failed = 0;
  double p50_ms = 0;
  double p99_ms = 0;
  std::int64_t store_writes = 0;
  std::int64_t conflicts = 0;
  std::int64_t transfer_msgs = 0;
  std::int64_t sync_transfer_ops = 0;
  std::int64_t violations = 0;
};

struct OpRecord {
  double start_ms = 0;
  int dc = 0;
  int client = 0;
  OpKind kind = OpKind::Dec;
  OpStatus status = OpStatus::Fail;
  std::optional<Errc> reason;
  double latency_ms = 0;
  bool sync_transfer = false;
  bool timed_out = false;
  /// False while the operation was still running when the run ended.
  bool completed = false;
};

struct RunReport {
  std::string strategy;
  std::vector<MetricsRow> rows;
  std::vector<OpRecord> ops;

  std::int64_t attempted = 0;
  std::int64_t succeeded = 0;
  std::int64_t failed = 0;
  std::int64_t store_writes = 0;
  std::int64_t conflicts = 0;
  std::int64_t transfer_msgs = 0;
  std::int64_t transfer_to_empty = 0;
  std::int64_t sync_msgs = 0;
  std::int64_t sync_transfer_ops = 0;
  Count violations = 0;

  /// Median latency per DC over completed operations, whatever their
  /// outcome; timed-out ones are left out.
  std::vector<double> dc_p50_ms;
  /// Global value of each counter according to the observer.
  std::vector<Count> expected_values;
  /// Stored value of each counter at each DC at the end of the run.
  std::vector<std::vector<std::optional<Count>>> final_values;
  /// Time from quiescence (load stopped and every fault over) until every DC
  /// stored identical states.
  std::optional<double> convergence_ms;
  /// First instant counter 0 sat at its bound.
  std::optional<double> depleted_ms;
};

/// Runs one simulation. Same config, same report.
Result<RunReport> run(const SimConfig& cfg);

void write_metrics_csv(const RunReport& report, std::ostream& out);
void write_ops_csv(const RunReport& report, std::ostream& out);

}  // namespace bcounter::sim
