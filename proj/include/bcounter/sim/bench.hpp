#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bcounter/sim/harness.hpp"

namespace bcounter::sim {

struct BenchPoint {
  /// File-name friendly, e.g. "bcsrv-c50".
  std::string label;
  int total_clients = 0;
  SimConfig config;
};

struct BenchScenario {
  std::string name;
  std::string description;
  /// Also emit the per-operation series for every point.
  bool per_op = false;
  std::vector<BenchPoint> points;
};

struct BenchOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> duration_ms;
  /// Replaces the client sweep with this single total.
  std::optional<int> clients;
  /// Restricts the sweep to one strategy.
  std::optional<mw::StrategyKind> strategy;
};

/// Spreads `total` clients over `dcs` DCs, the remainder going to the first
/// ones.
std::vector<int> split_clients(int total, int dcs);

std::vector<std::string_view> bench_names();
std::optional<BenchScenario> bench_scenario(std::string_view name,
                                            const BenchOverrides& overrides = {});

}  // namespace bcounter::sim
