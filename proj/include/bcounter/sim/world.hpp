#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bcounter/middleware/api.hpp"
#include "bcounter/sim/core.hpp"

namespace bcounter::sim {

/// Simulation-only view of every operation that took effect anywhere.
/// It never talks to replicas; it only checks the global bound.
class GlobalObserver {
 public:
  void track(const std::string& key, Polarity polarity, Count bound, Count initial);

  /// Records an operation at the instant its effect became durable.
  void committed(const std::string& key, OpKind kind, Count delta, SimTime at);

  Count value(const std::string& key) const;
  /// Units of bound-approaching updates that took the global value past the
  /// bound ("decrements in excess" for a LOWER counter).
  Count violations() const noexcept { return violations_; }
  const std::vector<std::pair<SimTime, Count>>& violation_events() const noexcept {
    return violation_events_;
  }
  /// First instant the key's global value sat exactly at (or past) its bound.
  std::optional<SimTime> depleted_at(const std::string& key) const;
  Count committed_incs() const noexcept { return incs_; }
  Count committed_decs() const noexcept { return decs_; }

 private:
  struct Tracked {
    Polarity polarity;
    Count bound;
    Count value;
    std::optional<SimTime> depleted;
  };
  std::map<std::string, Tracked> keys_;
  Count violations_ = 0;
  std::vector<std::pair<SimTime, Count>> violation_events_;
  Count incs_ = 0;
  Count decs_ = 0;
};

enum class Metric : std::uint8_t {
  StoreWrite,        // conditional or weak write reaching a store
  Conflict,          // conditional write rejected
  TransferMessage,   // rights request or response between DCs
  TransferToEmpty,   // rights request sent to a replica the sender sees as empty
  SyncMessage,       // state propagation between DCs
  Count_
};

/// Event counts bucketed by simulated time.
class Tally {
 public:
  explicit Tally(SimTime bucket) : bucket_(bucket) {}

  void add(Metric m, SimTime at, std::int64_t n = 1);
  std::int64_t total(Metric m) const { return totals_[static_cast<int>(m)]; }
  std::int64_t in_bucket(Metric m, std::size_t bucket) const;
  /// Count of events in [from, to).
  std::int64_t between(Metric m, SimTime from, SimTime to) const;
  SimTime bucket_width() const noexcept { return bucket_; }

 private:
  static constexpr int kMetrics = static_cast<int>(Metric::Count_);
  SimTime bucket_;
  std::array<std::int64_t, kMetrics> totals_{};
  std::array<std::vector<std::int64_t>, kMetrics> buckets_;
  std::array<std::vector<std::pair<SimTime, std::int64_t>>, kMetrics> events_;
};

struct WorldConfig {
  /// One-way latency matrix; the diagonal is the intra-DC middleware hop.
  std::vector<std::vector<double>> one_way_ms;
  double network_jitter_ms = 0.0;
  kv::StoreLatency store;
  std::uint64_t seed = 1;
  double bucket_ms = 1000.0;
};

/// Everything the simulated system shares: clock, network, the per-DC stores
/// and the instrumentation.
struct World {
  explicit World(const WorldConfig& cfg);

  int dcs() const noexcept { return static_cast<int>(stores.size()); }
  StoreService& store(int dc) { return *stores[dc]; }

  EventLoop loop;
  Rng rng;
  Network net;
  std::vector<std::unique_ptr<StoreService>> stores;
  GlobalObserver observer;
  Tally tally;
};

}  // namespace bcounter::sim
