#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "bcounter/kv/kv_store.hpp"

namespace bcounter::sim {

/// Simulated time in microseconds.
using SimTime = std::int64_t;

inline SimTime from_ms(double ms) { return static_cast<SimTime>(std::llround(ms * 1000.0)); }
inline double to_ms(SimTime t) { return static_cast<double>(t) / 1000.0; }

/// Single-threaded discrete-event loop. Events run in time order; ties run in
/// scheduling order.
class EventLoop {
 public:
  using Action = std::function<void()>;

  SimTime now() const noexcept { return now_; }

  void at(SimTime when, Action action);
  void after(SimTime delay, Action action) { at(now_ + delay, std::move(action)); }

  /// Runs every event scheduled at or before `until`, then advances the clock
  /// to `until`.
  void run_until(SimTime until);
  /// Runs until no event is left.
  void run();

  std::size_t pending() const noexcept { return queue_.size(); }
  std::uint64_t executed() const noexcept { return executed_; }

 private:
  struct Event {
    SimTime time;
    std::uint64_t seq;
    Action action;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  void pop_and_run();

  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  SimTime now_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t executed_ = 0;
};

/// Seeded generator. Draws are built from raw 64-bit output so results do not
/// depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  /// Uniform in [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }
  /// Independent generator derived from this one.
  Rng fork() { return Rng(next()); }

 private:
  std::uint64_t state_;
};

/// Message transport between data centers. A message is dropped if a
/// partition separates the endpoints when it is sent or when it would be
/// delivered.
class Network {
 public:
  using Deliver = std::function<void()>;

  /// `one_way_ms[i][j]` is the latency from i to j; the diagonal is the
  /// intra-DC hop.
  Network(EventLoop& loop, Rng rng, std::vector<std::vector<double>> one_way_ms,
          double jitter_ms);

  std::size_t dcs() const noexcept { return latency_.size(); }

  void send(int from, int to, Deliver deliver);

  SimTime latency(int from, int to) const { return latency_[from][to]; }
  SimTime round_trip(int a, int b) const { return latency_[a][b] + latency_[b][a]; }

  /// Starts a partition separating `side` from the remaining DCs. Returns a
  /// handle for heal().
  int partition(std::vector<int> side);
  void heal(int handle);
  bool reachable(int a, int b) const;

  std::uint64_t sent() const noexcept { return sent_; }
  std::uint64_t dropped() const noexcept { return dropped_; }

 private:
  EventLoop& loop_;
  Rng rng_;
  std::vector<std::vector<SimTime>> latency_;
  SimTime jitter_;
  std::vector<std::optional<std::vector<bool>>> partitions_;
  std::uint64_t sent_ = 0;
  std::uint64_t dropped_ = 0;
};

/// Asynchronous front end of one DC's KvStore. Requests take effect at the
/// store halfway through their latency; the reply arrives at full latency.
class StoreService {
 public:
  using OnGet = std::function<void(Result<kv::VersionedRecord>)>;
  using OnWrite = std::function<void(Result<kv::VersionToken>)>;
  using OnPut = std::function<void(Status)>;
  /// Runs at the instant a write takes effect, before its reply is sent.
  using OnApplied = std::function<void()>;

  StoreService(EventLoop& loop, Rng rng, kv::StoreLatency latency);

  void get(const std::string& key, OnGet done);
  void put_conditional(const std::string& key, Bytes value,
                       std::optional<kv::VersionToken> expected, OnWrite done,
                       OnApplied applied = {});
  void put(const std::string& key, Bytes value,
           std::optional<kv::VersionToken> context, OnPut done,
           OnApplied applied = {});

  /// Called whenever a write reaches the store; the flag marks a rejected
  /// conditional write.
  void set_write_hook(std::function<void(bool conflict)> hook) { hook_ = std::move(hook); }

  kv::KvStore& store() noexcept { return store_; }
  const kv::KvStore& store() const noexcept { return store_; }
  const kv::StoreLatency& latency() const noexcept { return latency_; }

 private:
  SimTime draw(double base_ms);

  EventLoop& loop_;
  Rng rng_;
  kv::StoreLatency latency_;
  kv::KvStore store_;
  std::function<void(bool)> hook_;
};

}  // namespace bcounter::sim
