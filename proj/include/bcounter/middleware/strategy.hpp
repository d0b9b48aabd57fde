#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bcounter/middleware/api.hpp"
#include "bcounter/sim/world.hpp"
#include "bcounter/transfer/transfer_policy.hpp"

namespace bcounter::mw {

struct CounterSpec {
  std::string key;
  Polarity polarity = Polarity::Lower;
  Count bound = 0;
  Count initial = 0;
};

struct MiddlewareConfig {
  double sync_period_ms = 50.0;
  double rebalance_period_ms = 100.0;
  /// Unset means transfer::default_threshold of the freshly created counter.
  std::optional<Count> rebalance_threshold;
  int retry_limit = 16;
  int nodes_per_dc = 3;
  bool batching = true;
  /// Maximum number of client operations in one batched write; 0 is no cap.
  std::size_t batch_cap = 0;
  double op_timeout_ms = 1000.0;
  /// Spread the initial rights evenly over all replicas at installation.
  bool initial_split = true;
  /// Data center holding the single copy for the STRONG baseline.
  int home_dc = 0;
};

/// Common surface the harness drives. Every strategy keeps its state in the
/// world's stores and talks between data centers only through the world's
/// network.
class Strategy {
 public:
  Strategy(sim::World& world, MiddlewareConfig cfg) : world_(world), cfg_(std::move(cfg)) {}
  virtual ~Strategy() = default;
  Strategy(const Strategy&) = delete;
  Strategy& operator=(const Strategy&) = delete;

  virtual std::string_view name() const = 0;

  /// Puts a counter into every data center's store before the run starts.
  virtual Status install(const CounterSpec& spec) = 0;
  /// Starts periodic background work (synchronization, rebalancing).
  virtual void start() {}
  /// Stops rescheduling periodic work.
  void stop() { running_ = false; }

  /// Executes one client operation. `done` runs when the reply reaches the
  /// client.
  virtual void submit(const ClientOp& op, OpCallback done) = 0;

  /// Instrumentation: the counter as currently stored at `dc`, read without
  /// simulated latency. Siblings are merged.
  virtual std::optional<Count> stored_value(int dc, const std::string& key) = 0;
  virtual std::optional<Bytes> stored_state(int dc, const std::string& key) = 0;

  virtual void crash(int /*dc*/, int /*node*/) {}
  virtual void recover(int /*dc*/, int /*node*/) {}
  /// Membership change inside one data center (a node joins).
  virtual void reconfigure(int /*dc*/) {}

  const MiddlewareConfig& config() const noexcept { return cfg_; }

 protected:
  /// Runs `tick` every `period_ms` until stop(), first firing at `offset`.
  void every(double period_ms, sim::SimTime offset, std::function<void()> tick);

  sim::World& world_;
  MiddlewareConfig cfg_;
  bool running_ = true;
};

/// Joins all siblings of a stored record into one counter.
Result<BoundedCounter> merge_siblings(const std::vector<Bytes>& siblings);

/// Builds the installed state of a counter: created at replica 0 and, when
/// `split` is set, with floor(slack / n) rights handed to every other replica.
Result<BoundedCounter> initial_state(const CounterSpec& spec, std::uint32_t replicas,
                                     bool split);

/// Bookkeeping for state propagation to the other data centers. Every local
/// change bumps a per-key generation; a key stays due for a destination until
/// that destination acknowledges a generation at least as new.
class Propagator {
 public:
  Propagator(int self, int dcs) : self_(self), dcs_(dcs) {}

  void touch(const std::string& key);
  void acked(const std::string& key, int dest, std::uint64_t gen);
  void forget(const std::string& key) { keys_.erase(key); }

  struct Due {
    std::string key;
    std::uint64_t gen;
    std::vector<int> dests;
  };
  /// Keys with at least one destination behind, in key order.
  std::vector<Due> due() const;
  bool idle() const;

 private:
  struct Entry {
    std::uint64_t gen = 0;
    std::vector<std::uint64_t> acked;
  };
  int self_;
  int dcs_;
  std::map<std::string, Entry> keys_;
};

/// Outstanding request/response exchanges with a timeout.
class RpcTable {
 public:
  using Reply = std::function<void(std::optional<transfer::TransferResponse>)>;

  explicit RpcTable(sim::EventLoop& loop) : loop_(loop) {}

  /// Registers a call; `reply` runs with the response, or with nothing once
  /// `timeout` passes.
  std::uint64_t open(sim::SimTime timeout, Reply reply);
  void complete(const transfer::TransferResponse& resp);

 private:
  sim::EventLoop& loop_;
  std::uint64_t next_ = 1;
  std::map<std::uint64_t, Reply> open_;
};

/// Decides the outcome for an update that lacked rights under LOCAL flag:
/// RETRY with hint when some remote replica visibly holds the deficit,
/// FAIL otherwise.
OpResult local_shortfall(const BoundedCounter& state, ReplicaId self, Count delta);

/// Rights an update of `kind` needs at the authoring replica (0 if it does
/// not approach the bound).
Count rights_needed(const BoundedCounter& state, OpKind kind, Count delta);

Status apply_op(BoundedCounter& state, ReplicaId at, OpKind kind, Count delta);

enum class StrategyKind { Weak, Strong, Bcclt, Bcsrv, BcsrvNoBatch };
std::string_view to_string(StrategyKind k) noexcept;
std::optional<StrategyKind> parse_strategy(std::string_view s);

std::unique_ptr<Strategy> make_strategy(StrategyKind kind, sim::World& world,
                                        MiddlewareConfig cfg);

}  // namespace bcounter::mw
