#pragma once

#include <deque>
#include <memory>

#include "bcounter/middleware/strategy.hpp"

namespace bcounter::mw {

/// Key ownership inside one data center. Owners are picked by rendezvous
/// hashing over the live nodes; every membership change bumps the epoch.
class OwnerTable {
 public:
  explicit OwnerTable(int nodes);

  /// Owner at the current epoch, or -1 when no node is live.
  int owner(const std::string& key) const;
  std::uint64_t epoch() const noexcept { return epoch_; }
  int nodes() const noexcept { return static_cast<int>(alive_.size()); }
  bool alive(int node) const { return alive_[static_cast<std::size_t>(node)]; }

  /// A new node joins; returns its id.
  int add_node();
  void set_alive(int node, bool alive);

 private:
  std::vector<bool> alive_;
  std::uint64_t epoch_ = 1;
};

/// Counter access through per-DC middleware nodes. Each key is served by one
/// owner node that caches the counter, applies updates to the cached copy and
/// writes them back with conditional writes. With batching, updates that
/// arrive while a write is in flight are folded into the next write.
class ServerMiddleware final : public Strategy {
 public:
  ServerMiddleware(sim::World& world, MiddlewareConfig cfg);
  ~ServerMiddleware() override;

  std::string_view name() const override { return cfg_.batching ? "bcsrv" : "bcsrv-nobatch"; }
  Status install(const CounterSpec& spec) override;
  void start() override;
  void submit(const ClientOp& op, OpCallback done) override;
  std::optional<Count> stored_value(int dc, const std::string& key) override;
  std::optional<Bytes> stored_state(int dc, const std::string& key) override;

  void crash(int dc, int node) override;
  void recover(int dc, int node) override;
  void reconfigure(int dc) override;

  int route(int dc, const std::string& key) const { return tables_[dc].owner(key); }
  const OwnerTable& table(int dc) const { return tables_[dc]; }

  /// Runs `op` at `node`, which must own the key; otherwise the result is
  /// RETRY with reason StaleOwner.
  void execute(int dc, int node, const ClientOp& op, OpCallback done);
  /// Sends each counter this node changed to the DCs that have not
  /// acknowledged the change yet. One message per counter and destination.
  void propagate_tick(int dc, int node);
  void rebalance_tick(int dc, int node);

  /// Keys cached at a node (for tests).
  std::vector<std::string> cached_keys(int dc, int node) const;

 private:
  struct Entry;
  struct Node;
  struct Pending;

  Node& node(int dc, int id);
  Entry* find(int dc, int node, const std::string& key, std::uint64_t uid);
  Entry& entry(Node& n, const std::string& key);

  void route_and_send(const ClientOp& op, OpCallback done, int attempts);
  void enqueue(Node& n, Entry& e, std::function<bool()> item, bool op = false);
  void drain(Node& n, Entry& e);
  void load(Node& n, Entry& e);
  bool run_op(Node& n, Entry& e, Pending& p);
  void start_acquisition(Node& n, Entry& e, Pending p);
  void acquisition_step(int dc, int node, std::string key, std::uint64_t uid);
  void finish_acquisition(Node& n, Entry& e, bool satisfied);
  void maybe_flush(Node& n, Entry& e);
  void flush(Node& n, Entry& e);
  void on_write(int dc, int node, std::string key, std::uint64_t uid, bool ok,
                std::optional<kv::VersionToken> token);
  void retire_if_moved(Node& n);
  void maybe_drop(Node& n, const std::string& key);
  void drop(Node& n, const std::string& key);

  void on_state(int dc, int from_dc, int from_node, std::uint64_t from_inc, std::string key,
                Bytes state, std::uint64_t gen);
  void on_request(int dc, int from_dc, transfer::TransferRequest req);
  void send_request(int dc, int node, const transfer::TransferRequest& req,
                    const BoundedCounter& view);
  void send_response(int dc, int to_dc, transfer::TransferResponse resp);
  void reply(int dc, OpCallback& done, OpResult r);

  std::vector<OwnerTable> tables_;
  std::vector<std::vector<std::unique_ptr<Node>>> nodes_;
  std::map<std::string, Count> threshold_;
  RpcTable rpc_;
  std::uint64_t next_uid_ = 1;
};

}  // namespace bcounter::mw
