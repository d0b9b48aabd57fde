#pragma once

#include <memory>
#include <set>

#include "bcounter/middleware/strategy.hpp"

namespace bcounter::mw {

/// Counter access implemented in the client library: every update is a
/// read, a local CRDT update and a conditional write back to the local store,
/// retried on conflict. A per-DC agent forwards modified counters to the other
/// data centers and serves rights transfer requests.
class ClientMiddleware final : public Strategy {
 public:
  ClientMiddleware(sim::World& world, MiddlewareConfig cfg);

  std::string_view name() const override { return "bcclt"; }
  Status install(const CounterSpec& spec) override;
  void start() override;
  void submit(const ClientOp& op, OpCallback done) override;
  std::optional<Count> stored_value(int dc, const std::string& key) override;
  std::optional<Bytes> stored_state(int dc, const std::string& key) override;

  /// Creates a counter at one DC with value == bound. Only the creating DC
  /// knows about it until the next sync tick.
  void create(int dc, const std::string& key, Polarity polarity, Count bound,
              std::function<void(Status)> done);
  void read(int dc, const std::string& key, std::function<void(Result<Count>)> done);
  void update(int dc, const std::string& key, OpKind kind, Count delta, OpFlag flag,
              OpCallback done);

  /// Sends every counter modified since it was last acknowledged to the DCs
  /// that have not acknowledged it.
  void sync_tick(int dc);
  void rebalance_tick(int dc);

 private:
  struct Op;

  void attempt(const std::shared_ptr<Op>& op);
  void acquire(const std::shared_ptr<Op>& op,
               const std::shared_ptr<transfer::SyncAcquisition>& acq);
  void send_request(int from, const transfer::TransferRequest& req, const BoundedCounter& view);
  void on_request(int dc, int from, transfer::TransferRequest req);
  void grant_loop(int dc, int from, transfer::TransferRequest req, int tries);
  void on_state(int dc, int from, std::string key, Bytes state, std::uint64_t gen);
  /// Read-merge-conditional-write of a remote state into the local store.
  void merge_loop(int dc, std::string key, BoundedCounter remote, int tries,
                  std::function<void(bool)> done);
  void touch(int dc, const std::string& key);

  std::vector<Propagator> prop_;
  std::vector<std::set<std::string>> known_;
  std::map<std::string, Count> threshold_;
  RpcTable rpc_;
};

}  // namespace bcounter::mw
