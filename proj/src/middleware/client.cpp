#include "bcounter/middleware/client.hpp"

namespace bcounter::mw {

using transfer::GrantStatus;
using transfer::Mode;
using transfer::TransferRequest;
using transfer::TransferResponse;

struct ClientMiddleware::Op {
  int dc = 0;
  std::string key;
  OpKind kind = OpKind::Dec;
  Count delta = 1;
  OpFlag flag = OpFlag::Global;
  OpCallback done;
  int tries = 0;
  /// Rights obtained from other DCs, merged into every later attempt.
  std::optional<BoundedCounter> acquired;
  bool used_sync = false;

  void finish(OpResult r) {
    r.used_sync_transfer = used_sync;
    done(r);
  }
};

ClientMiddleware::ClientMiddleware(sim::World& world, MiddlewareConfig cfg)
    : Strategy(world, std::move(cfg)), rpc_(world.loop) {
  for (int dc = 0; dc < world_.dcs(); ++dc) prop_.emplace_back(dc, world_.dcs());
  known_.resize(static_cast<std::size_t>(world_.dcs()));
}

Status ClientMiddleware::install(const CounterSpec& spec) {
  auto state = initial_state(spec, static_cast<std::uint32_t>(world_.dcs()), cfg_.initial_split);
  if (!state) return state.error();
  const Bytes bytes = state->encode();
  for (int dc = 0; dc < world_.dcs(); ++dc) {
    auto res = world_.store(dc).store().put_conditional(spec.key, bytes, std::nullopt);
    if (!res) return Errc::AlreadyExists;
    known_[dc].insert(spec.key);
  }
  auto fresh = BoundedCounter::create(spec.polarity, spec.bound,
                                      static_cast<std::uint32_t>(world_.dcs()), {0}, spec.initial);
  threshold_[spec.key] = cfg_.rebalance_threshold.value_or(transfer::default_threshold(*fresh));
  world_.observer.track(spec.key, spec.polarity, spec.bound, spec.initial);
  return {};
}

void ClientMiddleware::start() {
  const int n = world_.dcs();
  for (int dc = 0; dc < n; ++dc) {
    every(cfg_.sync_period_ms, sim::from_ms(cfg_.sync_period_ms * (dc + 1) / (n + 1)),
          [this, dc] { sync_tick(dc); });
    every(cfg_.rebalance_period_ms,
          sim::from_ms(cfg_.rebalance_period_ms * (dc + 1) / (n + 1)),
          [this, dc] { rebalance_tick(dc); });
  }
}

void ClientMiddleware::submit(const ClientOp& op, OpCallback done) {
  update(op.dc, op.key, op.kind, op.delta, op.flag, std::move(done));
}

std::optional<Bytes> ClientMiddleware::stored_state(int dc, const std::string& key) {
  auto rec = world_.store(dc).store().get(key);
  if (!rec) return std::nullopt;
  auto c = merge_siblings(rec->siblings);
  if (!c) return std::nullopt;
  return c->encode();
}

std::optional<Count> ClientMiddleware::stored_value(int dc, const std::string& key) {
  auto rec = world_.store(dc).store().get(key);
  if (!rec) return std::nullopt;
  auto c = merge_siblings(rec->siblings);
  if (!c) return std::nullopt;
  return c->value();
}

void ClientMiddleware::touch(int dc, const std::string& key) {
  prop_[dc].touch(key);
  known_[dc].insert(key);
}

void ClientMiddleware::create(int dc, const std::string& key, Polarity polarity, Count bound,
                              std::function<void(Status)> done) {
  auto c = BoundedCounter::create(polarity, bound, static_cast<std::uint32_t>(world_.dcs()),
                                  {static_cast<std::uint32_t>(dc)}, bound);
  if (!c) {
    done(c.error());
    return;
  }
  world_.store(dc).put_conditional(
      key, c->encode(), std::nullopt,
      [done = std::move(done)](Result<kv::VersionToken> r) {
        done(r ? Status{} : Status{Errc::AlreadyExists});
      },
      [this, dc, key] { touch(dc, key); });
}

void ClientMiddleware::read(int dc, const std::string& key,
                            std::function<void(Result<Count>)> done) {
  world_.store(dc).get(key, [this, dc, key, done = std::move(done)](
                                Result<kv::VersionedRecord> rec) mutable {
    if (!rec) {
      done(rec.error());
      return;
    }
    auto c = merge_siblings(rec->siblings);
    if (!c) {
      done(c.error());
      return;
    }
    if (rec->siblings.size() == 1) {
      done(c->value());
      return;
    }
    const Count v = c->value();
    world_.store(dc).put(key, c->encode(), rec->version,
                         [v, done = std::move(done)](Status) { done(v); });
  });
}

void ClientMiddleware::update(int dc, const std::string& key, OpKind kind, Count delta,
                              OpFlag flag, OpCallback done) {
  auto op = std::make_shared<Op>();
  op->dc = dc;
  op->key = key;
  op->kind = kind;
  op->delta = delta;
  op->flag = flag;
  op->done = std::move(done);
  attempt(op);
}

void ClientMiddleware::attempt(const std::shared_ptr<Op>& op) {
  world_.store(op->dc).get(op->key, [this, op](Result<kv::VersionedRecord> rec) {
    if (!rec) {
      op->finish(OpResult::fail(rec.error()));
      return;
    }
    auto state = merge_siblings(rec->siblings);
    if (!state) {
      op->finish(OpResult::fail(state.error()));
      return;
    }
    if (op->acquired) (void)state->merge(*op->acquired);
    const ReplicaId self{static_cast<std::uint32_t>(op->dc)};

    if (Status st = apply_op(*state, self, op->kind, op->delta); !st) {
      if (st.error() != Errc::NotEnoughRights) {
        op->finish(OpResult::fail(st.error()));
      } else if (op->flag == OpFlag::Local) {
        op->finish(local_shortfall(*state, self, op->delta));
      } else if (++op->tries > cfg_.retry_limit) {
        op->finish(OpResult::fail(Errc::RetriesExhausted));
      } else {
        acquire(op, std::make_shared<transfer::SyncAcquisition>(
                        std::move(*state), self, op->delta, op->key));
      }
      return;
    }

    world_.store(op->dc).put_conditional(
        op->key, state->encode(), rec->version,
        [this, op](Result<kv::VersionToken> res) {
          if (res) {
            op->finish(OpResult::ok());
          } else if (++op->tries > cfg_.retry_limit) {
            op->finish(OpResult::fail(Errc::RetriesExhausted));
          } else {
            attempt(op);
          }
        },
        [this, op] {
          world_.observer.committed(op->key, op->kind, op->delta, world_.loop.now());
          touch(op->dc, op->key);
        });
  });
}

void ClientMiddleware::acquire(const std::shared_ptr<Op>& op,
                               const std::shared_ptr<transfer::SyncAcquisition>& acq) {
  auto req = acq->next_request(0);
  if (!req) {
    if (acq->requests_sent() > 0) op->used_sync = true;
    op->finish(OpResult::fail(Errc::NotEnoughRights));
    return;
  }
  op->used_sync = true;
  const int grantor = static_cast<int>(req->grantor.value);
  const sim::SimTime timeout = 2 * world_.net.round_trip(op->dc, grantor);
  req->id = rpc_.open(timeout, [this, op, acq](std::optional<TransferResponse> resp) {
    if (resp) acq->on_response(*resp);
    if (acq->satisfied()) {
      op->acquired = acq->state();
      attempt(op);
    } else {
      acquire(op, acq);
    }
  });
  send_request(op->dc, *req, acq->state());
}

void ClientMiddleware::send_request(int from, const TransferRequest& req,
                                    const BoundedCounter& view) {
  const sim::SimTime now = world_.loop.now();
  world_.tally.add(sim::Metric::TransferMessage, now);
  if (*view.local_rights(req.grantor) <= 0) world_.tally.add(sim::Metric::TransferToEmpty, now);
  const int to = static_cast<int>(req.grantor.value);
  world_.net.send(from, to, [this, from, to, req] { on_request(to, from, req); });
}

void ClientMiddleware::on_request(int dc, int from, TransferRequest req) {
  grant_loop(dc, from, std::move(req), 0);
}

void ClientMiddleware::grant_loop(int dc, int from, TransferRequest req, int tries) {
  world_.store(dc).get(req.key, [this, dc, from, req, tries](Result<kv::VersionedRecord> rec) {
    auto reply = [this, dc, from](TransferResponse resp) {
      world_.tally.add(sim::Metric::TransferMessage, world_.loop.now());
      world_.net.send(dc, from, [this, resp] { rpc_.complete(resp); });
    };
    std::optional<BoundedCounter> state;
    if (rec) {
      if (auto c = merge_siblings(rec->siblings)) state = std::move(*c);
    }
    if (!state) {
      if (req.mode == Mode::Sync) {
        reply(TransferResponse{req.key, GrantStatus::Denied, req.grantor, req.requester, 0,
                               req.id, std::nullopt});
      }
      return;
    }
    auto handled = transfer::handle_request(*state, {static_cast<std::uint32_t>(dc)}, req);
    if (handled.response.status != GrantStatus::Granted) {
      if (req.mode == Mode::Sync) reply(std::move(handled.response));
      return;
    }
    world_.store(dc).put_conditional(
        req.key, handled.state.encode(), rec->version,
        [this, dc, from, req, tries, reply, resp = handled.response](Result<kv::VersionToken> r) {
          if (r) {
            if (req.mode == Mode::Sync) reply(resp);
          } else if (tries < cfg_.retry_limit) {
            grant_loop(dc, from, req, tries + 1);
          }
        },
        [this, dc, key = req.key] { touch(dc, key); });
  });
}

void ClientMiddleware::sync_tick(int dc) {
  for (auto& due : prop_[dc].due()) {
    world_.store(dc).get(due.key, [this, dc, due](Result<kv::VersionedRecord> rec) {
      if (!rec) return;
      auto c = merge_siblings(rec->siblings);
      if (!c) return;
      const Bytes bytes = c->encode();
      for (int dest : due.dests) {
        world_.tally.add(sim::Metric::SyncMessage, world_.loop.now());
        world_.net.send(dc, dest, [this, dest, dc, key = due.key, bytes, gen = due.gen] {
          on_state(dest, dc, key, bytes, gen);
        });
      }
    });
  }
}

void ClientMiddleware::on_state(int dc, int from, std::string key, Bytes state,
                                std::uint64_t gen) {
  auto remote = BoundedCounter::decode(state);
  if (!remote) return;
  merge_loop(dc, key, std::move(*remote), 0, [this, dc, from, key, gen](bool ok) {
    if (!ok) return;
    world_.tally.add(sim::Metric::SyncMessage, world_.loop.now());
    world_.net.send(dc, from, [this, from, dc, key, gen] { prop_[from].acked(key, dc, gen); });
  });
}

void ClientMiddleware::merge_loop(int dc, std::string key, BoundedCounter remote, int tries,
                                  std::function<void(bool)> done) {
  world_.store(dc).get(key, [this, dc, key, remote = std::move(remote), tries,
                             done = std::move(done)](Result<kv::VersionedRecord> rec) mutable {
    std::optional<kv::VersionToken> expected;
    BoundedCounter merged = remote;
    if (rec) {
      auto local = merge_siblings(rec->siblings);
      if (!local || !local->same_identity(remote)) {
        done(false);
        return;
      }
      if (*remote.leq(*local)) {
        done(true);
        return;
      }
      merged = std::move(*local);
      (void)merged.merge(remote);
      expected = rec->version;
    }
    world_.store(dc).put_conditional(
        key, merged.encode(), expected,
        [this, dc, key, remote = std::move(remote), tries,
         done = std::move(done)](Result<kv::VersionToken> r) mutable {
          if (r) {
            done(true);
          } else if (tries < cfg_.retry_limit) {
            merge_loop(dc, key, std::move(remote), tries + 1, std::move(done));
          } else {
            done(false);
          }
        },
        [this, dc, key] { known_[dc].insert(key); });
  });
}

void ClientMiddleware::rebalance_tick(int dc) {
  const ReplicaId self{static_cast<std::uint32_t>(dc)};
  for (const auto& key : known_[dc]) {
    auto it = threshold_.find(key);
    const Count threshold = it == threshold_.end() ? cfg_.rebalance_threshold.value_or(0)
                                                   : it->second;
    if (threshold <= 0) continue;
    world_.store(dc).get(key, [this, dc, self, key, threshold](Result<kv::VersionedRecord> rec) {
      if (!rec) return;
      auto c = merge_siblings(rec->siblings);
      if (!c) return;
      for (const auto& req : transfer::rebalance_tick(*c, self, threshold, key)) {
        send_request(dc, req, *c);
      }
    });
  }
}

}  // namespace bcounter::mw
