#include "bcounter/middleware/server.hpp"

#include <algorithm>

namespace bcounter::mw {

using transfer::GrantStatus;
using transfer::Mode;
using transfer::TransferRequest;
using transfer::TransferResponse;

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

OwnerTable::OwnerTable(int nodes) : alive_(static_cast<std::size_t>(nodes), true) {}

int OwnerTable::owner(const std::string& key) const {
  int best = -1;
  std::uint64_t best_score = 0;
  const std::uint64_t base = fnv1a(key);
  for (int n = 0; n < nodes(); ++n) {
    if (!alive_[static_cast<std::size_t>(n)]) continue;
    const std::uint64_t score = mix(base ^ (static_cast<std::uint64_t>(n + 1) * 0x9e3779b97f4a7c15ULL));
    if (best < 0 || score > best_score) {
      best = n;
      best_score = score;
    }
  }
  return best;
}

int OwnerTable::add_node() {
  alive_.push_back(true);
  ++epoch_;
  return nodes() - 1;
}

void OwnerTable::set_alive(int node, bool alive) {
  if (alive_[static_cast<std::size_t>(node)] == alive) return;
  alive_[static_cast<std::size_t>(node)] = alive;
  ++epoch_;
}

struct ServerMiddleware::Pending {
  OpKind kind = OpKind::Dec;
  Count delta = 1;
  OpFlag flag = OpFlag::Global;
  OpCallback done;
  bool used_sync = false;
};

namespace {

struct Ack {
  int dc;
  int node;
  std::uint64_t incarnation;
  std::uint64_t gen;
};

}  // namespace

struct ServerMiddleware::Entry {
  std::uint64_t uid = 0;
  std::string key;
  bool loaded = false;
  bool loading = false;
  bool writing = false;
  bool acquiring = false;
  bool retiring = false;
  /// `working` has changes that are not in any issued write.
  bool dirty = false;
  std::optional<kv::VersionToken> base;
  std::optional<BoundedCounter> durable;
  std::optional<BoundedCounter> working;
  std::optional<BoundedCounter> in_flight;
  /// Rights obtained while the entry was reloading.
  std::optional<BoundedCounter> stash;
  std::vector<Pending> batch;
  std::vector<Pending> inflight_ops;
  std::vector<Ack> acks;
  std::vector<Ack> inflight_acks;
  std::vector<TransferResponse> grants;
  std::vector<TransferResponse> inflight_grants;
  /// Work waiting on the entry. An item returning false is blocked and stays
  /// queued; only client operations ever block, and later operations stay
  /// behind them, while merges and transfer requests may pass.
  struct Item {
    std::function<bool()> fn;
    bool op = false;
  };
  std::deque<Item> queue;
  bool draining = false;
  bool redrain = false;
  std::optional<Pending> acq_waiter;
  std::shared_ptr<transfer::SyncAcquisition> acq;
};

struct ServerMiddleware::Node {
  Node(int dc_, int id_, int dcs) : dc(dc_), id(id_), prop(dc_, dcs) {}
  int dc;
  int id;
  bool alive = true;
  std::uint64_t incarnation = 1;
  std::map<std::string, Entry> cache;
  Propagator prop;
};

ServerMiddleware::ServerMiddleware(sim::World& world, MiddlewareConfig cfg)
    : Strategy(world, std::move(cfg)), rpc_(world.loop) {
  const int n = std::max(1, cfg_.nodes_per_dc);
  nodes_.resize(static_cast<std::size_t>(world_.dcs()));
  for (int dc = 0; dc < world_.dcs(); ++dc) {
    tables_.emplace_back(n);
    for (int i = 0; i < n; ++i) nodes_[dc].push_back(std::make_unique<Node>(dc, i, world_.dcs()));
  }
}

ServerMiddleware::~ServerMiddleware() = default;

ServerMiddleware::Node& ServerMiddleware::node(int dc, int id) { return *nodes_[dc][id]; }

ServerMiddleware::Entry* ServerMiddleware::find(int dc, int id, const std::string& key,
                                                std::uint64_t uid) {
  auto& cache = nodes_[dc][id]->cache;
  auto it = cache.find(key);
  if (it == cache.end() || it->second.uid != uid) return nullptr;
  return &it->second;
}

ServerMiddleware::Entry& ServerMiddleware::entry(Node& n, const std::string& key) {
  auto [it, fresh] = n.cache.try_emplace(key);
  if (fresh) {
    it->second.uid = next_uid_++;
    it->second.key = key;
  }
  return it->second;
}

Status ServerMiddleware::install(const CounterSpec& spec) {
  auto state = initial_state(spec, static_cast<std::uint32_t>(world_.dcs()), cfg_.initial_split);
  if (!state) return state.error();
  const Bytes bytes = state->encode();
  for (int dc = 0; dc < world_.dcs(); ++dc) {
    if (!world_.store(dc).store().put_conditional(spec.key, bytes, std::nullopt)) {
      return Errc::AlreadyExists;
    }
  }
  auto fresh = BoundedCounter::create(spec.polarity, spec.bound,
                                      static_cast<std::uint32_t>(world_.dcs()), {0}, spec.initial);
  threshold_[spec.key] = cfg_.rebalance_threshold.value_or(transfer::default_threshold(*fresh));
  world_.observer.track(spec.key, spec.polarity, spec.bound, spec.initial);
  return {};
}

void ServerMiddleware::start() {
  const int n = world_.dcs();
  for (int dc = 0; dc < n; ++dc) {
    const double frac = static_cast<double>(dc + 1) / (n + 1);
    every(cfg_.sync_period_ms, sim::from_ms(cfg_.sync_period_ms * frac), [this, dc] {
      for (std::size_t i = 0; i < nodes_[dc].size(); ++i) propagate_tick(dc, static_cast<int>(i));
    });
    every(cfg_.rebalance_period_ms, sim::from_ms(cfg_.rebalance_period_ms * frac), [this, dc] {
      for (std::size_t i = 0; i < nodes_[dc].size(); ++i) rebalance_tick(dc, static_cast<int>(i));
    });
  }
}

std::optional<Bytes> ServerMiddleware::stored_state(int dc, const std::string& key) {
  auto rec = world_.store(dc).store().get(key);
  if (!rec) return std::nullopt;
  auto c = merge_siblings(rec->siblings);
  if (!c) return std::nullopt;
  return c->encode();
}

std::optional<Count> ServerMiddleware::stored_value(int dc, const std::string& key) {
  auto rec = world_.store(dc).store().get(key);
  if (!rec) return std::nullopt;
  auto c = merge_siblings(rec->siblings);
  if (!c) return std::nullopt;
  return c->value();
}

std::vector<std::string> ServerMiddleware::cached_keys(int dc, int id) const {
  std::vector<std::string> out;
  for (const auto& [k, _] : nodes_[dc][id]->cache) out.push_back(k);
  return out;
}

// --- client side -----------------------------------------------------------

void ServerMiddleware::submit(const ClientOp& op, OpCallback done) {
  route_and_send(op, std::move(done), 0);
}

void ServerMiddleware::route_and_send(const ClientOp& op, OpCallback done, int attempts) {
  const int owner = route(op.dc, op.key);
  if (owner < 0) {
    done(OpResult::retry(Errc::StaleOwner, false));
    return;
  }
  world_.net.send(op.dc, op.dc, [this, op, owner, attempts, done = std::move(done)] {
    execute(op.dc, owner, op, [this, op, attempts, done](OpResult r) {
      if (r.status == OpStatus::Retry && r.reason == Errc::StaleOwner &&
          attempts < cfg_.retry_limit) {
        route_and_send(op, done, attempts + 1);
      } else {
        done(r);
      }
    });
  });
}

void ServerMiddleware::reply(int dc, OpCallback& done, OpResult r) {
  world_.net.send(dc, dc, [done = std::move(done), r] { done(r); });
}

// --- owner node ------------------------------------------------------------

void ServerMiddleware::execute(int dc, int id, const ClientOp& op, OpCallback done) {
  Node& n = node(dc, id);
  if (!n.alive) return;  // lost with the node; the client times out
  if (tables_[dc].owner(op.key) != id) {
    reply(dc, done, OpResult::retry(Errc::StaleOwner, false));
    return;
  }
  Entry& e = entry(n, op.key);
  e.retiring = false;
  Pending p{op.kind, op.delta, op.flag, std::move(done), false};
  enqueue(n, e, [this, &n, &e, p = std::move(p)]() mutable { return run_op(n, e, p); }, true);
}

void ServerMiddleware::enqueue(Node& n, Entry& e, std::function<bool()> item, bool op) {
  const std::string key = e.key;
  e.queue.push_back({std::move(item), op});
  drain(n, e);
  maybe_drop(n, key);
}

void ServerMiddleware::drain(Node& n, Entry& e) {
  if (!e.loaded && !e.retiring) {
    load(n, e);
    return;
  }
  if (e.draining) {
    e.redrain = true;
    return;
  }
  e.draining = true;
  do {
    e.redrain = false;
    bool blocked = false;
    for (std::size_t i = 0; i < e.queue.size();) {
      if (blocked && e.queue[i].op) {
        ++i;
        continue;
      }
      auto item = std::move(e.queue[i]);
      e.queue.erase(e.queue.begin() + static_cast<std::ptrdiff_t>(i));
      if (item.fn()) continue;
      e.queue.insert(e.queue.begin() + static_cast<std::ptrdiff_t>(i), std::move(item));
      blocked = true;
      ++i;
    }
  } while (e.redrain);
  e.draining = false;
}

void ServerMiddleware::load(Node& n, Entry& e) {
  if (e.loading) return;
  e.loading = true;
  const int dc = n.dc, id = n.id;
  world_.store(dc).get(e.key, [this, dc, id, key = e.key, uid = e.uid](
                                  Result<kv::VersionedRecord> rec) {
    Entry* e = find(dc, id, key, uid);
    if (!e) return;
    Node& n = node(dc, id);
    e->loading = false;
    e->loaded = true;
    e->working.reset();
    e->base.reset();
    if (rec) {
      if (auto c = merge_siblings(rec->siblings)) {
        e->durable = *c;
        e->working = std::move(*c);
        e->base = rec->version;
      }
    }
    if (e->working && e->stash) {
      const BoundedCounter before = *e->working;
      (void)e->working->merge(*e->stash);
      if (*e->working != before) e->dirty = true;
    }
    e->stash.reset();
    // The previous owner may have left changes unpropagated.
    if (e->working) n.prop.touch(key);
    drain(n, *e);
    maybe_flush(n, *e);
    maybe_drop(n, key);
  });
}

bool ServerMiddleware::run_op(Node& n, Entry& e, Pending& p) {
  if (e.retiring) {
    reply(n.dc, p.done, OpResult::retry(Errc::StaleOwner, false));
    return true;
  }
  if (!e.working) {
    reply(n.dc, p.done, OpResult::fail(Errc::NotFound));
    return true;
  }
  if (e.acquiring) return false;
  if (e.writing && (!cfg_.batching || (cfg_.batch_cap > 0 && e.batch.size() >= cfg_.batch_cap))) {
    return false;
  }
  const ReplicaId self{static_cast<std::uint32_t>(n.dc)};
  if (Status st = apply_op(*e.working, self, p.kind, p.delta); !st) {
    if (st.error() != Errc::NotEnoughRights) {
      reply(n.dc, p.done, OpResult::fail(st.error()));
    } else if (p.flag == OpFlag::Local) {
      reply(n.dc, p.done, local_shortfall(*e.working, self, p.delta));
    } else {
      start_acquisition(n, e, std::move(p));
    }
    return true;
  }
  e.batch.push_back(std::move(p));
  e.dirty = true;
  maybe_flush(n, e);
  return true;
}

void ServerMiddleware::start_acquisition(Node& n, Entry& e, Pending p) {
  e.acquiring = true;
  e.acq = std::make_shared<transfer::SyncAcquisition>(
      *e.working, ReplicaId{static_cast<std::uint32_t>(n.dc)}, p.delta, e.key);
  e.acq_waiter = std::move(p);
  acquisition_step(n.dc, n.id, e.key, e.uid);
}

void ServerMiddleware::acquisition_step(int dc, int id, std::string key, std::uint64_t uid) {
  Entry* e = find(dc, id, key, uid);
  if (!e || !e->acquiring) return;
  auto req = e->acq->next_request(0);
  if (!req) {
    finish_acquisition(node(dc, id), *e, false);
    return;
  }
  e->acq_waiter->used_sync = true;
  const int grantor = static_cast<int>(req->grantor.value);
  req->id = rpc_.open(2 * world_.net.round_trip(dc, grantor),
                      [this, dc, id, key, uid](std::optional<TransferResponse> resp) {
                        Entry* e = find(dc, id, key, uid);
                        if (!e || !e->acquiring) return;
                        if (resp) e->acq->on_response(*resp);
                        if (e->acq->satisfied()) {
                          finish_acquisition(node(dc, id), *e, true);
                        } else {
                          acquisition_step(dc, id, key, uid);
                        }
                      });
  send_request(dc, id, *req, e->acq->state());
}

void ServerMiddleware::finish_acquisition(Node& n, Entry& e, bool satisfied) {
  e.acquiring = false;
  BoundedCounter got = e.acq->state();
  e.acq.reset();
  Pending p = std::move(*e.acq_waiter);
  e.acq_waiter.reset();
  if (e.loaded && e.working) {
    const BoundedCounter before = *e.working;
    (void)e.working->merge(got);
    if (*e.working != before) e.dirty = true;
  } else if (e.stash) {
    (void)e.stash->merge(got);
  } else {
    e.stash = std::move(got);
  }
  const std::string key = e.key;
  if (!satisfied) {
    OpResult r = OpResult::fail(Errc::NotEnoughRights);
    r.used_sync_transfer = p.used_sync;
    reply(n.dc, p.done, r);
  } else {
    e.queue.push_front(
        {[this, &n, &e, p = std::move(p)]() mutable { return run_op(n, e, p); }, true});
  }
  drain(n, e);
  maybe_flush(n, e);
  maybe_drop(n, key);
}

void ServerMiddleware::maybe_flush(Node& n, Entry& e) {
  if (!e.writing && e.dirty && e.loaded && e.working) flush(n, e);
}

void ServerMiddleware::flush(Node& n, Entry& e) {
  e.writing = true;
  e.dirty = false;
  e.inflight_ops = std::move(e.batch);
  e.batch.clear();
  e.inflight_acks = std::move(e.acks);
  e.acks.clear();
  e.inflight_grants = std::move(e.grants);
  e.grants.clear();
  e.in_flight = *e.working;

  std::vector<std::pair<OpKind, Count>> effects;
  effects.reserve(e.inflight_ops.size());
  for (const auto& p : e.inflight_ops) effects.emplace_back(p.kind, p.delta);

  const int dc = n.dc, id = n.id;
  world_.store(dc).put_conditional(
      e.key, e.in_flight->encode(), e.base,
      [this, dc, id, key = e.key, uid = e.uid](Result<kv::VersionToken> r) {
        on_write(dc, id, key, uid, r.ok(), r.ok() ? std::optional(*r) : std::nullopt);
      },
      [this, key = e.key, effects = std::move(effects)] {
        for (const auto& [kind, delta] : effects) {
          world_.observer.committed(key, kind, delta, world_.loop.now());
        }
      });
}

void ServerMiddleware::on_write(int dc, int id, std::string key, std::uint64_t uid, bool ok,
                                std::optional<kv::VersionToken> token) {
  Entry* e = find(dc, id, key, uid);
  if (!e) return;  // node crashed; clients time out
  Node& n = node(dc, id);
  e->writing = false;
  auto ops = std::move(e->inflight_ops);
  auto acks = std::move(e->inflight_acks);
  auto grants = std::move(e->inflight_grants);
  e->inflight_ops.clear();
  e->inflight_acks.clear();
  e->inflight_grants.clear();

  if (ok) {
    e->base = token;
    e->durable = std::move(e->in_flight);
    e->in_flight.reset();
    for (auto& p : ops) {
      OpResult r = OpResult::ok();
      r.used_sync_transfer = p.used_sync;
      reply(dc, p.done, r);
    }
    for (const auto& a : acks) {
      world_.tally.add(sim::Metric::SyncMessage, world_.loop.now());
      world_.net.send(dc, a.dc, [this, a, dc, key] {
        Node& s = node(a.dc, a.node);
        if (s.alive && s.incarnation == a.incarnation) s.prop.acked(key, dc, a.gen);
      });
    }
    const Bytes state = e->durable->encode();
    for (auto& g : grants) {
      g.state = state;
      send_response(dc, static_cast<int>(g.requester.value), std::move(g));
    }
    if (!ops.empty() || !grants.empty()) n.prop.touch(key);
  } else {
    // Nothing in the failed batch became durable: notify every waiter and
    // start over from the store. Merges are resent by their senders.
    for (auto& p : ops) reply(dc, p.done, OpResult::retry(Errc::Conflict, false));
    for (auto& p : e->batch) reply(dc, p.done, OpResult::retry(Errc::Conflict, false));
    e->batch.clear();
    e->acks.clear();
    e->grants.clear();
    e->in_flight.reset();
    e->dirty = false;
    e->loaded = false;
    e->working.reset();
  }
  drain(n, *e);
  maybe_flush(n, *e);
  maybe_drop(n, key);
}

void ServerMiddleware::maybe_drop(Node& n, const std::string& key) {
  auto it = n.cache.find(key);
  if (it == n.cache.end()) return;
  Entry& e = it->second;
  if (e.writing || e.loading || e.acquiring || e.draining) return;
  const bool retired = e.retiring && !e.dirty;
  const bool missing = e.loaded && !e.working && e.queue.empty();
  if (retired || missing) drop(n, key);
}

void ServerMiddleware::drop(Node& n, const std::string& key) {
  auto it = n.cache.find(key);
  if (it == n.cache.end()) return;
  Entry& e = it->second;
  e.retiring = true;
  drain(n, e);  // queued operations learn they must re-route
  n.cache.erase(it);
  n.prop.forget(key);
  // Hand the key to its new owner so it picks up anything left to propagate.
  const int owner = tables_[n.dc].owner(key);
  if (owner >= 0 && owner != n.id && node(n.dc, owner).alive) {
    Node& next = node(n.dc, owner);
    Entry& ne = entry(next, key);
    drain(next, ne);
  }
}

void ServerMiddleware::retire_if_moved(Node& n) {
  std::vector<std::string> moved;
  for (auto& [key, e] : n.cache) {
    if (tables_[n.dc].owner(key) != n.id) moved.push_back(key);
  }
  for (const auto& key : moved) {
    Entry& e = n.cache.at(key);
    e.retiring = true;
    // Operations already accepted still go out in one last write.
    maybe_flush(n, e);
    maybe_drop(n, key);
  }
}

// --- membership and faults ------------------------------------------------

void ServerMiddleware::crash(int dc, int id) {
  Node& n = node(dc, id);
  if (!n.alive) return;
  n.alive = false;
  ++n.incarnation;
  n.cache.clear();
  n.prop = Propagator(dc, world_.dcs());
  tables_[dc].set_alive(id, false);
  for (auto& other : nodes_[dc]) {
    if (other->alive) retire_if_moved(*other);
  }
}

void ServerMiddleware::recover(int dc, int id) {
  Node& n = node(dc, id);
  if (n.alive) return;
  n.alive = true;
  tables_[dc].set_alive(id, true);
  for (auto& other : nodes_[dc]) {
    if (other->alive) retire_if_moved(*other);
  }
}

void ServerMiddleware::reconfigure(int dc) {
  const int id = tables_[dc].add_node();
  nodes_[dc].push_back(std::make_unique<Node>(dc, id, world_.dcs()));
  for (auto& other : nodes_[dc]) {
    if (other->alive) retire_if_moved(*other);
  }
}

// --- inter-DC traffic ------------------------------------------------------

void ServerMiddleware::propagate_tick(int dc, int id) {
  Node& n = node(dc, id);
  if (!n.alive) return;
  for (const auto& due : n.prop.due()) {
    auto it = n.cache.find(due.key);
    if (it == n.cache.end() || !it->second.durable) {
      n.prop.forget(due.key);
      continue;
    }
    const Bytes bytes = it->second.durable->encode();
    for (int dest : due.dests) {
      world_.tally.add(sim::Metric::SyncMessage, world_.loop.now());
      world_.net.send(dc, dest, [this, dest, dc, id, inc = n.incarnation, key = due.key, bytes,
                                 gen = due.gen] { on_state(dest, dc, id, inc, key, bytes, gen); });
    }
  }
}

void ServerMiddleware::on_state(int dc, int from_dc, int from_node, std::uint64_t from_inc,
                                std::string key, Bytes bytes, std::uint64_t gen) {
  const int owner = route(dc, key);
  if (owner < 0) return;
  Node& n = node(dc, owner);
  auto remote = BoundedCounter::decode(bytes);
  if (!remote) return;
  Entry& e = entry(n, key);
  const Ack ack{from_dc, from_node, from_inc, gen};
  enqueue(n, e, [this, &n, &e, ack, remote = std::move(*remote)] {
    if (e.retiring) return true;  // the sender tries again later
    auto send_ack = [&] {
      world_.tally.add(sim::Metric::SyncMessage, world_.loop.now());
      world_.net.send(n.dc, ack.dc, [this, ack, dc = n.dc, key = e.key] {
        Node& s = node(ack.dc, ack.node);
        if (s.alive && s.incarnation == ack.incarnation) s.prop.acked(key, dc, ack.gen);
      });
    };
    if (!e.working) {
      e.working = remote;
      e.dirty = true;
      e.acks.push_back(ack);
      maybe_flush(n, e);
      return true;
    }
    if (!remote.same_identity(*e.working)) return true;
    if (e.durable && *remote.leq(*e.durable)) {
      send_ack();
      return true;
    }
    if (e.writing && e.in_flight && *remote.leq(*e.in_flight)) {
      e.inflight_acks.push_back(ack);
      return true;
    }
    (void)e.working->merge(remote);
    e.dirty = true;
    e.acks.push_back(ack);
    maybe_flush(n, e);
    return true;
  });
}

void ServerMiddleware::send_request(int dc, int /*node*/, const TransferRequest& req,
                                    const BoundedCounter& view) {
  const sim::SimTime now = world_.loop.now();
  world_.tally.add(sim::Metric::TransferMessage, now);
  if (*view.local_rights(req.grantor) <= 0) world_.tally.add(sim::Metric::TransferToEmpty, now);
  const int to = static_cast<int>(req.grantor.value);
  world_.net.send(dc, to, [this, to, dc, req] { on_request(to, dc, req); });
}

void ServerMiddleware::send_response(int dc, int to_dc, TransferResponse resp) {
  world_.tally.add(sim::Metric::TransferMessage, world_.loop.now());
  world_.net.send(dc, to_dc, [this, resp = std::move(resp)] { rpc_.complete(resp); });
}

void ServerMiddleware::on_request(int dc, int from_dc, TransferRequest req) {
  const int owner = route(dc, req.key);
  if (owner < 0) return;
  Node& n = node(dc, owner);
  Entry& e = entry(n, req.key);
  enqueue(n, e, [this, &n, &e, from_dc, req] {
    const bool sync = req.mode == Mode::Sync;
    if (e.retiring) return true;
    if (!e.working) {
      if (sync) {
        send_response(n.dc, from_dc,
                      TransferResponse{req.key, GrantStatus::Denied, req.grantor, req.requester,
                                       0, req.id, std::nullopt});
      }
      return true;
    }
    auto handled =
        transfer::handle_request(*e.working, {static_cast<std::uint32_t>(n.dc)}, req);
    if (handled.response.status == GrantStatus::Granted) {
      e.working = std::move(handled.state);
      e.dirty = true;
      if (sync) e.grants.push_back(std::move(handled.response));
      maybe_flush(n, e);
    } else if (sync) {
      handled.response.state =
          e.durable ? std::optional(e.durable->encode()) : std::optional<Bytes>();
      send_response(n.dc, from_dc, std::move(handled.response));
    }
    return true;
  });
}

void ServerMiddleware::rebalance_tick(int dc, int id) {
  Node& n = node(dc, id);
  if (!n.alive) return;
  const ReplicaId self{static_cast<std::uint32_t>(dc)};
  for (auto& [key, e] : n.cache) {
    if (!e.loaded || !e.working || e.retiring) continue;
    auto it = threshold_.find(key);
    if (it == threshold_.end() || it->second <= 0) continue;
    for (const auto& req : transfer::rebalance_tick(*e.working, self, it->second, key)) {
      send_request(dc, id, req, *e.working);
    }
  }
}

}  // namespace bcounter::mw
