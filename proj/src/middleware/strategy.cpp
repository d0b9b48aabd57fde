#include "bcounter/middleware/strategy.hpp"

#include "bcounter/middleware/baselines.hpp"
#include "bcounter/middleware/client.hpp"
#include "bcounter/middleware/server.hpp"

namespace bcounter::mw {

void Strategy::every(double period_ms, sim::SimTime offset, std::function<void()> tick) {
  const sim::SimTime period = sim::from_ms(period_ms);
  if (period <= 0) return;
  auto loop = std::make_shared<std::function<void()>>();
  *loop = [this, period, tick = std::move(tick), self = std::weak_ptr(loop)] {
    if (!running_) return;
    tick();
    if (auto again = self.lock()) world_.loop.after(period, [again] { (*again)(); });
  };
  world_.loop.after(offset, [loop] { (*loop)(); });
}

Result<BoundedCounter> merge_siblings(const std::vector<Bytes>& siblings) {
  if (siblings.empty()) return Errc::NotFound;
  auto acc = BoundedCounter::decode(siblings.front());
  if (!acc) return acc.error();
  for (std::size_t i = 1; i < siblings.size(); ++i) {
    auto next = BoundedCounter::decode(siblings[i]);
    if (!next) return next.error();
    if (Status st = acc->merge(*next); !st) return st.error();
  }
  return acc;
}

Result<BoundedCounter> initial_state(const CounterSpec& spec, std::uint32_t replicas,
                                     bool split) {
  auto c = BoundedCounter::create(spec.polarity, spec.bound, replicas, {0}, spec.initial);
  if (!c || !split) return c;
  const Count share = *c->local_rights({0}) / static_cast<Count>(replicas);
  if (share > 0) {
    for (std::uint32_t j = 1; j < replicas; ++j) {
      if (Status st = c->transfer({0}, {j}, share); !st) return st.error();
    }
  }
  return c;
}

void Propagator::touch(const std::string& key) {
  auto& e = keys_[key];
  if (e.acked.empty()) e.acked.assign(static_cast<std::size_t>(dcs_), 0);
  ++e.gen;
}

void Propagator::acked(const std::string& key, int dest, std::uint64_t gen) {
  auto it = keys_.find(key);
  if (it == keys_.end()) return;
  auto& a = it->second.acked[static_cast<std::size_t>(dest)];
  if (gen > a) a = gen;
}

std::vector<Propagator::Due> Propagator::due() const {
  std::vector<Due> out;
  for (const auto& [key, e] : keys_) {
    Due d{key, e.gen, {}};
    for (int dc = 0; dc < dcs_; ++dc) {
      if (dc != self_ && e.acked[static_cast<std::size_t>(dc)] < e.gen) d.dests.push_back(dc);
    }
    if (!d.dests.empty()) out.push_back(std::move(d));
  }
  return out;
}

bool Propagator::idle() const {
  for (const auto& [_, e] : keys_) {
    for (int dc = 0; dc < dcs_; ++dc) {
      if (dc != self_ && e.acked[static_cast<std::size_t>(dc)] < e.gen) return false;
    }
  }
  return true;
}

std::uint64_t RpcTable::open(sim::SimTime timeout, Reply reply) {
  const std::uint64_t id = next_++;
  open_.emplace(id, std::move(reply));
  loop_.after(timeout, [this, id] {
    auto it = open_.find(id);
    if (it == open_.end()) return;
    Reply r = std::move(it->second);
    open_.erase(it);
    r(std::nullopt);
  });
  return id;
}

void RpcTable::complete(const transfer::TransferResponse& resp) {
  auto it = open_.find(resp.id);
  if (it == open_.end()) return;  // late reply after a timeout
  Reply r = std::move(it->second);
  open_.erase(it);
  r(resp);
}

Count rights_needed(const BoundedCounter& state, OpKind kind, Count delta) {
  const bool approaching = (state.polarity() == Polarity::Lower) == (kind == OpKind::Dec);
  return approaching ? delta : 0;
}

OpResult local_shortfall(const BoundedCounter& state, ReplicaId self, Count delta) {
  const Count mine = std::max<Count>(0, *state.local_rights(self));
  const Count deficit = delta - mine;
  for (std::uint32_t j = 0; j < state.replicas(); ++j) {
    if (j != self.value && *state.local_rights({j}) >= deficit) {
      return OpResult::retry(Errc::NotEnoughRights, true);
    }
  }
  return OpResult::fail(Errc::NotEnoughRights);
}

Status apply_op(BoundedCounter& state, ReplicaId at, OpKind kind, Count delta) {
  return kind == OpKind::Inc ? state.increment(at, delta) : state.decrement(at, delta);
}

std::string_view to_string(StrategyKind k) noexcept {
  switch (k) {
    case StrategyKind::Weak: return "weak";
    case StrategyKind::Strong: return "strong";
    case StrategyKind::Bcclt: return "bcclt";
    case StrategyKind::Bcsrv: return "bcsrv";
    case StrategyKind::BcsrvNoBatch: return "bcsrv-nobatch";
  }
  return "?";
}

std::optional<StrategyKind> parse_strategy(std::string_view s) {
  for (auto k : {StrategyKind::Weak, StrategyKind::Strong, StrategyKind::Bcclt,
                 StrategyKind::Bcsrv, StrategyKind::BcsrvNoBatch}) {
    if (s == to_string(k)) return k;
  }
  if (s == "bcsrv_nobatch") return StrategyKind::BcsrvNoBatch;
  return std::nullopt;
}

std::unique_ptr<Strategy> make_strategy(StrategyKind kind, sim::World& world,
                                        MiddlewareConfig cfg) {
  switch (kind) {
    case StrategyKind::Weak: return std::make_unique<WeakStrategy>(world, std::move(cfg));
    case StrategyKind::Strong: return std::make_unique<StrongStrategy>(world, std::move(cfg));
    case StrategyKind::Bcclt: return std::make_unique<ClientMiddleware>(world, std::move(cfg));
    case StrategyKind::Bcsrv:
      cfg.batching = true;
      return std::make_unique<ServerMiddleware>(world, std::move(cfg));
    case StrategyKind::BcsrvNoBatch:
      cfg.batching = false;
      return std::make_unique<ServerMiddleware>(world, std::move(cfg));
  }
  return nullptr;
}

}  // namespace bcounter::mw
