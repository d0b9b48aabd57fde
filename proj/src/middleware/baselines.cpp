#include "bcounter/middleware/baselines.hpp"

#include <charconv>

namespace bcounter::mw {

namespace {

template <typename T>
void put_le(Bytes& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
  }
}

template <typename T>
bool get_le(std::string_view& in, T& v) {
  if (in.size() < sizeof(T)) return false;
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    acc |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[i])) << (8 * i);
  }
  v = static_cast<T>(acc);
  in.remove_prefix(sizeof(T));
  return true;
}

std::uint32_t actor_of(const ClientOp& op) {
  return static_cast<std::uint32_t>(op.dc) << 20 | static_cast<std::uint32_t>(op.client);
}

bool would_cross(const CounterSpec& spec, Count value, OpKind kind, Count delta) {
  if (spec.polarity == Polarity::Lower) return kind == OpKind::Dec && value - delta < spec.bound;
  return kind == OpKind::Inc && value + delta > spec.bound;
}

}  // namespace

void PnCounter::add(std::uint32_t actor, OpKind kind, Count delta) {
  auto& [p, n] = entries_[actor];
  (kind == OpKind::Inc ? p : n) += delta;
}

void PnCounter::merge(const PnCounter& other) {
  for (const auto& [actor, pn] : other.entries_) {
    auto& mine = entries_[actor];
    mine.first = std::max(mine.first, pn.first);
    mine.second = std::max(mine.second, pn.second);
  }
}

Count PnCounter::value() const noexcept {
  Count v = 0;
  for (const auto& [_, pn] : entries_) v += pn.first - pn.second;
  return v;
}

Bytes PnCounter::encode() const {
  Bytes out = "PN";
  put_le(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [actor, pn] : entries_) {
    put_le(out, actor);
    put_le(out, pn.first);
    put_le(out, pn.second);
  }
  return out;
}

Result<PnCounter> PnCounter::decode(std::string_view in) {
  if (in.substr(0, 2) != "PN") return Errc::MalformedEncoding;
  in.remove_prefix(2);
  std::uint32_t n = 0;
  if (!get_le(in, n)) return Errc::MalformedEncoding;
  PnCounter c;
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uint32_t actor = 0;
    Count p = 0, q = 0;
    if (!get_le(in, actor) || !get_le(in, p) || !get_le(in, q)) return Errc::MalformedEncoding;
    c.entries_[actor] = {p, q};
  }
  if (!in.empty()) return Errc::MalformedEncoding;
  return c;
}

Result<PnCounter> PnCounter::merge_all(const std::vector<Bytes>& siblings) {
  if (siblings.empty()) return Errc::NotFound;
  PnCounter acc;
  for (const auto& s : siblings) {
    auto c = decode(s);
    if (!c) return c.error();
    acc.merge(*c);
  }
  return acc;
}

// --- WEAK ------------------------------------------------------------------

WeakStrategy::WeakStrategy(sim::World& world, MiddlewareConfig cfg)
    : Strategy(world, std::move(cfg)) {
  for (int dc = 0; dc < world_.dcs(); ++dc) prop_.emplace_back(dc, world_.dcs());
}

Status WeakStrategy::install(const CounterSpec& spec) {
  PnCounter c;
  // The initial value is one actor's worth of increments so every DC starts
  // from the same state.
  if (spec.initial != 0) {
    c.add(0xffffffffu, spec.initial > 0 ? OpKind::Inc : OpKind::Dec,
          spec.initial > 0 ? spec.initial : -spec.initial);
  }
  for (int dc = 0; dc < world_.dcs(); ++dc) {
    if (world_.store(dc).store().contains(spec.key)) return Errc::AlreadyExists;
    (void)world_.store(dc).store().put(spec.key, c.encode());
  }
  specs_[spec.key] = spec;
  world_.observer.track(spec.key, spec.polarity, spec.bound, spec.initial);
  return {};
}

void WeakStrategy::start() {
  const int n = world_.dcs();
  for (int dc = 0; dc < n; ++dc) {
    every(cfg_.sync_period_ms, sim::from_ms(cfg_.sync_period_ms * (dc + 1) / (n + 1)),
          [this, dc] { sync_tick(dc); });
  }
}

void WeakStrategy::submit(const ClientOp& op, OpCallback done) {
  auto spec = specs_.find(op.key);
  if (spec == specs_.end()) {
    done(OpResult::fail(Errc::NotFound));
    return;
  }
  world_.store(op.dc).get(op.key, [this, op, spec = spec->second,
                                   done = std::move(done)](Result<kv::VersionedRecord> rec) {
    if (!rec) {
      done(OpResult::fail(rec.error()));
      return;
    }
    auto c = PnCounter::merge_all(rec->siblings);
    if (!c) {
      done(OpResult::fail(c.error()));
      return;
    }
    if (would_cross(spec, c->value(), op.kind, op.delta)) {
      done(OpResult::fail(Errc::NotEnoughRights));
      return;
    }
    c->add(actor_of(op), op.kind, op.delta);
    world_.store(op.dc).put(
        op.key, c->encode(), rec->version,
        [done](Status st) { done(st ? OpResult::ok() : OpResult::fail(st.error())); },
        [this, op] {
          world_.observer.committed(op.key, op.kind, op.delta, world_.loop.now());
          prop_[op.dc].touch(op.key);
        });
  });
}

void WeakStrategy::sync_tick(int dc) {
  for (auto& due : prop_[dc].due()) {
    world_.store(dc).get(due.key, [this, dc, due](Result<kv::VersionedRecord> rec) {
      if (!rec) return;
      auto c = PnCounter::merge_all(rec->siblings);
      if (!c) return;
      const Bytes bytes = c->encode();
      for (int dest : due.dests) {
        world_.tally.add(sim::Metric::SyncMessage, world_.loop.now());
        world_.net.send(dc, dest, [this, dc, dest, key = due.key, bytes, gen = due.gen] {
          // Merge into what the destination holds and replace the siblings
          // read; writers racing with this leave siblings for readers.
          world_.store(dest).get(key, [this, dc, dest, key, bytes,
                                       gen](Result<kv::VersionedRecord> rec) {
            auto in = PnCounter::decode(bytes);
            if (!in) return;
            std::optional<kv::VersionToken> context;
            if (rec) {
              if (auto mine = PnCounter::merge_all(rec->siblings)) in->merge(*mine);
              context = rec->version;
            }
            world_.store(dest).put(key, in->encode(), context, [this, dc, dest, key, gen](Status) {
              world_.tally.add(sim::Metric::SyncMessage, world_.loop.now());
              world_.net.send(dest, dc, [this, dc, dest, key, gen] {
                prop_[dc].acked(key, dest, gen);
              });
            });
          });
        });
      }
    });
  }
}

std::optional<Bytes> WeakStrategy::stored_state(int dc, const std::string& key) {
  auto rec = world_.store(dc).store().get(key);
  if (!rec) return std::nullopt;
  auto c = PnCounter::merge_all(rec->siblings);
  if (!c) return std::nullopt;
  return c->encode();
}

std::optional<Count> WeakStrategy::stored_value(int dc, const std::string& key) {
  auto bytes = stored_state(dc, key);
  if (!bytes) return std::nullopt;
  return PnCounter::decode(*bytes)->value();
}

// --- STRONG ----------------------------------------------------------------

namespace {

Bytes encode_int(Count v) { return std::to_string(v); }

std::optional<Count> decode_int(const Bytes& b) {
  Count v = 0;
  auto [p, ec] = std::from_chars(b.data(), b.data() + b.size(), v);
  if (ec != std::errc{} || p != b.data() + b.size()) return std::nullopt;
  return v;
}

}  // namespace

StrongStrategy::StrongStrategy(sim::World& world, MiddlewareConfig cfg)
    : Strategy(world, std::move(cfg)) {}

Status StrongStrategy::install(const CounterSpec& spec) {
  auto res = world_.store(cfg_.home_dc).store().put_conditional(spec.key, encode_int(spec.initial),
                                                               std::nullopt);
  if (!res) return Errc::AlreadyExists;
  specs_[spec.key] = spec;
  world_.observer.track(spec.key, spec.polarity, spec.bound, spec.initial);
  return {};
}

void StrongStrategy::to_home(int dc, std::function<void()> fn) {
  if (dc == cfg_.home_dc) {
    fn();
  } else {
    world_.net.send(dc, cfg_.home_dc, std::move(fn));
  }
}

void StrongStrategy::from_home(int dc, std::function<void()> fn) {
  if (dc == cfg_.home_dc) {
    fn();
  } else {
    world_.net.send(cfg_.home_dc, dc, std::move(fn));
  }
}

void StrongStrategy::submit(const ClientOp& op, OpCallback done) {
  auto spec = specs_.find(op.key);
  if (spec == specs_.end()) {
    done(OpResult::fail(Errc::NotFound));
    return;
  }
  const int home = cfg_.home_dc;
  to_home(op.dc, [this, op, home, spec = spec->second, done = std::move(done)] {
    world_.store(home).get(op.key, [this, op, home, spec, done](Result<kv::VersionedRecord> rec) {
      from_home(op.dc, [this, op, home, spec, done, rec = std::move(rec)] {
        if (!rec) {
          done(OpResult::fail(rec.error()));
          return;
        }
        auto v = decode_int(rec->siblings.front());
        if (!v) {
          done(OpResult::fail(Errc::MalformedEncoding));
          return;
        }
        if (would_cross(spec, *v, op.kind, op.delta)) {
          done(OpResult::fail(Errc::NotEnoughRights));
          return;
        }
        const Count next = op.kind == OpKind::Inc ? *v + op.delta : *v - op.delta;
        const kv::VersionToken seen = rec->version;
        to_home(op.dc, [this, op, home, next, seen, done] {
          world_.store(home).put_conditional(
              op.key, encode_int(next), seen,
              [this, op, done](Result<kv::VersionToken> res) {
                from_home(op.dc, [res, done] {
                  done(res ? OpResult::ok() : OpResult::fail(res.error()));
                });
              },
              [this, op] {
                world_.observer.committed(op.key, op.kind, op.delta, world_.loop.now());
              });
        });
      });
    });
  });
}

std::optional<Bytes> StrongStrategy::stored_state(int /*dc*/, const std::string& key) {
  auto rec = world_.store(cfg_.home_dc).store().get(key);
  if (!rec) return std::nullopt;
  return rec->siblings.front();
}

std::optional<Count> StrongStrategy::stored_value(int dc, const std::string& key) {
  auto b = stored_state(dc, key);
  if (!b) return std::nullopt;
  return decode_int(*b);
}

}  // namespace bcounter::mw
