#include "bcounter/sim/world.hpp"

#include <algorithm>

namespace bcounter {

std::string_view to_string(OpKind k) noexcept { return k == OpKind::Inc ? "inc" : "dec"; }
std::string_view to_string(OpFlag f) noexcept { return f == OpFlag::Local ? "local" : "global"; }
std::string_view to_string(OpStatus s) noexcept {
  switch (s) {
    case OpStatus::Ok: return "ok";
    case OpStatus::Fail: return "fail";
    case OpStatus::Retry: return "retry";
  }
  return "?";
}

}  // namespace bcounter

namespace bcounter::sim {

void GlobalObserver::track(const std::string& key, Polarity polarity, Count bound,
                           Count initial) {
  std::optional<SimTime> depleted;
  if (initial == bound) depleted = 0;
  keys_[key] = Tracked{polarity, bound, initial, depleted};
}

void GlobalObserver::committed(const std::string& key, OpKind kind, Count delta,
                               SimTime at) {
  auto it = keys_.find(key);
  if (it == keys_.end()) return;
  Tracked& t = it->second;
  (kind == OpKind::Inc ? incs_ : decs_) += delta;
  const Count before = t.value;
  t.value += kind == OpKind::Inc ? delta : -delta;
  // Distance past the bound, before and after.
  auto excess = [&](Count v) {
    const Count over = t.polarity == Polarity::Lower ? t.bound - v : v - t.bound;
    return std::max<Count>(0, over);
  };
  const bool approaching = (t.polarity == Polarity::Lower) == (kind == OpKind::Dec);
  if (approaching) {
    const Count added = excess(t.value) - excess(before);
    if (added > 0) {
      violations_ += added;
      violation_events_.emplace_back(at, added);
    }
  }
  const bool at_bound = t.polarity == Polarity::Lower ? t.value <= t.bound
                                                      : t.value >= t.bound;
  if (at_bound && !t.depleted) t.depleted = at;
  if (!at_bound) t.depleted.reset();
}

Count GlobalObserver::value(const std::string& key) const {
  auto it = keys_.find(key);
  return it == keys_.end() ? 0 : it->second.value;
}

std::optional<SimTime> GlobalObserver::depleted_at(const std::string& key) const {
  auto it = keys_.find(key);
  return it == keys_.end() ? std::nullopt : it->second.depleted;
}

void Tally::add(Metric m, SimTime at, std::int64_t n) {
  const int i = static_cast<int>(m);
  totals_[i] += n;
  const auto b = static_cast<std::size_t>(at / bucket_);
  if (buckets_[i].size() <= b) buckets_[i].resize(b + 1, 0);
  buckets_[i][b] += n;
  events_[i].emplace_back(at, n);
}

std::int64_t Tally::in_bucket(Metric m, std::size_t bucket) const {
  const auto& v = buckets_[static_cast<int>(m)];
  return bucket < v.size() ? v[bucket] : 0;
}

std::int64_t Tally::between(Metric m, SimTime from, SimTime to) const {
  std::int64_t n = 0;
  for (const auto& [t, k] : events_[static_cast<int>(m)]) {
    if (t >= from && t < to) n += k;
  }
  return n;
}

World::World(const WorldConfig& cfg)
    : rng(cfg.seed),
      net(loop, Rng(cfg.seed ^ 0x6e6574776f726bULL), cfg.one_way_ms, cfg.network_jitter_ms),
      tally(from_ms(cfg.bucket_ms)) {
  for (std::size_t dc = 0; dc < cfg.one_way_ms.size(); ++dc) {
    stores.push_back(std::make_unique<StoreService>(
        loop, Rng(cfg.seed * 1000003ULL + dc + 17), cfg.store));
    stores.back()->set_write_hook([this](bool conflict) {
      tally.add(Metric::StoreWrite, loop.now());
      if (conflict) tally.add(Metric::Conflict, loop.now());
    });
  }
}

}  // namespace bcounter::sim
