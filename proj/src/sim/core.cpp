#include "bcounter/sim/core.hpp"

#include <cassert>

namespace bcounter::sim {

void EventLoop::at(SimTime when, Action action) {
  assert(when >= now_);
  queue_.push(Event{when < now_ ? now_ : when, seq_++, std::move(action)});
}

void EventLoop::pop_and_run() {
  // priority_queue::top is const; the action is moved out through a copy of
  // the node, which is cheap for small captures.
  Event ev = queue_.top();
  queue_.pop();
  now_ = ev.time;
  ++executed_;
  ev.action();
}

void EventLoop::run_until(SimTime until) {
  while (!queue_.empty() && queue_.top().time <= until) pop_and_run();
  if (until > now_) now_ = until;
}

void EventLoop::run() {
  while (!queue_.empty()) pop_and_run();
}

std::uint64_t Rng::next() {
  // splitmix64
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Network::Network(EventLoop& loop, Rng rng, std::vector<std::vector<double>> one_way_ms,
                 double jitter_ms)
    : loop_(loop), rng_(rng), jitter_(from_ms(jitter_ms)) {
  latency_.resize(one_way_ms.size());
  for (std::size_t i = 0; i < one_way_ms.size(); ++i) {
    for (double ms : one_way_ms[i]) latency_[i].push_back(from_ms(ms));
  }
}

bool Network::reachable(int a, int b) const {
  for (const auto& p : partitions_) {
    if (p && (*p)[a] != (*p)[b]) return false;
  }
  return true;
}

int Network::partition(std::vector<int> side) {
  std::vector<bool> mask(dcs(), false);
  for (int dc : side) mask[dc] = true;
  partitions_.emplace_back(std::move(mask));
  return static_cast<int>(partitions_.size()) - 1;
}

void Network::heal(int handle) { partitions_[handle].reset(); }

void Network::send(int from, int to, Deliver deliver) {
  ++sent_;
  if (!reachable(from, to)) {
    ++dropped_;
    return;
  }
  SimTime delay = latency_[from][to];
  if (jitter_ > 0) delay += static_cast<SimTime>(rng_.below(static_cast<std::uint64_t>(jitter_)));
  loop_.after(delay, [this, from, to, deliver = std::move(deliver)] {
    if (!reachable(from, to)) {
      ++dropped_;
      return;
    }
    deliver();
  });
}

StoreService::StoreService(EventLoop& loop, Rng rng, kv::StoreLatency latency)
    : loop_(loop), rng_(rng), latency_(latency) {}

SimTime StoreService::draw(double base_ms) {
  double ms = base_ms;
  if (latency_.jitter_ms > 0) ms += rng_.uniform() * latency_.jitter_ms;
  return from_ms(ms);
}

void StoreService::get(const std::string& key, OnGet done) {
  const SimTime total = draw(latency_.read_ms);
  const SimTime half = total / 2;
  loop_.after(half, [this, key, total, half, done = std::move(done)]() mutable {
    auto rec = store_.get(key);
    loop_.after(total - half, [rec = std::move(rec), done = std::move(done)]() mutable {
      done(std::move(rec));
    });
  });
}

void StoreService::put_conditional(const std::string& key, Bytes value,
                                   std::optional<kv::VersionToken> expected,
                                   OnWrite done, OnApplied applied) {
  const SimTime total = draw(latency_.write_ms);
  const SimTime half = total / 2;
  loop_.after(half, [this, key, value = std::move(value), expected, total, half,
                     done = std::move(done), applied = std::move(applied)]() mutable {
    auto res = store_.put_conditional(key, std::move(value), expected);
    if (hook_) hook_(!res.ok() && res.error() == Errc::Conflict);
    if (res.ok() && applied) applied();
    loop_.after(total - half, [res = std::move(res), done = std::move(done)]() mutable {
      done(std::move(res));
    });
  });
}

void StoreService::put(const std::string& key, Bytes value,
                       std::optional<kv::VersionToken> context, OnPut done,
                       OnApplied applied) {
  const SimTime total = draw(latency_.write_ms);
  const SimTime half = total / 2;
  loop_.after(half, [this, key, value = std::move(value), context, total, half,
                     done = std::move(done), applied = std::move(applied)]() mutable {
    Status st = store_.put(key, std::move(value), context);
    if (hook_) hook_(false);
    if (st.ok() && applied) applied();
    loop_.after(total - half, [st, done = std::move(done)]() mutable { done(st); });
  });
}

}  // namespace bcounter::sim
