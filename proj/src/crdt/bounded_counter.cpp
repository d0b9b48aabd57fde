#include "bcounter/crdt/bounded_counter.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <limits>
#include <optional>

namespace bcounter {
namespace {

std::optional<Count> checked_add(Count a, Count b) {
  Count out = 0;
  if (__builtin_add_overflow(a, b, &out)) return std::nullopt;
  return out;
}

std::optional<Count> checked_sub(Count a, Count b) {
  Count out = 0;
  if (__builtin_sub_overflow(a, b, &out)) return std::nullopt;
  return out;
}

// value() computed with overflow detection. Updates call this on the
// candidate state so the plain value() accessor can never overflow.
std::optional<Count> checked_value(Polarity polarity, Count bound,
                                   const BoundedCounter::RightsMatrix& r,
                                   const std::vector<Count>& u) {
  Count created = 0;
  for (const auto& [key, v] : r) {
    if (key.first != key.second) continue;
    auto s = checked_add(created, v);
    if (!s) return std::nullopt;
    created = *s;
  }
  Count used = 0;
  for (Count v : u) {
    auto s = checked_add(used, v);
    if (!s) return std::nullopt;
    used = *s;
  }
  auto delta = checked_sub(created, used);
  if (!delta) return std::nullopt;
  return polarity == Polarity::Lower ? checked_add(bound, *delta)
                                     : checked_sub(bound, *delta);
}

constexpr char kMagic[2] = {'B', 'C'};
constexpr std::uint8_t kFormatVersion = 1;
constexpr std::uint32_t kMaxReplicas = 1u << 16;

void put_u8(Bytes& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

template <typename T>
void put_le(Bytes& out, T v) {
  auto u = static_cast<std::make_unsigned_t<T>>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
  }
}

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  template <typename T>
  std::optional<T> le() {
    if (in_.size() - pos_ < sizeof(T)) return std::nullopt;
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<std::make_unsigned_t<T>>(
               static_cast<std::uint8_t>(in_[pos_ + i]))
           << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }

  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string_view to_string(Polarity p) noexcept {
  return p == Polarity::Lower ? "lower" : "upper";
}

BoundedCounter::BoundedCounter(Polarity polarity, Count bound,
                               std::uint32_t replicas)
    : polarity_(polarity), bound_(bound), n_(replicas), u_(replicas, 0) {}

Result<BoundedCounter> BoundedCounter::create(Polarity polarity, Count bound,
                                              std::uint32_t replicas,
                                              ReplicaId creator,
                                              Count initial) {
  if (replicas == 0 || replicas > kMaxReplicas || creator.value >= replicas) {
    return Errc::InvalidReplica;
  }
  Count slack = 0;
  if (polarity == Polarity::Lower) {
    if (initial < bound) return Errc::InvalidBound;
    auto s = checked_sub(initial, bound);
    if (!s) return Errc::Overflow;
    slack = *s;
  } else {
    if (initial > bound) return Errc::InvalidBound;
    auto s = checked_sub(bound, initial);
    if (!s) return Errc::Overflow;
    slack = *s;
  }
  BoundedCounter c(polarity, bound, replicas);
  if (slack > 0) {
    if (auto st = c.create_rights(creator, slack); !st) return st.error();
  }
  return c;
}

Result<BoundedCounter> BoundedCounter::from_parts(Polarity polarity, Count bound,
                                                  std::uint32_t replicas,
                                                  const RightsMatrix& rights,
                                                  std::vector<Count> consumed) {
  if (replicas == 0 || replicas > kMaxReplicas) return Errc::InvalidReplica;
  if (consumed.size() != replicas) return Errc::InvalidReplica;
  BoundedCounter c(polarity, bound, replicas);
  for (const auto& [key, v] : rights) {
    if (key.first >= replicas || key.second >= replicas) return Errc::InvalidReplica;
    if (v < 0) return Errc::MalformedEncoding;
    if (v > 0) c.r_.emplace(key, v);
  }
  for (Count v : consumed) {
    if (v < 0) return Errc::MalformedEncoding;
  }
  c.u_ = std::move(consumed);
  if (!checked_value(polarity, bound, c.r_, c.u_)) return Errc::Overflow;
  return c;
}

Count BoundedCounter::rights(ReplicaId from, ReplicaId to) const noexcept {
  auto it = r_.find({from.value, to.value});
  return it == r_.end() ? 0 : it->second;
}

Count BoundedCounter::consumed(ReplicaId i) const noexcept {
  return valid(i) ? u_[i.value] : 0;
}

Count BoundedCounter::value() const noexcept {
  // Every state is built through checked updates, so this cannot overflow.
  return *checked_value(polarity_, bound_, r_, u_);
}

Result<Count> BoundedCounter::local_rights(ReplicaId i) const {
  if (!valid(i)) return Errc::InvalidReplica;
  // R[i][i] + sum_{j!=i} R[j][i] - sum_{j!=i} R[i][j] - U[i]
  // Column i (including the diagonal) minus the off-diagonal row i.
  std::optional<Count> held = 0;
  for (const auto& [key, v] : r_) {
    if (key.second == i.value) held = checked_add(*held, v);
    else if (key.first == i.value) held = checked_sub(*held, v);
    if (!held) return Errc::Overflow;
  }
  held = checked_sub(*held, u_[i.value]);
  if (!held) return Errc::Overflow;
  return *held;
}

Status BoundedCounter::create_rights(ReplicaId at, Count delta) {
  auto next = checked_add(rights(at, at), delta);
  if (!next) return Errc::Overflow;
  RightsMatrix candidate = r_;
  candidate[{at.value, at.value}] = *next;
  if (!checked_value(polarity_, bound_, candidate, u_)) return Errc::Overflow;
  r_ = std::move(candidate);
  return {};
}

Status BoundedCounter::consume_rights(ReplicaId at, Count delta) {
  auto held = local_rights(at);
  if (!held) return held.error();
  if (*held < delta) return Errc::NotEnoughRights;
  auto next = checked_add(u_[at.value], delta);
  if (!next) return Errc::Overflow;
  Count old = u_[at.value];
  u_[at.value] = *next;
  if (!checked_value(polarity_, bound_, r_, u_)) {
    u_[at.value] = old;
    return Errc::Overflow;
  }
  return {};
}

Status BoundedCounter::increment(ReplicaId at, Count delta) {
  if (delta <= 0) return Errc::NonPositiveDelta;
  if (!valid(at)) return Errc::InvalidReplica;
  return polarity_ == Polarity::Lower ? create_rights(at, delta)
                                      : consume_rights(at, delta);
}

Status BoundedCounter::decrement(ReplicaId at, Count delta) {
  if (delta <= 0) return Errc::NonPositiveDelta;
  if (!valid(at)) return Errc::InvalidReplica;
  return polarity_ == Polarity::Lower ? consume_rights(at, delta)
                                      : create_rights(at, delta);
}

Status BoundedCounter::transfer(ReplicaId from, ReplicaId to, Count delta) {
  if (delta <= 0) return Errc::NonPositiveDelta;
  if (!valid(from) || !valid(to)) return Errc::InvalidReplica;
  if (from == to) return Errc::SelfTransfer;
  auto held = local_rights(from);
  if (!held) return held.error();
  if (*held < delta) return Errc::NotEnoughRights;
  Count current = rights(from, to);
  auto next = checked_add(current, delta);
  if (!next) return Errc::Overflow;
  r_[{from.value, to.value}] = *next;
  return {};
}

Status BoundedCounter::merge(const BoundedCounter& other) {
  if (!same_identity(other)) return Errc::IncompatibleCounters;
  RightsMatrix joined = r_;
  for (const auto& [key, v] : other.r_) {
    auto& slot = joined[key];
    slot = std::max(slot, v);
  }
  std::vector<Count> used = u_;
  for (std::size_t i = 0; i < used.size(); ++i) {
    used[i] = std::max(used[i], other.u_[i]);
  }
  if (!checked_value(polarity_, bound_, joined, used)) return Errc::Overflow;
  r_ = std::move(joined);
  u_ = std::move(used);
  return {};
}

Result<bool> BoundedCounter::leq(const BoundedCounter& other) const {
  if (!same_identity(other)) return Errc::IncompatibleCounters;
  for (const auto& [key, v] : r_) {
    auto it = other.r_.find(key);
    if (it == other.r_.end() || it->second < v) return false;
  }
  for (std::size_t i = 0; i < u_.size(); ++i) {
    if (u_[i] > other.u_[i]) return false;
  }
  return true;
}

Bytes BoundedCounter::encode() const {
  Bytes out;
  out.reserve(2 + 1 + 1 + 8 + 4 + 4 + r_.size() * 16 + u_.size() * 8);
  out.append(kMagic, sizeof(kMagic));
  put_u8(out, kFormatVersion);
  put_u8(out, static_cast<std::uint8_t>(polarity_));
  put_le<std::int64_t>(out, bound_);
  put_le<std::uint32_t>(out, n_);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r_.size()));
  // std::map iterates in (from, to) order, which makes the layout canonical.
  for (const auto& [key, v] : r_) {
    put_le<std::uint32_t>(out, key.first);
    put_le<std::uint32_t>(out, key.second);
    put_le<std::int64_t>(out, v);
  }
  for (Count v : u_) put_le<std::int64_t>(out, v);
  return out;
}

Result<BoundedCounter> BoundedCounter::decode(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != kMagic[0] || bytes[1] != kMagic[1]) {
    return Errc::MalformedEncoding;
  }
  Reader in(bytes.substr(2));
  auto version = in.le<std::uint8_t>();
  auto pol = in.le<std::uint8_t>();
  auto bound = in.le<std::int64_t>();
  auto n = in.le<std::uint32_t>();
  auto entries = in.le<std::uint32_t>();
  if (!version || *version != kFormatVersion || !pol || *pol > 1 || !bound ||
      !n || *n == 0 || *n > kMaxReplicas || !entries) {
    return Errc::MalformedEncoding;
  }
  const std::uint64_t nn = static_cast<std::uint64_t>(*n) * *n;
  if (*entries > nn ||
      in.remaining() != static_cast<std::uint64_t>(*entries) * 16 +
                            static_cast<std::uint64_t>(*n) * 8) {
    return Errc::MalformedEncoding;
  }
  BoundedCounter c(static_cast<Polarity>(*pol), *bound, *n);
  std::optional<std::pair<std::uint32_t, std::uint32_t>> prev;
  for (std::uint32_t k = 0; k < *entries; ++k) {
    auto from = in.le<std::uint32_t>();
    auto to = in.le<std::uint32_t>();
    auto v = in.le<std::int64_t>();
    if (!from || !to || !v || *from >= *n || *to >= *n || *v <= 0) {
      return Errc::MalformedEncoding;
    }
    std::pair key{*from, *to};
    if (prev && !(*prev < key)) return Errc::MalformedEncoding;
    prev = key;
    c.r_.emplace_hint(c.r_.end(), key, *v);
  }
  for (std::uint32_t i = 0; i < *n; ++i) {
    auto v = in.le<std::int64_t>();
    if (!v || *v < 0) return Errc::MalformedEncoding;
    c.u_[i] = *v;
  }
  if (!checked_value(c.polarity_, c.bound_, c.r_, c.u_)) {
    return Errc::MalformedEncoding;
  }
  return c;
}

Result<BoundedCounter> merge(const BoundedCounter& a, const BoundedCounter& b) {
  BoundedCounter out = a;
  if (auto st = out.merge(b); !st) return st.error();
  return out;
}

// ---------------------------------------------------------------------------

Result<RangeCounter> RangeCounter::create(Count lower_bound, Count upper_bound,
                                          std::uint32_t replicas,
                                          ReplicaId creator, Count initial) {
  if (lower_bound > upper_bound) return Errc::InvalidBound;
  auto lo = BoundedCounter::create(Polarity::Lower, lower_bound, replicas,
                                   creator, initial);
  if (!lo) return lo.error();
  auto hi = BoundedCounter::create(Polarity::Upper, upper_bound, replicas,
                                   creator, initial);
  if (!hi) return hi.error();
  return RangeCounter(std::move(*lo), std::move(*hi));
}

Status RangeCounter::increment(ReplicaId at, Count delta) {
  // The UPPER side may refuse (needs rights); try it first.
  BoundedCounter saved = upper_;
  if (auto st = upper_.increment(at, delta); !st) return st;
  if (auto st = lower_.increment(at, delta); !st) {
    upper_ = std::move(saved);
    return st;
  }
  return {};
}

Status RangeCounter::decrement(ReplicaId at, Count delta) {
  BoundedCounter saved = lower_;
  if (auto st = lower_.decrement(at, delta); !st) return st;
  if (auto st = upper_.decrement(at, delta); !st) {
    lower_ = std::move(saved);
    return st;
  }
  return {};
}

Status RangeCounter::transfer(Polarity component, ReplicaId from, ReplicaId to,
                              Count delta) {
  return component == Polarity::Lower ? lower_.transfer(from, to, delta)
                                      : upper_.transfer(from, to, delta);
}

Status RangeCounter::merge(const RangeCounter& other) {
  BoundedCounter saved = lower_;
  if (auto st = lower_.merge(other.lower_); !st) return st;
  if (auto st = upper_.merge(other.upper_); !st) {
    lower_ = std::move(saved);
    return st;
  }
  return {};
}

}  // namespace bcounter
