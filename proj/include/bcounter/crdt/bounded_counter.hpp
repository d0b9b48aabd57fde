#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bcounter/result.hpp"

namespace bcounter {

/// Opaque byte sequence, as stored in the key-value store and shipped
/// between data centers.
using Bytes = std::string;

using Count = std::int64_t;

/// Dense index of one replica (one data center) within a counter's fixed
/// replica set.
struct ReplicaId {
  std::uint32_t value = 0;

  friend auto operator<=>(const ReplicaId&, const ReplicaId&) = default;
};

/// LOWER enforces value >= bound, UPPER enforces value <= bound.
enum class Polarity : std::uint8_t { Lower = 0, Upper = 1 };

std::string_view to_string(Polarity p) noexcept;

/// Replicated counter that never crosses its bound.
///
/// The slack between the value and the bound is split into rights held by
/// replicas. A replica may perform a bound-approaching update only with rights
/// it holds locally, so concurrent updates at different replicas can never
/// jointly cross the bound.
///
/// State is a rights matrix R and a consumption vector U:
///   R[i][i]  rights created at replica i,
///   R[i][j]  rights transferred from i to j,
///   U[i]     rights consumed at i.
/// Every entry is monotonic, so entry-wise max is the join.
///
/// For LOWER polarity increments create rights and decrements consume them.
/// UPPER polarity swaps the two roles. All updates must be invoked at their
/// authoring replica; row i of R and entry i of U are only written by i.
///
/// Mutating updates have the strong guarantee: on any error the state is left
/// bit-identical.
class BoundedCounter {
 public:
  using RightsMatrix = std::map<std::pair<std::uint32_t, std::uint32_t>, Count>;

  /// Fresh counter holding `initial`, with |initial - bound| rights created
  /// at `creator`.
  static Result<BoundedCounter> create(Polarity polarity, Count bound,
                                       std::uint32_t replicas,
                                       ReplicaId creator, Count initial);

  /// Rebuilds a counter from raw parts. Validates shape only (indices in
  /// range, entries non-negative); zero entries are dropped.
  static Result<BoundedCounter> from_parts(Polarity polarity, Count bound,
                                           std::uint32_t replicas,
                                           const RightsMatrix& rights,
                                           std::vector<Count> consumed);

  Polarity polarity() const noexcept { return polarity_; }
  Count bound() const noexcept { return bound_; }
  std::uint32_t replicas() const noexcept { return n_; }

  /// R[from][to], absent entries read as zero.
  Count rights(ReplicaId from, ReplicaId to) const noexcept;
  /// U[i].
  Count consumed(ReplicaId i) const noexcept;

  const RightsMatrix& rights_entries() const noexcept { return r_; }
  const std::vector<Count>& consumed_entries() const noexcept { return u_; }

  Count value() const noexcept;

  /// Rights held by replica i according to this state. Exact for i's own
  /// state; another replica's view of i may be stale in either direction.
  Result<Count> local_rights(ReplicaId i) const;

  Status increment(ReplicaId at, Count delta);
  Status decrement(ReplicaId at, Count delta);
  Status transfer(ReplicaId from, ReplicaId to, Count delta);

  /// Join with `other`: entry-wise max of R and U.
  Status merge(const BoundedCounter& other);

  /// Entry-wise partial order.
  Result<bool> leq(const BoundedCounter& other) const;

  bool same_identity(const BoundedCounter& other) const noexcept {
    return polarity_ == other.polarity_ && bound_ == other.bound_ &&
           n_ == other.n_;
  }

  /// Canonical encoding; see docs/encoding.md.
  Bytes encode() const;
  static Result<BoundedCounter> decode(std::string_view bytes);

  friend bool operator==(const BoundedCounter&, const BoundedCounter&) = default;

 private:
  BoundedCounter(Polarity polarity, Count bound, std::uint32_t replicas);

  bool valid(ReplicaId i) const noexcept { return i.value < n_; }
  Status create_rights(ReplicaId at, Count delta);
  Status consume_rights(ReplicaId at, Count delta);

  Polarity polarity_ = Polarity::Lower;
  Count bound_ = 0;
  std::uint32_t n_ = 0;
  RightsMatrix r_;
  std::vector<Count> u_;
};

/// Pure join of two same-identity counters.
Result<BoundedCounter> merge(const BoundedCounter& a, const BoundedCounter& b);

/// Counter bounded on both sides, built from a LOWER and an UPPER counter
/// that are updated together.
class RangeCounter {
 public:
  static Result<RangeCounter> create(Count lower_bound, Count upper_bound,
                                     std::uint32_t replicas, ReplicaId creator,
                                     Count initial);

  const BoundedCounter& lower() const noexcept { return lower_; }
  const BoundedCounter& upper() const noexcept { return upper_; }

  Count value() const noexcept { return lower_.value(); }

  /// Rights toward the lower bound (decrements available) at replica i.
  Result<Count> decrement_rights(ReplicaId i) const { return lower_.local_rights(i); }
  /// Rights toward the upper bound (increments available) at replica i.
  Result<Count> increment_rights(ReplicaId i) const { return upper_.local_rights(i); }

  Status increment(ReplicaId at, Count delta);
  Status decrement(ReplicaId at, Count delta);
  /// Moves rights of the component with the given polarity.
  Status transfer(Polarity component, ReplicaId from, ReplicaId to, Count delta);
  Status merge(const RangeCounter& other);

  friend bool operator==(const RangeCounter&, const RangeCounter&) = default;

 private:
  RangeCounter(BoundedCounter lower, BoundedCounter upper)
      : lower_(std::move(lower)), upper_(std::move(upper)) {}

  BoundedCounter lower_;
  BoundedCounter upper_;
};

}  // namespace bcounter
