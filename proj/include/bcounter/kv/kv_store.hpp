#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "bcounter/crdt/bounded_counter.hpp"
#include "bcounter/result.hpp"

namespace bcounter::kv {

enum class Consistency : std::uint8_t { Weak, Strong };

/// Per-store version of a key. Tokens of one key are totally ordered.
struct VersionToken {
  std::uint64_t value = 0;

  friend auto operator<=>(const VersionToken&, const VersionToken&) = default;
};

struct VersionedRecord {
  std::string key;
  /// Always exactly one entry for STRONG keys. WEAK keys accumulate concurrent
  /// writes here until a reader merges them and writes back.
  std::vector<Bytes> siblings;
  VersionToken version;
  Consistency consistency = Consistency::Weak;
};

struct StoreStats {
  std::uint64_t gets = 0;
  std::uint64_t puts = 0;
  std::uint64_t conditional_writes = 0;
  std::uint64_t conflicts = 0;
  std::uint64_t replicated_in = 0;
};

/// Time a store operation takes, as seen by the caller. The intra-DC write
/// quorum is folded into these numbers.
struct StoreLatency {
  double read_ms = 2.0;
  double write_ms = 4.0;
  /// Uniform extra delay in [0, jitter_ms).
  double jitter_ms = 1.0;

  /// Total latency of one read-modify-write round.
  double round_trip_ms() const { return read_ms + write_ms; }
};

/// In-process model of one data center's key-value store.
///
/// WEAK keys take blind or context-based writes and keep concurrent versions
/// as siblings. STRONG keys only accept conditional writes, so successful
/// writes to one key form a chain in which each write names the version it
/// replaced. STRONG keys are never geo-replicated by the store.
class KvStore {
 public:
  Result<VersionedRecord> get(const std::string& key);

  /// WEAK write. `context` is the version the writer read (none for a blind
  /// write). A write based on the current version replaces all siblings;
  /// anything else adds a sibling.
  Status put(const std::string& key, Bytes value,
             std::optional<VersionToken> context = std::nullopt);

  /// STRONG write that succeeds iff `expected` is the current version, or
  /// the key is absent and `expected` is empty. The first successful
  /// conditional write marks the key STRONG.
  Result<VersionToken> put_conditional(const std::string& key, Bytes value,
                                       std::optional<VersionToken> expected);

  /// Inbound geo-replication of a WEAK key: adds a sibling.
  Status replicate_in(const std::string& key, Bytes value);

  bool contains(const std::string& key) const { return records_.contains(key); }
  std::vector<std::string> keys() const;

  const StoreStats& stats() const noexcept { return stats_; }

 private:
  struct Entry {
    std::vector<Bytes> siblings;
    VersionToken version;
    Consistency consistency = Consistency::Weak;
  };

  VersionToken next_version() { return VersionToken{++clock_}; }
  void add_sibling(Entry& e, Bytes value);

  std::unordered_map<std::string, Entry> records_;
  std::uint64_t clock_ = 0;
  StoreStats stats_;
};

}  // namespace bcounter::kv
