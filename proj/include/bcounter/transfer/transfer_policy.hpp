#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bcounter/crdt/bounded_counter.hpp"

namespace bcounter::transfer {

enum class Mode : std::uint8_t { Sync, Async };

struct TransferRequest {
  std::string key;
  ReplicaId grantor;
  ReplicaId requester;
  Count amount = 0;
  /// Requester's view of R[grantor][requester] when the request was made.
  /// A grantor that has already transferred more ignores the request.
  Count witness = 0;
  Mode mode = Mode::Async;
  /// Correlates a SYNC response with the request that caused it.
  std::uint64_t id = 0;
};

enum class GrantStatus : std::uint8_t { Granted, Denied, Ignored };

std::string_view to_string(GrantStatus s) noexcept;

struct TransferResponse {
  std::string key;
  GrantStatus status = GrantStatus::Denied;
  ReplicaId grantor;
  ReplicaId requester;
  Count granted = 0;
  std::uint64_t id = 0;
  /// Grantor's encoded state. Always present on SYNC responses; on GRANTED it
  /// already contains the transfer.
  std::optional<Bytes> state;
};

/// Default rebalance threshold: 10% of the per-replica share of the slack
/// at creation time.
Count default_threshold(const BoundedCounter& created);

/// Proactive rebalancing. When `self` holds fewer rights than `threshold`,
/// asks every replica that visibly holds more rights for half the
/// difference. Replicas that look exhausted are never asked.
std::vector<TransferRequest> rebalance_tick(const BoundedCounter& local,
                                            ReplicaId self, Count threshold,
                                            const std::string& key);

struct HandledRequest {
  BoundedCounter state;
  TransferResponse response;
};

/// Grantor side. ASYNC requests are granted at most half of the available
/// rights; SYNC requests may take everything available.
HandledRequest handle_request(const BoundedCounter& grantor_state,
                              ReplicaId grantor, const TransferRequest& req);

/// Remote replicas ordered by visible rights, best first. Replicas with no
/// visible rights are left out.
std::vector<ReplicaId> sync_candidates(const BoundedCounter& local, ReplicaId self);

/// Requester side of an on-demand (SYNC) acquisition.
///
/// The caller sends each request returned by next_request() and feeds back
/// either the response or a timeout. The acquisition ends when enough rights
/// are held locally or no candidate is left.
class SyncAcquisition {
 public:
  SyncAcquisition(BoundedCounter local, ReplicaId self, Count needed,
                  std::string key);

  /// Next request to send, or nothing when satisfied or out of candidates.
  std::optional<TransferRequest> next_request(std::uint64_t id);

  void on_response(const TransferResponse& resp);
  void on_timeout() {}

  bool satisfied() const;
  const BoundedCounter& state() const noexcept { return state_; }
  std::uint32_t requests_sent() const noexcept { return sent_; }

 private:
  BoundedCounter state_;
  ReplicaId self_;
  Count needed_;
  std::string key_;
  std::vector<ReplicaId> candidates_;
  std::size_t next_ = 0;
  std::uint32_t sent_ = 0;
};

}  // namespace bcounter::transfer
