#include "bcounter/transfer/transfer_policy.hpp"

#include <algorithm>

namespace bcounter::transfer {

std::string_view to_string(GrantStatus s) noexcept {
  switch (s) {
    case GrantStatus::Granted: return "granted";
    case GrantStatus::Denied: return "denied";
    case GrantStatus::Ignored: return "ignored";
  }
  return "?";
}

Count default_threshold(const BoundedCounter& created) {
  const Count slack = created.polarity() == Polarity::Lower
                          ? created.value() - created.bound()
                          : created.bound() - created.value();
  return slack / static_cast<Count>(created.replicas()) / 10;
}

std::vector<TransferRequest> rebalance_tick(const BoundedCounter& local,
                                            ReplicaId self, Count threshold,
                                            const std::string& key) {
  std::vector<TransferRequest> out;
  const Count mine = *local.local_rights(self);
  if (mine >= threshold) return out;
  for (std::uint32_t j = 0; j < local.replicas(); ++j) {
    if (j == self.value) continue;
    const Count theirs = *local.local_rights({j});
    const Count amount = (theirs - mine) / 2;
    if (theirs <= mine || amount <= 0) continue;
    out.push_back(TransferRequest{key, {j}, self, amount, local.rights({j}, self),
                                  Mode::Async, 0});
  }
  return out;
}

HandledRequest handle_request(const BoundedCounter& grantor_state,
                              ReplicaId grantor, const TransferRequest& req) {
  HandledRequest out{grantor_state,
                     TransferResponse{req.key, GrantStatus::Denied, grantor,
                                      req.requester, 0, req.id, std::nullopt}};
  const bool sync = req.mode == Mode::Sync;
  auto attach_state = [&] {
    if (sync) out.response.state = out.state.encode();
  };

  if (req.requester == grantor || req.requester.value >= grantor_state.replicas() ||
      req.amount <= 0) {
    attach_state();
    return out;
  }
  if (grantor_state.rights(grantor, req.requester) > req.witness) {
    out.response.status = GrantStatus::Ignored;
    attach_state();
    return out;
  }
  const Count available = std::max<Count>(0, *grantor_state.local_rights(grantor));
  const Count grant = sync ? std::min(req.amount, available)
                           : std::min(req.amount, available / 2);
  if (grant <= 0) {
    attach_state();
    return out;
  }
  // Cannot fail: grant <= available and requester != grantor.
  (void)out.state.transfer(grantor, req.requester, grant);
  out.response.status = GrantStatus::Granted;
  out.response.granted = grant;
  attach_state();
  return out;
}

std::vector<ReplicaId> sync_candidates(const BoundedCounter& local, ReplicaId self) {
  std::vector<std::pair<Count, std::uint32_t>> ranked;
  for (std::uint32_t j = 0; j < local.replicas(); ++j) {
    if (j == self.value) continue;
    const Count r = *local.local_rights({j});
    if (r > 0) ranked.emplace_back(r, j);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<ReplicaId> out;
  out.reserve(ranked.size());
  for (const auto& [_, j] : ranked) out.push_back({j});
  return out;
}

SyncAcquisition::SyncAcquisition(BoundedCounter local, ReplicaId self,
                                 Count needed, std::string key)
    : state_(std::move(local)),
      self_(self),
      needed_(needed),
      key_(std::move(key)),
      candidates_(sync_candidates(state_, self)) {}

bool SyncAcquisition::satisfied() const {
  return *state_.local_rights(self_) >= needed_;
}

std::optional<TransferRequest> SyncAcquisition::next_request(std::uint64_t id) {
  while (!satisfied() && next_ < candidates_.size()) {
    const ReplicaId target = candidates_[next_++];
    const Count visible = *state_.local_rights(target);
    if (visible <= 0) continue;  // learned of exhaustion since ranking
    const Count mine = std::max<Count>(0, *state_.local_rights(self_));
    const Count deficit = needed_ - mine;
    const Count amount = std::max(deficit, (visible - mine) / 2);
    ++sent_;
    return TransferRequest{key_, target, self_, amount, state_.rights(target, self_),
                           Mode::Sync, id};
  }
  return std::nullopt;
}

void SyncAcquisition::on_response(const TransferResponse& resp) {
  if (!resp.state) return;
  auto remote = BoundedCounter::decode(*resp.state);
  if (remote && remote->same_identity(state_)) (void)state_.merge(*remote);
}

}  // namespace bcounter::transfer
