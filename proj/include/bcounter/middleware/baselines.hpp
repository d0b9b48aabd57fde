#pragma once

#include <map>

#include "bcounter/middleware/strategy.hpp"

namespace bcounter::mw {

/// Increment/decrement counter with one (P, N) pair per actor; merge is the
/// per-actor max. Knows nothing about bounds.
class PnCounter {
 public:
  void add(std::uint32_t actor, OpKind kind, Count delta);
  void merge(const PnCounter& other);
  Count value() const noexcept;

  Bytes encode() const;
  static Result<PnCounter> decode(std::string_view bytes);
  static Result<PnCounter> merge_all(const std::vector<Bytes>& siblings);

  friend bool operator==(const PnCounter&, const PnCounter&) = default;

 private:
  std::map<std::uint32_t, std::pair<Count, Count>> entries_;
};

/// Baseline without coordination: clients read the value and decrement only
/// if the bound would still hold, but nothing stops two clients from doing so
/// concurrently. The store replicates between DCs in the background.
class WeakStrategy final : public Strategy {
 public:
  WeakStrategy(sim::World& world, MiddlewareConfig cfg);

  std::string_view name() const override { return "weak"; }
  Status install(const CounterSpec& spec) override;
  void start() override;
  void submit(const ClientOp& op, OpCallback done) override;
  std::optional<Count> stored_value(int dc, const std::string& key) override;
  std::optional<Bytes> stored_state(int dc, const std::string& key) override;

  void sync_tick(int dc);

 private:
  std::vector<Propagator> prop_;
  std::map<std::string, CounterSpec> specs_;
};

/// Baseline with a single copy at the home DC, updated by read and
/// conditional write. Clients elsewhere pay a wide-area round trip for each of
/// the two steps. A conflicting write fails the operation.
class StrongStrategy final : public Strategy {
 public:
  StrongStrategy(sim::World& world, MiddlewareConfig cfg);

  std::string_view name() const override { return "strong"; }
  Status install(const CounterSpec& spec) override;
  void submit(const ClientOp& op, OpCallback done) override;
  std::optional<Count> stored_value(int dc, const std::string& key) override;
  std::optional<Bytes> stored_state(int dc, const std::string& key) override;

 private:
  /// Runs `fn` at the home DC after the one-way latency from `dc`.
  void to_home(int dc, std::function<void()> fn);
  /// Runs `fn` back at `dc` after the one-way latency from the home DC.
  void from_home(int dc, std::function<void()> fn);

  std::map<std::string, CounterSpec> specs_;
};

}  // namespace bcounter::mw
