#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bcounter/crdt/bounded_counter.hpp"

namespace bcounter::check {

/// Bounds of one exhaustive exploration. The counter starts with all its
/// rights at replica 0 and every replica holding that same state.
struct ExploreSpec {
  std::uint32_t replicas = 2;
  Polarity polarity = Polarity::Lower;
  Count bound = 0;
  Count initial = 2;
  /// Per-replica budgets.
  int incs = 0;
  int decs = 2;
  int transfers = 1;
  /// Cap on the number of updates across all replicas; unset means the sum
  /// of the per-replica budgets.
  std::optional<int> max_updates;
  int max_merges = 4;
  std::optional<int> max_depth;
  /// Exploration stops with BudgetTooLarge past this many distinct states.
  std::uint64_t max_states = 20'000'000;
  /// Test-only: bound-approaching updates skip their rights check.
  bool mutant = false;
};

enum class StepKind : std::uint8_t { Inc, Dec, Transfer, Merge };

/// For Transfer, `other` is the receiving replica. For Merge, `replica`
/// absorbs the state of `other`.
struct Step {
  StepKind kind = StepKind::Inc;
  std::uint32_t replica = 0;
  std::uint32_t other = 0;

  friend bool operator==(const Step&, const Step&) = default;
};

enum class Violation : std::uint8_t {
  NegativeRights,   // a replica's own rights went below zero
  LocalBound,       // a replica's own value crossed the bound
  GlobalBound,      // the sum of every update crossed the bound
  Divergence,       // merging all replicas in different orders disagreed
  NotConservative,  // a replica's own rights exceed its rights on the join
};

std::string_view to_string(StepKind k) noexcept;
std::string_view to_string(Violation v) noexcept;

struct Trace {
  ExploreSpec spec;
  std::vector<Step> steps;
  std::optional<Violation> violation;
  /// Digest of the replica states the trace ends in.
  std::uint64_t digest = 0;
};

struct ExploreResult {
  bool verified = false;
  std::uint64_t states = 0;
  std::uint64_t transitions = 0;
  /// Longest path explored.
  int depth = 0;
  std::optional<Trace> counterexample;
};

/// Visited-state graph of a finished exploration, kept so that any reached
/// state can be turned back into the trace that generated it.
class Exploration {
 public:
  const ExploreResult& result() const noexcept { return result_; }
  std::uint64_t size() const noexcept { return nodes_.size(); }
  /// Trace to the i-th discovered state.
  Trace trace_to(std::uint64_t index) const;
  std::uint64_t digest_of(std::uint64_t index) const { return nodes_[index].digest; }

 private:
  friend Result<Exploration> explore_all(const ExploreSpec& spec);

  struct Node {
    std::uint64_t parent;
    Step step;
    std::uint64_t digest;
  };

  ExploreSpec spec_;
  std::vector<Node> nodes_;
  ExploreResult result_;
};

/// Breadth-first over every reachable interleaving within the budgets.
/// Stops at the first violated check. Errors: BudgetTooLarge.
Result<ExploreResult> explore(const ExploreSpec& spec);
/// Same, keeping the state graph.
Result<Exploration> explore_all(const ExploreSpec& spec);

/// FNV-1a over the canonical encodings of the replica states, in order.
std::uint64_t state_digest(const std::vector<BoundedCounter>& replicas);

std::vector<BoundedCounter> initial_states(const ExploreSpec& spec);

/// Re-executes a trace from the initial states. Errors: InvalidStep when a
/// step's precondition does not hold.
Result<std::vector<BoundedCounter>> replay(const Trace& trace);

std::string to_text(const Trace& trace);
/// Errors: InvalidStep on malformed text.
Result<Trace> parse_trace(std::string_view text);

}  // namespace bcounter::check
