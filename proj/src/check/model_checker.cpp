#include "bcounter/check/model_checker.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <deque>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace bcounter::check {

std::string_view to_string(StepKind k) noexcept {
  switch (k) {
    case StepKind::Inc: return "inc";
    case StepKind::Dec: return "dec";
    case StepKind::Transfer: return "transfer";
    case StepKind::Merge: return "merge";
  }
  return "?";
}

std::string_view to_string(Violation v) noexcept {
  switch (v) {
    case Violation::NegativeRights: return "negative-rights";
    case Violation::LocalBound: return "local-bound";
    case Violation::GlobalBound: return "global-bound";
    case Violation::Divergence: return "divergence";
    case Violation::NotConservative: return "not-conservative";
  }
  return "?";
}

namespace {

constexpr std::uint64_t kNoParent = ~std::uint64_t{0};

void fnv(std::uint64_t& h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
}

bool within(Polarity p, Count bound, Count v) { return p == Polarity::Lower ? v >= bound : v <= bound; }

// Consumes one right at `at` with no check on what it holds.
Status consume_unchecked(BoundedCounter& c, std::uint32_t at) {
  auto u = c.consumed_entries();
  u[at] += 1;
  auto next = BoundedCounter::from_parts(c.polarity(), c.bound(), c.replicas(), c.rights_entries(),
                                         std::move(u));
  if (!next) return next.error();
  c = std::move(*next);
  return {};
}

Status apply(const ExploreSpec& spec, std::vector<BoundedCounter>& s, const Step& st) {
  if (st.replica >= s.size() || st.other >= s.size()) return Errc::InvalidStep;
  auto& c = s[st.replica];
  const ReplicaId at{st.replica};
  switch (st.kind) {
    case StepKind::Inc:
      if (spec.mutant && spec.polarity == Polarity::Upper) return consume_unchecked(c, st.replica);
      return c.increment(at, 1);
    case StepKind::Dec:
      if (spec.mutant && spec.polarity == Polarity::Lower) return consume_unchecked(c, st.replica);
      return c.decrement(at, 1);
    case StepKind::Transfer:
      return c.transfer(at, ReplicaId{st.other}, 1);
    case StepKind::Merge:
      if (st.replica == st.other) return Errc::InvalidStep;
      return c.merge(s[st.other]);
  }
  return Errc::InvalidStep;
}

struct Budget {
  // Per replica: incs, decs, transfers used.
  std::vector<std::array<int, 3>> used;
  int updates = 0;
  int merges = 0;
};

struct Frontier {
  std::uint64_t node;
  int depth;
  std::vector<BoundedCounter> states;
  Budget budget;
};

void put_varint(std::string& k, std::uint64_t v) {
  while (v >= 0x80) {
    k.push_back(static_cast<char>(v | 0x80));
    v >>= 7;
  }
  k.push_back(static_cast<char>(v));
}

// Relabelings of the replicas that leave the initial state unchanged: every
// permutation fixing replica 0, which created the rights. Larger sets are
// not worth enumerating, so only the identity is used there.
std::vector<std::vector<std::uint32_t>> symmetries(std::uint32_t n) {
  std::vector<std::uint32_t> p(n);
  std::iota(p.begin(), p.end(), 0u);
  if (n > 5) return {p};
  std::vector<std::vector<std::uint32_t>> out;
  do out.push_back(p);
  while (std::next_permutation(p.begin() + 1, p.end()));
  return out;
}

// Update budgets are not part of the key: each replica's own row already
// records how many updates it made. Merges used are tracked as labels.
// Replica-symmetric tuples share one key.
std::string key_of(const std::vector<BoundedCounter>& s,
                   const std::vector<std::vector<std::uint32_t>>& perms) {
  const auto n = static_cast<std::uint32_t>(s.size());
  std::string best;
  std::string k;
  for (const auto& inv : perms) {
    // inv maps a position in the relabeled tuple to the original replica.
    k.clear();
    for (std::uint32_t p = 0; p < n; ++p) {
      const auto& c = s[inv[p]];
      for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = 0; j < n; ++j) {
          put_varint(k, static_cast<std::uint64_t>(c.rights({inv[i]}, {inv[j]})));
        }
        put_varint(k, static_cast<std::uint64_t>(c.consumed({inv[i]})));
      }
    }
    if (best.empty() || k < best) best = k;
  }
  return best;
}

struct Label {
  int merges;
  int depth;
  std::uint64_t node;
};

std::optional<Violation> violated(const ExploreSpec& spec, const std::vector<BoundedCounter>& s,
                                  const Budget& b) {
  const auto n = static_cast<std::uint32_t>(s.size());
  for (std::uint32_t i = 0; i < n; ++i) {
    auto r = s[i].local_rights({i});
    if (!r || *r < 0) return Violation::NegativeRights;
  }
  for (const auto& c : s) {
    if (!within(spec.polarity, spec.bound, c.value())) return Violation::LocalBound;
  }
  Count global = spec.initial;
  for (const auto& u : b.used) global += u[0] - u[1];
  if (!within(spec.polarity, spec.bound, global)) return Violation::GlobalBound;

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::optional<BoundedCounter> join;
  int orders = 0;
  do {
    BoundedCounter acc = s[order[0]];
    for (std::uint32_t k = 1; k < n; ++k) {
      if (!acc.merge(s[order[k]])) return Violation::Divergence;
    }
    if (!join) join = acc;
    else if (!(acc == *join)) return Violation::Divergence;
    // Beyond five replicas every permutation is too many; a sample suffices.
    if (n > 5 && ++orders >= 120) break;
  } while (std::next_permutation(order.begin(), order.end()));
  // The join must account for every update exactly once.
  if (join->value() != global) return Violation::Divergence;

  for (std::uint32_t i = 0; i < n; ++i) {
    if (*s[i].local_rights({i}) > *join->local_rights({i})) return Violation::NotConservative;
  }
  return std::nullopt;
}

}  // namespace

std::uint64_t state_digest(const std::vector<BoundedCounter>& replicas) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& c : replicas) fnv(h, c.encode());
  return h;
}

std::vector<BoundedCounter> initial_states(const ExploreSpec& spec) {
  auto c = BoundedCounter::create(spec.polarity, spec.bound, spec.replicas, {0}, spec.initial);
  if (!c) return {};
  return std::vector<BoundedCounter>(spec.replicas, *c);
}

Trace Exploration::trace_to(std::uint64_t index) const {
  Trace t;
  t.spec = spec_;
  t.digest = nodes_[index].digest;
  for (auto i = index; nodes_[i].parent != kNoParent; i = nodes_[i].parent) {
    t.steps.push_back(nodes_[i].step);
  }
  std::reverse(t.steps.begin(), t.steps.end());
  return t;
}

Result<Exploration> explore_all(const ExploreSpec& spec) {
  if (spec.replicas == 0 || spec.incs < 0 || spec.decs < 0 || spec.transfers < 0 ||
      spec.max_merges < 0 || spec.incs > 127 || spec.decs > 127 || spec.transfers > 127 ||
      spec.max_merges > 127) {
    return Errc::BudgetTooLarge;
  }
  auto init = initial_states(spec);
  if (init.empty()) return Errc::InvalidBound;
  const int n = static_cast<int>(spec.replicas);
  const int max_updates =
      spec.max_updates.value_or(n * (spec.incs + spec.decs + spec.transfers));

  Exploration ex;
  ex.spec_ = spec;
  const auto perms = symmetries(spec.replicas);
  // Replica states -> the (merges, depth) pairs they were reached with, none
  // dominating another. Depth only matters under a depth cap.
  std::unordered_map<std::string, std::vector<Label>> seen;
  std::vector<bool> live;
  std::deque<Frontier> queue;

  Budget b0;
  b0.used.assign(spec.replicas, {0, 0, 0});
  seen[key_of(init, perms)].push_back({0, 0, 0});
  ex.nodes_.push_back({kNoParent, {}, state_digest(init)});
  live.push_back(true);
  if (auto v = violated(spec, init, b0)) {
    ex.result_.counterexample = ex.trace_to(0);
    ex.result_.counterexample->violation = v;
    ex.result_.states = 1;
    return ex;
  }
  queue.push_back({0, 0, std::move(init), std::move(b0)});

  std::vector<Step> steps;
  while (!queue.empty()) {
    Frontier f = std::move(queue.front());
    queue.pop_front();
    if (!live[f.node]) continue;  // reached again more cheaply since
    ex.result_.depth = std::max(ex.result_.depth, f.depth);
    if (spec.max_depth && f.depth >= *spec.max_depth) continue;

    steps.clear();
    for (std::uint32_t r = 0; r < spec.replicas; ++r) {
      const auto& used = f.budget.used[r];
      const bool room = f.budget.updates < max_updates;
      if (room && used[0] < spec.incs) steps.push_back({StepKind::Inc, r, r});
      if (room && used[1] < spec.decs) steps.push_back({StepKind::Dec, r, r});
      if (room && used[2] < spec.transfers) {
        for (std::uint32_t o = 0; o < spec.replicas; ++o) {
          if (o != r) steps.push_back({StepKind::Transfer, r, o});
        }
      }
      if (f.budget.merges < spec.max_merges) {
        for (std::uint32_t o = 0; o < spec.replicas; ++o) {
          if (o != r) steps.push_back({StepKind::Merge, r, o});
        }
      }
    }

    for (const Step& st : steps) {
      auto next = f.states;
      if (!apply(spec, next, st)) continue;  // precondition does not hold
      const bool merge = st.kind == StepKind::Merge;
      if (merge && next[st.replica] == f.states[st.replica]) continue;
      Budget nb = f.budget;
      if (merge) {
        ++nb.merges;
      } else {
        ++nb.updates;
        ++nb.used[st.replica][st.kind == StepKind::Inc ? 0 : st.kind == StepKind::Dec ? 1 : 2];
      }
      ++ex.result_.transitions;

      const int depth = spec.max_depth ? f.depth + 1 : 0;
      auto [it, fresh] = seen.try_emplace(key_of(next, perms));
      auto& labels = it->second;
      bool dominated = false;
      for (const auto& l : labels) dominated |= l.merges <= nb.merges && l.depth <= depth;
      if (dominated) continue;
      std::erase_if(labels, [&](const Label& l) {
        const bool worse = l.merges >= nb.merges && l.depth >= depth;
        if (worse) live[l.node] = false;
        return worse;
      });

      const std::uint64_t id = ex.nodes_.size();
      ex.nodes_.push_back({f.node, st, state_digest(next)});
      live.push_back(true);
      labels.push_back({nb.merges, depth, id});
      if (seen.size() > spec.max_states) return Errc::BudgetTooLarge;
      if (fresh) {
        if (auto v = violated(spec, next, nb)) {
          ex.result_.states = seen.size();
          ex.result_.depth = std::max(ex.result_.depth, f.depth + 1);
          ex.result_.counterexample = ex.trace_to(id);
          ex.result_.counterexample->violation = v;
          return ex;
        }
      }
      // Merges cost budget and updates do not, so states come off the queue
      // with the fewest merges first.
      Frontier child{id, f.depth + 1, std::move(next), std::move(nb)};
      if (merge) queue.push_back(std::move(child));
      else queue.push_front(std::move(child));
    }
  }
  ex.result_.verified = true;
  ex.result_.states = seen.size();
  return ex;
}

Result<ExploreResult> explore(const ExploreSpec& spec) {
  auto ex = explore_all(spec);
  if (!ex) return ex.error();
  return ex->result();
}

Result<std::vector<BoundedCounter>> replay(const Trace& trace) {
  auto s = initial_states(trace.spec);
  if (s.empty()) return Errc::InvalidStep;
  for (const Step& st : trace.steps) {
    if (!apply(trace.spec, s, st)) return Errc::InvalidStep;
  }
  return s;
}

std::string to_text(const Trace& t) {
  std::ostringstream o;
  const auto& s = t.spec;
  o << "# bcounter-trace v1\n";
  o << "replicas " << s.replicas << "\n";
  o << "polarity " << to_string(s.polarity) << "\n";
  o << "bound " << s.bound << "\n";
  o << "initial " << s.initial << "\n";
  o << "mutant " << (s.mutant ? 1 : 0) << "\n";
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& st = t.steps[i];
    o << to_string(st.kind) << " " << st.replica;
    if (st.kind == StepKind::Transfer || st.kind == StepKind::Merge) o << " " << st.other;
    const bool last = i + 1 == t.steps.size();
    o << " " << (last && t.violation ? to_string(*t.violation) : std::string_view("ok")) << "\n";
  }
  if (t.violation) o << "violation " << to_string(*t.violation) << "\n";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(t.digest));
  o << "digest " << buf << "\n";
  return o.str();
}

Result<Trace> parse_trace(std::string_view text) {
  Trace t;
  std::istringstream in{std::string(text)};
  std::string line;
  auto violation_named = [](const std::string& name) -> std::optional<Violation> {
    for (auto v : {Violation::NegativeRights, Violation::LocalBound, Violation::GlobalBound,
                   Violation::Divergence, Violation::NotConservative}) {
      if (name == to_string(v)) return v;
    }
    return std::nullopt;
  };
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    bool ok = true;
    if (word == "replicas") {
      ok = static_cast<bool>(ls >> t.spec.replicas);
    } else if (word == "polarity") {
      std::string p;
      ok = static_cast<bool>(ls >> p) && (p == "lower" || p == "upper");
      t.spec.polarity = p == "upper" ? Polarity::Upper : Polarity::Lower;
    } else if (word == "bound") {
      ok = static_cast<bool>(ls >> t.spec.bound);
    } else if (word == "initial") {
      ok = static_cast<bool>(ls >> t.spec.initial);
    } else if (word == "mutant") {
      int m = 0;
      ok = static_cast<bool>(ls >> m);
      t.spec.mutant = m != 0;
    } else if (word == "violation") {
      std::string v;
      ok = static_cast<bool>(ls >> v);
      t.violation = violation_named(v);
      ok = ok && t.violation.has_value();
    } else if (word == "digest") {
      std::string hex;
      ok = static_cast<bool>(ls >> hex);
      if (ok) {
        try {
          std::size_t used = 0;
          t.digest = std::stoull(hex, &used, 16);
          ok = used == hex.size();
        } catch (const std::exception&) {
          ok = false;
        }
      }
    } else {
      Step st;
      if (word == "inc") st.kind = StepKind::Inc;
      else if (word == "dec") st.kind = StepKind::Dec;
      else if (word == "transfer") st.kind = StepKind::Transfer;
      else if (word == "merge") st.kind = StepKind::Merge;
      else return Errc::InvalidStep;
      ok = static_cast<bool>(ls >> st.replica);
      st.other = st.replica;
      if (ok && (st.kind == StepKind::Transfer || st.kind == StepKind::Merge)) {
        ok = static_cast<bool>(ls >> st.other);
      }
      t.steps.push_back(st);
    }
    if (!ok) return Errc::InvalidStep;
  }
  if (t.spec.replicas == 0) return Errc::InvalidStep;
  return t;
}

}  // namespace bcounter::check
