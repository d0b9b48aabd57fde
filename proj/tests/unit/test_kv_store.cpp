#include <doctest.h>

#include <random>

#include "bcounter/kv/kv_store.hpp"

using namespace bcounter;
using namespace bcounter::kv;

TEST_CASE("weak put and get") {
  KvStore s;
  CHECK(s.get("k").error() == Errc::NotFound);
  REQUIRE(s.put("k", "v1").ok());
  auto r = s.get("k");
  REQUIRE(r.ok());
  CHECK(r->siblings == std::vector<Bytes>{"v1"});
  CHECK(r->consistency == Consistency::Weak);

  // Based on the latest version: replaces.
  REQUIRE(s.put("k", "v2", r->version).ok());
  auto r2 = s.get("k");
  CHECK(r2->siblings == std::vector<Bytes>{"v2"});
  CHECK(r->version < r2->version);
}

TEST_CASE("concurrent weak writes become siblings") {
  KvStore s;
  REQUIRE(s.put("k", "base").ok());
  // Two clients read the same version, then both write.
  const auto seen_a = s.get("k")->version;
  const auto seen_b = s.get("k")->version;
  REQUIRE(s.put("k", "a", seen_a).ok());
  REQUIRE(s.put("k", "b", seen_b).ok());
  auto r = s.get("k");
  CHECK(r->siblings == std::vector<Bytes>{"a", "b"});

  // A further stale write adds exactly one sibling.
  REQUIRE(s.put("k", "c", seen_a).ok());
  CHECK(s.get("k")->siblings.size() == 3);

  // A reader that merged everything collapses the set.
  REQUIRE(s.put("k", "abc", s.get("k")->version).ok());
  CHECK(s.get("k")->siblings == std::vector<Bytes>{"abc"});
}

TEST_CASE("conditional writes") {
  KvStore s;
  auto v1 = s.put_conditional("k", "x", std::nullopt);
  REQUIRE(v1.ok());
  CHECK(s.get("k")->consistency == Consistency::Strong);
  CHECK(s.put_conditional("k", "y", std::nullopt).error() == Errc::Conflict);
  CHECK(s.put("k", "y").error() == Errc::WrongMode);
  CHECK(s.replicate_in("k", "y").error() == Errc::WrongMode);

  // Two racers with the same token: exactly one wins.
  auto a = s.put_conditional("k", "a", *v1);
  auto b = s.put_conditional("k", "b", *v1);
  CHECK(a.ok());
  CHECK(b.error() == Errc::Conflict);
  CHECK(s.get("k")->siblings == std::vector<Bytes>{"a"});
  CHECK(s.stats().conflicts == 2);
  CHECK(s.stats().conditional_writes == 4);

  REQUIRE(s.put("w", "weak").ok());
  CHECK(s.put_conditional("w", "z", s.get("w")->version).error() == Errc::WrongMode);
}

TEST_CASE("retry after conflict converges and loses no update") {
  // Clients increment a shared integer with read / conditional-write loops,
  // interleaved at random. Every acknowledged increment must be present.
  KvStore s;
  REQUIRE(s.put_conditional("n", "0", std::nullopt).ok());
  std::mt19937_64 rng(5);
  const int clients = 4;
  std::vector<std::optional<VersionedRecord>> held(clients);
  std::vector<int> pending(clients, 25);
  int acknowledged = 0;
  std::vector<VersionToken> chain;
  while (std::any_of(pending.begin(), pending.end(), [](int p) { return p > 0; })) {
    int c = static_cast<int>(rng() % clients);
    if (pending[c] == 0) continue;
    if (!held[c]) {
      held[c] = *s.get("n");
      continue;
    }
    const int value = std::stoi(held[c]->siblings.front());
    auto w = s.put_conditional("n", std::to_string(value + 1), held[c]->version);
    held[c].reset();
    if (w.ok()) {
      chain.push_back(*w);
      --pending[c];
      ++acknowledged;
    }
  }
  CHECK(std::stoi(s.get("n")->siblings.front()) == acknowledged);
  CHECK(acknowledged == 100);
  CHECK(std::is_sorted(chain.begin(), chain.end()));
}
