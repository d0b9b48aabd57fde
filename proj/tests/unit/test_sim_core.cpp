#include <doctest.h>

#include <vector>

#include "bcounter/sim/world.hpp"

using namespace bcounter;
using namespace bcounter::sim;

TEST_CASE("events run in time order, ties in scheduling order") {
  EventLoop loop;
  std::vector<int> seen;
  loop.at(30, [&] { seen.push_back(3); });
  loop.at(10, [&] { seen.push_back(1); });
  loop.at(10, [&] { seen.push_back(2); });
  loop.at(20, [&] {
    seen.push_back(4);
    loop.after(0, [&] { seen.push_back(5); });
  });
  loop.run();
  CHECK(seen == std::vector<int>{1, 2, 4, 5, 3});
  CHECK(loop.now() == 30);
  CHECK(loop.executed() == 5);
}

TEST_CASE("run_until stops at the horizon and advances the clock") {
  EventLoop loop;
  int fired = 0;
  loop.at(5, [&] { ++fired; });
  loop.at(50, [&] { ++fired; });
  loop.run_until(20);
  CHECK(fired == 1);
  CHECK(loop.now() == 20);
  CHECK(loop.pending() == 1);
}

TEST_CASE("rng is reproducible and uniform draws stay in range") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  Rng c(7);
  int counts[4] = {0, 0, 0, 0};
  for (int i = 0; i < 40000; ++i) ++counts[c.below(4)];
  for (int k : counts) CHECK(k == doctest::Approx(10000).epsilon(0.05));
}

TEST_CASE("network delivers after one-way latency and drops across partitions") {
  EventLoop loop;
  Network net(loop, Rng(1), {{1, 40, 50}, {40, 1, 80}, {50, 80, 1}}, 0.0);
  SimTime got = -1;
  net.send(0, 1, [&] { got = loop.now(); });
  loop.run();
  CHECK(got == from_ms(40));
  CHECK(net.round_trip(1, 2) == from_ms(160));

  const int h = net.partition({2});
  CHECK_FALSE(net.reachable(0, 2));
  CHECK(net.reachable(0, 1));
  bool delivered = false;
  net.send(2, 0, [&] { delivered = true; });
  loop.run();
  CHECK_FALSE(delivered);

  // A message in flight when the partition starts is lost as well.
  net.heal(h);
  net.send(0, 2, [&] { delivered = true; });
  loop.after(from_ms(10), [&] { net.partition({0}); });
  loop.run();
  CHECK_FALSE(delivered);
  CHECK(net.dropped() == 2);
}

TEST_CASE("store service applies writes halfway through their latency") {
  EventLoop loop;
  StoreService svc(loop, Rng(3), kv::StoreLatency{2.0, 4.0, 0.0});
  SimTime applied_at = -1, done_at = -1;
  svc.put_conditional(
      "k", "v", std::nullopt,
      [&](Result<kv::VersionToken> r) {
        CHECK(r.ok());
        done_at = loop.now();
      },
      [&] { applied_at = loop.now(); });
  loop.run();
  CHECK(applied_at == from_ms(2));
  CHECK(done_at == from_ms(4));

  SimTime read_at = -1;
  svc.get("k", [&](Result<kv::VersionedRecord> r) {
    REQUIRE(r.ok());
    CHECK(r->siblings.front() == "v");
    read_at = loop.now();
  });
  loop.run();
  CHECK(read_at == from_ms(6));
}

TEST_CASE("world tallies store writes and conflicts") {
  WorldConfig cfg;
  cfg.one_way_ms = {{1, 40}, {40, 1}};
  World w(cfg);
  int conflicts = 0;
  for (int i = 0; i < 3; ++i) {
    w.store(0).put_conditional("k", "x", std::nullopt, [&](Result<kv::VersionToken> r) {
      if (!r.ok()) ++conflicts;
    });
  }
  w.loop.run();
  CHECK(conflicts == 2);
  CHECK(w.tally.total(Metric::StoreWrite) == 3);
  CHECK(w.tally.total(Metric::Conflict) == 2);
  CHECK(w.tally.between(Metric::StoreWrite, 0, from_ms(10)) == 3);
}

TEST_CASE("observer counts decrements past a lower bound") {
  GlobalObserver obs;
  obs.track("k", Polarity::Lower, 0, 2);
  obs.committed("k", OpKind::Dec, 1, 10);
  CHECK_FALSE(obs.depleted_at("k"));
  obs.committed("k", OpKind::Dec, 1, 20);
  CHECK(obs.depleted_at("k") == SimTime{20});
  CHECK(obs.violations() == 0);
  obs.committed("k", OpKind::Dec, 3, 30);
  CHECK(obs.violations() == 3);
  obs.committed("k", OpKind::Inc, 1, 40);
  obs.committed("k", OpKind::Dec, 1, 50);
  // Re-crossing the same ground after an increment counts again.
  CHECK(obs.violations() == 4);
  CHECK(obs.value("k") == -3);
}
