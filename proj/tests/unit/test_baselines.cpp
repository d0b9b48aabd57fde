#include <doctest.h>

#include <optional>

#include "bcounter/middleware/baselines.hpp"
#include "sim_fixture.hpp"

using namespace bcounter;
using namespace bcounter::mw;
using bcounter::sim::from_ms;

TEST_CASE("pn counter merge is a per-actor max") {
  PnCounter a, b;
  a.add(1, OpKind::Inc, 5);
  a.add(2, OpKind::Dec, 2);
  b.add(1, OpKind::Inc, 3);
  b.add(3, OpKind::Dec, 4);
  PnCounter ab = a, ba = b;
  ab.merge(b);
  ba.merge(a);
  CHECK(ab == ba);
  CHECK(ab.value() == 5 - 2 - 4);
  PnCounter again = ab;
  again.merge(ab);
  CHECK(again == ab);
  auto round = PnCounter::decode(ab.encode());
  REQUIRE(round.ok());
  CHECK(*round == ab);
  CHECK_FALSE(PnCounter::decode(ab.encode() + "x").ok());
}

TEST_CASE("weak: a single client never crosses the bound") {
  sim::World world(testing::three_dcs());
  WeakStrategy weak(world, MiddlewareConfig{});
  REQUIRE(weak.install({"k", Polarity::Lower, 0, 5}).ok());
  int ok = 0;
  std::function<void()> next = [&] {
    weak.submit(ClientOp{0, 0, "k", OpKind::Dec, 1, OpFlag::Global}, [&](OpResult r) {
      if (r.status == OpStatus::Ok) ++ok;
      if (world.loop.now() < from_ms(500)) next();
    });
  };
  next();
  world.loop.run();
  CHECK(ok == 5);
  CHECK(world.observer.violations() == 0);
}

TEST_CASE("weak: concurrent clients decrement past the bound") {
  sim::World world(testing::three_dcs());
  WeakStrategy weak(world, MiddlewareConfig{});
  REQUIRE(weak.install({"k", Polarity::Lower, 0, 5}).ok());
  int ok = 0;
  for (int dc = 0; dc < 3; ++dc) {
    for (int c = 0; c < 4; ++c) {
      weak.submit(ClientOp{dc, c, "k", OpKind::Dec, 1, OpFlag::Global}, [&](OpResult r) {
        if (r.status == OpStatus::Ok) ++ok;
      });
    }
  }
  world.loop.run();
  CHECK(ok == 12);
  CHECK(world.observer.violations() == 7);
  // Siblings from the racing writers merge without losing any update.
  CHECK(weak.stored_value(0, "k") == 5 - 4);
}

TEST_CASE("weak: replication converges all DCs") {
  sim::World world(testing::three_dcs());
  WeakStrategy weak(world, MiddlewareConfig{});
  REQUIRE(weak.install({"k", Polarity::Lower, 0, 50}).ok());
  for (int dc = 0; dc < 3; ++dc) {
    weak.submit(ClientOp{dc, 0, "k", OpKind::Dec, dc + 1, OpFlag::Global}, [](OpResult) {});
  }
  world.loop.run();
  for (int dc = 0; dc < 3; ++dc) weak.sync_tick(dc);
  world.loop.run();
  for (int dc = 0; dc < 3; ++dc) CHECK(weak.stored_value(dc, "k") == 44);
  CHECK(weak.stored_state(0, "k") == weak.stored_state(2, "k"));
}

TEST_CASE("strong: remote clients pay two wide-area round trips") {
  sim::World world(testing::three_dcs());
  StrongStrategy strong(world, MiddlewareConfig{});
  REQUIRE(strong.install({"k", Polarity::Lower, 0, 10}).ok());
  sim::SimTime home_done = 0, eu_done = 0;
  strong.submit(ClientOp{0, 0, "k", OpKind::Dec, 1, OpFlag::Global}, [&](OpResult r) {
    CHECK(r.status == OpStatus::Ok);
    home_done = world.loop.now();
  });
  world.loop.run();
  const sim::SimTime start = world.loop.now();
  strong.submit(ClientOp{2, 0, "k", OpKind::Dec, 1, OpFlag::Global}, [&](OpResult r) {
    CHECK(r.status == OpStatus::Ok);
    eu_done = world.loop.now();
  });
  world.loop.run();
  CHECK(home_done == from_ms(6));
  CHECK(eu_done - start == from_ms(2 * 96 + 6));
  CHECK(strong.stored_value(1, "k") == 8);
}

TEST_CASE("strong: a conflicting write fails the operation") {
  sim::World world(testing::three_dcs());
  StrongStrategy strong(world, MiddlewareConfig{});
  REQUIRE(strong.install({"k", Polarity::Lower, 0, 10}).ok());
  int ok = 0, conflict = 0;
  for (int c = 0; c < 3; ++c) {
    strong.submit(ClientOp{0, c, "k", OpKind::Dec, 1, OpFlag::Global}, [&](OpResult r) {
      if (r.status == OpStatus::Ok) ++ok;
      if (r.reason == Errc::Conflict) ++conflict;
    });
  }
  world.loop.run();
  CHECK(ok == 1);
  CHECK(conflict == 2);
  CHECK(strong.stored_value(0, "k") == 9);
  CHECK(world.observer.violations() == 0);
}
