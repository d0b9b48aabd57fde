#include <doctest.h>

#include <random>

#include "bcounter/crdt/bounded_counter.hpp"
#include "crdt_oracle.hpp"

using namespace bcounter;
using bcounter::testing::Dense;

namespace {

// K=10, R[0][0]=30, R[0][1]=10, R[0][2]=10, R[1][1]=1, U=[5,4,2].
BoundedCounter fig3_state() {
  BoundedCounter::RightsMatrix r{
      {{0, 0}, 30}, {{0, 1}, 10}, {{0, 2}, 10}, {{1, 1}, 1}};
  return *BoundedCounter::from_parts(Polarity::Lower, 10, 3, r, {5, 4, 2});
}

Count rights_at(const BoundedCounter& c, std::uint32_t i) {
  return *c.local_rights({i});
}

}  // namespace

TEST_CASE("create assigns the slack to the creator") {
  auto c = BoundedCounter::create(Polarity::Lower, 10, 3, {0}, 40);
  REQUIRE(c.ok());
  CHECK(c->rights({0}, {0}) == 30);
  CHECK(c->rights_entries().size() == 1);
  CHECK(c->value() == 40);

  auto zero = BoundedCounter::create(Polarity::Lower, 0, 2, {0}, 0);
  REQUIRE(zero.ok());
  CHECK(zero->rights_entries().empty());
  CHECK(zero->value() == 0);
  CHECK(rights_at(*zero, 0) == 0);

  // UPPER: 10 rights at r1, value 100 - 10 + 0.
  auto up = BoundedCounter::create(Polarity::Upper, 100, 3, {1}, 90);
  REQUIRE(up.ok());
  CHECK(up->rights({1}, {1}) == 10);
  CHECK(up->rights_entries().size() == 1);
  CHECK(up->value() == 90);
  CHECK(rights_at(*up, 1) == 10);
}

TEST_CASE("create rejects bad arguments") {
  CHECK(BoundedCounter::create(Polarity::Lower, 10, 3, {0}, 9).error() ==
        Errc::InvalidBound);
  CHECK(BoundedCounter::create(Polarity::Upper, 10, 3, {0}, 11).error() ==
        Errc::InvalidBound);
  CHECK(BoundedCounter::create(Polarity::Lower, 0, 3, {3}, 5).error() ==
        Errc::InvalidReplica);
  CHECK(BoundedCounter::create(Polarity::Lower, 0, 0, {0}, 5).error() ==
        Errc::InvalidReplica);
}

TEST_CASE("worked example values") {
  auto s = fig3_state();
  CHECK(s.value() == 30);
  CHECK(rights_at(s, 0) == 5);
  CHECK(rights_at(s, 1) == 7);
  CHECK(rights_at(s, 2) == 8);
  CHECK(s.local_rights({3}).error() == Errc::InvalidReplica);
}

TEST_CASE("fresh counter reads its bound") {
  for (Count k : {-5, 0, 10}) {
    auto c = *BoundedCounter::create(Polarity::Lower, k, 4, {2}, k);
    CHECK(c.value() == k);
    for (std::uint32_t i = 0; i < 4; ++i) CHECK(rights_at(c, i) == 0);
  }
}

TEST_CASE("increment") {
  // The worked example's R[1][1]=1 is one increment at r1.
  BoundedCounter::RightsMatrix r{{{0, 0}, 30}, {{0, 1}, 10}, {{0, 2}, 10}};
  auto before = *BoundedCounter::from_parts(Polarity::Lower, 10, 3, r, {5, 4, 2});
  REQUIRE(before.increment({1}, 1).ok());
  CHECK(before == fig3_state());

  auto c = fig3_state();
  const Count v = c.value();
  REQUIRE(c.increment({2}, 7).ok());
  CHECK(c.value() == v + 7);
  CHECK(rights_at(c, 2) == 15);

  CHECK(c.increment({0}, 0).error() == Errc::NonPositiveDelta);
  CHECK(c.increment({0}, -3).error() == Errc::NonPositiveDelta);
  CHECK(c.increment({5}, 1).error() == Errc::InvalidReplica);
}

TEST_CASE("upper polarity increments consume rights") {
  // 3 rights at r0: bound 10, value 7.
  auto c = *BoundedCounter::create(Polarity::Upper, 10, 2, {0}, 7);
  REQUIRE(rights_at(c, 0) == 3);
  const auto snapshot = c.encode();
  CHECK(c.increment({0}, 4).error() == Errc::NotEnoughRights);
  CHECK(c.encode() == snapshot);

  REQUIRE(c.increment({0}, 3).ok());
  CHECK(c.value() == 10);
  CHECK(c.consumed({0}) == 3);
  CHECK(c.increment({0}, 1).error() == Errc::NotEnoughRights);

  REQUIRE(c.decrement({1}, 5).ok());  // creates 5 rights at r1
  CHECK(c.value() == 5);
  CHECK(rights_at(c, 1) == 5);
  CHECK(c.increment({0}, 1).error() == Errc::NotEnoughRights);
  REQUIRE(c.increment({1}, 5).ok());
  CHECK(c.value() == 10);
}

TEST_CASE("decrement") {
  auto s = fig3_state();
  REQUIRE(s.decrement({0}, 5).ok());
  CHECK(s.consumed({0}) == 10);
  CHECK(rights_at(s, 0) == 0);
  CHECK(s.value() == 25);

  auto t = fig3_state();
  const auto before = t;
  CHECK(t.decrement({0}, 6).error() == Errc::NotEnoughRights);
  CHECK(t == before);
  CHECK(t.encode() == before.encode());

  auto zero = *BoundedCounter::create(Polarity::Lower, 0, 3, {0}, 0);
  for (std::uint32_t i = 0; i < 3; ++i) {
    CHECK(zero.decrement({i}, 1).error() == Errc::NotEnoughRights);
  }
  CHECK(s.decrement({0}, 0).error() == Errc::NonPositiveDelta);
}

TEST_CASE("transfer") {
  auto s = fig3_state();
  const Count v = s.value();
  REQUIRE(s.transfer({0}, {1}, 3).ok());
  CHECK(s.rights({0}, {1}) == 13);
  CHECK(rights_at(s, 0) == 2);
  CHECK(rights_at(s, 1) == 10);
  CHECK(s.value() == v);

  auto t = fig3_state();
  const auto before = t;
  CHECK(t.transfer({0}, {1}, 6).error() == Errc::NotEnoughRights);
  CHECK(t == before);
  CHECK(t.transfer({0}, {0}, 1).error() == Errc::SelfTransfer);
  CHECK(t.transfer({0}, {1}, 0).error() == Errc::NonPositiveDelta);
  CHECK(t.transfer({0}, {3}, 1).error() == Errc::InvalidReplica);
  CHECK(t == before);
}

TEST_CASE("merge") {
  auto s = fig3_state();
  CHECK(*merge(s, s) == s);

  auto bottom = *BoundedCounter::create(Polarity::Lower, 10, 3, {0}, 10);
  CHECK(*merge(s, bottom) == s);
  CHECK(*merge(bottom, s) == s);

  BoundedCounter::RightsMatrix r{
      {{0, 0}, 30}, {{0, 1}, 10}, {{0, 2}, 10}, {{1, 1}, 1}};
  auto s1 = *BoundedCounter::from_parts(Polarity::Lower, 10, 3, r, {5, 6, 2});
  auto r2 = r;
  r2[{2, 2}] = 4;
  auto s2 = *BoundedCounter::from_parts(Polarity::Lower, 10, 3, r2, {5, 4, 2});
  auto m = *merge(s1, s2);
  CHECK(m.consumed({1}) == 6);
  CHECK(m.rights({2}, {2}) == 4);
  CHECK(m.rights({0}, {0}) == 30);
  CHECK(m.rights({0}, {1}) == 10);
  CHECK(m.rights({0}, {2}) == 10);
  CHECK(m.rights({1}, {1}) == 1);
  CHECK(m.consumed({0}) == 5);
  CHECK(m.consumed({2}) == 2);
  CHECK(m.rights_entries().size() == 5);

  auto other = *BoundedCounter::create(Polarity::Lower, 11, 3, {0}, 20);
  CHECK(s.merge(other).error() == Errc::IncompatibleCounters);
  auto upper = *BoundedCounter::create(Polarity::Upper, 10, 3, {0}, 10);
  CHECK(s.merge(upper).error() == Errc::IncompatibleCounters);
  auto wider = *BoundedCounter::create(Polarity::Lower, 10, 4, {0}, 10);
  CHECK(s.leq(wider).error() == Errc::IncompatibleCounters);
}

TEST_CASE("leq") {
  auto s = fig3_state();
  CHECK(*s.leq(s));
  auto d = s;
  REQUIRE(d.decrement({1}, 1).ok());
  CHECK(*s.leq(d));
  CHECK_FALSE(*d.leq(s));

  auto a = s;
  REQUIRE(a.increment({2}, 2).ok());
  auto m = *merge(a, d);
  CHECK_FALSE(*m.leq(a));  // d is not <= a
  CHECK(*merge(a, s)->leq(a));  // s <= a
}

TEST_CASE("encoding") {
  auto s = fig3_state();
  const auto bytes = s.encode();
  CHECK(bytes == s.encode());
  auto back = BoundedCounter::decode(bytes);
  REQUIRE(back.ok());
  CHECK(*back == s);

  // Frozen layout: magic, version, polarity, bound, n, entry count, entries, U.
  CHECK(bytes.size() == 2 + 1 + 1 + 8 + 4 + 4 + 4 * 16 + 3 * 8);
  CHECK(bytes.substr(0, 4) == std::string("BC\x01\x00", 4));

  for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
    CHECK(BoundedCounter::decode(bytes.substr(0, cut)).error() ==
          Errc::MalformedEncoding);
  }
  CHECK(BoundedCounter::decode(bytes + '\0').error() == Errc::MalformedEncoding);

  auto bad_pol = bytes;
  bad_pol[3] = 7;
  CHECK(BoundedCounter::decode(bad_pol).error() == Errc::MalformedEncoding);

  // Entries out of order break canonicality.
  auto swapped = bytes;
  std::swap_ranges(swapped.begin() + 20, swapped.begin() + 36,
                   swapped.begin() + 36);
  CHECK(BoundedCounter::decode(swapped).error() == Errc::MalformedEncoding);
}

TEST_CASE("encoding is canonical across construction paths") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 200; ++t) {
    auto a = testing::random_state(rng, Polarity::Lower, 3, 3);
    // Same logical state, built by merging into bottom in a different order.
    auto d = Dense::of(a);
    auto b = *BoundedCounter::create(Polarity::Lower, 3, 3, {0}, 3);
    for (int i = 2; i >= 0; --i) {
      BoundedCounter::RightsMatrix row;
      for (int j = 2; j >= 0; --j) row[{i, j}] = d.r[i][j];
      std::vector<Count> u(3, 0);
      u[i] = d.u[i];
      REQUIRE(b.merge(*BoundedCounter::from_parts(Polarity::Lower, 3, 3, row, u)).ok());
    }
    CHECK(b == a);
    CHECK(b.encode() == a.encode());
    CHECK(*BoundedCounter::decode(a.encode()) == a);
  }
}

TEST_CASE("overflow is reported, not wrapped") {
  constexpr Count big = std::numeric_limits<Count>::max();
  auto c = *BoundedCounter::create(Polarity::Lower, 0, 2, {0}, big - 1);
  const auto before = c;
  CHECK(c.increment({0}, 5).error() == Errc::Overflow);
  CHECK(c.increment({1}, 5).error() == Errc::Overflow);
  CHECK(c == before);
  REQUIRE(c.increment({1}, 1).ok());
  CHECK(c.value() == big);

  CHECK(BoundedCounter::create(Polarity::Lower, std::numeric_limits<Count>::min(),
                               2, {0}, big)
            .error() == Errc::Overflow);
}

TEST_CASE("range counter keeps both components in step") {
  auto rc = RangeCounter::create(0, 10, 2, {0}, 4);
  REQUIRE(rc.ok());
  CHECK(rc->value() == 4);
  CHECK(*rc->decrement_rights({0}) == 4);
  CHECK(*rc->increment_rights({0}) == 6);

  REQUIRE(rc->increment({0}, 6).ok());
  CHECK(rc->value() == 10);
  const auto before = *rc;
  CHECK(rc->increment({0}, 1).error() == Errc::NotEnoughRights);
  CHECK(*rc == before);

  REQUIRE(rc->decrement({0}, 10).ok());
  CHECK(rc->value() == 0);
  CHECK(rc->lower().value() == rc->upper().value());
  CHECK(rc->decrement({0}, 1).error() == Errc::NotEnoughRights);
  CHECK(*rc == *rc);

  // Decrements at r0 created increment rights at r0; move some to r1.
  REQUIRE(rc->transfer(Polarity::Upper, {0}, {1}, 4).ok());
  auto r1 = *rc;
  REQUIRE(r1.increment({1}, 4).ok());
  REQUIRE(rc->merge(r1).ok());
  CHECK(rc->value() == 4);
  CHECK(rc->lower().value() == rc->upper().value());

  CHECK(RangeCounter::create(5, 4, 2, {0}, 5).error() == Errc::InvalidBound);
  CHECK(RangeCounter::create(0, 4, 2, {0}, 5).error() == Errc::InvalidBound);
}
