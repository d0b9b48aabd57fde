// Randomized property checks for the counter's lattice and safety laws.

#include <doctest.h>

#include <algorithm>
#include <random>

#include "bcounter/crdt/bounded_counter.hpp"
#include "crdt_oracle.hpp"

using namespace bcounter;
using bcounter::testing::Dense;

TEST_CASE("merge is the entry-wise max and forms a join semilattice") {
  std::mt19937_64 rng(0xC0FFEE);
  for (int t = 0; t < 2000; ++t) {
    const auto pol = (t % 2) ? Polarity::Upper : Polarity::Lower;
    const std::uint32_t n = 1 + static_cast<std::uint32_t>(rng() % 4);
    auto a = testing::random_state(rng, pol, 5, n);
    auto b = testing::random_state(rng, pol, 5, n);
    auto c = testing::random_state(rng, pol, 5, n);

    auto ab = *merge(a, b);
    CHECK(Dense::of(ab) == Dense::max(Dense::of(a), Dense::of(b)));
    CHECK(ab == *merge(b, a));
    CHECK(*merge(ab, c) == *merge(a, *merge(b, c)));
    CHECK(*merge(a, a) == a);
    CHECK(*a.leq(ab));
    CHECK(*b.leq(ab));
    // Any upper bound of {a, b} is above the merge.
    auto above = *merge(ab, c);
    CHECK(*ab.leq(above));
    CHECK(ab.value() ==
          testing::oracle_value(pol, 5, Dense::max(Dense::of(a), Dense::of(b))));
  }
}

TEST_CASE("successful updates are monotonic, failed ones are no-ops") {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 2000; ++t) {
    const std::uint32_t n = 1 + static_cast<std::uint32_t>(rng() % 4);
    const auto pol = (t % 3 == 0) ? Polarity::Upper : Polarity::Lower;
    auto s = testing::random_state(rng, pol, 0, n);
    const std::uint32_t i = static_cast<std::uint32_t>(rng() % n);
    const std::uint32_t j = static_cast<std::uint32_t>(rng() % n);
    const Count delta = 1 + static_cast<Count>(rng() % 8);
    const auto before = s;
    const Count held = *s.local_rights({i});
    Status st;
    switch (rng() % 3) {
      case 0: st = s.increment({i}, delta); break;
      case 1: st = s.decrement({i}, delta); break;
      default: st = s.transfer({i}, {j}, delta); break;
    }
    if (st) {
      CHECK(*before.leq(s));
    } else {
      CHECK(s.encode() == before.encode());
      if (st.error() == Errc::NotEnoughRights) CHECK(held < delta);
    }
  }
}

TEST_CASE("authored executions respect the bound and conserve rights") {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 500; ++t) {
    const std::uint32_t n = 1 + static_cast<std::uint32_t>(rng() % 4);
    const auto pol = (t % 2) ? Polarity::Upper : Polarity::Lower;
    const Count bound = 10;
    const Count initial = pol == Polarity::Lower ? bound + static_cast<Count>(rng() % 12)
                                                 : bound - static_cast<Count>(rng() % 12);
    auto ex = testing::random_execution(rng, pol, bound, n, initial, 60);

    for (const auto& local : ex.replicas) {
      if (pol == Polarity::Lower) CHECK(local.value() >= bound);
      else CHECK(local.value() <= bound);
    }
    auto joined = testing::join_all(ex.replicas);
    if (pol == Polarity::Lower) CHECK(joined.value() >= bound);
    else CHECK(joined.value() <= bound);

    // The join holds exactly the authored operations.
    const Count expected = initial + ex.ok_increments - ex.ok_decrements;
    CHECK(joined.value() == expected);

    Count total = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
      const Count r = *joined.local_rights({i});
      CHECK(r >= 0);
      total += r;
      // Each replica's own view is conservative with respect to the join.
      CHECK(*ex.replicas[i].local_rights({i}) <= r);
      CHECK(*ex.replicas[i].local_rights({i}) >= 0);
    }
    CHECK(total == std::abs(joined.value() - bound));

    // Merge order does not matter.
    auto shuffled = ex.replicas;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(testing::join_all(shuffled) == joined);
  }
}
