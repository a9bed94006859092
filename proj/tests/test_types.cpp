// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "excurlab/types.hpp"

using excurlab::Excursion;
using excurlab::Interval;
using excurlab::RngStream;
using excurlab::SampledPath;

TEST_SUITE_BEGIN("types");

TEST_CASE("interval validates endpoints and measures itself") {
  const Interval unit(0.0, 1.0);
  CHECK(unit.length() == 1.0);
  CHECK(unit.midpoint() == 0.5);
  CHECK(unit.contains(0.5));
  CHECK_FALSE(unit.contains(0.0));
  CHECK_FALSE(unit.contains(1.0));
  CHECK_FALSE(unit.contains(-0.1));
  CHECK_FALSE(unit.contains(1.1));

  const Interval wide(-2.0, 1.0);
  CHECK(wide.length() == 3.0);
  CHECK(wide.midpoint() == -0.5);

  CHECK_THROWS_AS(Interval(1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(Interval(2.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(Interval(std::nan(""), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(Interval(0.0, std::numeric_limits<double>::infinity()),
                  std::invalid_argument);
}

TEST_CASE("interval snaps to the nearer boundary with ties toward a") {
  const Interval unit(0.0, 1.0);
  CHECK(unit.snap(0.4) == 0.0);
  CHECK(unit.snap(0.6) == 1.0);
  CHECK(unit.snap(0.5) == 0.0);  // tie goes to a

  const Interval wide(-2.0, 1.0);
  CHECK(wide.snap(-0.5) == -2.0);  // tie
  CHECK(wide.snap(-0.49) == 1.0);
  CHECK(wide.snap(-1.9) == -2.0);
}

TEST_CASE("sampled path constructor enforces its invariants") {
  CHECK_NOTHROW(SampledPath::from_samples({0.0, 0.5, 1.0}, {0.0, 0.3, -0.2}, 0.5));
  // empty
  CHECK_THROWS_AS(SampledPath::from_samples({}, {}, 0.5), std::invalid_argument);
  // length mismatch
  CHECK_THROWS_AS(SampledPath::from_samples({0.0, 0.5}, {0.0}, 0.5),
                  std::invalid_argument);
  // first time must be zero
  CHECK_THROWS_AS(SampledPath::from_samples({0.1, 0.5}, {0.0, 0.1}, 0.5),
                  std::invalid_argument);
  // strictly increasing times
  CHECK_THROWS_AS(SampledPath::from_samples({0.0, 0.5, 0.5}, {0.0, 0.1, 0.2}, 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(SampledPath::from_samples({0.0, 0.5, 0.4}, {0.0, 0.1, 0.2}, 0.5),
                  std::invalid_argument);
  // base step must be positive
  CHECK_THROWS_AS(SampledPath::from_samples({0.0, 0.5}, {0.0, 0.1}, 0.0),
                  std::invalid_argument);
}

TEST_CASE("sampled path accessors and lookup") {
  auto p = SampledPath::from_samples({0.0, 0.5, 1.0}, {0.0, 0.3, -0.2}, 0.5);
  CHECK(p.size() == 3);
  CHECK(p.time(1) == 0.5);
  CHECK(p.value(1) == 0.3);
  CHECK(p.origin() == 0.0);
  CHECK(p.horizon() == 1.0);
  CHECK(p.base_dt() == 0.5);

  CHECK(p.value_at_time(0.0) == 0.0);
  CHECK(p.value_at_time(0.5) == 0.3);
  CHECK(p.value_at_time(1.0) == -0.2);
  CHECK_THROWS_AS(p.value_at_time(0.25), std::invalid_argument);
  CHECK_THROWS_AS(p.value_at_time(2.0), std::invalid_argument);

  CHECK(p.index_at_or_before(0.0) == 0);
  CHECK(p.index_at_or_before(0.49) == 0);
  CHECK(p.index_at_or_before(0.5) == 1);
  CHECK(p.index_at_or_before(0.75) == 1);
  CHECK(p.index_at_or_before(1.0) == 2);
  CHECK(p.index_at_or_before(5.0) == 2);
  CHECK_THROWS_AS(p.index_at_or_before(-0.1), std::invalid_argument);
}

TEST_CASE("sampled path insert refines and append extends") {
  auto p = SampledPath::from_samples({0.0, 0.5, 1.0}, {0.0, 0.3, -0.2}, 0.5);

  p.insert(0.25, 0.1);
  CHECK(p.size() == 4);
  CHECK(p.time(1) == 0.25);
  CHECK(p.value(1) == 0.1);
  CHECK(p.value_at_time(0.25) == 0.1);
  // later samples untouched
  CHECK(p.value_at_time(0.5) == 0.3);

  CHECK_THROWS_AS(p.insert(0.0, 9.0), std::invalid_argument);   // at the origin
  CHECK_THROWS_AS(p.insert(0.5, 9.0), std::invalid_argument);   // duplicate
  CHECK_THROWS_AS(p.insert(1.0, 9.0), std::invalid_argument);   // duplicate horizon
  CHECK_THROWS_AS(p.insert(1.5, 9.0), std::invalid_argument);   // beyond horizon
  CHECK_THROWS_AS(p.insert(-1.0, 9.0), std::invalid_argument);  // before origin

  p.append(1.5, 0.7);
  CHECK(p.horizon() == 1.5);
  CHECK(p.value_at_time(1.5) == 0.7);
  CHECK_THROWS_AS(p.append(1.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(p.append(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("sampled path carries independent copies of its streams") {
  SampledPath p({0.0, 1.0}, {0.0, 0.2}, 1.0, RngStream::derive(7, 0),
                RngStream::derive(7, 1));
  // slot addressing matches a freshly derived stream
  auto fresh = RngStream::derive(7, 0);
  CHECK(p.value_rng().at(3).next_u64() == fresh.at(3).next_u64());

  // copies do not share mutable generator state
  SampledPath q = p;
  auto expected = RngStream::derive(7, 1).next_u64();
  CHECK(q.refine_rng().next_u64() == expected);
  CHECK(p.refine_rng().next_u64() == expected);
}

TEST_CASE("excursion interpolates in its own clock and holds past exit") {
  Excursion e;
  e.start = 0.0;
  e.lifetime = 2.0;
  e.exit_value = 0.0;
  e.times = {0.0, 1.0, 2.0};
  e.values = {0.0, 0.8, 0.3};

  CHECK(e.value_at(0.0) == 0.0);
  CHECK(e.value_at(0.5) == doctest::Approx(0.4));
  CHECK(e.value_at(1.0) == 0.8);
  CHECK(e.value_at(1.5) == doctest::Approx(0.55));
  // at and past the lifetime the excursion sits at its exit boundary
  CHECK(e.value_at(2.0) == 0.0);
  CHECK(e.value_at(3.0) == 0.0);
  CHECK_THROWS_AS(e.value_at(-0.1), std::invalid_argument);
}

TEST_CASE("a zero-lifetime excursion is identically its exit value") {
  Excursion e;
  e.start = 0.5;
  e.lifetime = 0.0;
  e.exit_value = 1.0;
  e.times = {0.0};
  e.values = {0.5};
  CHECK(e.value_at(0.0) == 1.0);
  CHECK(e.value_at(0.4) == 1.0);
}

TEST_SUITE_END();
