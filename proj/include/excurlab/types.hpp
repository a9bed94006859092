// SPDX-License-Identifier: Apache-2.0
//
// Value types shared across the library.  Everything here is plain data with
// validation; path-generating and path-scanning algorithms live in
// brownian.hpp / excursions.hpp.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "excurlab/rng.hpp"

namespace excurlab {

// Open interval (a,b).  Membership is strict: boundary points are outside.
struct Interval {
  double a;
  double b;

  Interval(double a_, double b_);
  double length() const { return b - a; }
  double midpoint() const { return 0.5 * (a + b); }
  bool contains(double x) const { return x > a && x < b; }
  // Nearer boundary, ties toward a.
  double snap(double x) const { return (x - a <= b - x) ? a : b; }
};

// A continuous path observed at finitely many times.  times are strictly
// increasing with times[0] == 0; values[i] is the path at times[i].
//
// The path carries two derived random streams: value_rng drives node values
// (the draw for grid node k always sits at value_rng.at(k), so lazily or
// eagerly generated paths agree bit-for-bit), refine_rng drives within-step
// bridge refinement and hidden-crossing flags (substream(k) per base step k).
// Copies share no mutable state; a path plus its streams is a consistent,
// refinable random object.
class SampledPath {
 public:
  SampledPath(std::vector<double> times, std::vector<double> values, double base_dt,
              RngStream value_rng, RngStream refine_rng);

  // Test/reconstruction helper with inert streams.
  static SampledPath from_samples(std::vector<double> times, std::vector<double> values,
                                  double base_dt);

  std::size_t size() const { return times_.size(); }
  double time(std::size_t i) const { return times_[i]; }
  double value(std::size_t i) const { return values_[i]; }
  double origin() const { return values_.front(); }
  double horizon() const { return times_.back(); }
  double base_dt() const { return base_dt_; }

  // Exact-time lookup (binary search); throws std::invalid_argument if t was
  // never sampled.
  double value_at_time(double t) const;
  // True when t is exactly one of the sample times.
  bool has_time(double t) const;
  // Index of the last sample with time <= t; throws if t < 0.
  std::size_t index_at_or_before(double t) const;

  // Refinement insert: t must lie strictly between two existing sample times.
  // Duplicate times are rejected; order is preserved by construction.
  void insert(double t, double v);
  // Forward extension: t must exceed the current horizon.
  void append(double t, double v);

  RngStream& value_rng() { return value_rng_; }
  RngStream& refine_rng() { return refine_rng_; }
  const RngStream& refine_rng() const { return refine_rng_; }

 private:
  std::vector<double> times_;
  std::vector<double> values_;
  double base_dt_;
  RngStream value_rng_;
  RngStream refine_rng_;
};

// One excursion in its own clock: starts at a boundary value at clock 0,
// exits the interval at clock `lifetime` through `exit_value`.  For clocks
// past the lifetime the path is held constant at the exit boundary.
struct Excursion {
  double start = 0.0;
  double lifetime = 0.0;
  double exit_value = 0.0;
  std::vector<double> times;   // clock samples, times.front() == 0
  std::vector<double> values;  // values.front() == start

  // Linear interpolation between samples; clocks >= lifetime give exit_value.
  double value_at(double r) const;
};

// Result of straddling-time extraction for one replicate at time t.
struct StraddleObservation {
  std::uint64_t replicate = 0;
  double t = 0.0;
  bool never_exited = false;  // path never left the interval on [0,t]
  double sigma = 0.0;         // last exit time before t (0 if never exited)
  double x_sigma = 0.0;       // boundary the path exited through, snapped
  double d = 0.0;             // first exit time after t
  double lifetime = 0.0;      // d - sigma
  std::optional<Excursion> zeta;

  // Functionals of zeta cached at extraction time (absent when never_exited).
  double endpoint_disp = 0.0;  // zeta(t - sigma) - zeta(0) = W_t - x_sigma
  double sup_disp = 0.0;       // sup_r |zeta(r) - zeta(0)|
  double occ_above_mid = 0.0;  // fraction of the lifetime spent above the midpoint
};

// One draw from the limiting law: boundary choice, age, and excursion.
struct LimitSample {
  double x = 0.0;  // a or b, equally likely
  double y = 0.0;  // age, distributed as the limiting age law
  Excursion zeta;  // conditioned to live longer than y
};

}  // namespace excurlab
