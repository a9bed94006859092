// SPDX-License-Identifier: Apache-2.0
//
// Scanning a sampled path for the boundary touches that bracket a fixed
// time, assembling the straddling excursion and its functionals, and two
// path-wide utilities: excursion enumeration and a downcrossing local-time
// estimator.
//
// All scans work at coarse-step granularity with the exact touch flags from
// brownian.hpp, so which excursion straddles the time is decided without
// grid bias; located touch times are resolved to the fine grid.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "excurlab/brownian.hpp"
#include "excurlab/types.hpp"

namespace excurlab {

// Last boundary touch at or before coarse node t_node, scanning backward
// and materializing missing nodes on demand via the backward bridge fill
// (so lazily anchored paths are scanned without generating their unvisited
// early segment).  Returns nullopt when the path never left the interval on
// [0, t]; t_node must be >= 1.
std::optional<BoundaryHit> locate_sigma(SampledPath& path, const Interval& iv,
                                        std::size_t t_node, double fine_dt);

// First boundary touch at or after coarse node t_node, scanning forward and
// extending the path with fresh Gaussian steps as needed.  The node value at
// t_node must be strictly inside the interval.  Throws if no touch is found
// within max_extra_nodes appended nodes (a safety rail, not a tail cutoff).
BoundaryHit locate_d(SampledPath& path, const Interval& iv, std::size_t t_node,
                     double fine_dt, std::size_t max_extra_nodes = 10000000);

// The excursion between two located touches: starts on the boundary at
// sigma, collects every materialized sample strictly inside (sigma.time,
// d.time) in its own clock, ends on the boundary at d.  Values are clamped
// to [a, b] defensively.
Excursion extract_zeta(const SampledPath& path, const Interval& iv,
                       const BoundaryHit& sigma, const BoundaryHit& d);

// Largest displacement of the excursion from its starting boundary over the
// sampled skeleton (exact for the piecewise-linear interpolant).
double sup_displacement(const Excursion& zeta);

// Fraction of the excursion's lifetime spent strictly above `level`,
// computed exactly for the piecewise-linear interpolant.
double occupation_above(const Excursion& zeta, double level);

// Full straddling observation at coarse node t_node: backward and forward
// scans, extraction, and the cached functionals.  The value at t_node must
// be strictly inside the interval.  When the path never left the interval
// on [0, t], the observation has never_exited set and no excursion.
StraddleObservation observe_straddle(SampledPath& path, const Interval& iv,
                                     std::size_t t_node, double fine_dt,
                                     std::uint64_t replicate_id);

// One maximal inside-the-interval stretch, boundary touch to boundary touch.
struct ExcursionInterval {
  BoundaryHit begin;
  BoundaryHit end;
};

// All maximal boundary-to-boundary stretches the path spends strictly
// inside iv, scanning coarse steps 0 .. through_node-1 (all of which must be
// materialized).  In-and-out wiggles confined to a single coarse step stay
// below resolution and are not reported; the incomplete head (before the
// first touch) and tail (after the last touch) are omitted.
std::vector<ExcursionInterval> enumerate_excursions(SampledPath& path, const Interval& iv,
                                                    std::size_t through_node,
                                                    double fine_dt);

// Strip statistics at `level` over the whole sampled span, computed from a
// virtual refinement of each coarse step: plain bridge midpoints are drawn
// depth-first (slot-addressed in a dedicated substream block, so the walk is
// reproducible and never collides with interval-flag or locate slots) down
// to brackets no longer than floor_dt, but only while a bracket's endpoint
// range padded by 3.5 sigma could reach the strip [level, level + eps].  At
// each leaf bracket, touches of the strip's edges are decided by the exact
// bridge-crossing Bernoulli flags, so a passage is never missed because the
// skeleton failed to sample the overshoot.  The path itself is not mutated,
// and materialized refined nodes are ignored: the walk samples the exact
// unconditional bridge law given the coarse endpoints.
struct StripStats {
  // 2 * eps * (number of passages from touching level+eps to touching
  // level); consistent estimator of the local time at `level` as eps -> 0.
  double downcrossing_local_time = 0.0;
  // (1/eps) * time the piecewise-linear leaf skeleton spends in
  // [level, level + eps); independent occupation-based estimate of the same
  // local time, from the same virtual walk.
  double occupation_local_time = 0.0;
};
StripStats strip_statistics(const SampledPath& path, double level, double eps,
                            double floor_dt);

// The downcrossing component of strip_statistics.
double downcrossing_local_time(const SampledPath& path, double level, double eps,
                               double floor_dt);

}  // namespace excurlab
