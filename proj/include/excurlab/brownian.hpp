// SPDX-License-Identifier: Apache-2.0
//
// Path generation and boundary-crossing machinery on a two-level grid.
//
// Coarse nodes are exact Gaussian draws.  Whether a step crossed a boundary
// between its nodes is decided by an exact Bernoulli flag using the bridge
// crossing probability, so survival statistics carry no grid-resolution
// bias.  Once a step is known to touch, bisection refinement locates the
// touch time down to a fine resolution; every inserted midpoint is drawn
// from the bridge law conditioned on the step's known touch status, so the
// refined skeleton and the flags stay jointly consistent.
//
// Randomness discipline: the value draw for coarse node k always comes from
// value_rng.at(k), and all refinement randomness for coarse step k comes
// from refine_rng.substream(k) with bisection-tree nodes heap-indexed at
// slots 1, 2, 3, ... (slot 0 holds the step's touch flag).  Materializing
// nodes lazily, in any order, or not at all therefore never changes any
// other decision.
#pragma once

#include <cstdint>
#include <vector>

#include "excurlab/types.hpp"

namespace excurlab {

// Two-level time grid: coarse simulation step and fine resolution floor for
// located boundary-touch times.
struct GridSpec {
  double coarse_dt;
  double fine_dt;
  GridSpec(double coarse_dt_, double fine_dt_);
};

// Stream roles: replicate r uses stream 2r for node values and 2r + 1 for
// refinement decisions.
RngStream value_stream(std::uint64_t master_seed, std::uint64_t replicate);
RngStream refine_stream(std::uint64_t master_seed, std::uint64_t replicate);

// Forward simulation from `start` with exact Gaussian coarse increments.
// The horizon is rounded up to a whole number of coarse steps.
SampledPath simulate_path(double start, double horizon, const GridSpec& grid,
                          std::uint64_t master_seed, std::uint64_t replicate);

// Index of the last coarse node (the horizon is always a coarse node).
std::size_t last_coarse_node(const SampledPath& path);

// Append forward Gaussian coarse steps until node `node` exists.
void extend_to_node(SampledPath& path, std::size_t node);

// Draw coarse node k (not yet present) conditioned on the path origin and
// the already-present node k + 1, i.e. the Brownian bridge conditional.
// Filling strictly backward from the highest node yields exactly the bridge
// law between the origin and that node.
void fill_backward(SampledPath& path, std::size_t k);

// Probability that a Brownian bridge between values x and y over a time span
// dt touches `level`; 1 when the endpoints already straddle or touch it.
double bridge_cross_prob(double x, double y, double level, double dt);

// Probability that the bridge leaves the open interval: 1 when an endpoint
// is outside or on the boundary, otherwise the clamped sum of the one-sided
// crossing probabilities (the double-touch overlap is below double
// precision for spans much shorter than the squared interval length).
double step_touch_prob(const Interval& iv, double x, double y, double dt);

// Exact Bernoulli decision: did coarse step k leave the interval?  Both
// coarse nodes must be materialized.  Deterministic per (path streams, k).
bool coarse_step_touched(const SampledPath& path, const Interval& iv, std::size_t k);

// Bridge midpoint draw for a bracket with end values (x, y) over `span`,
// conditioned on the bracket's known touch status via rejection; exact, and
// cheap on average in the regime each status occurs.
double draw_conditioned_midpoint(RngStream node_rng, double x, double y, double span,
                                 const Interval& iv, bool touched);

// A located boundary touch: the time (resolved to fine_dt) and the boundary
// through which the path left.
struct BoundaryHit {
  double time = 0.0;
  double barrier = 0.0;
};

// Locate the first (last_touch = false) or last (true) boundary touch inside
// coarse step k, refining the path down to fine_dt and inserting the
// boundary node.  The step must actually touch (endpoint outside, or flag
// fired); otherwise this throws.  Re-running is idempotent.
BoundaryHit locate_touch(SampledPath& path, const Interval& iv, std::size_t k,
                         double fine_dt, bool last_touch);

// Radial part of a 3-D Brownian bridge from the origin to radius rho over
// [0, s], on n equal sub-steps: values[0] = 0, values[n] = rho, interior
// nodes drawn sequentially (3 component draws from stream.at(j) for node j).
std::vector<double> sample_bessel3_bridge(RngStream stream, double rho, double s,
                                          std::size_t n);

// Brownian meander over [0, s]: Brownian motion conditioned to stay positive
// on (0, s], realized as a Rayleigh(sqrt(s)) endpoint (slot 0) plus the
// radial bridge above (slots 1 .. n-1).  Callers may use slots >= n freely.
std::vector<double> sample_meander(RngStream stream, double s, std::size_t n);

}  // namespace excurlab
