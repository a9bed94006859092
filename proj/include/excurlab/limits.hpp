#pragma once

#include <cstdint>

#include <excurlab/brownian.hpp>
#include <excurlab/excursions.hpp>
#include <excurlab/types.hpp>

namespace excurlab {

// Direct sampler for the limiting law of the excursion straddling a late
// reference time: a fair boundary coin, an age drawn from limit_cdf, and a
// full excursion conditioned to survive past that age.

// Scalar functionals of a straddling excursion observed at a reference time.
// They are defined for both finite-time observations and limit draws so the
// two can be compared distributionally.
enum class FunctionalId {
  kEndpointDisp,  // signed displacement from the straddled boundary at the
                  // observation time
  kSupDisp,       // largest absolute displacement from the straddled
                  // boundary over the excursion's whole life
  kLifetimeTail,  // indicator that the excursion's total lifetime exceeds
                  // the absolute threshold `tail_offset`
  kOccAboveMid,   // fraction of the excursion's life spent above the
                  // interval midpoint
};

// Stream family for limit-law draws.  Disjoint from the families used by
// simulate_path for the same master seed (for replicate indices below 2^31),
// so mixed studies can share one seed.
RngStream limit_stream(std::uint64_t master_seed, std::uint64_t replicate);

// Age threshold, in units of the squared interval length, at which
// sample_aged_excursion switches from the whole-segment rejection regime to
// the stepwise survival-tilted regime.
inline constexpr double kAgedSwitchFactor = 1.1;

// Draw an excursion from boundary point `boundary` of iv (must equal iv.a or
// iv.b exactly) conditioned to stay inside the interval beyond age s > 0.
// The confined part [0, s] is sampled on a skeleton of spacing at most
// grid.coarse_dt with its exact node law; past age s the path runs free with
// exact per-step crossing flags until its first boundary exit, which is
// located to resolution grid.fine_dt.  The returned excursion has
// times[0] = 0 at the boundary, a node at exactly s, and its final node at
// the located exit.
//
// `stream` must be an underived stream (e.g. from limit_stream); the two
// regimes and the mixture draw use disjoint substream roles of it.
// Requires grid.coarse_dt <= (iv.b - iv.a)^2 / 64, which keeps the skeleton
// fine enough that a boundary crossing inside the first confined sub-step
// has probability below double-precision resolution.
Excursion sample_aged_excursion(const Interval& iv, double boundary, double s,
                                const RngStream& stream, const GridSpec& grid);

// The two regimes behind sample_aged_excursion, exposed so overlapping ages
// can be cross-validated.
//
// Whole-segment rejection: propose the confined part as one positive
// radial-bridge segment, reject on any skeleton value reaching the far
// boundary or on an exact hidden-crossing flag between skeleton nodes.
// Efficient for ages up to about the squared interval length.  If
// `attempts_used` is non-null it receives the number of whole-segment
// proposals consumed (a diagnostic for the acceptance rate).
Excursion sample_aged_excursion_rejection(const Interval& iv, double boundary,
                                          double s, const RngStream& stream,
                                          const GridSpec& grid,
                                          std::size_t* attempts_used = nullptr);

// Stepwise construction: an exact short-age entrance draw followed by
// survival-tilted steps, each proposed from the free Gaussian increment and
// accepted against the product of the in-step no-exit probability and the
// survival weight of the remaining age.  Cost grows linearly in s instead of
// exponentially, so this regime serves large ages.
Excursion sample_aged_excursion_stepwise(const Interval& iv, double boundary,
                                         double s, const RngStream& stream,
                                         const GridSpec& grid);

// Boundary choice and age drawn from the limiting mixture: a fair coin over
// {iv.a, iv.b} (slot 0) and an age with CDF limit_cdf (slot 1).
struct BoundaryAge {
  double boundary = 0.0;
  double age = 0.0;
};
BoundaryAge sample_limit_pair(const Interval& iv, const RngStream& stream);

// One full draw from the limiting straddling-excursion law for (iv, seed,
// replicate): mixture pair, then the conditioned excursion.
LimitSample sample_p0(const Interval& iv, const GridSpec& grid,
                      std::uint64_t master_seed, std::uint64_t replicate);

// Evaluate a functional on a limit draw or a finite-time straddle
// observation.  `tail_offset` only affects kLifetimeTail.  The observation
// overload throws std::invalid_argument if the path never left the interval
// (there is no straddling excursion to evaluate).
double eval_functional(FunctionalId f, const LimitSample& ls,
                       const Interval& iv, double tail_offset = 0.25);
double eval_functional(FunctionalId f, const StraddleObservation& obs,
                       const Interval& iv, double tail_offset = 0.25);

}  // namespace excurlab
