#include <excurlab/limits.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include <excurlab/analytic.hpp>

namespace excurlab {

namespace {

// Substream roles on the caller's underived stream.  Each role is consumed
// by at most one code path per draw, so the roles never collide.
constexpr std::uint64_t kRoleRejectionAttempts = 0;
constexpr std::uint64_t kRoleRejectionContValue = 1;
constexpr std::uint64_t kRoleRejectionContRefine = 2;
constexpr std::uint64_t kRoleEntranceAttempts = 3;
constexpr std::uint64_t kRoleStepProposals = 4;
constexpr std::uint64_t kRoleStepwiseContValue = 5;
constexpr std::uint64_t kRoleStepwiseContRefine = 6;
constexpr std::uint64_t kRoleMixturePair = 7;

constexpr std::size_t kRejectionAttemptBudget = 4'000'000;
constexpr std::size_t kTiltAttemptBudget = 1'000'000;
constexpr std::size_t kContinuationNodeBudget = 10'000'000;

void validate_aged_args(const Interval& iv, double boundary, double s,
                        const GridSpec& grid) {
  if (boundary != iv.a && boundary != iv.b)
    throw std::invalid_argument(
        "sample_aged_excursion: boundary must equal iv.a or iv.b exactly");
  if (!std::isfinite(s) || !(s > 0.0))
    throw std::invalid_argument(
        "sample_aged_excursion: the age must be finite and > 0");
  const double L = iv.length();
  if (!(grid.coarse_dt <= L * L / 64.0))
    throw std::invalid_argument(
        "sample_aged_excursion: requires coarse_dt <= (b - a)^2 / 64");
}

// Number of equal sub-steps for the confined part: spacing at most
// grid.coarse_dt, never fewer than 2 steps.
std::size_t confined_steps(double s, const GridSpec& grid) {
  return std::max<std::size_t>(
      2, static_cast<std::size_t>(std::ceil(s / grid.coarse_dt)));
}

// Probability that a bridge from x to y over span h, conditioned to stay
// positive, reaches level cap (0 < x, y < cap): the two-sided touch
// probability minus the floor touch, renormalized by the floor-avoidance
// probability.  Clamped; the corner where both endpoints sit within a few
// ulps of the floor carries vanishing proposal mass.
double confined_cross_prob(double x, double y, double cap, double h) {
  const double p_any = step_touch_prob(Interval(0.0, cap), x, y, h);
  const double p_floor = bridge_cross_prob(x, y, 0.0, h);
  const double avoid_floor = -std::expm1(-2.0 * x * y / h);
  if (!(avoid_floor > 0.0)) return 1.0;
  return std::clamp((p_any - p_floor) / avoid_floor, 0.0, 1.0);
}

// Run the excursion free from the end of the confined part until its first
// boundary exit, and assemble the full excursion.  `times`/`values` hold the
// confined skeleton, with the last node at exactly age s strictly inside iv.
Excursion finish_with_exit(const Interval& iv, double boundary, double s,
                           std::vector<double> times,
                           std::vector<double> values,
                           const RngStream& cont_value,
                           const RngStream& cont_refine,
                           const GridSpec& grid) {
  SampledPath cont({0.0}, {values.back()}, grid.coarse_dt, cont_value,
                   cont_refine);
  for (std::size_t k = 0; k < kContinuationNodeBudget; ++k) {
    extend_to_node(cont, k + 1);
    if (!coarse_step_touched(cont, iv, k)) continue;
    const BoundaryHit hit =
        locate_touch(cont, iv, k, grid.fine_dt, /*last_touch=*/false);
    Excursion z;
    z.start = boundary;
    z.lifetime = s + hit.time;
    z.exit_value = hit.barrier;
    z.times = std::move(times);
    z.values = std::move(values);
    for (std::size_t i = 1; i < cont.size() && cont.time(i) < hit.time; ++i) {
      z.times.push_back(s + cont.time(i));
      z.values.push_back(std::clamp(cont.value(i), iv.a, iv.b));
    }
    z.times.push_back(z.lifetime);
    z.values.push_back(hit.barrier);
    return z;
  }
  throw std::runtime_error(
      "sample_aged_excursion: the free continuation exceeded its node budget");
}

}  // namespace

RngStream limit_stream(std::uint64_t master_seed, std::uint64_t replicate) {
  // simulate_path derives families 2 * rep and 2 * rep + 1; offsetting by
  // 2^32 keeps this family disjoint for replicate indices below 2^31.
  return RngStream::derive(master_seed, (std::uint64_t{1} << 32) + replicate);
}

Excursion sample_aged_excursion_rejection(const Interval& iv, double boundary,
                                          double s, const RngStream& stream,
                                          const GridSpec& grid,
                                          std::size_t* attempts_used) {
  validate_aged_args(iv, boundary, s, grid);
  const double L = iv.length();
  const double dir = (boundary == iv.a) ? 1.0 : -1.0;
  const std::size_t n = confined_steps(s, grid);
  const double h = s / static_cast<double>(n);
  const RngStream attempts = stream.substream(kRoleRejectionAttempts);

  for (std::size_t attempt = 0; attempt < kRejectionAttemptBudget; ++attempt) {
    if (attempts_used) *attempts_used = attempt + 1;
    RngStream prop = attempts.substream(attempt);
    // The proposal's terminal radius comes from slot 0; rejecting on it
    // early skips the interior work.  sample_meander reads the same slot and
    // reproduces the same value bit for bit.
    const double u = prop.at(0).uniform01();
    const double rho = std::sqrt(-2.0 * s * std::log(u));
    if (rho >= L) continue;

    const std::vector<double> m = sample_meander(prop, s, n);
    bool ok = true;
    for (std::size_t j = 1; j < n && ok; ++j) ok = m[j] < L;
    // Hidden crossings of the far boundary between skeleton nodes, decided
    // by exact flags at slots n + j.  The first sub-step, entering from the
    // boundary itself, has crossing probability below double precision for
    // the validated spacing and needs no flag.
    for (std::size_t j = 1; j + 1 <= n && ok; ++j) {
      const double pj = confined_cross_prob(m[j], m[j + 1], L, h);
      if (pj > 0.0 && prop.at(n + j).uniform01() < pj) ok = false;
    }
    if (!ok) continue;

    std::vector<double> times(n + 1), values(n + 1);
    for (std::size_t j = 0; j <= n; ++j) {
      times[j] = static_cast<double>(j) * h;
      values[j] = boundary + dir * m[j];
    }
    times[n] = s;
    return finish_with_exit(iv, boundary, s, std::move(times),
                            std::move(values),
                            stream.substream(kRoleRejectionContValue),
                            stream.substream(kRoleRejectionContRefine), grid);
  }
  throw std::runtime_error(
      "sample_aged_excursion_rejection: proposal budget exhausted; large ages "
      "need the stepwise regime");
}

Excursion sample_aged_excursion_stepwise(const Interval& iv, double boundary,
                                         double s, const RngStream& stream,
                                         const GridSpec& grid) {
  validate_aged_args(iv, boundary, s, grid);
  const double mid = iv.midpoint();
  const double dir = (boundary == iv.a) ? 1.0 : -1.0;
  const std::size_t n = confined_steps(s, grid);
  const double h = s / static_cast<double>(n);
  std::vector<double> times(n + 1), values(n + 1);
  for (std::size_t j = 0; j <= n; ++j)
    times[j] = static_cast<double>(j) * h;
  times[n] = s;
  values[0] = boundary;

  // Entrance: the position one sub-step in has the exact short-age radial
  // law (a Rayleigh pull away from the boundary), tilted by the survival
  // weight of the remaining age.  The tilt is bounded by the survival weight
  // at the midpoint, so a plain rejection is exact.
  {
    const RngStream entrance = stream.substream(kRoleEntranceAttempts);
    const double rem = s - times[1];
    const double cap = psi(iv, mid, rem);
    bool accepted = false;
    for (std::size_t attempt = 0; attempt < kTiltAttemptBudget; ++attempt) {
      RngStream a = entrance.substream(attempt);
      const double y = std::sqrt(-2.0 * times[1] * std::log(a.uniform01()));
      if (y >= iv.length()) continue;
      const double pos = boundary + dir * y;
      const double w = psi(iv, pos, rem);
      if (a.uniform01() * cap < w) {
        values[1] = pos;
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw std::runtime_error(
          "sample_aged_excursion_stepwise: entrance proposal budget exhausted");
  }

  // Interior steps: propose the free Gaussian increment; accept against the
  // in-step no-exit probability times the survival weight of what remains.
  const RngStream steps = stream.substream(kRoleStepProposals);
  for (std::size_t i = 1; i + 1 <= n; ++i) {
    RngStream srow = steps.substream(i);
    const double span = times[i + 1] - times[i];
    const double rem = s - times[i + 1];
    const double cap = rem > 0.0 ? psi(iv, mid, rem) : 1.0;
    const double x = values[i];
    bool accepted = false;
    for (std::size_t attempt = 0; attempt < kTiltAttemptBudget; ++attempt) {
      const double prop = x + std::sqrt(span) * srow.gaussian();
      const double u = srow.uniform01();
      if (!iv.contains(prop)) continue;
      const double no_touch = 1.0 - step_touch_prob(iv, x, prop, span);
      if (!(no_touch > 0.0)) continue;
      const double fut = rem > 0.0 ? psi(iv, prop, rem) : 1.0;
      if (u * cap < no_touch * fut) {
        values[i + 1] = prop;
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw std::runtime_error(
          "sample_aged_excursion_stepwise: step proposal budget exhausted");
  }

  return finish_with_exit(iv, boundary, s, std::move(times), std::move(values),
                          stream.substream(kRoleStepwiseContValue),
                          stream.substream(kRoleStepwiseContRefine), grid);
}

Excursion sample_aged_excursion(const Interval& iv, double boundary, double s,
                                const RngStream& stream,
                                const GridSpec& grid) {
  validate_aged_args(iv, boundary, s, grid);
  const double L = iv.length();
  if (s > kAgedSwitchFactor * L * L)
    return sample_aged_excursion_stepwise(iv, boundary, s, stream, grid);
  return sample_aged_excursion_rejection(iv, boundary, s, stream, grid);
}

BoundaryAge sample_limit_pair(const Interval& iv, const RngStream& stream) {
  BoundaryAge out;
  out.boundary = stream.at(0).uniform01() < 0.5 ? iv.a : iv.b;
  out.age = limit_cdf_inverse(iv, stream.at(1).uniform01());
  return out;
}

LimitSample sample_p0(const Interval& iv, const GridSpec& grid,
                      std::uint64_t master_seed, std::uint64_t replicate) {
  const RngStream stream = limit_stream(master_seed, replicate);
  const BoundaryAge pair =
      sample_limit_pair(iv, stream.substream(kRoleMixturePair));
  LimitSample ls;
  ls.x = pair.boundary;
  ls.y = pair.age;
  ls.zeta = sample_aged_excursion(iv, pair.boundary, pair.age, stream, grid);
  return ls;
}

double eval_functional(FunctionalId f, const LimitSample& ls,
                       const Interval& iv, double tail_offset) {
  switch (f) {
    case FunctionalId::kEndpointDisp:
      return ls.zeta.value_at(ls.y) - ls.x;
    case FunctionalId::kSupDisp:
      return sup_displacement(ls.zeta);
    case FunctionalId::kLifetimeTail:
      return ls.zeta.lifetime > tail_offset ? 1.0 : 0.0;
    case FunctionalId::kOccAboveMid:
      return occupation_above(ls.zeta, iv.midpoint());
  }
  throw std::invalid_argument("eval_functional: unknown functional id");
}

double eval_functional(FunctionalId f, const StraddleObservation& obs,
                       const Interval& /*iv*/, double tail_offset) {
  if (obs.never_exited)
    throw std::invalid_argument(
        "eval_functional: the observation has no straddling excursion");
  switch (f) {
    case FunctionalId::kEndpointDisp:
      return obs.endpoint_disp;
    case FunctionalId::kSupDisp:
      return obs.sup_disp;
    case FunctionalId::kLifetimeTail:
      return obs.lifetime > tail_offset ? 1.0 : 0.0;
    case FunctionalId::kOccAboveMid:
      return obs.occ_above_mid;
  }
  throw std::invalid_argument("eval_functional: unknown functional id");
}

}  // namespace excurlab
