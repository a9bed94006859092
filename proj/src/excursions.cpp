// SPDX-License-Identifier: Apache-2.0
#include "excurlab/excursions.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>

namespace excurlab {

namespace {

// Materialize coarse node k if absent (backward bridge fill), then report
// whether coarse step k left the interval.
bool scan_step_backward(SampledPath& path, const Interval& iv, std::size_t k) {
  const double t_k = static_cast<double>(k) * path.base_dt();
  if (!path.has_time(t_k)) fill_backward(path, k);
  return coarse_step_touched(path, iv, k);
}

}  // namespace

std::optional<BoundaryHit> locate_sigma(SampledPath& path, const Interval& iv,
                                        std::size_t t_node, double fine_dt) {
  if (t_node == 0)
    throw std::invalid_argument("locate_sigma: t_node must be >= 1");
  // The anchor node itself must already be materialized.
  (void)path.value_at_time(static_cast<double>(t_node) * path.base_dt());
  for (std::size_t k = t_node; k-- > 0;) {
    if (scan_step_backward(path, iv, k))
      return locate_touch(path, iv, k, fine_dt, /*last_touch=*/true);
  }
  return std::nullopt;
}

BoundaryHit locate_d(SampledPath& path, const Interval& iv, std::size_t t_node,
                     double fine_dt, std::size_t max_extra_nodes) {
  const double w_t = path.value_at_time(static_cast<double>(t_node) * path.base_dt());
  if (!iv.contains(w_t))
    throw std::invalid_argument("locate_d: value at t_node must lie strictly inside the interval");
  const std::size_t limit = t_node + max_extra_nodes;
  for (std::size_t k = t_node; k <= limit; ++k) {
    extend_to_node(path, k + 1);
    if (coarse_step_touched(path, iv, k))
      return locate_touch(path, iv, k, fine_dt, /*last_touch=*/false);
  }
  throw std::runtime_error("locate_d: no boundary touch within the extension budget");
}

Excursion extract_zeta(const SampledPath& path, const Interval& iv,
                       const BoundaryHit& sigma, const BoundaryHit& d) {
  if (!(d.time > sigma.time))
    throw std::invalid_argument("extract_zeta: the closing touch must come after the opening one");
  Excursion z;
  z.start = sigma.barrier;
  z.lifetime = d.time - sigma.time;
  z.exit_value = d.barrier;
  z.times.push_back(0.0);
  z.values.push_back(sigma.barrier);
  std::size_t i = path.index_at_or_before(sigma.time);
  for (++i; i < path.size() && path.time(i) < d.time; ++i) {
    z.times.push_back(path.time(i) - sigma.time);
    z.values.push_back(std::clamp(path.value(i), iv.a, iv.b));
  }
  z.times.push_back(z.lifetime);
  z.values.push_back(d.barrier);
  return z;
}

double sup_displacement(const Excursion& zeta) {
  double sup = 0.0;
  for (double v : zeta.values) sup = std::max(sup, std::abs(v - zeta.start));
  return sup;
}

double occupation_above(const Excursion& zeta, double level) {
  if (zeta.lifetime <= 0.0) return 0.0;
  double above = 0.0;
  for (std::size_t i = 1; i < zeta.times.size(); ++i) {
    const double span = zeta.times[i] - zeta.times[i - 1];
    const double v0 = zeta.values[i - 1];
    const double v1 = zeta.values[i];
    const bool a0 = v0 > level;
    const bool a1 = v1 > level;
    if (a0 && a1) {
      above += span;
    } else if (a0 != a1) {
      const double tau = (level - v0) / (v1 - v0);  // crossing fraction in (0, 1]
      above += span * (a0 ? tau : 1.0 - tau);
    }
  }
  return above / zeta.lifetime;
}

StraddleObservation observe_straddle(SampledPath& path, const Interval& iv,
                                     std::size_t t_node, double fine_dt,
                                     std::uint64_t replicate_id) {
  const double t = static_cast<double>(t_node) * path.base_dt();
  const double w_t = path.value_at_time(t);
  if (!iv.contains(w_t))
    throw std::invalid_argument("observe_straddle: value at t must lie strictly inside the interval");
  StraddleObservation obs;
  obs.replicate = replicate_id;
  obs.t = t;
  const std::optional<BoundaryHit> sigma = locate_sigma(path, iv, t_node, fine_dt);
  if (!sigma) {
    obs.never_exited = true;
    return obs;
  }
  const BoundaryHit d = locate_d(path, iv, t_node, fine_dt);
  obs.never_exited = false;
  obs.sigma = sigma->time;
  obs.x_sigma = sigma->barrier;
  obs.d = d.time;
  obs.lifetime = d.time - sigma->time;
  Excursion z = extract_zeta(path, iv, *sigma, d);
  obs.endpoint_disp = w_t - sigma->barrier;
  obs.sup_disp = sup_displacement(z);
  obs.occ_above_mid = occupation_above(z, iv.midpoint());
  obs.zeta = std::move(z);
  return obs;
}

std::vector<ExcursionInterval> enumerate_excursions(SampledPath& path, const Interval& iv,
                                                    std::size_t through_node,
                                                    double fine_dt) {
  if (through_node == 0)
    throw std::invalid_argument("enumerate_excursions: need at least one coarse step");
  const double dt = path.base_dt();
  std::vector<std::size_t> touched;
  for (std::size_t k = 0; k < through_node; ++k) {
    // Both step ends must be materialized; value_at_time throws otherwise.
    (void)path.value_at_time(static_cast<double>(k) * dt);
    (void)path.value_at_time(static_cast<double>(k + 1) * dt);
    if (coarse_step_touched(path, iv, k)) touched.push_back(k);
  }
  std::vector<ExcursionInterval> out;
  for (std::size_t i = 0; i + 1 < touched.size(); ++i) {
    const std::size_t kl = touched[i];
    const std::size_t kr = touched[i + 1];
    if (kr == kl + 1) {
      // Adjacent touched steps: the stretch between their touches lies inside
      // the interval only when the shared node does.
      const double shared = path.value_at_time(static_cast<double>(kr) * dt);
      if (!iv.contains(shared)) continue;
    }
    ExcursionInterval span;
    span.begin = locate_touch(path, iv, kl, fine_dt, /*last_touch=*/true);
    span.end = locate_touch(path, iv, kr, fine_dt, /*last_touch=*/false);
    out.push_back(span);
  }
  return out;
}

namespace {

// The virtual strip walk draws from this substream block of the refine
// stream, far away from the per-step flag/bisection blocks, so the walk
// never collides with (and never perturbs) interval-flag or locate draws.
constexpr std::uint64_t kStripStreamBase = 1ull << 40;

struct StripWalkState {
  bool armed = false;       // last strip edge touched was the upper one
  long crossings = 0;       // completed upper-to-lower passages
  double band_time = 0.0;   // chord time spent in [level, level + eps)
};

// Time a linear chord from x to y over `span` spends in [lo, hi).
double chord_band_time(double x, double y, double span, double lo, double hi) {
  if (x == y) return (x >= lo && x < hi) ? span : 0.0;
  double t0 = (lo - x) / (y - x);
  double t1 = (hi - x) / (y - x);
  if (t0 > t1) std::swap(t0, t1);
  const double a = std::max(0.0, t0);
  const double b = std::min(1.0, t1);
  return b > a ? (b - a) * span : 0.0;
}

// Depth-first virtual bisection of one bracket (end values x, y over
// `span`), pruned where the bracket cannot reach the strip.  Leaves decide
// edge touches by the exact bridge-crossing flags and advance the counting
// state in time order.
void strip_walk(const RngStream& step_rng, std::uint64_t node, double span,
                double x, double y, double level, double eps, double floor_dt,
                StripWalkState& st) {
  const double hi_edge = level + eps;
  const double margin = 3.5 * std::sqrt(span);
  // Unreachable strip: both endpoints more than 3.5 bridge sigmas beyond the
  // same edge (hidden-touch probability < e^{-24}); the chord cannot meet
  // the band either, so neither statistic changes.
  if (std::max(x, y) + margin < level || std::min(x, y) - margin > hi_edge) return;
  if (node >= (1ull << 62))
    throw std::runtime_error("strip_statistics: floor_dt is too small for the base step");
  if (span <= floor_dt) {
    RngStream leaf_rng = step_rng.at(node);
    const bool touch_hi = leaf_rng.uniform01() < bridge_cross_prob(x, y, hi_edge, span);
    const bool touch_lo = leaf_rng.uniform01() < bridge_cross_prob(x, y, level, span);
    st.band_time += chord_band_time(x, y, span, level, hi_edge);
    if (touch_hi && touch_lo) {
      // The leaf swept the whole strip; the order inside it is unresolved,
      // so credit one passage unless the sweep plainly ended upward.
      if (st.armed || y - level <= 0.5 * eps) ++st.crossings;
      st.armed = y - level > 0.5 * eps;
    } else if (touch_hi) {
      st.armed = true;
    } else if (touch_lo) {
      if (st.armed) {
        ++st.crossings;
        st.armed = false;
      }
    }
    return;
  }
  RngStream node_rng = step_rng.at(node);
  const double m = 0.5 * (x + y) + 0.5 * std::sqrt(span) * node_rng.gaussian();
  const double half = 0.5 * span;
  strip_walk(step_rng, 2 * node, half, x, m, level, eps, floor_dt, st);
  strip_walk(step_rng, 2 * node + 1, half, m, y, level, eps, floor_dt, st);
}

}  // namespace

StripStats strip_statistics(const SampledPath& path, double level, double eps,
                            double floor_dt) {
  if (!(eps > 0.0)) throw std::invalid_argument("strip_statistics: eps must be positive");
  if (!(floor_dt > 0.0))
    throw std::invalid_argument("strip_statistics: floor_dt must be positive");
  const double dt = path.base_dt();
  const std::size_t n_steps = last_coarse_node(path);
  StripWalkState st;
  st.armed = path.value(0) >= level + eps;
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double x = path.value_at_time(static_cast<double>(k) * dt);
    const double y = path.value_at_time(static_cast<double>(k + 1) * dt);
    const RngStream step_rng = path.refine_rng().substream(kStripStreamBase + k);
    strip_walk(step_rng, 1, dt, x, y, level, eps, floor_dt, st);
  }
  StripStats out;
  out.downcrossing_local_time = 2.0 * eps * static_cast<double>(st.crossings);
  out.occupation_local_time = st.band_time / eps;
  return out;
}

double downcrossing_local_time(const SampledPath& path, double level, double eps,
                               double floor_dt) {
  return strip_statistics(path, level, eps, floor_dt).downcrossing_local_time;
}

}  // namespace excurlab
