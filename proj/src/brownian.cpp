// SPDX-License-Identifier: Apache-2.0
#include "excurlab/brownian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace excurlab {

namespace {

// Distance from x to the nearer boundary, zero when outside.
double boundary_gap(const Interval& iv, double x) {
  return std::max(0.0, std::min(x - iv.a, iv.b - x));
}

}  // namespace

GridSpec::GridSpec(double coarse_dt_, double fine_dt_)
    : coarse_dt(coarse_dt_), fine_dt(fine_dt_) {
  if (!std::isfinite(coarse_dt) || !(coarse_dt > 0.0))
    throw std::invalid_argument("GridSpec: coarse_dt must be finite and > 0");
  if (!std::isfinite(fine_dt) || !(fine_dt > 0.0))
    throw std::invalid_argument("GridSpec: fine_dt must be finite and > 0");
  if (fine_dt > coarse_dt)
    throw std::invalid_argument("GridSpec: fine_dt must not exceed coarse_dt");
}

RngStream value_stream(std::uint64_t master_seed, std::uint64_t replicate) {
  return RngStream::derive(master_seed, 2 * replicate);
}

RngStream refine_stream(std::uint64_t master_seed, std::uint64_t replicate) {
  return RngStream::derive(master_seed, 2 * replicate + 1);
}

SampledPath simulate_path(double start, double horizon, const GridSpec& grid,
                          std::uint64_t master_seed, std::uint64_t replicate) {
  if (!std::isfinite(start))
    throw std::invalid_argument("simulate_path: start must be finite");
  if (!std::isfinite(horizon) || !(horizon > 0.0))
    throw std::invalid_argument("simulate_path: horizon must be finite and > 0");
  const double dt = grid.coarse_dt;
  const auto n = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  RngStream value = value_stream(master_seed, replicate);
  RngStream refine = refine_stream(master_seed, replicate);
  std::vector<double> times(n + 1), values(n + 1);
  times[0] = 0.0;
  values[0] = start;
  const double sq = std::sqrt(dt);
  for (std::size_t k = 1; k <= n; ++k) {
    times[k] = static_cast<double>(k) * dt;
    values[k] = values[k - 1] + sq * value.at(k).gaussian();
  }
  return SampledPath(std::move(times), std::move(values), dt, value, refine);
}

std::size_t last_coarse_node(const SampledPath& path) {
  return static_cast<std::size_t>(std::llround(path.horizon() / path.base_dt()));
}

void extend_to_node(SampledPath& path, std::size_t node) {
  const double dt = path.base_dt();
  const double sq = std::sqrt(dt);
  for (std::size_t k = last_coarse_node(path) + 1; k <= node; ++k) {
    const double z = path.value_rng().at(k).gaussian();
    path.append(static_cast<double>(k) * dt, path.value(path.size() - 1) + sq * z);
  }
}

void fill_backward(SampledPath& path, std::size_t k) {
  if (k < 1) throw std::invalid_argument("fill_backward: node index must be >= 1");
  const double dt = path.base_dt();
  const double t_k = static_cast<double>(k) * dt;
  if (path.has_time(t_k))
    throw std::invalid_argument("fill_backward: node already materialized");
  const double t_next = static_cast<double>(k + 1) * dt;
  const double v_next = path.value_at_time(t_next);
  const double mean = v_next + (path.origin() - v_next) * (dt / t_next);
  const double var = dt * (static_cast<double>(k) / static_cast<double>(k + 1));
  const double z = path.value_rng().at(k).gaussian();
  path.insert(t_k, mean + std::sqrt(var) * z);
}

double bridge_cross_prob(double x, double y, double level, double dt) {
  if (!std::isfinite(dt) || !(dt > 0.0))
    throw std::invalid_argument("bridge_cross_prob: dt must be finite and > 0");
  const double prod = (x - level) * (y - level);
  if (prod <= 0.0) return 1.0;
  return std::exp(-2.0 * prod / dt);
}

double step_touch_prob(const Interval& iv, double x, double y, double dt) {
  if (!iv.contains(x) || !iv.contains(y)) return 1.0;
  const double pa = bridge_cross_prob(x, y, iv.a, dt);
  const double pb = bridge_cross_prob(x, y, iv.b, dt);
  return std::min(1.0, pa + pb);
}

bool coarse_step_touched(const SampledPath& path, const Interval& iv, std::size_t k) {
  const double dt = path.base_dt();
  const double x = path.value_at_time(static_cast<double>(k) * dt);
  const double y = path.value_at_time(static_cast<double>(k + 1) * dt);
  if (!iv.contains(x) || !iv.contains(y)) return true;
  const double p = step_touch_prob(iv, x, y, dt);
  return path.refine_rng().substream(k).at(0).uniform01() < p;
}

double draw_conditioned_midpoint(RngStream node_rng, double x, double y, double span,
                                 const Interval& iv, bool touched) {
  const double mean = 0.5 * (x + y);
  const double sd = 0.5 * std::sqrt(span);
  const double half = 0.5 * span;
  double best = mean;
  double best_w = touched ? -1.0 : 2.0;
  for (int attempt = 0; attempt < 200000; ++attempt) {
    const double m = mean + sd * node_rng.gaussian();
    const double pl = step_touch_prob(iv, x, m, half);
    const double pr = step_touch_prob(iv, m, y, half);
    const double w = pl + pr - pl * pr;
    const double u = node_rng.uniform01();
    if (touched ? (u < w) : (u < 1.0 - w)) return m;
    if (touched ? (w > best_w) : (w < best_w)) {
      best_w = w;
      best = m;
    }
  }
  // The status being conditioned on has numerically vanishing probability
  // under these endpoints; fall back to the closest proposal seen.
  return best;
}

BoundaryHit locate_touch(SampledPath& path, const Interval& iv, std::size_t k,
                         double fine_dt, bool last_touch) {
  const double dt = path.base_dt();
  if (!std::isfinite(fine_dt) || !(fine_dt > 0.0) || fine_dt > dt)
    throw std::invalid_argument("locate_touch: fine_dt must lie in (0, coarse_dt]");
  if (!coarse_step_touched(path, iv, k))
    throw std::invalid_argument("locate_touch: step has no boundary touch");
  double lo = static_cast<double>(k) * dt;
  double hi = static_cast<double>(k + 1) * dt;
  double x = path.value_at_time(lo);
  double y = path.value_at_time(hi);
  double span = hi - lo;
  std::uint64_t node = 1;
  const RngStream step_rng = path.refine_rng().substream(k);
  while (span > fine_dt) {
    RngStream node_rng = step_rng.at(node);
    const double mid_t = 0.5 * (lo + hi);
    double m = draw_conditioned_midpoint(node_rng, x, y, span, iv, true);
    if (path.has_time(mid_t)) {
      m = path.value_at_time(mid_t);  // idempotent re-run: reuse the stored draw
    } else {
      path.insert(mid_t, m);
    }
    const double half = 0.5 * span;
    const double pl = step_touch_prob(iv, x, m, half);
    const double pr = step_touch_prob(iv, m, y, half);
    const double w = pl + pr - pl * pr;
    int which;  // 0: left half only, 1: right half only, 2: both halves
    if (w <= 0.0) {
      which = (std::min(boundary_gap(iv, x), boundary_gap(iv, m)) <=
               std::min(boundary_gap(iv, m), boundary_gap(iv, y)))
                  ? 0
                  : 1;
    } else {
      const double u = node_rng.uniform01();
      const double q_left_only = pl * (1.0 - pr) / w;
      const double q_right_only = (1.0 - pl) * pr / w;
      which = (u < q_left_only) ? 0 : (u < q_left_only + q_right_only ? 1 : 2);
    }
    const bool go_left = last_touch ? (which == 0) : (which != 1);
    if (go_left) {
      hi = mid_t;
      y = m;
      node = 2 * node;
    } else {
      lo = mid_t;
      x = m;
      node = 2 * node + 1;
    }
    span = half;
  }
  double barrier;
  if (!iv.contains(x)) {
    barrier = (x <= iv.a) ? iv.a : iv.b;
  } else if (!iv.contains(y)) {
    barrier = (y <= iv.a) ? iv.a : iv.b;
  } else {
    const double pa = bridge_cross_prob(x, y, iv.a, span);
    const double pb = bridge_cross_prob(x, y, iv.b, span);
    if (pa + pb > 0.0) {
      RngStream side_rng = step_rng.at(node);
      barrier = (side_rng.uniform01() < pa / (pa + pb)) ? iv.a : iv.b;
    } else {
      barrier = iv.snap(0.5 * (x + y));
    }
  }
  const double hit_time = 0.5 * (lo + hi);
  if (!path.has_time(hit_time)) path.insert(hit_time, barrier);
  return BoundaryHit{hit_time, barrier};
}

std::vector<double> sample_bessel3_bridge(RngStream stream, double rho, double s,
                                          std::size_t n) {
  if (!std::isfinite(rho) || rho < 0.0)
    throw std::invalid_argument("sample_bessel3_bridge: rho must be finite and >= 0");
  if (!std::isfinite(s) || !(s > 0.0))
    throw std::invalid_argument("sample_bessel3_bridge: s must be finite and > 0");
  if (n < 1) throw std::invalid_argument("sample_bessel3_bridge: need n >= 1 sub-steps");
  const double h = s / static_cast<double>(n);
  std::vector<double> out(n + 1);
  out[0] = 0.0;
  double cx = 0.0, cy = 0.0, cz = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    const double remain = s - static_cast<double>(j - 1) * h;
    const double frac = h / remain;
    const double sd = std::sqrt(h * (remain - h) / remain);
    RngStream node = stream.at(j);
    cx += (rho - cx) * frac + sd * node.gaussian();
    cy += (0.0 - cy) * frac + sd * node.gaussian();
    cz += (0.0 - cz) * frac + sd * node.gaussian();
    out[j] = std::sqrt(cx * cx + cy * cy + cz * cz);
  }
  out[n] = rho;
  return out;
}

std::vector<double> sample_meander(RngStream stream, double s, std::size_t n) {
  if (!std::isfinite(s) || !(s > 0.0))
    throw std::invalid_argument("sample_meander: s must be finite and > 0");
  const double u = stream.at(0).uniform01();
  const double rho = std::sqrt(-2.0 * s * std::log(u));
  return sample_bessel3_bridge(stream, rho, s, n);
}

}  // namespace excurlab
