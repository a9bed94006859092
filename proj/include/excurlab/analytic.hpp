#pragma once

#include <excurlab/types.hpp>

namespace excurlab {

// Controls truncation of the analytic series evaluations.
struct SeriesConfig {
  // Stop summing once the rigorously bounded remainder falls below this.
  double tail_tol = 1e-12;
  // Hard cap on the number of terms; exceeding it throws std::runtime_error.
  int max_terms = 200000;
};

// A truncated series value together with a bound on the truncation error.
struct SeriesValue {
  double value = 0.0;
  double tail_bound = 0.0;  // upper bound on |exact - value| from truncation
  int terms = 0;            // number of series terms actually evaluated
};

// Probability that a Brownian path started at x in [iv.a, iv.b] stays
// strictly inside the interval through time s.  Evaluated by a spectral
// series for diffusive times and by a reflection (method-of-images) form for
// short times; the returned value is clamped to [0, 1].
SeriesValue psi_ex(const Interval& iv, double x, double s,
                   const SeriesConfig& cfg = {});
double psi(const Interval& iv, double x, double s,
           const SeriesConfig& cfg = {});

// CDF in s of the lifetime of the excursion straddling a fixed time, under
// the scaling limit law attached to the interval.
SeriesValue limit_cdf_ex(const Interval& iv, double s,
                         const SeriesConfig& cfg = {});
double limit_cdf(const Interval& iv, double s, const SeriesConfig& cfg = {});

// Same CDF obtained by numerically integrating (1 - psi(x, s)) / (b - a)
// over the interval.  Slower; kept as an independent cross-check of the
// series route.
double limit_cdf_quadrature(const Interval& iv, double s,
                            const SeriesConfig& cfg = {});

// Inverse of limit_cdf in s for p in [0, 1): bisection, refined until
// |limit_cdf(s) - p| <= 1e-10.
double limit_cdf_inverse(const Interval& iv, double p,
                         const SeriesConfig& cfg = {});

// Tail rate of unit-scale Brownian excursion lifetimes: sqrt(2 / (pi t)).
// Requires t > 0.
double ito_tail(double t);

// Rate of excursions leaving boundary point x of iv whose lifetime exceeds
// s > 0.  x must equal iv.a or iv.b exactly; by symmetry the value is the
// same at both endpoints.  Satisfies d/ds limit_cdf = (2/L) exit_rate.
SeriesValue exit_rate_ex(const Interval& iv, double x, double s,
                         const SeriesConfig& cfg = {});
double exit_rate(const Interval& iv, double x, double s,
                 const SeriesConfig& cfg = {});

}  // namespace excurlab
