#pragma once

// Statistical validation layer: Monte Carlo studies of straddling
// excursions, conditional-law bucket comparisons, convergence tables toward
// the limiting law, the application-scale event probability, a boundary
// excursion-rate check, and cross-certification of the aged-excursion
// samplers against a small-offset oracle.
//
// Every driver in this header is deterministic given (master_seed, inputs):
// replicate streams are pre-assigned by index, so the worker count changes
// wall time only, never a single output bit.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "excurlab/brownian.hpp"
#include "excurlab/limits.hpp"
#include "excurlab/types.hpp"

namespace excurlab {

// ---------------------------------------------------------------------------
// Kolmogorov–Smirnov machinery
// ---------------------------------------------------------------------------

struct KsReport {
  double statistic = 0.0;      // sup-distance between the compared CDFs
  std::size_t n_effective = 0; // n for one-sample, n*m/(n+m) rounded for two
  double threshold = 0.0;      // critical value at the requested level
  bool pass = false;           // statistic <= threshold
};

// Asymptotic two-sided critical constant: the exact quantile of the
// Kolmogorov sup-distance law; c(0.01) = 1.6276236115189503.
double ks_critical(double alpha);

// One-sample KS test of `sample` against the continuous CDF `cdf` at level
// `alpha`: statistic D_n, threshold c(alpha)/sqrt(n).  The sample is copied
// and sorted internally; an empty sample is rejected.
KsReport ks_distance(const std::vector<double>& sample,
                     const std::function<double(double)>& cdf,
                     double alpha = 0.01);

// Two-sample KS test: statistic D_{n,m}, threshold
// c(alpha) * sqrt((n + m) / (n * m)).  Both samples must be non-empty.
KsReport ks_two_sample(const std::vector<double>& first,
                       const std::vector<double>& second,
                       double alpha = 0.01);

// ---------------------------------------------------------------------------
// Wilson score interval
// ---------------------------------------------------------------------------

// Two-sided 99% normal quantile used for all binomial intervals here.
inline constexpr double kZ99 = 2.5758293035489008;

struct WilsonInterval {
  double lower = 0.0;
  double upper = 1.0;
};

// Wilson score interval for a binomial proportion, clamped to [0, 1].
WilsonInterval wilson_interval(std::size_t successes, std::size_t n,
                               double z = kZ99);

// ---------------------------------------------------------------------------
// Deterministic replicate scheduling
// ---------------------------------------------------------------------------

// Runs fn(i) for every i in [0, n), split across `workers` threads in
// contiguous blocks (inline when workers <= 1).  fn must only write to
// storage indexed by its own i; under that contract the result is
// byte-identical for every worker count.  The first exception thrown by any
// invocation is rethrown after all threads join.
void parallel_replicates(std::size_t n, unsigned workers,
                         const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Straddling-excursion study
// ---------------------------------------------------------------------------

struct StraddleStudy {
  double t = 0.0;               // observation time, snapped to the grid
  std::vector<StraddleObservation> observations; // accepted, by candidate index
  std::uint64_t candidates = 0; // candidates through the last accepted one
  double acceptance_rate = 0.0; // observations.size() / candidates
  std::size_t never_exited = 0; // accepted paths that never left the interval
};

// Collects exactly n_target observations of the excursion straddling time t
// for Brownian motion started at `start`, conditioned on W_t inside the
// interval.  Candidates are indexed replicates: the value at t is drawn
// first (grid slot t/coarse_dt of the candidate's value stream), candidates
// landing outside the interval are rejected for the cost of one Gaussian,
// and surviving candidates are materialized backward from the anchored
// endpoint only as far as the straddle scan needs.  The accepted set is the
// first n_target candidates by index, so output is independent of `workers`.
// Excursion skeletons are dropped after the scalar functionals are cached.
//
// t must sit on the coarse grid (|t - round(t/dt)*dt| <= 1e-9) and `start`
// must lie in [a, b].  replicate_base offsets the candidate index space so
// distinct studies under one master seed draw from disjoint streams.
StraddleStudy run_straddle_study(const Interval& iv, double t,
                                 std::size_t n_target, double start,
                                 const GridSpec& grid,
                                 std::uint64_t master_seed,
                                 unsigned workers = 1,
                                 std::uint64_t replicate_base = 0);

// ---------------------------------------------------------------------------
// Finite-time conditional-law bucket comparison
// ---------------------------------------------------------------------------

struct BucketReport {
  FunctionalId functional = FunctionalId::kEndpointDisp;
  double x_sigma = 0.0;        // boundary class of the bucket
  double s_low = 0.0;          // bucket age range [s_low, s_high)
  double s_high = 0.0;
  double s_mid = 0.0;          // reference age (midpoint)
  std::size_t n_obs = 0;       // study observations in the bucket
  double empirical_mean = 0.0; // mean functional over the bucket
  double reference_mean = 0.0; // aged-excursion mean at s_mid (or analytic)
  double combined_se = 0.0;    // sqrt(se_emp^2 + se_ref^2) + allowance / 3
  double allowance = 0.0;      // max reference drift over the bucket edges
  bool skipped = false;        // n_obs below the minimum; not a verdict
  bool pass = false;           // |empirical - reference| <= 3 * combined_se
};

struct BucketCheckConfig {
  std::size_t s_buckets = 8;        // quantile buckets of the age t - sigma
  std::size_t reference_draws = 4000; // aged draws at each bucket midpoint
  std::size_t edge_draws = 2000;    // aged draws at each bucket edge
  double tail_offset = 0.25;        // lifetime threshold is s_mid + tail_offset
  std::size_t min_bucket = 100;     // buckets below this are skipped
  std::vector<FunctionalId> functionals = {
      FunctionalId::kEndpointDisp, FunctionalId::kLifetimeTail,
      FunctionalId::kOccAboveMid};
};

struct IdentityCheck {
  StraddleStudy study;
  std::vector<double> s_edges;       // age-bucket edges, min to max
  std::vector<BucketReport> reports; // functional-major, then side, then bucket
};

// Bucket comparison on an existing study: observations are grouped by
// boundary class and empirical age quantile, and each bucket's functional
// mean is compared against the aged-excursion law at the bucket midpoint.
// Lifetime-tail references are analytic (zero reference error); the other
// functionals use fresh aged draws from a dedicated stream block.  The
// allowance term absorbs reference drift across the bucket.
std::vector<BucketReport> bucket_reports(
    const std::vector<StraddleObservation>& observations, const Interval& iv,
    const GridSpec& grid, std::uint64_t master_seed,
    const BucketCheckConfig& cfg, unsigned workers,
    std::vector<double>* edges_out = nullptr);

// Runs the study at time t and the bucket comparison in one call.
IdentityCheck check_straddle_identity(const Interval& iv, double t,
                                      std::size_t n_target, double start,
                                      const GridSpec& grid,
                                      std::uint64_t master_seed,
                                      const BucketCheckConfig& cfg = {},
                                      unsigned workers = 1);

// ---------------------------------------------------------------------------
// Convergence toward the limiting law
// ---------------------------------------------------------------------------

struct ConvergenceRow {
  double t = 0.0;
  std::size_t n_included = 0;    // observations with a completed excursion
  std::size_t n_never_exited = 0;
  KsReport age_ks;               // ages against the limiting age CDF
  double frac_low = 0.0;         // share of excursions from the lower boundary
  WilsonInterval side_ci;        // 99% interval for that share
  bool side_pass = false;        // interval contains 1/2
  KsReport endpoint_ks;          // two-sample vs the limiting-law reference
  KsReport supdisp_ks;
  KsReport occ_ks;
};

struct ConvergenceTable {
  std::size_t reference_draws = 0;
  std::vector<ConvergenceRow> rows; // one per requested t, in input order
};

// For each t in t_list (at most 16 entries, each on the coarse grid), runs a
// straddle study and measures the distance of the observed
// (side, age, excursion-functional) statistics from the limiting law: ages
// by one-sample KS against the limiting age CDF, the boundary coin by a
// Wilson interval around 1/2, and each continuous functional by two-sample
// KS against one shared sample of `reference_draws` direct limiting-law
// draws.
ConvergenceTable check_limit_convergence(const Interval& iv,
                                         const std::vector<double>& t_list,
                                         std::size_t n_target, double start,
                                         const GridSpec& grid,
                                         std::uint64_t master_seed,
                                         std::size_t reference_draws = 20000,
                                         unsigned workers = 1);

// ---------------------------------------------------------------------------
// Application event probability
// ---------------------------------------------------------------------------

struct ApplicationCell {
  double u = 0.0;               // age window (0, u)
  double y = 0.0;               // displacement window (0, y)
  std::size_t direct_hits = 0;
  std::size_t p0_hits = 0;
  std::size_t p0_from_b_hits = 0; // upper-boundary draws in the event (always 0)
  double direct_estimate = 0.0;
  double p0_estimate = 0.0;
  WilsonInterval direct_ci;
  WilsonInterval p0_ci;
  double combined_se = 0.0;
  bool agree = false;           // |direct - p0| <= 3 * combined_se
};

struct ApplicationStudy {
  StraddleStudy study;          // direct side, path started on the lower boundary
  std::size_t n_p0 = 0;         // limiting-law draws
  std::vector<ApplicationCell> cells; // u-major over u_list x y_list
};

// Compares, over a grid of (u, y) windows, the direct finite-t frequency of
// {age below u and the path sits in (0, y) above its last exit boundary at
// time t} against the limiting-law probability of {age below u, endpoint
// displacement in (0, y)}.  The direct side runs a straddle study at time t
// started on the lower boundary; the limiting side uses n_p0 direct draws.
// Draws whose excursion hangs from the upper boundary cannot produce a
// positive displacement, so their hit count is reported and expected to be
// exactly zero.
ApplicationStudy application_study(const Interval& iv, double t,
                                   std::size_t n_direct, std::size_t n_p0,
                                   const std::vector<double>& u_list,
                                   const std::vector<double>& y_list,
                                   const GridSpec& grid,
                                   std::uint64_t master_seed,
                                   unsigned workers = 1);

// ---------------------------------------------------------------------------
// Boundary excursion-rate check
// ---------------------------------------------------------------------------

struct RateCheck {
  std::size_t replicates = 0;
  double horizon = 0.0;
  double s_threshold = 0.0;       // minimum excursion lifetime counted
  double eps = 0.0;               // strip width for the local-time estimate
  std::size_t qualifying = 0;     // pooled count of long lower-boundary excursions
  double local_time_down = 0.0;   // pooled downcrossing local-time estimate
  double local_time_occ = 0.0;    // pooled occupation-based estimate
  double ratio = 0.0;             // qualifying / local_time_down
  double reference = 0.0;         // analytic rate of long excursions
  double rel_err = 0.0;           // |ratio / reference - 1|
  bool pass = false;              // rel_err <= rel_tol
};

// Long-run frequency check: simulates `replicates` independent paths started
// on the lower boundary, counts maximal inside-the-interval excursions from
// that boundary with lifetime above s_threshold, divides the pooled count by
// the pooled local time at the boundary (downcrossing estimator with strip
// width eps and bridge-exact refinement), and compares the ratio to the
// analytic excursion rate.
RateCheck excursion_rate_check(const Interval& iv, double horizon,
                               double s_threshold, double eps,
                               const GridSpec& grid,
                               std::uint64_t master_seed,
                               std::size_t replicates, unsigned workers = 1,
                               double rel_tol = 0.10);

// ---------------------------------------------------------------------------
// Sampler cross-certification
// ---------------------------------------------------------------------------

struct SamplerCheckRow {
  double boundary = 0.0;
  double s = 0.0;
  std::size_t n_draws = 0;        // per side: sampler draws and oracle draws
  std::uint64_t oracle_starts = 0; // offset starts consumed by the oracle
  KsReport endpoint_ks;           // displacement at age s
  KsReport lifetime_ks;
  KsReport supdisp_ks;
};

struct SamplerCertification {
  double eps = 0.0;
  std::vector<SamplerCheckRow> rows; // s-major, then boundary a then b
  double agreement_s = 0.0;          // age for the cross-regime comparison
  KsReport regime_agreement;         // endpoint two-sample between regimes
};

// Certifies the aged-excursion sampler against an independent oracle: plain
// Brownian paths started a distance eps inside the boundary, kept only when
// the exact hidden-crossing flags let them survive past age s, then run to
// their exit.  For each (boundary, s) the endpoint displacement at s, the
// lifetime, and the sup displacement are compared by two-sample KS with
// n_draws on each side.  A final report compares the sampler's two internal
// regimes against each other at agreement age (b-a)^2.
SamplerCertification validate_samplers(const Interval& iv,
                                       const GridSpec& grid,
                                       std::uint64_t master_seed,
                                       std::size_t n_draws, double eps,
                                       const std::vector<double>& s_list,
                                       unsigned workers = 1);

}  // namespace excurlab
