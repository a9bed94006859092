#include "excurlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>

#include "excurlab/analytic.hpp"
#include "excurlab/excursions.hpp"

namespace excurlab {
namespace {

// ---------------------------------------------------------------------------
// Replicate-space partition.
//
// Path-valued draws go through value_stream/refine_stream(seed, rep); direct
// aged/limiting draws go through limit_stream(seed, rep).  The two families
// are disjoint by construction; within each family the blocks below keep
// every driver on its own replicates under a shared master seed.
// ---------------------------------------------------------------------------

// Path replicates: straddle studies use [row * kStudyStride, ...) per
// t-row (at most 16 rows), the application study sits above them, rate-check
// paths above that, and the sampler oracle far above (its candidate count
// can reach the hundreds of millions, so it gets 2^29 per block).
constexpr std::uint64_t kStudyStride = 1ull << 24;
constexpr std::uint64_t kAppStudyBase = 1ull << 28;
constexpr std::uint64_t kRatePathBase = 3ull << 28;
constexpr std::uint64_t kOracleBase = 1ull << 33;
constexpr std::uint64_t kOracleStride = 1ull << 29;

// Aged-draw replicates: certification draws low, bucket references in the
// middle, shared limiting-law reference samples on top.
constexpr std::uint64_t kCertStride = 1ull << 20;
constexpr std::uint64_t kRegimeBaseA = 1ull << 23;
constexpr std::uint64_t kRegimeBaseB = (1ull << 23) + (1ull << 22);
constexpr std::uint64_t kBucketRefBase = 1ull << 28;
constexpr std::uint64_t kBucketRefStride = 1ull << 20;
constexpr std::uint64_t kP0ConvBase = 1ull << 29;
constexpr std::uint64_t kP0AppBase = (1ull << 29) + (1ull << 24);

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::size_t grid_node(double t, double coarse_dt, const char* what) {
  const auto n = static_cast<long long>(std::llround(t / coarse_dt));
  if (n < 1 || std::abs(static_cast<double>(n) * coarse_dt - t) > 1e-9) {
    throw std::invalid_argument(std::string(what) +
                                ": time must sit on the coarse grid");
  }
  return static_cast<std::size_t>(n);
}

// Processes candidates r = 0, 1, 2, ... in growing parallel batches until
// n_target draws are accepted; returns the accepted records in candidate
// order plus the candidate count through the last accepted index.  draw(r,
// rec) must be thread-safe and deterministic in r alone.
template <typename Rec, typename Fn>
std::pair<std::vector<Rec>, std::uint64_t> collect_accepted(
    std::size_t n_target, double p_guess, unsigned workers,
    std::uint64_t hard_cap, std::size_t batch_cap, Fn&& draw) {
  if (n_target == 0) throw std::invalid_argument("collect: n_target must be positive");
  p_guess = std::clamp(p_guess, 1e-7, 1.0);
  std::vector<Rec> accepted;
  accepted.reserve(n_target);
  std::uint64_t candidates = 0;
  std::uint64_t processed = 0;
  std::vector<Rec> batch_rec;
  std::vector<char> batch_ok;
  while (accepted.size() < n_target) {
    if (processed >= hard_cap) {
      throw std::runtime_error("candidate acceptance rate too low; giving up");
    }
    const double need = static_cast<double>(n_target - accepted.size());
    auto batch = static_cast<std::size_t>(std::ceil(need / p_guess * 1.2)) + 64;
    batch = std::min(batch, batch_cap);
    batch = static_cast<std::size_t>(
        std::min<std::uint64_t>(batch, hard_cap - processed));
    batch_rec.assign(batch, Rec{});
    batch_ok.assign(batch, 0);
    parallel_replicates(batch, workers, [&](std::size_t j) {
      batch_ok[j] = draw(processed + j, batch_rec[j]) ? 1 : 0;
    });
    for (std::size_t j = 0; j < batch && accepted.size() < n_target; ++j) {
      if (!batch_ok[j]) continue;
      accepted.push_back(std::move(batch_rec[j]));
      candidates = processed + j + 1;
    }
    processed += batch;
  }
  return {std::move(accepted), candidates};
}

}  // namespace

// ---------------------------------------------------------------------------
// KS machinery
// ---------------------------------------------------------------------------

double ks_critical(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("ks_critical: alpha must be in (0, 1)");
  }
  // Exact asymptotic quantile: solve the alternating Kolmogorov tail series
  // 2 * sum_k (-1)^(k-1) exp(-2 k^2 c^2) = alpha by bisection (the tail is
  // strictly decreasing in c).
  auto tail = [](double c) {
    double s = 0.0;
    for (int k = 1; k <= 1000; ++k) {
      const double term = std::exp(-2.0 * k * k * c * c);
      if (term < 1e-18) break;
      s += (k % 2 == 1) ? term : -term;
    }
    return 2.0 * s;
  };
  double lo = 1e-8;
  double hi = 4.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (tail(mid) > alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-15 * hi) break;
  }
  return 0.5 * (lo + hi);
}

KsReport ks_distance(const std::vector<double>& sample,
                     const std::function<double(double)>& cdf, double alpha) {
  if (sample.empty()) {
    throw std::invalid_argument("ks_distance: sample must be non-empty");
  }
  std::vector<double> x = sample;
  std::sort(x.begin(), x.end());
  const auto n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = std::clamp(cdf(x[i]), 0.0, 1.0);
    d = std::max(d, f - static_cast<double>(i) / n);
    d = std::max(d, static_cast<double>(i + 1) / n - f);
  }
  KsReport out;
  out.statistic = d;
  out.n_effective = x.size();
  out.threshold = ks_critical(alpha) / std::sqrt(n);
  out.pass = out.statistic <= out.threshold;
  return out;
}

KsReport ks_two_sample(const std::vector<double>& first,
                       const std::vector<double>& second, double alpha) {
  if (first.empty() || second.empty()) {
    throw std::invalid_argument("ks_two_sample: samples must be non-empty");
  }
  std::vector<double> a = first;
  std::vector<double> b = second;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto n = static_cast<double>(a.size());
  const auto m = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n -
                             static_cast<double>(j) / m));
  }
  KsReport out;
  out.statistic = d;
  out.n_effective = static_cast<std::size_t>(
      std::max(1.0, std::round(n * m / (n + m))));
  out.threshold = ks_critical(alpha) * std::sqrt((n + m) / (n * m));
  out.pass = out.statistic <= out.threshold;
  return out;
}

// ---------------------------------------------------------------------------
// Wilson interval
// ---------------------------------------------------------------------------

WilsonInterval wilson_interval(std::size_t successes, std::size_t n, double z) {
  if (n == 0) throw std::invalid_argument("wilson_interval: n must be positive");
  if (successes > n) {
    throw std::invalid_argument("wilson_interval: successes exceed n");
  }
  const auto nn = static_cast<double>(n);
  const double ph = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (ph + z2 / (2.0 * nn)) / denom;
  const double half =
      (z / denom) * std::sqrt(ph * (1.0 - ph) / nn + z2 / (4.0 * nn * nn));
  WilsonInterval out;
  out.lower = successes == 0 ? 0.0 : std::max(0.0, center - half);
  out.upper = successes == n ? 1.0 : std::min(1.0, center + half);
  return out;
}

// ---------------------------------------------------------------------------
// Deterministic replicate scheduling
// ---------------------------------------------------------------------------

void parallel_replicates(std::size_t n, unsigned workers,
                         const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t nw = std::max<std::size_t>(
      1, std::min<std::size_t>(workers == 0 ? 1 : workers, n));
  if (nw == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(nw);
  const std::size_t chunk = (n + nw - 1) / nw;
  for (std::size_t w = 0; w < nw; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi]() {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Straddling-excursion study
// ---------------------------------------------------------------------------

StraddleStudy run_straddle_study(const Interval& iv, double t,
                                 std::size_t n_target, double start,
                                 const GridSpec& grid,
                                 std::uint64_t master_seed, unsigned workers,
                                 std::uint64_t replicate_base) {
  if (n_target == 0) {
    throw std::invalid_argument("run_straddle_study: n_target must be positive");
  }
  if (!(start >= iv.a && start <= iv.b)) {
    throw std::invalid_argument("run_straddle_study: start must lie in [a, b]");
  }
  const std::size_t t_node = grid_node(t, grid.coarse_dt, "run_straddle_study");
  const double tt = static_cast<double>(t_node) * grid.coarse_dt;
  const double sd = std::sqrt(tt);
  const double p_in =
      normal_cdf((iv.b - start) / sd) - normal_cdf((iv.a - start) / sd);

  auto draw = [&](std::uint64_t r, StraddleObservation& rec) -> bool {
    const std::uint64_t rep = replicate_base + r;
    RngStream value = value_stream(master_seed, rep);
    const double w_t = start + sd * value.at(t_node).gaussian();
    if (!iv.contains(w_t)) return false;
    SampledPath path({0.0, tt}, {start, w_t}, grid.coarse_dt, std::move(value),
                     refine_stream(master_seed, rep));
    rec = observe_straddle(path, iv, t_node, grid.fine_dt, r);
    rec.zeta.reset();  // keep the scalar functionals only
    return true;
  };

  auto [accepted, candidates] = collect_accepted<StraddleObservation>(
      n_target, p_in, workers, /*hard_cap=*/1ull << 26,
      /*batch_cap=*/1ull << 20, draw);

  StraddleStudy out;
  out.t = tt;
  out.observations = std::move(accepted);
  out.candidates = candidates;
  out.acceptance_rate =
      static_cast<double>(n_target) / static_cast<double>(candidates);
  for (const auto& obs : out.observations) {
    if (obs.never_exited) ++out.never_exited;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bucket comparison
// ---------------------------------------------------------------------------

namespace {

struct RefBatch {
  // One row of functional values per aged draw, MC functionals only.
  std::vector<std::vector<double>> values;  // [functional][draw]
};

// Aged draws at a single (boundary, age) point, evaluated on every
// non-analytic functional in `fns`.
RefBatch reference_batch(const Interval& iv, double boundary, double s,
                         double theta, const std::vector<FunctionalId>& fns,
                         std::size_t n_draws, const GridSpec& grid,
                         std::uint64_t master_seed, std::uint64_t rep_base,
                         unsigned workers) {
  RefBatch out;
  out.values.assign(fns.size(), std::vector<double>(n_draws, 0.0));
  parallel_replicates(n_draws, workers, [&](std::size_t i) {
    LimitSample ls;
    ls.x = boundary;
    ls.y = s;
    ls.zeta = sample_aged_excursion(iv, boundary, s,
                                    limit_stream(master_seed, rep_base + i),
                                    grid);
    for (std::size_t f = 0; f < fns.size(); ++f) {
      out.values[f][i] = eval_functional(fns[f], ls, iv, theta);
    }
  });
  return out;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_and_se(const std::vector<double>& xs) {
  MeanSe out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) /
                       static_cast<double>(xs.size()));
  }
  return out;
}

}  // namespace

std::vector<BucketReport> bucket_reports(
    const std::vector<StraddleObservation>& observations, const Interval& iv,
    const GridSpec& grid, std::uint64_t master_seed,
    const BucketCheckConfig& cfg, unsigned workers,
    std::vector<double>* edges_out) {
  if (cfg.s_buckets == 0 || cfg.s_buckets > 16) {
    throw std::invalid_argument("bucket_reports: s_buckets must be in [1, 16]");
  }
  if (cfg.functionals.empty()) {
    throw std::invalid_argument("bucket_reports: functional list is empty");
  }
  if (cfg.reference_draws < 2 || cfg.edge_draws < 2 ||
      cfg.reference_draws > kBucketRefStride ||
      cfg.edge_draws > kBucketRefStride) {
    throw std::invalid_argument("bucket_reports: reference draw count out of range");
  }

  std::vector<const StraddleObservation*> incl;
  incl.reserve(observations.size());
  for (const auto& obs : observations) {
    if (!obs.never_exited) incl.push_back(&obs);
  }
  if (incl.empty()) {
    throw std::invalid_argument("bucket_reports: no completed excursions");
  }

  // Empirical age-quantile edges shared by both boundary classes.
  std::vector<double> ages;
  ages.reserve(incl.size());
  for (const auto* obs : incl) ages.push_back(obs->t - obs->sigma);
  std::sort(ages.begin(), ages.end());
  const std::size_t K = cfg.s_buckets;
  std::vector<double> edges(K + 1, 0.0);
  edges.front() = ages.front();
  edges.back() = ages.back();
  for (std::size_t j = 1; j < K; ++j) {
    edges[j] = ages[j * ages.size() / K];
  }
  if (edges_out != nullptr) *edges_out = edges;

  // Assign observations: side-major, bucket-minor.
  std::vector<std::vector<const StraddleObservation*>> bucket(2 * K);
  for (const auto* obs : incl) {
    const std::size_t side = obs->x_sigma == iv.a ? 0 : 1;
    const double age = obs->t - obs->sigma;
    std::size_t j = K - 1;
    for (std::size_t cand = 0; cand + 1 < K; ++cand) {
      if (age < edges[cand + 1]) {
        j = cand;
        break;
      }
    }
    bucket[side * K + j].push_back(obs);
  }

  // Split the requested functionals into analytic-reference (lifetime tail)
  // and sampled-reference groups; the latter share one set of aged draws.
  std::vector<FunctionalId> mc_fns;
  for (FunctionalId f : cfg.functionals) {
    if (f != FunctionalId::kLifetimeTail) mc_fns.push_back(f);
  }

  std::vector<BucketReport> reports;
  reports.reserve(cfg.functionals.size() * 2 * K);

  struct BucketRefs {
    bool drawn = false;
    RefBatch mid, lo, hi;
  };
  std::vector<BucketRefs> refs(2 * K);

  for (std::size_t side = 0; side < 2; ++side) {
    const double boundary = side == 0 ? iv.a : iv.b;
    for (std::size_t j = 0; j < K; ++j) {
      const auto& members = bucket[side * K + j];
      const double s_lo = edges[j];
      const double s_hi = edges[j + 1];
      const double s_mid = 0.5 * (s_lo + s_hi);
      const double theta = s_mid + cfg.tail_offset;
      auto& br = refs[side * K + j];
      if (!mc_fns.empty() && members.size() >= cfg.min_bucket) {
        const std::uint64_t slot = (side * K + j) * 3;
        br.mid = reference_batch(iv, boundary, s_mid, theta, mc_fns,
                                 cfg.reference_draws, grid, master_seed,
                                 kBucketRefBase + slot * kBucketRefStride,
                                 workers);
        br.lo = reference_batch(iv, boundary, s_lo, theta, mc_fns,
                                cfg.edge_draws, grid, master_seed,
                                kBucketRefBase + (slot + 1) * kBucketRefStride,
                                workers);
        br.hi = reference_batch(iv, boundary, s_hi, theta, mc_fns,
                                cfg.edge_draws, grid, master_seed,
                                kBucketRefBase + (slot + 2) * kBucketRefStride,
                                workers);
        br.drawn = true;
      }
    }
  }

  for (FunctionalId f : cfg.functionals) {
    std::size_t mc_index = mc_fns.size();
    for (std::size_t k = 0; k < mc_fns.size(); ++k) {
      if (mc_fns[k] == f) mc_index = k;
    }
    for (std::size_t side = 0; side < 2; ++side) {
      const double boundary = side == 0 ? iv.a : iv.b;
      for (std::size_t j = 0; j < K; ++j) {
        const auto& members = bucket[side * K + j];
        BucketReport rep;
        rep.functional = f;
        rep.x_sigma = boundary;
        rep.s_low = edges[j];
        rep.s_high = edges[j + 1];
        rep.s_mid = 0.5 * (rep.s_low + rep.s_high);
        rep.n_obs = members.size();
        const double theta = rep.s_mid + cfg.tail_offset;

        std::vector<double> emp;
        emp.reserve(members.size());
        for (const auto* obs : members) {
          emp.push_back(eval_functional(f, *obs, iv, theta));
        }
        const MeanSe e = mean_and_se(emp);
        rep.empirical_mean = e.mean;

        if (f == FunctionalId::kLifetimeTail) {
          // Conditional tail of the lifetime given survival to age s:
          // analytic, with the bucket drift bounded exactly at the edges.
          auto tail = [&](double s) {
            return theta <= s ? 1.0
                              : exit_rate(iv, boundary, theta) /
                                    exit_rate(iv, boundary, s);
          };
          rep.reference_mean = tail(rep.s_mid);
          rep.allowance = std::max(std::abs(tail(rep.s_low) - rep.reference_mean),
                                   std::abs(tail(rep.s_high) - rep.reference_mean));
          rep.combined_se = e.se + rep.allowance / 3.0;
        } else if (refs[side * K + j].drawn) {
          const auto& br = refs[side * K + j];
          const MeanSe rm = mean_and_se(br.mid.values[mc_index]);
          const MeanSe rl = mean_and_se(br.lo.values[mc_index]);
          const MeanSe rh = mean_and_se(br.hi.values[mc_index]);
          rep.reference_mean = rm.mean;
          rep.allowance = std::max(std::abs(rl.mean - rm.mean),
                                   std::abs(rh.mean - rm.mean));
          rep.combined_se =
              std::sqrt(e.se * e.se + rm.se * rm.se) + rep.allowance / 3.0;
        }

        if (members.size() < cfg.min_bucket) {
          rep.skipped = true;
          rep.pass = true;
        } else {
          rep.pass = std::abs(rep.empirical_mean - rep.reference_mean) <=
                     3.0 * rep.combined_se;
        }
        reports.push_back(rep);
      }
    }
  }
  return reports;
}

IdentityCheck check_straddle_identity(const Interval& iv, double t,
                                      std::size_t n_target, double start,
                                      const GridSpec& grid,
                                      std::uint64_t master_seed,
                                      const BucketCheckConfig& cfg,
                                      unsigned workers) {
  IdentityCheck out;
  out.study = run_straddle_study(iv, t, n_target, start, grid, master_seed,
                                 workers, /*replicate_base=*/0);
  out.reports = bucket_reports(out.study.observations, iv, grid, master_seed,
                               cfg, workers, &out.s_edges);
  return out;
}

// ---------------------------------------------------------------------------
// Convergence toward the limiting law
// ---------------------------------------------------------------------------

ConvergenceTable check_limit_convergence(const Interval& iv,
                                         const std::vector<double>& t_list,
                                         std::size_t n_target, double start,
                                         const GridSpec& grid,
                                         std::uint64_t master_seed,
                                         std::size_t reference_draws,
                                         unsigned workers) {
  if (t_list.empty() || t_list.size() > 16) {
    throw std::invalid_argument(
        "check_limit_convergence: need between 1 and 16 observation times");
  }
  if (reference_draws < 2 || reference_draws > (1ull << 24)) {
    throw std::invalid_argument(
        "check_limit_convergence: reference_draws out of range");
  }

  // One shared limiting-law sample; evaluated on the continuous functionals.
  std::vector<double> ref_endpoint(reference_draws);
  std::vector<double> ref_supdisp(reference_draws);
  std::vector<double> ref_occ(reference_draws);
  parallel_replicates(reference_draws, workers, [&](std::size_t i) {
    const LimitSample ls = sample_p0(iv, grid, master_seed, kP0ConvBase + i);
    ref_endpoint[i] = eval_functional(FunctionalId::kEndpointDisp, ls, iv);
    ref_supdisp[i] = eval_functional(FunctionalId::kSupDisp, ls, iv);
    ref_occ[i] = eval_functional(FunctionalId::kOccAboveMid, ls, iv);
  });

  ConvergenceTable table;
  table.reference_draws = reference_draws;
  for (std::size_t row = 0; row < t_list.size(); ++row) {
    const StraddleStudy study =
        run_straddle_study(iv, t_list[row], n_target, start, grid, master_seed,
                           workers, row * kStudyStride);
    ConvergenceRow r;
    r.t = study.t;
    r.n_never_exited = study.never_exited;

    std::vector<double> ages, endpoint, supdisp, occ;
    std::size_t low = 0;
    for (const auto& obs : study.observations) {
      if (obs.never_exited) continue;
      ages.push_back(obs.t - obs.sigma);
      endpoint.push_back(obs.endpoint_disp);
      supdisp.push_back(obs.sup_disp);
      occ.push_back(obs.occ_above_mid);
      if (obs.x_sigma == iv.a) ++low;
    }
    r.n_included = ages.size();
    if (r.n_included == 0) {
      throw std::runtime_error(
          "check_limit_convergence: no completed excursions at t=" +
          std::to_string(study.t));
    }
    r.age_ks = ks_distance(ages, [&](double s) { return limit_cdf(iv, s); });
    r.frac_low = static_cast<double>(low) / static_cast<double>(r.n_included);
    r.side_ci = wilson_interval(low, r.n_included);
    r.side_pass = r.side_ci.lower <= 0.5 && 0.5 <= r.side_ci.upper;
    r.endpoint_ks = ks_two_sample(endpoint, ref_endpoint);
    r.supdisp_ks = ks_two_sample(supdisp, ref_supdisp);
    r.occ_ks = ks_two_sample(occ, ref_occ);
    table.rows.push_back(r);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Application event probability
// ---------------------------------------------------------------------------

ApplicationStudy application_study(const Interval& iv, double t,
                                   std::size_t n_direct, std::size_t n_p0,
                                   const std::vector<double>& u_list,
                                   const std::vector<double>& y_list,
                                   const GridSpec& grid,
                                   std::uint64_t master_seed,
                                   unsigned workers) {
  if (u_list.empty() || y_list.empty()) {
    throw std::invalid_argument("application_study: window lists are empty");
  }
  if (n_p0 == 0 || n_p0 > (1ull << 24)) {
    throw std::invalid_argument("application_study: n_p0 out of range");
  }

  ApplicationStudy out;
  out.study = run_straddle_study(iv, t, n_direct, iv.a, grid, master_seed,
                                 workers, kAppStudyBase);
  out.n_p0 = n_p0;

  struct P0Rec {
    double age = 0.0;
    double disp = 0.0;
    bool from_b = false;
  };
  std::vector<P0Rec> p0(n_p0);
  parallel_replicates(n_p0, workers, [&](std::size_t i) {
    const LimitSample ls = sample_p0(iv, grid, master_seed, kP0AppBase + i);
    p0[i].age = ls.y;
    p0[i].disp = eval_functional(FunctionalId::kEndpointDisp, ls, iv);
    p0[i].from_b = ls.x == iv.b;
  });

  const auto n_d = static_cast<double>(out.study.observations.size());
  const auto n_p = static_cast<double>(n_p0);
  for (double u : u_list) {
    for (double y : y_list) {
      ApplicationCell cell;
      cell.u = u;
      cell.y = y;
      for (const auto& obs : out.study.observations) {
        if (obs.never_exited) continue;  // no exit before t, counts as a miss
        const double age = obs.t - obs.sigma;
        if (age < u && obs.endpoint_disp > 0.0 && obs.endpoint_disp < y) {
          ++cell.direct_hits;
        }
      }
      for (const auto& rec : p0) {
        if (rec.age < u && rec.disp > 0.0 && rec.disp < y) {
          ++cell.p0_hits;
          if (rec.from_b) ++cell.p0_from_b_hits;
        }
      }
      cell.direct_estimate = static_cast<double>(cell.direct_hits) / n_d;
      cell.p0_estimate = static_cast<double>(cell.p0_hits) / n_p;
      cell.direct_ci =
          wilson_interval(cell.direct_hits, out.study.observations.size());
      cell.p0_ci = wilson_interval(cell.p0_hits, n_p0);
      const double vd = cell.direct_estimate * (1.0 - cell.direct_estimate) / n_d;
      const double vp = cell.p0_estimate * (1.0 - cell.p0_estimate) / n_p;
      cell.combined_se = std::sqrt(vd + vp);
      cell.agree = std::abs(cell.direct_estimate - cell.p0_estimate) <=
                   3.0 * std::max(cell.combined_se, 1e-12);
      out.cells.push_back(cell);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Boundary excursion-rate check
// ---------------------------------------------------------------------------

RateCheck excursion_rate_check(const Interval& iv, double horizon,
                               double s_threshold, double eps,
                               const GridSpec& grid, std::uint64_t master_seed,
                               std::size_t replicates, unsigned workers,
                               double rel_tol) {
  if (replicates == 0 || replicates > (1ull << 20)) {
    throw std::invalid_argument("excursion_rate_check: replicates out of range");
  }
  if (!(s_threshold > 0.0) || !(eps > 0.0) || !(horizon > s_threshold)) {
    throw std::invalid_argument("excursion_rate_check: bad scalar inputs");
  }
  const std::size_t through =
      grid_node(horizon, grid.coarse_dt, "excursion_rate_check");

  struct RepStats {
    std::size_t count = 0;
    double down = 0.0;
    double occ = 0.0;
  };
  std::vector<RepStats> per_rep(replicates);
  const double floor_dt = eps * eps / 9.0;
  parallel_replicates(replicates, workers, [&](std::size_t r) {
    SampledPath path = simulate_path(iv.a, horizon, grid, master_seed,
                                     kRatePathBase + r);
    const auto excs = enumerate_excursions(path, iv, through, grid.fine_dt);
    RepStats st;
    for (const auto& e : excs) {
      if (e.begin.barrier == iv.a && e.end.time - e.begin.time > s_threshold) {
        ++st.count;
      }
    }
    const StripStats strip = strip_statistics(path, iv.a, eps, floor_dt);
    st.down = strip.downcrossing_local_time;
    st.occ = strip.occupation_local_time;
    per_rep[r] = st;
  });

  RateCheck out;
  out.replicates = replicates;
  out.horizon = static_cast<double>(through) * grid.coarse_dt;
  out.s_threshold = s_threshold;
  out.eps = eps;
  for (const auto& st : per_rep) {
    out.qualifying += st.count;
    out.local_time_down += st.down;
    out.local_time_occ += st.occ;
  }
  if (!(out.local_time_down > 0.0)) {
    throw std::runtime_error("excursion_rate_check: zero local-time estimate");
  }
  out.ratio = static_cast<double>(out.qualifying) / out.local_time_down;
  out.reference = exit_rate(iv, iv.a, s_threshold);
  out.rel_err = std::abs(out.ratio / out.reference - 1.0);
  out.pass = out.rel_err <= rel_tol;
  return out;
}

// ---------------------------------------------------------------------------
// Sampler cross-certification
// ---------------------------------------------------------------------------

namespace {

struct OracleRec {
  double endpoint = 0.0;
  double lifetime = 0.0;
  double supdisp = 0.0;
};

// One small-offset oracle candidate: a plain Brownian path from
// boundary +/- eps, accepted only if the exact step flags keep it strictly
// inside the interval through age s, then continued to its located exit.
bool oracle_candidate(const Interval& iv, double boundary, double dir,
                      double eps, std::size_t n_s, const GridSpec& grid,
                      std::uint64_t master_seed, std::uint64_t rep,
                      OracleRec& rec) {
  constexpr std::size_t kNodeBudget = 10'000'000;
  SampledPath path({0.0}, {boundary + dir * eps}, grid.coarse_dt,
                   value_stream(master_seed, rep),
                   refine_stream(master_seed, rep));
  std::size_t k = 0;
  while (k < n_s) {
    extend_to_node(path, k + 1);
    if (coarse_step_touched(path, iv, k)) return false;
    ++k;
  }
  rec.endpoint = path.value(n_s) - boundary;
  for (;;) {
    extend_to_node(path, k + 1);
    if (coarse_step_touched(path, iv, k)) break;
    if (++k > kNodeBudget) {
      throw std::runtime_error("oracle_candidate: node budget exhausted");
    }
  }
  const BoundaryHit hit =
      locate_touch(path, iv, k, grid.fine_dt, /*last_touch=*/false);
  rec.lifetime = hit.time;
  double sup = std::abs(hit.barrier - boundary);
  for (std::size_t i = 0; i < path.size() && path.time(i) < hit.time; ++i) {
    sup = std::max(sup, std::abs(path.value(i) - boundary));
  }
  rec.supdisp = sup;
  return true;
}

}  // namespace

SamplerCertification validate_samplers(const Interval& iv,
                                       const GridSpec& grid,
                                       std::uint64_t master_seed,
                                       std::size_t n_draws, double eps,
                                       const std::vector<double>& s_list,
                                       unsigned workers) {
  if (n_draws < 2 || n_draws > kCertStride) {
    throw std::invalid_argument("validate_samplers: n_draws out of range");
  }
  if (!(eps > 0.0 && eps < 0.1 * iv.length())) {
    throw std::invalid_argument("validate_samplers: eps out of range");
  }
  if (s_list.empty() || s_list.size() > 4) {
    throw std::invalid_argument(
        "validate_samplers: need between 1 and 4 ages");
  }

  SamplerCertification out;
  out.eps = eps;
  for (std::size_t si = 0; si < s_list.size(); ++si) {
    const double s = s_list[si];
    const std::size_t n_s = grid_node(s, grid.coarse_dt, "validate_samplers");
    for (std::size_t side = 0; side < 2; ++side) {
      const double boundary = side == 0 ? iv.a : iv.b;
      const double dir = side == 0 ? 1.0 : -1.0;
      const std::uint64_t combo = si * 2 + side;

      // Direct sampler draws.
      std::vector<double> smp_end(n_draws), smp_life(n_draws), smp_sup(n_draws);
      parallel_replicates(n_draws, workers, [&](std::size_t i) {
        const Excursion z = sample_aged_excursion(
            iv, boundary, s,
            limit_stream(master_seed, combo * kCertStride + i), grid);
        smp_end[i] = z.value_at(s) - boundary;
        smp_life[i] = z.lifetime;
        smp_sup[i] = sup_displacement(z);
      });

      // Oracle draws: acceptance probability is exactly the no-exit
      // probability from the offset start, available analytically.
      const double p_survive = psi(iv, boundary + dir * eps, s);
      auto draw = [&](std::uint64_t r, OracleRec& rec) -> bool {
        return oracle_candidate(iv, boundary, dir, eps, n_s, grid, master_seed,
                                kOracleBase + combo * kOracleStride + r, rec);
      };
      auto [oracle, starts] = collect_accepted<OracleRec>(
          n_draws, p_survive, workers, /*hard_cap=*/1ull << 29,
          /*batch_cap=*/1ull << 22, draw);
      std::vector<double> orc_end(n_draws), orc_life(n_draws), orc_sup(n_draws);
      for (std::size_t i = 0; i < n_draws; ++i) {
        orc_end[i] = oracle[i].endpoint;
        orc_life[i] = oracle[i].lifetime;
        orc_sup[i] = oracle[i].supdisp;
      }

      SamplerCheckRow row;
      row.boundary = boundary;
      row.s = s;
      row.n_draws = n_draws;
      row.oracle_starts = starts;
      row.endpoint_ks = ks_two_sample(smp_end, orc_end);
      row.lifetime_ks = ks_two_sample(smp_life, orc_life);
      row.supdisp_ks = ks_two_sample(smp_sup, orc_sup);
      out.rows.push_back(row);
    }
  }

  // Cross-regime agreement at an age both regimes handle comfortably.
  out.agreement_s = iv.length() * iv.length();
  {
    const double s = out.agreement_s;
    std::vector<double> rej(n_draws), stp(n_draws);
    parallel_replicates(n_draws, workers, [&](std::size_t i) {
      const Excursion a = sample_aged_excursion_rejection(
          iv, iv.a, s, limit_stream(master_seed, kRegimeBaseA + i), grid);
      rej[i] = a.value_at(s) - iv.a;
      const Excursion b = sample_aged_excursion_stepwise(
          iv, iv.a, s, limit_stream(master_seed, kRegimeBaseB + i), grid);
      stp[i] = b.value_at(s) - iv.a;
    });
    out.regime_agreement = ks_two_sample(rej, stp);
  }
  return out;
}

}  // namespace excurlab
