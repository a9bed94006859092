#include <excurlab/analytic.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace excurlab {

namespace {

constexpr double kPi = 3.14159265358979323846;
// Unit-scale time below which the reflection / theta representations are
// used instead of the spectral series (whose terms decay too slowly there).
constexpr double kSmallTimeSwitch = 0.05;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }
double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi);
}

void validate_config(const SeriesConfig& cfg) {
  if (!(cfg.tail_tol > 0.0) || !std::isfinite(cfg.tail_tol)) {
    throw std::invalid_argument("SeriesConfig.tail_tol must be finite and > 0");
  }
  if (cfg.max_terms < 1) {
    throw std::invalid_argument("SeriesConfig.max_terms must be >= 1");
  }
}

[[noreturn]] void throw_budget(const char* what) {
  throw std::runtime_error(std::string("series truncation budget exhausted in ") + what);
}

void require_time(double s, const char* fn) {
  if (!std::isfinite(s) || s < 0.0) {
    throw std::invalid_argument(std::string(fn) + ": time must be finite and >= 0");
  }
}

// Survival probability on the unit interval at unit-scale time sigma,
// started from u in [0, 1], via the spectral series.
SeriesValue psi_unit_spectral(double u, double sigma, const SeriesConfig& cfg) {
  const double beta = kPi * kPi * sigma / 2.0;
  SeriesValue out;
  double sum = 0.0;
  for (int k = 1;; k += 2) {
    sum += (4.0 / (k * kPi)) * std::sin(k * kPi * u) * std::exp(-double(k) * k * beta);
    ++out.terms;
    const int kn = k + 2;
    const double next = (4.0 / (kn * kPi)) * std::exp(-double(kn) * kn * beta);
    const double ratio = std::exp(-(4.0 * k + 12.0) * beta);
    const double tail = next / (1.0 - ratio);
    if (tail <= cfg.tail_tol) {
      out.tail_bound = tail;
      break;
    }
    if (out.terms >= cfg.max_terms) throw_budget("psi (spectral branch)");
  }
  out.value = std::clamp(sum, 0.0, 1.0);
  return out;
}

// Same survival probability via reflected Gaussian images; accurate and
// cheap precisely where the spectral series is slow (small sigma).
SeriesValue psi_unit_images(double u, double sigma, const SeriesConfig& cfg) {
  const double rs = std::sqrt(sigma);
  const auto term = [&](int n) {
    const double shift = 2.0 * n;
    return normal_cdf((1.0 - u - shift) / rs) - normal_cdf((-u - shift) / rs) -
           normal_cdf((1.0 + u - shift) / rs) + normal_cdf((u - shift) / rs);
  };
  SeriesValue out;
  double sum = term(0);
  out.terms = 1;
  for (int m = 1;; ++m) {
    sum += term(m) + term(-m);
    out.terms += 2;
    // Every image with |n| > m lies at distance >= 2m + 1 from [0, 1], so
    // each remaining pair is bounded by 8 * normal_sf((2m+1)/rs) and the
    // pair bounds decay faster than geometrically with huge ratio.
    const double tail = 16.0 * normal_sf((2.0 * m + 1.0) / rs);
    if (tail <= cfg.tail_tol) {
      out.tail_bound = tail;
      break;
    }
    if (out.terms >= cfg.max_terms) throw_budget("psi (image branch)");
  }
  out.value = std::clamp(sum, 0.0, 1.0);
  return out;
}

SeriesValue limit_cdf_unit_spectral(double sigma, const SeriesConfig& cfg) {
  const double beta = kPi * kPi * sigma / 2.0;
  SeriesValue out;
  double deficit = 0.0;
  for (int k = 1;; k += 2) {
    deficit += (8.0 / (double(k) * k * kPi * kPi)) * std::exp(-double(k) * k * beta);
    ++out.terms;
    const int kn = k + 2;
    const double next =
        (8.0 / (double(kn) * kn * kPi * kPi)) * std::exp(-double(kn) * kn * beta);
    const double ratio = std::exp(-(4.0 * k + 12.0) * beta);
    const double tail = next / (1.0 - ratio);
    if (tail <= cfg.tail_tol) {
      out.tail_bound = tail;
      break;
    }
    if (out.terms >= cfg.max_terms) throw_budget("limit_cdf (spectral branch)");
  }
  out.value = std::clamp(1.0 - deficit, 0.0, 1.0);
  return out;
}

// Small-time form of the lifetime CDF.  Integrating the image representation
// of 1 - psi over the interval telescopes the linear parts exactly, leaving
//   F(sigma) = 4 sqrt(sigma) [ pdf(0) + 2 sum_{m>=1} (-1)^m g(m / sqrt(sigma)) ]
// with g(v) = pdf(v) - v * sf(v), an alternating series with decreasing
// terms, so the remainder is bounded by the first omitted term.
SeriesValue limit_cdf_unit_images(double sigma, const SeriesConfig& cfg) {
  const double rs = std::sqrt(sigma);
  const auto g = [](double v) { return normal_pdf(v) - v * normal_sf(v); };
  SeriesValue out;
  double bracket = normal_pdf(0.0);
  out.terms = 1;
  for (int m = 1;; ++m) {
    const double piece = 2.0 * g(m / rs);
    bracket += (m % 2 == 0) ? piece : -piece;
    ++out.terms;
    const double tail = 4.0 * rs * 2.0 * g((m + 1) / rs);
    if (tail <= cfg.tail_tol) {
      out.tail_bound = tail;
      break;
    }
    if (out.terms >= cfg.max_terms) throw_budget("limit_cdf (image branch)");
  }
  out.value = std::clamp(4.0 * rs * bracket, 0.0, 1.0);
  return out;
}

SeriesValue exit_rate_unit_spectral(double sigma, const SeriesConfig& cfg) {
  const double beta = kPi * kPi * sigma / 2.0;
  SeriesValue out;
  double sum = 0.0;
  for (int k = 1;; k += 2) {
    sum += 2.0 * std::exp(-double(k) * k * beta);
    ++out.terms;
    const int kn = k + 2;
    const double next = 2.0 * std::exp(-double(kn) * kn * beta);
    const double ratio = std::exp(-(4.0 * k + 12.0) * beta);
    const double tail = next / (1.0 - ratio);
    if (tail <= cfg.tail_tol) {
      out.tail_bound = tail;
      break;
    }
    if (out.terms >= cfg.max_terms) throw_budget("exit_rate (spectral branch)");
  }
  out.value = sum;
  return out;
}

// Jacobi theta transform of the spectral sum: converges in a couple of terms
// for small sigma, where the spectral form would need ~1/sqrt(sigma) terms.
SeriesValue exit_rate_unit_theta(double sigma, const SeriesConfig& cfg) {
  const double pref = std::sqrt(2.0 / (kPi * sigma));
  SeriesValue out;
  double bracket = 0.5;
  out.terms = 1;
  for (int m = 1;; ++m) {
    const double piece = std::exp(-double(m) * m / (2.0 * sigma));
    bracket += (m % 2 == 0) ? piece : -piece;
    ++out.terms;
    const double tail = pref * std::exp(-double(m + 1) * (m + 1) / (2.0 * sigma));
    if (tail <= cfg.tail_tol) {
      out.tail_bound = tail;
      break;
    }
    if (out.terms >= cfg.max_terms) throw_budget("exit_rate (theta branch)");
  }
  out.value = pref * bracket;
  return out;
}

}  // namespace

SeriesValue psi_ex(const Interval& iv, double x, double s, const SeriesConfig& cfg) {
  validate_config(cfg);
  require_time(s, "psi");
  if (!std::isfinite(x) || x < iv.a || x > iv.b) {
    throw std::invalid_argument("psi: start point must lie in [a, b]");
  }
  const double len = iv.length();
  const double u = (x - iv.a) / len;
  if (u == 0.0 || u == 1.0) return SeriesValue{0.0, 0.0, 0};
  if (s == 0.0) return SeriesValue{1.0, 0.0, 0};
  const double sigma = s / (len * len);
  return sigma < kSmallTimeSwitch ? psi_unit_images(u, sigma, cfg)
                                  : psi_unit_spectral(u, sigma, cfg);
}

double psi(const Interval& iv, double x, double s, const SeriesConfig& cfg) {
  return psi_ex(iv, x, s, cfg).value;
}

SeriesValue limit_cdf_ex(const Interval& iv, double s, const SeriesConfig& cfg) {
  validate_config(cfg);
  require_time(s, "limit_cdf");
  if (s == 0.0) return SeriesValue{0.0, 0.0, 0};
  const double len = iv.length();
  const double sigma = s / (len * len);
  return sigma < kSmallTimeSwitch ? limit_cdf_unit_images(sigma, cfg)
                                  : limit_cdf_unit_spectral(sigma, cfg);
}

double limit_cdf(const Interval& iv, double s, const SeriesConfig& cfg) {
  return limit_cdf_ex(iv, s, cfg).value;
}

double limit_cdf_quadrature(const Interval& iv, double s, const SeriesConfig& cfg) {
  validate_config(cfg);
  require_time(s, "limit_cdf_quadrature");
  if (s == 0.0) return 0.0;
  const auto integrand = [&](double x) { return 1.0 - psi(iv, x, s, cfg); };
  const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, iv.a, iv.b, 12, 1e-13);
  return std::clamp(integral / iv.length(), 0.0, 1.0);
}

double limit_cdf_inverse(const Interval& iv, double p, const SeriesConfig& cfg) {
  validate_config(cfg);
  if (!std::isfinite(p) || p < 0.0 || p >= 1.0) {
    throw std::invalid_argument("limit_cdf_inverse: p must lie in [0, 1)");
  }
  if (p == 0.0) return 0.0;
  SeriesConfig tight = cfg;
  tight.tail_tol = std::min(cfg.tail_tol, 1e-12);
  const double len = iv.length();
  double lo = 0.0;
  double hi = len * len;
  for (int i = 0; limit_cdf(iv, hi, tight) < p; ++i) {
    if (i > 200) throw std::runtime_error("limit_cdf_inverse: bracket expansion failed");
    hi *= 2.0;
  }
  double mid = 0.5 * hi;
  for (int i = 0; i < 400; ++i) {
    mid = 0.5 * (lo + hi);
    const double fm = limit_cdf(iv, mid, tight);
    if (std::abs(fm - p) <= 1e-10) return mid;
    (fm < p ? lo : hi) = mid;
    if (hi - lo <= std::numeric_limits<double>::epsilon() * hi) break;
  }
  return mid;
}

double ito_tail(double t) {
  if (!std::isfinite(t) || t <= 0.0) {
    throw std::invalid_argument("ito_tail: t must be finite and > 0");
  }
  return std::sqrt(2.0 / (kPi * t));
}

SeriesValue exit_rate_ex(const Interval& iv, double x, double s, const SeriesConfig& cfg) {
  validate_config(cfg);
  if (x != iv.a && x != iv.b) {
    throw std::invalid_argument("exit_rate: x must be one of the interval endpoints");
  }
  if (!std::isfinite(s) || s <= 0.0) {
    throw std::invalid_argument("exit_rate: s must be finite and > 0");
  }
  const double len = iv.length();
  const double sigma = s / (len * len);
  SeriesValue out = sigma < kSmallTimeSwitch ? exit_rate_unit_theta(sigma, cfg)
                                             : exit_rate_unit_spectral(sigma, cfg);
  out.value /= len;
  out.tail_bound /= len;
  return out;
}

double exit_rate(const Interval& iv, double x, double s, const SeriesConfig& cfg) {
  return exit_rate_ex(iv, x, s, cfg).value;
}

}  // namespace excurlab
