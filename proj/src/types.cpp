// SPDX-License-Identifier: Apache-2.0
#include "excurlab/types.hpp"

#include <algorithm>
#include <cmath>

namespace excurlab {

Interval::Interval(double a_, double b_) : a(a_), b(b_) {
  if (!std::isfinite(a) || !std::isfinite(b))
    throw std::invalid_argument("Interval: endpoints must be finite");
  if (!(a < b)) throw std::invalid_argument("Interval: requires a < b");
}

SampledPath::SampledPath(std::vector<double> times, std::vector<double> values, double base_dt,
                         RngStream value_rng, RngStream refine_rng)
    : times_(std::move(times)),
      values_(std::move(values)),
      base_dt_(base_dt),
      value_rng_(value_rng),
      refine_rng_(refine_rng) {
  if (times_.empty() || times_.size() != values_.size())
    throw std::invalid_argument("SampledPath: times/values must be non-empty and equal length");
  if (times_.front() != 0.0) throw std::invalid_argument("SampledPath: first time must be 0");
  if (!(base_dt_ > 0.0)) throw std::invalid_argument("SampledPath: base_dt must be positive");
  for (std::size_t i = 1; i < times_.size(); ++i)
    if (!(times_[i] > times_[i - 1]))
      throw std::invalid_argument("SampledPath: times must be strictly increasing");
}

SampledPath SampledPath::from_samples(std::vector<double> times, std::vector<double> values,
                                      double base_dt) {
  return SampledPath(std::move(times), std::move(values), base_dt, RngStream::derive(0, 0),
                     RngStream::derive(0, 1));
}

bool SampledPath::has_time(double t) const {
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  return it != times_.end() && *it == t;
}

double SampledPath::value_at_time(double t) const {
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.end() || *it != t)
    throw std::invalid_argument("SampledPath: time was never sampled");
  return values_[static_cast<std::size_t>(it - times_.begin())];
}

std::size_t SampledPath::index_at_or_before(double t) const {
  if (t < 0.0) throw std::invalid_argument("SampledPath: negative time");
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  return static_cast<std::size_t>(it - times_.begin()) - 1;
}

void SampledPath::insert(double t, double v) {
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin() || it == times_.end())
    throw std::invalid_argument("SampledPath::insert: time outside the sampled range");
  if (*it == t) throw std::invalid_argument("SampledPath::insert: duplicate time");
  const auto pos = static_cast<std::size_t>(it - times_.begin());
  times_.insert(it, t);
  values_.insert(values_.begin() + static_cast<std::ptrdiff_t>(pos), v);
}

void SampledPath::append(double t, double v) {
  if (!(t > times_.back())) throw std::invalid_argument("SampledPath::append: non-increasing time");
  times_.push_back(t);
  values_.push_back(v);
}

double Excursion::value_at(double r) const {
  if (r < 0.0) throw std::invalid_argument("Excursion::value_at: negative clock");
  if (r >= lifetime) return exit_value;
  auto it = std::upper_bound(times.begin(), times.end(), r);
  const auto i = static_cast<std::size_t>(it - times.begin());
  if (i == 0) return values.front();
  if (i == times.size()) return values.back();
  const double t0 = times[i - 1], t1 = times[i];
  const double w = (r - t0) / (t1 - t0);
  return values[i - 1] + w * (values[i] - values[i - 1]);
}

}  // namespace excurlab
