#include "srcanon/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "srcanon/errors.hpp"

namespace srcanon {
namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ParameterError(std::string(what) + " must be positive and finite, got " + std::to_string(v));
  }
}

}  // namespace

AnalyticPdf AnalyticPdf::exponential(Duration mean) {
  require_positive(mean, "exponential mean");
  return {Family::exponential, mean, 0.0};
}

AnalyticPdf AnalyticPdf::erlang2(Duration scale) {
  require_positive(scale, "erlang2 scale");
  return {Family::erlang2, scale, 0.0};
}

AnalyticPdf AnalyticPdf::uniform(Duration lo, Duration hi) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw ParameterError("uniform bounds must satisfy lo < hi");
  }
  return {Family::uniform, lo, hi};
}

double AnalyticPdf::pdf(double x) const {
  switch (family_) {
    case Family::exponential:
      return x < 0.0 ? 0.0 : std::exp(-x / a_) / a_;
    case Family::erlang2:
      return x < 0.0 ? 0.0 : erlang2_pdf(x, a_);
    case Family::uniform:
      return (x >= a_ && x < b_) ? 1.0 / (b_ - a_) : 0.0;
  }
  return 0.0;
}

double AnalyticPdf::cdf(double x) const {
  switch (family_) {
    case Family::exponential:
      return x <= 0.0 ? 0.0 : -std::expm1(-x / a_);
    case Family::erlang2:
      return x <= 0.0 ? 0.0 : erlang2_cdf(x, a_);
    case Family::uniform:
      return std::clamp((x - a_) / (b_ - a_), 0.0, 1.0);
  }
  return 0.0;
}

double AnalyticPdf::mean() const {
  switch (family_) {
    case Family::exponential:
      return a_;
    case Family::erlang2:
      return 2.0 * a_;
    case Family::uniform:
      return 0.5 * (a_ + b_);
  }
  return 0.0;
}

double AnalyticPdf::support_hi() const {
  return family_ == Family::uniform ? b_ : std::numeric_limits<double>::infinity();
}

Duration sample_exponential(Duration mean, Rng& rng) {
  require_positive(mean, "exponential mean");
  // uniform01() < 1, so the log argument stays positive.
  return -mean * std::log1p(-rng.uniform01());
}

Duration sample_uniform(Duration lo, Duration hi, Rng& rng) {
  if (!(lo < hi)) throw ParameterError("sample_uniform requires lo < hi");
  const double x = lo + (hi - lo) * rng.uniform01();
  // Rounding can land exactly on hi for wide, offset ranges.
  return x < hi ? x : std::nextafter(hi, lo);
}

double erlang2_pdf(Duration z, Duration scale) {
  require_positive(scale, "erlang2 scale");
  if (z < 0.0) throw ParameterError("erlang2_pdf: z must be nonnegative");
  return z / (scale * scale) * std::exp(-z / scale);
}

double erlang2_cdf(Duration z, Duration scale) {
  require_positive(scale, "erlang2 scale");
  if (z <= 0.0) return 0.0;
  const double y = z / scale;
  return -std::expm1(-y) - y * std::exp(-y);
}

std::vector<Duration> intervals_from_times(std::span<const TimePoint> times) {
  std::vector<Duration> gaps;
  if (times.size() < 2) return gaps;
  gaps.reserve(times.size() - 1);
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (times[i] < times[i - 1]) {
      throw ContractViolation("intervals_from_times: times not sorted at index " + std::to_string(i));
    }
    gaps.push_back(times[i] - times[i - 1]);
  }
  return gaps;
}

double ks_statistic(std::span<const double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw ParameterError("ks_statistic: empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double dmax = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    dmax = std::max({dmax, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return dmax;
}

double ks_critical_value(std::size_t n, double alpha) {
  if (n == 0) throw ParameterError("ks_critical_value: n must be positive");
  double c = 0.0;
  if (alpha == 0.10) {
    c = 1.2238;
  } else if (alpha == 0.05) {
    c = 1.3581;
  } else if (alpha == 0.01) {
    c = 1.6276;
  } else {
    throw ParameterError("ks_critical_value: alpha must be 0.10, 0.05 or 0.01");
  }
  return c / std::sqrt(static_cast<double>(n));
}

}  // namespace srcanon
