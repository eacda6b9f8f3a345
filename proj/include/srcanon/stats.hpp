#pragma once

#include <functional>
#include <span>
#include <vector>

#include "srcanon/rng.hpp"

namespace srcanon {

// Abstract simulated time. Mean inter-event time, delay bound and epoch
// length are all expressed in the same unit; no physical unit is implied.
using Duration = double;
using TimePoint = double;

// The three closed-form laws the schedules are analysed with.
class AnalyticPdf {
 public:
  enum class Family { exponential, erlang2, uniform };

  static AnalyticPdf exponential(Duration mean);
  static AnalyticPdf erlang2(Duration scale);
  static AnalyticPdf uniform(Duration lo, Duration hi);

  Family family() const { return family_; }
  double pdf(double x) const;
  double cdf(double x) const;
  double mean() const;
  // Upper end of the support, or +inf.
  double support_hi() const;

 private:
  AnalyticPdf(Family f, double a, double b) : family_(f), a_(a), b_(b) {}
  Family family_;
  double a_;
  double b_;
};

Duration sample_exponential(Duration mean, Rng& rng);
Duration sample_uniform(Duration lo, Duration hi, Rng& rng);

// z / scale^2 * exp(-z / scale): density of the sum of two independent
// exponentials with mean `scale`.
double erlang2_pdf(Duration z, Duration scale);
double erlang2_cdf(Duration z, Duration scale);

// Consecutive differences of a nondecreasing sequence. Fewer than two
// points yields an empty result.
std::vector<Duration> intervals_from_times(std::span<const TimePoint> times);

// One-sample Kolmogorov-Smirnov distance sup|F_n - F|. Sorts a copy.
double ks_statistic(std::span<const double> sample, const std::function<double(double)>& cdf);

// Asymptotic one-sample KS critical value c(alpha)/sqrt(n); supports
// alpha in {0.10, 0.05, 0.01}.
double ks_critical_value(std::size_t n, double alpha);

}  // namespace srcanon
