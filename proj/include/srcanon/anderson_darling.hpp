#pragma once

#include <cstddef>
#include <span>

#include "srcanon/stats.hpp"

namespace srcanon {

// Eve's test configuration. `alpha` is the false-alarm level FA.
struct AdTestConfig {
  double alpha = 0.05;
  std::size_t min_sample = 5;

  void validate() const;
};

struct AdTestOutcome {
  double statistic = 0.0;  // modified A^2
  double critical = 0.0;
  bool reject = false;
  std::size_t sample_size = 0;
};

// Values below this are clamped before the exponential-CDF transform so
// coincident transmissions (zero gaps) do not produce log(0).
inline constexpr double kZeroIntervalClamp = 1e-12;

// Anderson-Darling statistic for exponentiality with the mean estimated
// from the sample, multiplied by (1 + 0.6/n). Scale free: the sample is
// divided by its own mean before the transform.
//
// Throws ParameterError for negative or non-finite values or fewer than
// two values, DegenerateSampleError when all values are identical.
double ad_statistic_exponential(std::span<const Duration> sample);

// Same statistic for a sample that is already sorted ascending. Skips the
// copy and sort; the caller guarantees ordering.
double ad_statistic_exponential_sorted(std::span<const Duration> sorted);

// Upper-tail critical value of the modified statistic. Tabulated at
// alpha in {0.10, 0.05, 0.025, 0.01}; linear in log(alpha) between them.
double ad_critical_value(double alpha);

AdTestOutcome ad_test(std::span<const Duration> sample, const AdTestConfig& cfg);
AdTestOutcome ad_test_sorted(std::span<const Duration> sorted, const AdTestConfig& cfg);

// Expected rejection rate of a test stream where a fraction
// `boundary_prob` of tests see the non-exponential boundary law (rejected
// at rate fa_e) and the rest are clean (rejected at rate fa).
double mixed_failure_probability(double fa, double fa_e, std::size_t t, double boundary_prob);

// Smallest group count d for which the mixture above stays within FA of
// the nominal level when FA_E is bounded by one: ceil(1/fa).
std::size_t min_group_count(double fa);

}  // namespace srcanon
