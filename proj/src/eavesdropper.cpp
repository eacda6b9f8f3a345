#include "srcanon/eavesdropper.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "srcanon/errors.hpp"
#include "srcanon/parallel.hpp"

namespace srcanon {
namespace {

constexpr double kWilsonZ = 1.959963984540054;

std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t trials) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = kWilsonZ * kWilsonZ;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = kWilsonZ * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

// Least-squares slope of ys against xs; xs must not be constant.
double ols_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace

const char* to_string(WindowMode mode) {
  switch (mode) {
    case WindowMode::per_round_growing:
      return "per_round_growing";
    case WindowMode::fixed_d:
      return "fixed_d";
    case WindowMode::fixed_k:
      return "fixed_k";
  }
  return "?";
}

WindowMode window_mode_from_string(const std::string& name) {
  if (name == "per_round_growing") return WindowMode::per_round_growing;
  if (name == "fixed_d") return WindowMode::fixed_d;
  if (name == "fixed_k") return WindowMode::fixed_k;
  throw ParameterError("unknown window policy '" + name + "'");
}

void WindowPolicy::validate(const AdTestConfig& ad) const {
  if (mode == WindowMode::fixed_k && window_k < ad.min_sample) {
    throw ParameterError("fixed_k window of " + std::to_string(window_k) + " is below min_sample");
  }
}

std::size_t WindowPolicy::fixed_length(std::size_t d) const {
  switch (mode) {
    case WindowMode::per_round_growing:
      return 0;
    case WindowMode::fixed_d:
      return d;
    case WindowMode::fixed_k:
      return window_k;
  }
  return 0;
}

IntervalSample observe(const Timeline& timeline, bool include_relays) {
  if (!is_time_sorted(timeline)) throw ContractViolation("observe: timeline not sorted by time");
  IntervalSample out;
  const Transmission* prev = nullptr;
  for (const auto& t : timeline) {
    if (!include_relays && t.kind == TxKind::relay) continue;
    if (prev != nullptr) {
      out.values.push_back(t.time - prev->time);
      out.end_times.push_back(t.time);
      out.crosses_round.push_back(t.round_index != prev->round_index ? 1 : 0);
    }
    prev = &t;
  }
  return out;
}

ReplicationTests test_rounds(const IntervalSample& sample, const WindowPolicy& policy, const AdTestConfig& ad,
                             const ScheduleConfig& sched) {
  ad.validate();
  policy.validate(ad);
  ReplicationTests out;
  out.reject.assign(sched.rounds, -1);

  std::vector<std::uint64_t> crossings(sample.size() + 1, 0);
  for (std::size_t j = 0; j < sample.size(); ++j) crossings[j + 1] = crossings[j] + sample.crosses_round[j];

  const std::size_t fixed = policy.fixed_length(sched.d);
  std::vector<Duration> window;
  std::size_t observed = 0;
  for (std::size_t i = 1; i <= sched.rounds; ++i) {
    const double round_end = static_cast<double>(i) * sched.mu;
    const std::size_t before = observed;
    while (observed < sample.size() && sample.end_times[observed] < round_end) ++observed;

    std::size_t begin = 0;
    if (policy.mode == WindowMode::per_round_growing) {
      // Keep the prefix sorted: sort the new round's gaps and merge them in.
      const auto mid = static_cast<std::ptrdiff_t>(window.size());
      window.insert(window.end(), sample.values.begin() + static_cast<std::ptrdiff_t>(before),
                    sample.values.begin() + static_cast<std::ptrdiff_t>(observed));
      std::sort(window.begin() + mid, window.end());
      std::inplace_merge(window.begin(), window.begin() + mid, window.end());
      if (observed < ad.min_sample) continue;
    } else {
      if (fixed < ad.min_sample || observed < fixed) continue;
      begin = observed - fixed;
      window.assign(sample.values.begin() + static_cast<std::ptrdiff_t>(begin),
                    sample.values.begin() + static_cast<std::ptrdiff_t>(observed));
      std::sort(window.begin(), window.end());
    }

    bool reject = false;
    try {
      reject = ad_test_sorted(window, ad).reject;
    } catch (const DegenerateSampleError&) {
      // A window of identical gaps is as far from exponential as it gets.
      reject = true;
    }
    out.reject[i - 1] = reject ? 1 : 0;
    out.window_intervals += observed - begin;
    out.window_boundary_intervals += crossings[observed] - crossings[begin];
  }
  return out;
}

double FaTrace::straddle_fraction() const {
  if (window_intervals == 0) return 0.0;
  return static_cast<double>(window_boundary_intervals) / static_cast<double>(window_intervals);
}

std::uint64_t FaTrace::min_tests() const {
  std::uint64_t m = 0;
  for (const auto& r : per_round) m = (m == 0) ? r.tests : std::min(m, r.tests);
  return m;
}

FaTrace aggregate_trace(const std::vector<ReplicationTests>& reps, std::size_t rounds) {
  FaTrace trace;
  trace.replications = reps.size();
  std::vector<std::uint64_t> rej(rounds, 0);
  std::vector<std::uint64_t> tests(rounds, 0);
  for (const auto& rep : reps) {
    if (rep.reject.size() != rounds) throw ContractViolation("aggregate_trace: replication round count mismatch");
    for (std::size_t i = 0; i < rounds; ++i) {
      if (rep.reject[i] < 0) continue;
      ++tests[i];
      rej[i] += static_cast<std::uint64_t>(rep.reject[i]);
    }
    trace.window_intervals += rep.window_intervals;
    trace.window_boundary_intervals += rep.window_boundary_intervals;
  }

  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<std::size_t> common;
  for (std::size_t i = 0; i < rounds; ++i) {
    if (tests[i] == 0) continue;
    RoundRate r;
    r.round = static_cast<std::int64_t>(i + 1);
    r.rejections = rej[i];
    r.tests = tests[i];
    r.rate = static_cast<double>(rej[i]) / static_cast<double>(tests[i]);
    std::tie(r.ci_low, r.ci_high) = wilson_interval(rej[i], tests[i]);
    trace.per_round.push_back(r);
    trace.total_rejections += rej[i];
    trace.total_tests += tests[i];
    trace.mean_fa += r.rate;
    xs.push_back(static_cast<double>(i + 1));
    ys.push_back(r.rate);
    if (tests[i] == reps.size()) common.push_back(i);
  }
  if (trace.per_round.empty()) return trace;
  trace.mean_fa /= static_cast<double>(trace.per_round.size());

  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  if (common.size() >= 2) {
    std::vector<double> cx;
    for (auto i : common) cx.push_back(static_cast<double>(i + 1));
    std::vector<double> slopes;
    slopes.reserve(reps.size());
    std::vector<double> cy(common.size());
    for (const auto& rep : reps) {
      for (std::size_t j = 0; j < common.size(); ++j) cy[j] = rep.reject[common[j]];
      slopes.push_back(ols_slope(cx, cy));
    }
    double mean = 0.0;
    for (double s : slopes) mean += s;
    mean /= static_cast<double>(slopes.size());
    trace.trend_slope = mean;
    if (slopes.size() >= 2) {
      double ss = 0.0;
      for (double s : slopes) ss += (s - mean) * (s - mean);
      trace.slope_se = std::sqrt(ss / static_cast<double>(slopes.size() - 1) / static_cast<double>(slopes.size()));
    } else {
      trace.slope_se = nan;
    }
  } else if (xs.size() >= 2) {
    trace.trend_slope = ols_slope(xs, ys);
    trace.slope_se = nan;
  } else {
    trace.slope_se = nan;
  }
  return trace;
}

FaTrace fa_trace(const IntervalSample& sample, const WindowPolicy& policy, const AdTestConfig& ad,
                 const ScheduleConfig& sched) {
  return aggregate_trace({test_rounds(sample, policy, ad, sched)}, sched.rounds);
}

FaTrace fa_trace(const TimelineSource& source, const WindowPolicy& policy, const AdTestConfig& ad,
                 const ScheduleConfig& sched, std::size_t replications, const Rng& rng, const TraceOptions& opts) {
  sched.validate();
  ad.validate();
  policy.validate(ad);
  if (replications == 0) throw ParameterError("fa_trace: replications must be positive");
  std::vector<ReplicationTests> reps(replications);
  parallel_for(replications, opts.threads, [&](std::size_t r) {
    const Timeline timeline = source(rng.derive(r));
    reps[r] = test_rounds(observe(timeline, opts.include_relays), policy, ad, sched);
  });
  return aggregate_trace(reps, sched.rounds);
}

double two_proportion_z(std::uint64_t x1, std::uint64_t n1, std::uint64_t x2, std::uint64_t n2) {
  if (n1 == 0 || n2 == 0) throw ParameterError("two_proportion_z: empty arm");
  const double a = static_cast<double>(n1);
  const double b = static_cast<double>(n2);
  const double p1 = static_cast<double>(x1) / a;
  const double p2 = static_cast<double>(x2) / b;
  const double pooled = static_cast<double>(x1 + x2) / (a + b);
  const double var = pooled * (1.0 - pooled) * (1.0 / a + 1.0 / b);
  if (var <= 0.0) return 0.0;
  return (p1 - p2) / std::sqrt(var);
}

DetectionResult detection_experiment(const ScheduleConfig& sched, const TimelineSource& dummy_source,
                                     const WindowPolicy& policy, const AdTestConfig& ad, std::size_t replications,
                                     const Rng& rng, const DetectionOptions& opts) {
  sched.validate();
  ad.validate();
  policy.validate(ad);
  if (replications == 0) throw ParameterError("detection_experiment: replications must be positive");
  if (!(opts.comparison_alpha > 0.0 && opts.comparison_alpha < 1.0)) {
    throw ParameterError("detection_experiment: comparison_alpha must lie in (0, 1)");
  }

  std::vector<ReplicationTests> arm_a(replications);
  std::vector<ReplicationTests> arm_b(replications);
  std::vector<std::uint64_t> inserted(replications, 0);
  const double horizon = sched.mu * static_cast<double>(sched.rounds);
  parallel_for(replications, opts.threads, [&](std::size_t r) {
    const Rng rep = rng.derive(r);
    const Timeline dummy = dummy_source(rep.derive("dummy"));
    arm_a[r] = test_rounds(observe(dummy), policy, ad, sched);
    if (opts.insert_events) {
      const RealEvents events = generate_real_events(sched, horizon, rep.derive("events"));
      inserted[r] = events.events.size();
      arm_b[r] = test_rounds(observe(merge_timelines(dummy, events.events)), policy, ad, sched);
    } else {
      arm_b[r] = arm_a[r];
    }
  });

  DetectionResult out;
  out.without_events = aggregate_trace(arm_a, sched.rounds);
  out.with_events = aggregate_trace(arm_b, sched.rounds);
  for (auto n : inserted) out.real_events_inserted += n;

  for (const auto& a : out.without_events.per_round) {
    for (const auto& b : out.with_events.per_round) {
      if (b.round == a.round) {
        out.round_z.emplace_back(a.round, two_proportion_z(b.rejections, b.tests, a.rejections, a.tests));
      }
    }
  }

  const std::size_t last = sched.rounds - 1;
  for (std::size_t r = 0; r < replications; ++r) {
    if (arm_a[r].reject[last] < 0 || arm_b[r].reject[last] < 0) continue;
    ++out.trials;
    out.rejections_without += static_cast<std::uint64_t>(arm_a[r].reject[last]);
    out.rejections_with += static_cast<std::uint64_t>(arm_b[r].reject[last]);
  }
  if (out.trials > 0) {
    out.pooled_z = two_proportion_z(out.rejections_with, out.trials, out.rejections_without, out.trials);
    const double crit = boost::math::quantile(boost::math::normal(), 1.0 - opts.comparison_alpha / 2.0);
    out.distinguishable = std::abs(out.pooled_z) > crit;
  }
  return out;
}

OutageStats outage_stats(const FaTrace& trace) {
  if (trace.total_tests == 0) throw ParameterError("outage_stats: trace has no tests");
  OutageStats s;
  s.false_alarm_count = trace.total_rejections;
  s.trials = trace.total_tests;
  s.outage_rate = static_cast<double>(s.false_alarm_count) / static_cast<double>(s.trials);
  return s;
}

void write_trace_csv(std::ostream& os, const FaTrace& trace) {
  os << "round,rejection_rate,ci_low,ci_high\n";
  char buf[128];
  for (const auto& r : trace.per_round) {
    std::snprintf(buf, sizeof buf, "%lld,%.9g,%.9g,%.9g\n", static_cast<long long>(r.round), r.rate, r.ci_low,
                  r.ci_high);
    os << buf;
  }
}

}  // namespace srcanon
