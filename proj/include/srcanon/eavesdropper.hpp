#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <iosfwd>
#include <vector>

#include "srcanon/anderson_darling.hpp"
#include "srcanon/schedule.hpp"

namespace srcanon {

enum class WindowMode { per_round_growing, fixed_d, fixed_k };

const char* to_string(WindowMode mode);
WindowMode window_mode_from_string(const std::string& name);

// Which intervals Eve tests at the end of round i (time i*mu):
//   per_round_growing  every interval observed so far (about d*i samples)
//   fixed_d            the d most recent intervals
//   fixed_k            the window_k most recent intervals
struct WindowPolicy {
  WindowMode mode = WindowMode::per_round_growing;
  std::size_t window_k = 200;

  void validate(const AdTestConfig& ad) const;
  // Window length for the fixed modes; 0 for the growing mode.
  std::size_t fixed_length(std::size_t d) const;
};

// Inter-transmission gaps in observation order. end_times[j] is the time
// of the later transmission of gap j; crosses_round[j] is set when the two
// transmissions carry different round indices.
struct IntervalSample {
  std::vector<Duration> values;
  std::vector<TimePoint> end_times;
  std::vector<std::uint8_t> crosses_round;

  std::size_t size() const { return values.size(); }
};

// Eve's global timeline reduced to gaps. Relay retransmissions are dropped
// unless include_relays is set. Throws ContractViolation if unsorted.
IntervalSample observe(const Timeline& timeline, bool include_relays = false);

// Per-round outcome of one replication: -1 untested, 0 pass, 1 reject.
struct ReplicationTests {
  std::vector<std::int8_t> reject;
  std::uint64_t window_intervals = 0;
  std::uint64_t window_boundary_intervals = 0;
};

ReplicationTests test_rounds(const IntervalSample& sample, const WindowPolicy& policy,
                             const AdTestConfig& ad, const ScheduleConfig& sched);

struct RoundRate {
  std::int64_t round = 0;
  std::uint64_t rejections = 0;
  std::uint64_t tests = 0;
  double rate = 0.0;
  double ci_low = 0.0;  // 95% Wilson interval
  double ci_high = 0.0;
};

struct FaTrace {
  std::vector<RoundRate> per_round;  // testable rounds only, ascending
  std::size_t replications = 0;
  double mean_fa = 0.0;              // unweighted mean of per-round rates
  // Least-squares slope of rate against round over the rounds every
  // replication tested. slope_se is the standard error of the mean of the
  // per-replication slopes (replications are independent; rounds are not).
  double trend_slope = 0.0;
  double slope_se = 0.0;
  std::uint64_t total_rejections = 0;
  std::uint64_t total_tests = 0;
  std::uint64_t window_intervals = 0;
  std::uint64_t window_boundary_intervals = 0;

  std::int64_t first_testable_round() const { return per_round.empty() ? 0 : per_round.front().round; }
  // Fraction of tested samples that were inter-round gaps.
  double straddle_fraction() const;
  double slope_ci_low() const { return trend_slope - 1.959963984540054 * slope_se; }
  double slope_ci_high() const { return trend_slope + 1.959963984540054 * slope_se; }
  // Smallest per-round test count; the binomial band for mean_fa uses it.
  std::uint64_t min_tests() const;
};

FaTrace aggregate_trace(const std::vector<ReplicationTests>& reps, std::size_t rounds);

// One replication, one observed sequence.
FaTrace fa_trace(const IntervalSample& sample, const WindowPolicy& policy, const AdTestConfig& ad,
                 const ScheduleConfig& sched);

// Fresh timeline per replication r from source(rng.derive(r)). Replications
// run on `threads` workers (0 = all cores); results do not depend on it.
using TimelineSource = std::function<Timeline(const Rng&)>;

struct TraceOptions {
  bool include_relays = false;
  std::size_t threads = 0;
};

FaTrace fa_trace(const TimelineSource& source, const WindowPolicy& policy, const AdTestConfig& ad,
                 const ScheduleConfig& sched, std::size_t replications, const Rng& rng,
                 const TraceOptions& opts = {});

// Two-proportion z statistic with pooled variance; 0 when the pooled
// proportion is 0 or 1.
double two_proportion_z(std::uint64_t x1, std::uint64_t n1, std::uint64_t x2, std::uint64_t n2);

struct DetectionResult {
  FaTrace without_events;
  FaTrace with_events;
  std::vector<std::pair<std::int64_t, double>> round_z;  // per commonly tested round
  // Pooled two-proportion test over the paired trials, one test per trial
  // per arm at the final round.
  std::uint64_t trials = 0;
  std::uint64_t rejections_without = 0;
  std::uint64_t rejections_with = 0;
  double pooled_z = 0.0;
  bool distinguishable = false;  // |pooled_z| > z_{0.995}
  std::uint64_t real_events_inserted = 0;
};

struct DetectionOptions {
  bool insert_events = true;
  double comparison_alpha = 0.01;
  std::size_t threads = 0;
};

// Paired arms: replication r builds its dummy schedule from
// rng.derive(r).derive("dummy") for both arms; the second arm adds
// Poisson real events from rng.derive(r).derive("events").
DetectionResult detection_experiment(const ScheduleConfig& sched, const TimelineSource& dummy_source,
                                     const WindowPolicy& policy, const AdTestConfig& ad,
                                     std::size_t replications, const Rng& rng,
                                     const DetectionOptions& opts = {});

struct OutageStats {
  std::uint64_t false_alarm_count = 0;
  std::uint64_t trials = 0;
  double outage_rate = 0.0;
};

// Every rejection on event-free data is an outage: Eve acting on a false
// suspicion. Throws ParameterError on an empty trace.
OutageStats outage_stats(const FaTrace& trace);

// Columns: round,rejection_rate,ci_low,ci_high
void write_trace_csv(std::ostream& os, const FaTrace& trace);

}  // namespace srcanon
