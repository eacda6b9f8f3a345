#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "srcanon/rng.hpp"
#include "srcanon/stats.hpp"

namespace srcanon {

using CellId = std::uint32_t;

struct ScheduleConfig {
  std::size_t n = 1024;  // cells, one sensor per cell
  std::size_t d = 100;   // dummy population per round
  Duration mu = 1.0;     // expected inter-event time (event rate 1/mu)
  Duration delta = 0.05; // application delay bound
  std::size_t rounds = 50;

  // Throws ParameterError. Does not enforce mu >> delta.
  void validate() const;
  // True when mu is less than ten times delta.
  bool delay_bound_tight() const { return mu < 10.0 * delta; }

  // Baseline epoch length: every node transmits once per epoch.
  Duration epoch_length() const { return mu * static_cast<double>(n) / static_cast<double>(d); }
  Duration round_length() const { return mu; }
};

enum class TxKind : std::uint8_t { dummy, real, relay };

const char* to_string(TxKind kind);

struct Transmission {
  TimePoint time = 0.0;
  CellId cell = 0;
  TxKind kind = TxKind::dummy;
  std::int64_t round_index = 0;  // 1-based epoch/round the transmission belongs to

  friend bool operator==(const Transmission&, const Transmission&) = default;
};

using Timeline = std::vector<Transmission>;

// Random partition of the cells into d groups. When d does not divide n
// the first (n mod d) groups carry one extra member.
struct GroupAssignment {
  std::vector<std::uint32_t> group_of;  // cell -> group in [0, d)
  std::vector<std::uint32_t> slot_of;   // cell -> position within its group
  std::vector<std::vector<CellId>> members;  // group -> cells ordered by slot

  std::size_t groups() const { return members.size(); }
  // Throws ContractViolation if inconsistent with (n, d).
  void check(const ScheduleConfig& cfg) const;
};

GroupAssignment assign_groups(const ScheduleConfig& cfg, Rng& rng);

// Baseline decentralized schedule: in epoch i (1-based) every cell draws
// one time from U((i-1)T, iT) with T = mu*n/d. cfg.rounds counts epochs.
// Epoch i uses the stream rng.derive(i), so the result for an epoch does
// not depend on how many epochs are generated.
Timeline baseline_schedule(const ScheduleConfig& cfg, const Rng& rng);

// Group schedule: in round k (1-based) each group's member whose slot is
// (k-1) mod group_size draws one time from U((k-1)mu, k*mu).
Timeline group_schedule(const ScheduleConfig& cfg, const GroupAssignment& assign, const Rng& rng);

// Reference source: i.i.d. exponential gaps of mean mu/d on [0, rounds*mu),
// each emission from a uniformly drawn cell.
Timeline exponential_schedule(const ScheduleConfig& cfg, const Rng& rng);

struct RealEvents {
  Timeline events;
  // Pairs of consecutive events closer than delta (more than one active
  // event at a time). Diagnostic only.
  std::size_t overlap_warnings = 0;
};

// Homogeneous Poisson process of rate 1/mu on [0, horizon) with a uniform
// cell per event.
RealEvents generate_real_events(const ScheduleConfig& cfg, Duration horizon, const Rng& rng);

// Stable time-ordered merge; for equal times dummy entries come first.
// Real events keep their times. Throws ContractViolation on unsorted input.
Timeline merge_timelines(const Timeline& dummy, const Timeline& real);

bool is_time_sorted(const Timeline& timeline);

// Gaps between consecutive transmissions whose round indices differ.
std::vector<Duration> boundary_intervals(const Timeline& timeline);

// CSV interchange: header "time,cell,kind,round_index"; times printed with
// 17 significant digits so a round trip is exact.
void write_timeline_csv(std::ostream& os, const Timeline& timeline);
Timeline read_timeline_csv(std::istream& is);

}  // namespace srcanon
