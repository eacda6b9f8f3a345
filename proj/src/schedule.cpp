#include "srcanon/schedule.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "srcanon/errors.hpp"

namespace srcanon {
namespace {

bool by_time(const Transmission& a, const Transmission& b) { return a.time < b.time; }

void sort_by_time(Timeline::iterator first, Timeline::iterator last) {
  std::stable_sort(first, last, by_time);
}

}  // namespace

void ScheduleConfig::validate() const {
  if (n == 0) throw ParameterError("schedule: n must be positive");
  if (d == 0) throw ParameterError("schedule: d must be positive");
  if (d > n) throw ParameterError("schedule: d must not exceed n");
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ParameterError("schedule: mu must be positive and finite");
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw ParameterError("schedule: delta must be positive and finite");
  }
  if (rounds == 0) throw ParameterError("schedule: rounds must be positive");
}

const char* to_string(TxKind kind) {
  switch (kind) {
    case TxKind::dummy:
      return "dummy";
    case TxKind::real:
      return "real";
    case TxKind::relay:
      return "relay";
  }
  return "?";
}

void GroupAssignment::check(const ScheduleConfig& cfg) const {
  if (members.size() != cfg.d) throw ContractViolation("assignment: group count differs from d");
  if (group_of.size() != cfg.n || slot_of.size() != cfg.n) {
    throw ContractViolation("assignment: cell maps do not cover n cells");
  }
  const std::size_t base = cfg.n / cfg.d;
  std::size_t total = 0;
  for (std::size_t g = 0; g < members.size(); ++g) {
    const auto& m = members[g];
    if (m.size() < base || m.size() > base + 1) {
      throw ContractViolation("assignment: group " + std::to_string(g) + " has unbalanced size");
    }
    for (std::size_t s = 0; s < m.size(); ++s) {
      const CellId c = m[s];
      if (c >= cfg.n || group_of[c] != g || slot_of[c] != s) {
        throw ContractViolation("assignment: member table disagrees with cell maps");
      }
    }
    total += m.size();
  }
  if (total != cfg.n) throw ContractViolation("assignment: cells assigned more than once or not at all");
}

GroupAssignment assign_groups(const ScheduleConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<CellId> order(cfg.n);
  std::iota(order.begin(), order.end(), CellId{0});
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }

  GroupAssignment a;
  a.group_of.assign(cfg.n, 0);
  a.slot_of.assign(cfg.n, 0);
  a.members.resize(cfg.d);
  const std::size_t base = cfg.n / cfg.d;
  const std::size_t extra = cfg.n % cfg.d;
  std::size_t next = 0;
  for (std::size_t g = 0; g < cfg.d; ++g) {
    const std::size_t size = base + (g < extra ? 1 : 0);
    for (std::size_t s = 0; s < size; ++s) {
      const CellId c = order[next++];
      a.members[g].push_back(c);
      a.group_of[c] = static_cast<std::uint32_t>(g);
      a.slot_of[c] = static_cast<std::uint32_t>(s);
    }
  }
  return a;
}

Timeline baseline_schedule(const ScheduleConfig& cfg, const Rng& rng) {
  cfg.validate();
  const Duration epoch = cfg.epoch_length();
  Timeline out;
  out.reserve(cfg.n * cfg.rounds);
  for (std::size_t i = 1; i <= cfg.rounds; ++i) {
    Rng r = rng.derive(i);
    const double lo = static_cast<double>(i - 1) * epoch;
    const double hi = static_cast<double>(i) * epoch;
    const auto first = out.size();
    for (std::size_t c = 0; c < cfg.n; ++c) {
      out.push_back({sample_uniform(lo, hi, r), static_cast<CellId>(c), TxKind::dummy,
                     static_cast<std::int64_t>(i)});
    }
    sort_by_time(out.begin() + static_cast<std::ptrdiff_t>(first), out.end());
  }
  return out;
}

Timeline group_schedule(const ScheduleConfig& cfg, const GroupAssignment& assign, const Rng& rng) {
  cfg.validate();
  assign.check(cfg);
  Timeline out;
  out.reserve(cfg.d * cfg.rounds);
  for (std::size_t k = 1; k <= cfg.rounds; ++k) {
    Rng r = rng.derive(k);
    const double lo = static_cast<double>(k - 1) * cfg.mu;
    const double hi = static_cast<double>(k) * cfg.mu;
    const auto first = out.size();
    for (const auto& group : assign.members) {
      const CellId c = group[(k - 1) % group.size()];
      out.push_back({sample_uniform(lo, hi, r), c, TxKind::dummy, static_cast<std::int64_t>(k)});
    }
    sort_by_time(out.begin() + static_cast<std::ptrdiff_t>(first), out.end());
  }
  return out;
}

Timeline exponential_schedule(const ScheduleConfig& cfg, const Rng& rng) {
  cfg.validate();
  Rng gaps = rng.derive("gaps");
  Rng cells = rng.derive("cells");
  const double mean = cfg.mu / static_cast<double>(cfg.d);
  const double horizon = cfg.mu * static_cast<double>(cfg.rounds);
  Timeline out;
  out.reserve(cfg.d * cfg.rounds + cfg.d);
  for (double t = sample_exponential(mean, gaps); t < horizon; t += sample_exponential(mean, gaps)) {
    const auto c = static_cast<CellId>(cells.below(cfg.n));
    out.push_back({t, c, TxKind::dummy, static_cast<std::int64_t>(std::floor(t / cfg.mu)) + 1});
  }
  return out;
}

RealEvents generate_real_events(const ScheduleConfig& cfg, Duration horizon, const Rng& rng) {
  cfg.validate();
  if (!(horizon > 0.0)) throw ParameterError("generate_real_events: horizon must be positive");
  Rng times = rng.derive("time");
  Rng cells = rng.derive("cell");
  RealEvents out;
  double prev = 0.0;
  for (double t = sample_exponential(cfg.mu, times); t < horizon; t += sample_exponential(cfg.mu, times)) {
    if (!out.events.empty() && t - prev < cfg.delta) ++out.overlap_warnings;
    const auto c = static_cast<CellId>(cells.below(cfg.n));
    out.events.push_back({t, c, TxKind::real, static_cast<std::int64_t>(std::floor(t / cfg.mu)) + 1});
    prev = t;
  }
  return out;
}

bool is_time_sorted(const Timeline& timeline) { return std::is_sorted(timeline.begin(), timeline.end(), by_time); }

Timeline merge_timelines(const Timeline& dummy, const Timeline& real) {
  if (!is_time_sorted(dummy)) throw ContractViolation("merge_timelines: dummy timeline not sorted");
  if (!is_time_sorted(real)) throw ContractViolation("merge_timelines: real timeline not sorted");
  Timeline out;
  out.reserve(dummy.size() + real.size());
  std::merge(dummy.begin(), dummy.end(), real.begin(), real.end(), std::back_inserter(out), by_time);
  return out;
}

std::vector<Duration> boundary_intervals(const Timeline& timeline) {
  std::vector<Duration> out;
  for (std::size_t i = 1; i < timeline.size(); ++i) {
    if (timeline[i].round_index != timeline[i - 1].round_index) {
      out.push_back(timeline[i].time - timeline[i - 1].time);
    }
  }
  return out;
}

void write_timeline_csv(std::ostream& os, const Timeline& timeline) {
  os << "time,cell,kind,round_index\n";
  char buf[64];
  for (const auto& t : timeline) {
    std::snprintf(buf, sizeof buf, "%.17g", t.time);
    os << buf << ',' << t.cell << ',' << to_string(t.kind) << ',' << t.round_index << '\n';
  }
}

Timeline read_timeline_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "time,cell,kind,round_index") {
    throw ContractViolation("timeline CSV: missing or unexpected header");
  }
  Timeline out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string time_s, cell_s, kind_s, round_s;
    if (!std::getline(row, time_s, ',') || !std::getline(row, cell_s, ',') || !std::getline(row, kind_s, ',') ||
        !std::getline(row, round_s)) {
      throw ContractViolation("timeline CSV: malformed row " + std::to_string(lineno));
    }
    Transmission t;
    char* end = nullptr;
    t.time = std::strtod(time_s.c_str(), &end);
    const bool time_ok = end != time_s.c_str() && *end == '\0';
    auto cell_res = std::from_chars(cell_s.data(), cell_s.data() + cell_s.size(), t.cell);
    auto round_res = std::from_chars(round_s.data(), round_s.data() + round_s.size(), t.round_index);
    if (!time_ok || cell_res.ec != std::errc{} || round_res.ec != std::errc{}) {
      throw ContractViolation("timeline CSV: bad number on row " + std::to_string(lineno));
    }
    if (kind_s == "dummy") {
      t.kind = TxKind::dummy;
    } else if (kind_s == "real") {
      t.kind = TxKind::real;
    } else if (kind_s == "relay") {
      t.kind = TxKind::relay;
    } else {
      throw ContractViolation("timeline CSV: unknown kind '" + kind_s + "' on row " + std::to_string(lineno));
    }
    out.push_back(t);
  }
  return out;
}

}  // namespace srcanon
