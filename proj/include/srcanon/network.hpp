#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "srcanon/schedule.hpp"

namespace srcanon {

// side x side cells, cell id = row * side + col, 4-neighbour adjacency.
class NetworkGrid {
 public:
  NetworkGrid(std::size_t side, CellId sink_cell);

  std::size_t side() const { return side_; }
  std::size_t size() const { return side_ * side_; }
  CellId sink() const { return sink_; }
  std::size_t diameter() const { return 2 * (side_ - 1); }

  std::size_t row(CellId c) const { return c / side_; }
  std::size_t col(CellId c) const { return c % side_; }
  CellId cell(std::size_t row, std::size_t col) const { return static_cast<CellId>(row * side_ + col); }
  CellId center() const { return cell(side_ / 2, side_ / 2); }

  bool adjacent(CellId a, CellId b) const;

 private:
  std::size_t side_;
  CellId sink_;
};

NetworkGrid build_grid(std::size_t side, CellId sink_cell);

struct Route {
  std::vector<CellId> hops;  // source first, sink last

  std::size_t hop_count() const { return hops.empty() ? 0 : hops.size() - 1; }
  CellId source() const { return hops.front(); }
};

// Predetermined shortest path: vertical moves until the sink row is
// reached, then horizontal moves.
Route route_to_sink(const NetworkGrid& grid, CellId source);

// Forwarding counts. total_hops is the sum of per_node_tx.
class EnergyLedger {
 public:
  explicit EnergyLedger(std::size_t cells) : per_node_tx_(cells, 0) {}

  void record(CellId cell) {
    ++per_node_tx_.at(cell);
    ++total_hops_;
  }
  void merge(const EnergyLedger& other);

  const std::vector<std::uint64_t>& per_node_tx() const { return per_node_tx_; }
  std::uint64_t total_hops() const { return total_hops_; }

 private:
  std::vector<std::uint64_t> per_node_tx_;
  std::uint64_t total_hops_ = 0;
};

struct RelayConfig {
  Duration relay_interval = 0.0;

  // relay_interval = delta / (2 * diameter): worst-case latency delta/2.
  // A single-cell grid has no hops and gets delta/2.
  static RelayConfig defaults_for(const NetworkGrid& grid, Duration delta);
  // Throws ConfigError unless diameter * relay_interval <= delta.
  void validate(const NetworkGrid& grid, Duration delta) const;
};

struct RouteEmission {
  TimePoint arrival = 0.0;
  // Retransmissions by the intermediate cells hops[1..h-1], kind relay.
  // The first hop is the source transmission already on the schedule.
  Timeline relays;
};

// Source transmits at `start`; every cell on the route forwards one
// relay_interval after receiving, so the sink receives at
// start + hop_count * relay_interval. Each of the hop_count forwarding
// cells hops[0..h-1] is charged one transmission in the ledger.
RouteEmission emulate_route(const Route& route, TimePoint start, std::int64_t round_index,
                            const RelayConfig& relay, EnergyLedger& ledger);

// (d + 1) * sqrt(n / ln n), the asymptotic per-round cost envelope.
// Real-valued so the formula can be probed off the integers.
double wn_bound(double n, double d);

void write_ledger_csv(std::ostream& os, const EnergyLedger& ledger);

}  // namespace srcanon
