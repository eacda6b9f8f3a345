#include "srcanon/network.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "srcanon/errors.hpp"

namespace srcanon {

NetworkGrid::NetworkGrid(std::size_t side, CellId sink_cell) : side_(side), sink_(sink_cell) {
  if (side == 0) throw ParameterError("grid side must be at least 1");
  if (sink_cell >= side * side) {
    throw ParameterError("sink cell " + std::to_string(sink_cell) + " outside a " + std::to_string(side) + "x" +
                         std::to_string(side) + " grid");
  }
}

bool NetworkGrid::adjacent(CellId a, CellId b) const {
  const auto dr = static_cast<long>(row(a)) - static_cast<long>(row(b));
  const auto dc = static_cast<long>(col(a)) - static_cast<long>(col(b));
  return std::labs(dr) + std::labs(dc) == 1;
}

NetworkGrid build_grid(std::size_t side, CellId sink_cell) { return NetworkGrid(side, sink_cell); }

Route route_to_sink(const NetworkGrid& grid, CellId source) {
  if (source >= grid.size()) throw ParameterError("route source outside the grid");
  Route r;
  std::size_t row = grid.row(source);
  std::size_t col = grid.col(source);
  const std::size_t sink_row = grid.row(grid.sink());
  const std::size_t sink_col = grid.col(grid.sink());
  r.hops.reserve(grid.diameter() + 1);
  r.hops.push_back(source);
  while (row != sink_row) {
    row = row < sink_row ? row + 1 : row - 1;
    r.hops.push_back(grid.cell(row, col));
  }
  while (col != sink_col) {
    col = col < sink_col ? col + 1 : col - 1;
    r.hops.push_back(grid.cell(row, col));
  }
  return r;
}

void EnergyLedger::merge(const EnergyLedger& other) {
  if (other.per_node_tx_.size() != per_node_tx_.size()) {
    throw ContractViolation("ledger merge across different grid sizes");
  }
  for (std::size_t i = 0; i < per_node_tx_.size(); ++i) per_node_tx_[i] += other.per_node_tx_[i];
  total_hops_ += other.total_hops_;
}

RelayConfig RelayConfig::defaults_for(const NetworkGrid& grid, Duration delta) {
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  const auto diameter = static_cast<double>(grid.diameter());
  return {diameter > 0.0 ? delta / (2.0 * diameter) : delta / 2.0};
}

void RelayConfig::validate(const NetworkGrid& grid, Duration delta) const {
  if (!(relay_interval > 0.0) || !std::isfinite(relay_interval)) {
    throw ConfigError("relay_interval must be positive and finite");
  }
  const double worst = static_cast<double>(grid.diameter()) * relay_interval;
  if (worst > delta) {
    throw ConfigError("relay_interval " + std::to_string(relay_interval) + " lets a " +
                      std::to_string(grid.diameter()) + "-hop route exceed delta " + std::to_string(delta));
  }
}

RouteEmission emulate_route(const Route& route, TimePoint start, std::int64_t round_index, const RelayConfig& relay,
                            EnergyLedger& ledger) {
  const std::size_t h = route.hop_count();
  RouteEmission out;
  out.arrival = start + static_cast<double>(h) * relay.relay_interval;
  if (h == 0) return out;
  out.relays.reserve(h - 1);
  for (std::size_t j = 0; j < h; ++j) {
    ledger.record(route.hops[j]);
    if (j > 0) {
      out.relays.push_back(
          {start + static_cast<double>(j) * relay.relay_interval, route.hops[j], TxKind::relay, round_index});
    }
  }
  return out;
}

double wn_bound(double n, double d) {
  if (!(n >= 2.0)) throw ParameterError("wn_bound: n must be at least 2");
  if (!(d >= 1.0)) throw ParameterError("wn_bound: d must be at least 1");
  return (d + 1.0) * std::sqrt(n / std::log(n));
}

void write_ledger_csv(std::ostream& os, const EnergyLedger& ledger) {
  os << "cell,tx_count\n";
  const auto& tx = ledger.per_node_tx();
  for (std::size_t c = 0; c < tx.size(); ++c) os << c << ',' << tx[c] << '\n';
}

}  // namespace srcanon
