#include <cmath>
#include <deque>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "srcanon/errors.hpp"
#include "srcanon/network.hpp"

using namespace srcanon;

namespace {

// Breadth-first hop distances from the sink over the 4-neighbour grid.
std::vector<int> bfs_distances(std::size_t side, std::size_t sink) {
  std::vector<int> dist(side * side, -1);
  std::deque<std::size_t> queue{sink};
  dist[sink] = 0;
  while (!queue.empty()) {
    const std::size_t c = queue.front();
    queue.pop_front();
    const std::size_t r = c / side, k = c % side;
    const std::size_t next[4][2] = {{r - 1, k}, {r + 1, k}, {r, k - 1}, {r, k + 1}};
    for (const auto& nb : next) {
      if (nb[0] >= side || nb[1] >= side) continue;  // unsigned wrap covers -1
      const std::size_t id = nb[0] * side + nb[1];
      if (dist[id] < 0) {
        dist[id] = dist[c] + 1;
        queue.push_back(id);
      }
    }
  }
  return dist;
}

}  // namespace

TEST_CASE("grid construction") {
  const auto g = build_grid(10, 0);
  CHECK(g.size() == 100);
  CHECK(g.diameter() == 18);
  CHECK(g.adjacent(0, 1));
  CHECK(g.adjacent(0, 10));
  CHECK_FALSE(g.adjacent(9, 10));
  CHECK_FALSE(g.adjacent(0, 11));
  CHECK_THROWS_AS(build_grid(10, 100), ParameterError);
  CHECK_THROWS_AS(build_grid(0, 0), ParameterError);

  const auto one = build_grid(1, 0);
  CHECK(route_to_sink(one, 0).hop_count() == 0);
  CHECK_THROWS_AS(route_to_sink(one, 1), ParameterError);
}

TEST_CASE("routes are shortest, adjacent and end at the sink") {
  for (std::size_t side : {1u, 2u, 7u, 32u}) {
    for (const bool centered : {false, true}) {
      const auto g = build_grid(side, 0);
      const NetworkGrid grid(side, centered ? g.center() : CellId{0});
      const auto dist = bfs_distances(side, grid.sink());
      std::size_t max_hops = 0;
      for (CellId s = 0; s < grid.size(); ++s) {
        const auto r = route_to_sink(grid, s);
        REQUIRE(r.source() == s);
        REQUIRE(r.hops.back() == grid.sink());
        REQUIRE(r.hop_count() == static_cast<std::size_t>(dist[s]));
        REQUIRE(r.hop_count() <= grid.diameter());
        for (std::size_t j = 1; j < r.hops.size(); ++j) REQUIRE(grid.adjacent(r.hops[j - 1], r.hops[j]));
        max_hops = std::max(max_hops, r.hop_count());
      }
      int oracle_max = 0;
      for (int v : dist) oracle_max = std::max(oracle_max, v);
      CHECK(max_hops == static_cast<std::size_t>(oracle_max));
    }
  }
  const NetworkGrid g32(32, build_grid(32, 0).center());
  CHECK(route_to_sink(g32, 0).hop_count() == 32);  // corner to (16,16)
}

TEST_CASE("corner to opposite corner and determinism") {
  const NetworkGrid g(10, 99);
  const auto r = route_to_sink(g, 0);
  CHECK(r.hop_count() == 18);
  CHECK(route_to_sink(g, 0).hops == r.hops);
  // Vertical leg first.
  CHECK(r.hops[1] == 10);
  CHECK(route_to_sink(g, 99).hop_count() == 0);
}

TEST_CASE("emulate_route: latency, relay emissions and ledger") {
  const NetworkGrid g(10, 99);
  EnergyLedger ledger(g.size());

  const auto zero = emulate_route(route_to_sink(g, 99), 3.25, 4, RelayConfig{0.001}, ledger);
  CHECK(zero.arrival == 3.25);
  CHECK(zero.relays.empty());
  CHECK(ledger.total_hops() == 0);

  const auto route = route_to_sink(g, 0);
  const auto em = emulate_route(route, 2.0, 3, RelayConfig{0.001}, ledger);
  CHECK(em.arrival - 2.0 == doctest::Approx(0.018).epsilon(1e-12));
  CHECK(em.arrival - 2.0 <= 0.05);
  REQUIRE(em.relays.size() == 17);
  for (std::size_t j = 0; j < em.relays.size(); ++j) {
    CHECK(em.relays[j].cell == route.hops[j + 1]);
    CHECK(em.relays[j].kind == TxKind::relay);
    CHECK(em.relays[j].round_index == 3);
    CHECK(em.relays[j].time == doctest::Approx(2.0 + 0.001 * (j + 1)));
  }
  // Every forwarding cell (source plus relays) is charged once; the sink is not.
  CHECK(ledger.total_hops() == 18);
  CHECK(ledger.total_hops() == em.relays.size() + 1);
  CHECK(ledger.per_node_tx()[0] == 1);
  CHECK(ledger.per_node_tx()[99] == 0);
  std::uint64_t sum = 0;
  for (auto v : ledger.per_node_tx()) sum += v;
  CHECK(sum == ledger.total_hops());
}

TEST_CASE("relay config defaults and validation") {
  const NetworkGrid g(32, 528);
  const auto def = RelayConfig::defaults_for(g, 0.05);
  CHECK(def.relay_interval == doctest::Approx(0.05 / 124.0));
  CHECK_NOTHROW(def.validate(g, 0.05));
  CHECK(static_cast<double>(g.diameter()) * def.relay_interval <= 0.025 + 1e-15);
  CHECK_THROWS_AS(RelayConfig{0.001}.validate(g, 0.05), ConfigError);  // 62 hops * 0.001 > 0.05
  CHECK_THROWS_AS(RelayConfig{0.0}.validate(g, 0.05), ConfigError);
  CHECK_THROWS_AS(RelayConfig{-1.0}.validate(g, 0.05), ConfigError);
  CHECK_THROWS_AS(RelayConfig::defaults_for(g, 0.0), ConfigError);
  CHECK(RelayConfig::defaults_for(NetworkGrid(1, 0), 0.05).relay_interval == 0.025);
}

TEST_CASE("one round of d=100 dummy routes costs about d times the mean distance") {
  const NetworkGrid g(32, build_grid(32, 0).center());
  const auto dist = bfs_distances(32, g.sink());
  double mean = 0.0, sq = 0.0;
  for (int v : dist) {
    mean += v;
    sq += static_cast<double>(v) * v;
  }
  mean /= dist.size();
  const double var = sq / dist.size() - mean * mean;

  ScheduleConfig cfg;
  cfg.n = 1024;
  cfg.d = 100;
  cfg.rounds = 200;
  Rng arng(5);
  const auto tl = group_schedule(cfg, assign_groups(cfg, arng), Rng(6));
  const auto relay = RelayConfig::defaults_for(g, cfg.delta);
  EnergyLedger ledger(g.size());
  for (const auto& t : tl) emulate_route(route_to_sink(g, t.cell), t.time, t.round_index, relay, ledger);
  const double per_round = static_cast<double>(ledger.total_hops()) / cfg.rounds;
  // Sources are sampled without replacement within a cycle, so the
  // with-replacement variance is an upper bound.
  const double sd = std::sqrt(var * tl.size()) / cfg.rounds;
  MESSAGE("hops per round " << per_round << " vs " << cfg.d * mean);
  CHECK(std::abs(per_round - cfg.d * mean) < 5.0 * sd);
}

TEST_CASE("ledger merge and CSV") {
  EnergyLedger a(4), b(4);
  a.record(1);
  a.record(1);
  b.record(3);
  a.merge(b);
  CHECK(a.total_hops() == 3);
  CHECK(a.per_node_tx() == std::vector<std::uint64_t>{0, 2, 0, 1});
  CHECK_THROWS_AS(a.merge(EnergyLedger(5)), ContractViolation);
  std::ostringstream os;
  write_ledger_csv(os, a);
  CHECK(os.str() == "cell,tx_count\n0,0\n1,2\n2,0\n3,1\n");
}

TEST_CASE("wn_bound") {
  CHECK(wn_bound(1024, 100) == doctest::Approx(1227.6049235319526).epsilon(1e-12));
  const double e2 = std::exp(2.0);
  CHECK(wn_bound(e2, 1) == doctest::Approx(2.0 * std::sqrt(e2 / 2.0)).epsilon(1e-12));
  CHECK(wn_bound(e2, 1) == doctest::Approx(3.8442310281591165).epsilon(1e-12));
  CHECK_THROWS_AS(wn_bound(1, 10), ParameterError);
  CHECK_THROWS_AS(wn_bound(16, 0), ParameterError);
}
