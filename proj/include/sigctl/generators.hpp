#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sigctl/dynamics.hpp"
#include "sigctl/error.hpp"
#include "sigctl/network.hpp"
#include "sigctl/scenario.hpp"

namespace sigctl {

namespace detail {

class TopologyBuilder {
 public:
  explicit TopologyBuilder(double cycle_length, double lost_time) {
    topo_.cycle_length = cycle_length;
    topo_.lost_time = lost_time;
  }

  std::size_t junction(std::string id) {
    topo_.junctions.push_back({std::move(id), {}, {}});
    return topo_.junctions.size() - 1;
  }
  std::size_t road(std::size_t j, std::string id, std::optional<double> capacity, bool ingress) {
    topo_.in_roads.push_back({std::move(id), j, capacity, ingress});
    const std::size_t i = topo_.in_roads.size() - 1;
    topo_.junctions[j].in_roads.push_back(i);
    return i;
  }
  void phase(std::size_t j, std::string name, std::vector<PhaseRate> rates) {
    topo_.junctions[j].phases.push_back({std::move(name), std::move(rates)});
  }
  void turn(std::size_t from, std::size_t to, double p) {
    if (p <= 0.0) return;
    moves_.push_back({from, to, p});
  }

  /// Finalises links and turning entries, merging repeated (from, to) pairs.
  std::pair<NetworkTopology, TurningMatrix> build() {
    TurningMatrix p(topo_.in_roads.size());
    for (const auto& m : moves_) {
      const double prev = p.get(m.from, m.to);
      if (prev == 0.0) topo_.links.push_back({m.from, m.to});
      p.set(m.from, m.to, prev + m.p);
    }
    return {topo_, p};
  }

 private:
  struct Move {
    std::size_t from, to;
    double p;
  };
  NetworkTopology topo_;
  std::vector<Move> moves_;
};

inline std::vector<RateSegment> alternating(double rate, double peak, double offpeak, std::int64_t half) {
  if (half <= 0) return {{0, kOpenEnd, rate * peak}};
  return {{0, half, rate * peak}, {half, 2 * half, rate * offpeak}};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Two-junction network.
//
// J1 (west) and J2 (east) joined by one road in each direction. Every
// approach (W, N, S, E) has a through+right in-road "<J>_<A>_tr" and a left
// in-road "<J>_<A>_l". The six outer approaches are unbounded ingress roads;
// the four in-roads fed by the other junction hold 50 vehicles each. The
// north-south approaches of J2 are a double-lane road: their through+right
// saturation flow is doubled. Two phases per junction, NS and EW.

struct TwoJunctionOptions {
  double cycle_length = 30.0;
  double lost_time = 0.0;
  double lane_flow = 0.5;   // veh/s, through+right lane
  double left_flow = 0.25;  // veh/s, left lane
  double link_capacity = 50.0;
  double through = 0.8;     // share of a tr lane going straight, the rest turns right
  double left_lane = 0.15;  // share of arrivals at an approach that queue in the left lane

  /// Arrival rate in veh/s per ingress in-road id. Roads not listed use the
  /// defaults below: heavier north-south traffic at J2.
  std::map<std::string, double> demand;
  double default_tr = 0.10;
  double default_l = 0.02;
  double j2_ns_tr = 0.30;
  double j2_ns_l = 0.04;

  double peak = 1.0;
  double offpeak = 0.5;
  std::int64_t half_period = 600;  // cycles per peak or off-peak block; 0 = constant

  std::int64_t horizon = 3600;
  std::uint64_t seed = 1;
  Mode mode = Mode::Integer;
};

inline Scenario generate_two_junction(const TwoJunctionOptions& o = {}) {
  detail::TopologyBuilder b(o.cycle_length, o.lost_time);
  const double T = o.cycle_length;
  const char* sides[] = {"W", "N", "S", "E"};

  struct Approach {
    std::size_t tr, l;
  };
  std::map<std::string, Approach> ap;  // key "J1_W" etc.
  for (const char* jid : {"J1", "J2"}) {
    const auto j = b.junction(jid);
    for (const char* side : sides) {
      const std::string base = std::string(jid) + "_" + side;
      const bool internal = (std::string(jid) == "J1" && side[0] == 'E') || (std::string(jid) == "J2" && side[0] == 'W');
      const std::optional<double> cap = internal ? std::optional<double>(o.link_capacity) : std::nullopt;
      ap[base] = {b.road(j, base + "_tr", cap, !internal), b.road(j, base + "_l", cap, !internal)};
    }
    const bool double_ns = std::string(jid) == "J2";
    auto rate = [&](const std::string& side, bool left) {
      if (left) return o.left_flow * T;
      return o.lane_flow * T * (double_ns && (side == "N" || side == "S") ? 2.0 : 1.0);
    };
    std::vector<PhaseRate> ns, ew;
    for (const char* side : sides) {
      const auto& a = ap[std::string(jid) + "_" + side];
      auto& target = (side[0] == 'N' || side[0] == 'S') ? ns : ew;
      target.push_back({a.tr, rate(side, false)});
      target.push_back({a.l, rate(side, true)});
    }
    b.phase(j, "NS", ns);
    b.phase(j, "EW", ew);
  }

  // Movements that stay in the network: eastbound out of J1 joins J2's west
  // approach, westbound out of J2 joins J1's east approach.
  auto join = [&](std::size_t from, const Approach& dst, double share) {
    b.turn(from, dst.tr, share * (1.0 - o.left_lane));
    b.turn(from, dst.l, share * o.left_lane);
  };
  const double right = 1.0 - o.through;
  join(ap["J1_W"].tr, ap["J2_W"], o.through);  // W through -> E
  join(ap["J1_S"].tr, ap["J2_W"], right);      // S right -> E
  join(ap["J1_N"].l, ap["J2_W"], 1.0);         // N left -> E
  join(ap["J2_E"].tr, ap["J1_E"], o.through);  // E through -> W
  join(ap["J2_N"].tr, ap["J1_E"], right);      // N right -> W
  join(ap["J2_S"].l, ap["J1_E"], 1.0);         // S left -> W

  Scenario s;
  s.name = "two_junction";
  std::tie(s.topology, s.turning) = b.build();
  s.demand.period = o.half_period > 0 ? 2 * o.half_period : 0;
  for (std::size_t i = 0; i < s.topology.in_roads.size(); ++i) {
    const auto& road = s.topology.in_roads[i];
    if (!road.ingress) continue;
    double vps;
    if (auto it = o.demand.find(road.id); it != o.demand.end()) {
      vps = it->second;
    } else {
      const bool left = road.id.ends_with("_l");
      const bool heavy = road.id.starts_with("J2_N") || road.id.starts_with("J2_S");
      vps = heavy ? (left ? o.j2_ns_l : o.j2_ns_tr) : (left ? o.default_l : o.default_tr);
    }
    s.demand.roads.push_back({i, detail::alternating(vps * T, o.peak, o.offpeak, o.half_period)});
  }
  s.horizon = o.horizon;
  s.seed = o.seed;
  s.mode = o.mode;
  return s;
}

// ---------------------------------------------------------------------------
// Grid network: rows x cols four-way junctions "J<r>_<c>", row 0 to the
// north. Each junction has one in-road per approach, "<J>_<A>" for traffic
// arriving from side A. Approaches on the edge of the grid are unbounded
// ingress roads; the others are fed by the neighbouring junction.

struct GridCapacity {
  double interior = 50.0;
};

struct GridDemand {
  double boundary_rate = 0.05;  // veh/s per ingress in-road
  double peak = 1.0;
  double offpeak = 1.0;
  std::int64_t half_period = 0;
};

struct GridOptions {
  double cycle_length = 30.0;
  double lost_time = 0.0;
  double lane_flow = 0.5;  // veh/s
  double through = 0.6;
  double right = 0.2;
  double left = 0.2;
  std::int64_t horizon = 3600;
  std::uint64_t seed = 1;
  Mode mode = Mode::Integer;
};

/// In-road counts of a rows x cols grid.
struct GridCounts {
  std::size_t interior;  // 2 (rows (cols - 1) + (rows - 1) cols)
  std::size_t ingress;   // 2 (rows + cols)
  std::size_t total() const { return interior + ingress; }
};

constexpr GridCounts grid_counts(std::size_t rows, std::size_t cols) {
  return {2 * (rows * (cols - 1) + (rows - 1) * cols), 2 * (rows + cols)};
}

inline Scenario generate_grid(std::size_t rows, std::size_t cols, const GridCapacity& capacity = {},
                              const GridDemand& demand = {}, const GridOptions& o = {}) {
  if (rows < 2 || cols < 2) throw Error(ErrorCode::BadDimensions, "grid needs at least 2 rows and 2 columns");
  detail::TopologyBuilder b(o.cycle_length, o.lost_time);
  enum Side { N = 0, S = 1, E = 2, W = 3 };
  const char* names = "NSEW";
  const long R = static_cast<long>(rows), C = static_cast<long>(cols);
  auto has = [&](long r, long c) { return r >= 0 && r < R && c >= 0 && c < C; };
  // Neighbour in direction `side` of (r, c).
  auto step = [](long r, long c, int side) -> std::pair<long, long> {
    switch (side) {
      case N: return {r - 1, c};
      case S: return {r + 1, c};
      case E: return {r, c + 1};
      default: return {r, c - 1};
    }
  };

  std::vector<std::size_t> road(rows * cols * 4);
  auto at = [&](long r, long c, int side) -> std::size_t& { return road[(r * C + c) * 4 + side]; };
  for (long r = 0; r < R; ++r)
    for (long c = 0; c < C; ++c) {
      const std::string jid = "J" + std::to_string(r) + "_" + std::to_string(c);
      const auto j = b.junction(jid);
      for (int side = 0; side < 4; ++side) {
        const auto [nr, nc] = step(r, c, side);
        const bool ingress = !has(nr, nc);
        at(r, c, side) = b.road(j, jid + "_" + names[side],
                                ingress ? std::nullopt : std::optional<double>(capacity.interior), ingress);
      }
      const double sat = o.lane_flow * o.cycle_length;
      b.phase(j, "NS", {{at(r, c, N), sat}, {at(r, c, S), sat}});
      b.phase(j, "EW", {{at(r, c, E), sat}, {at(r, c, W), sat}});
    }

  // Arriving from `side`, the vehicle travels towards the opposite side.
  // Through keeps the heading; right and left rotate it.
  constexpr int opposite[] = {S, N, W, E};
  constexpr int right_of[] = {E, W, S, N};  // indexed by heading: N turns right to E
  constexpr int left_of[] = {W, E, N, S};
  for (long r = 0; r < R; ++r)
    for (long c = 0; c < C; ++c)
      for (int side = 0; side < 4; ++side) {
        const int heading = opposite[side];
        const std::pair<int, double> moves[] = {
            {heading, o.through}, {right_of[heading], o.right}, {left_of[heading], o.left}};
        for (const auto& [dir, share] : moves) {
          const auto [nr, nc] = step(r, c, dir);
          if (has(nr, nc)) b.turn(at(r, c, side), at(nr, nc, opposite[dir]), share);
        }
      }

  Scenario s;
  s.name = "grid_" + std::to_string(rows) + "x" + std::to_string(cols);
  std::tie(s.topology, s.turning) = b.build();
  s.demand.period = demand.half_period > 0 ? 2 * demand.half_period : 0;
  for (std::size_t i = 0; i < s.topology.in_roads.size(); ++i)
    if (s.topology.in_roads[i].ingress)
      s.demand.roads.push_back(
          {i, detail::alternating(demand.boundary_rate * o.cycle_length, demand.peak, demand.offpeak,
                                  demand.half_period)});
  s.horizon = o.horizon;
  s.seed = o.seed;
  s.mode = o.mode;
  return s;
}

// ---------------------------------------------------------------------------
// One junction, one in-road, one phase: the smallest instance with a closed
// form for every quantity.

inline Scenario generate_single_queue(double sigma, double arrival_rate, double cycle_length = 30.0,
                                      double lost_time = 0.0) {
  detail::TopologyBuilder b(cycle_length, lost_time);
  const auto j = b.junction("J");
  const auto i = b.road(j, "q", std::nullopt, true);
  b.phase(j, "all", {{i, sigma}});
  Scenario s;
  s.name = "single_queue";
  std::tie(s.topology, s.turning) = b.build();
  s.demand.roads.push_back({i, {{0, kOpenEnd, arrival_rate}}});
  s.horizon = 1000;
  s.seed = 1;
  return s;
}

}  // namespace sigctl
