#pragma once

#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sigctl/sigctl.hpp"

namespace fixtures {

using sigctl::NetworkTopology;
using sigctl::TurningMatrix;

struct Net {
  NetworkTopology topo;
  TurningMatrix turning;
};

/// One junction per entry of `junction_roads`; junction j owns that many
/// in-roads, numbered consecutively across junctions.
inline Net blank(const std::vector<std::size_t>& junction_roads, double T = 30.0, double L = 0.0) {
  Net n;
  n.topo.cycle_length = T;
  n.topo.lost_time = L;
  std::size_t next = 0;
  for (std::size_t j = 0; j < junction_roads.size(); ++j) {
    sigctl::Junction junc;
    junc.id = "J" + std::to_string(j + 1);
    for (std::size_t k = 0; k < junction_roads[j]; ++k, ++next) {
      junc.in_roads.push_back(next);
      n.topo.in_roads.push_back({"r" + std::to_string(next + 1), j, std::nullopt, false});
    }
    n.topo.junctions.push_back(std::move(junc));
  }
  n.turning = TurningMatrix(next);
  return n;
}

inline void phase(Net& n, std::size_t j, std::vector<sigctl::PhaseRate> rates, std::string name = "") {
  if (name.empty()) name = "p" + std::to_string(n.topo.junctions[j].phases.size());
  n.topo.junctions[j].phases.push_back({std::move(name), std::move(rates)});
}

inline void link(Net& n, std::size_t from, std::size_t to, double p) {
  n.topo.links.push_back({from, to});
  n.turning.set(from, to, p);
}

/// One in-road, one phase sigma, cycle T, lost time L.
inline Net single_queue(double sigma = 4.0, double T = 10.0, double L = 1.0) {
  auto n = blank({1}, T, L);
  phase(n, 0, {{0, sigma}});
  return n;
}

/// J1 serves road 0 (sigma 4) which feeds road 1 with p = 1; J2 serves
/// roads 1 and 2 with separate phases of rate 5. L = 0.
inline Net tandem() {
  auto n = blank({1, 2});
  phase(n, 0, {{0, 4.0}});
  phase(n, 1, {{1, 5.0}}, "A");
  phase(n, 1, {{2, 5.0}}, "B");
  link(n, 0, 1, 1.0);
  return n;
}

/// Random small network: up to `max_junctions` junctions with 1..3
/// in-roads and 1..3 phases each (total phases capped), every in-road
/// served, random links between junctions with row sums below one.
inline Net random_net(std::mt19937_64& g, std::size_t max_junctions = 3, std::size_t max_phases = 6,
                      double L_share = 0.0) {
  std::uniform_int_distribution<std::size_t> nj_d(1, max_junctions);
  const std::size_t nj = nj_d(g);
  std::vector<std::size_t> sizes(nj);
  std::uniform_int_distribution<std::size_t> size_d(1, 3);
  for (auto& s : sizes) s = size_d(g);
  auto n = blank(sizes, 30.0, 30.0 * L_share);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t phases_left = max_phases;
  for (std::size_t j = 0; j < nj; ++j) {
    const auto& members = n.topo.junctions[j].in_roads;
    const std::size_t remaining_junctions = nj - j - 1;
    std::size_t cap = std::min<std::size_t>(3, phases_left - remaining_junctions);
    std::uniform_int_distribution<std::size_t> np_d(1, std::max<std::size_t>(1, cap));
    const std::size_t np = np_d(g);
    phases_left -= np;
    for (std::size_t p = 0; p < np; ++p) {
      std::vector<sigctl::PhaseRate> rates;
      for (std::size_t i : members)
        if (u(g) < 0.6) rates.push_back({i, 1.0 + 4.0 * u(g)});
      if (rates.empty()) rates.push_back({members[p % members.size()], 1.0 + 4.0 * u(g)});
      phase(n, j, std::move(rates));
    }
    // Every in-road is served by at least one phase.
    auto& phases = n.topo.junctions[j].phases;
    for (std::size_t i : members) {
      bool served = false;
      for (const auto& p : phases) served = served || p.rate_of(i) > 0.0;
      if (!served) phases[i % phases.size()].rates.push_back({i, 1.0 + 4.0 * u(g)});
    }
  }
  const std::size_t roads = n.topo.in_roads.size();
  for (std::size_t i = 0; i < roads; ++i) {
    double budget = 0.9 * u(g);
    for (std::size_t k = 0; k < roads; ++k) {
      if (n.topo.in_roads[k].junction == n.topo.in_roads[i].junction) continue;
      if (u(g) < 0.4 && budget > 0.05) {
        const double p = budget * u(g);
        link(n, i, k, p);
        budget -= p;
      }
    }
  }
  return n;
}

inline double total_max_sigma(const NetworkTopology& topo) {
  double s = 0.0;
  for (const auto& j : topo.junctions) {
    double best = 0.0;
    for (const auto& p : j.phases) {
      double sum = 0.0;
      for (const auto& r : p.rates) sum += r.rate;
      best = std::max(best, sum);
    }
    s += best;
  }
  return s;
}

inline sigctl::PolicyDecision decision(std::vector<std::vector<double>> per_junction) {
  sigctl::PolicyDecision d;
  d.junctions = std::move(per_junction);
  return d;
}

}  // namespace fixtures
