#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sigctl/controllers.hpp"
#include "sigctl/dynamics.hpp"
#include "sigctl/error.hpp"
#include "sigctl/network.hpp"

namespace sigctl {

struct Scenario {
  std::string name;
  NetworkTopology topology;
  TurningMatrix turning;
  DemandProfile demand;
  MeasurementModel measurement;
  ControllerConfig controller;
  std::int64_t horizon = 0;  // cycles
  std::uint64_t seed = 0;
  Mode mode = Mode::Fluid;
  std::vector<double> initial_queues;  // empty = all zero

  bool operator==(const Scenario&) const = default;
};

namespace detail {

inline std::int64_t rescale_cycles(std::int64_t cycles, double factor) {
  if (cycles == kOpenEnd) return kOpenEnd;
  return static_cast<std::int64_t>(std::llround(static_cast<double>(cycles) * factor));
}

}  // namespace detail

/// Changes the cycle length to `cycle_seconds` while keeping saturation
/// flows and demands fixed in vehicles per second. Per-cycle quantities
/// scale by T'/T, cycle counts by T/T'. Lost time stays in seconds.
inline Scenario with_cycle_length(Scenario s, double cycle_seconds) {
  if (!(cycle_seconds > 0.0)) throw Error(ErrorCode::Schema, "cycle length must be positive");
  if (!(s.topology.lost_time < cycle_seconds))
    throw Error(ErrorCode::Schema, "cycle length must exceed the lost time");
  const double f = cycle_seconds / s.topology.cycle_length;
  if (f == 1.0) return s;
  for (auto& j : s.topology.junctions)
    for (auto& p : j.phases)
      for (auto& r : p.rates) r.rate *= f;
  for (auto& road : s.demand.roads)
    for (auto& seg : road.segments) {
      seg.rate *= f;
      seg.start = detail::rescale_cycles(seg.start, 1.0 / f);
      seg.end = detail::rescale_cycles(seg.end, 1.0 / f);
    }
  s.demand.period = detail::rescale_cycles(s.demand.period, 1.0 / f);
  s.horizon = std::max<std::int64_t>(1, detail::rescale_cycles(s.horizon, 1.0 / f));
  s.topology.cycle_length = cycle_seconds;
  return s;
}

}  // namespace sigctl
