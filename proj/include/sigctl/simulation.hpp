#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sigctl/controllers.hpp"
#include "sigctl/decision.hpp"
#include "sigctl/dynamics.hpp"
#include "sigctl/error.hpp"
#include "sigctl/metrics.hpp"
#include "sigctl/network.hpp"
#include "sigctl/scenario.hpp"

namespace sigctl {

/// How a controller's decision interval maps onto cycles. A slot policy
/// with d < T runs `substeps` = T/d engine steps per cycle, each with
/// sigma and demand scaled by d/T; with d > T a decision is held for
/// `hold` = d/T whole cycles. Per-cycle policies use (1, 1).
struct Schedule {
  std::int64_t substeps = 1;
  std::int64_t hold = 1;
};

inline Schedule make_schedule(const ControllerConfig& cfg, double cycle_length) {
  if (decides_per_cycle(cfg.policy)) return {};
  const double d = cfg.decision_interval;
  if (!(d > 0.0) || !(cycle_length > 0.0))
    throw Error(ErrorCode::NonIntegralInterval, "decision interval must be positive");
  auto integral = [](double r) {
    const double k = std::round(r);
    return k >= 1.0 && std::abs(r - k) <= 1e-9 * r;
  };
  Schedule s;
  if (d <= cycle_length) {
    if (!integral(cycle_length / d))
      throw Error(ErrorCode::NonIntegralInterval, "decision interval does not divide the cycle length");
    s.substeps = std::llround(cycle_length / d);
  } else {
    if (!integral(d / cycle_length))
      throw Error(ErrorCode::NonIntegralInterval, "cycle length does not divide the decision interval");
    s.hold = std::llround(d / cycle_length);
  }
  return s;
}

struct RunOptions {
  bool keep_records = false;
  bool keep_cycle_queues = true;
};

struct RunResult {
  MetricsSeries metrics;
  std::vector<StepRecord> records;
  std::vector<std::vector<double>> cycle_queues;  // Q at every cycle boundary, horizon + 1 entries
  std::size_t decisions = 0;                      // decision epochs, each covering all junctions
  Schedule schedule;
  SimState state;
};

inline PolicyDecision decide_all(const NetworkTopology& topo, const ControllerConfig& cfg,
                                 std::span<const double> measured, const TurningEstimator& est) {
  PolicyDecision d;
  d.junctions.resize(topo.junctions.size());
  for (std::size_t j = 0; j < topo.junctions.size(); ++j)
    d[j] = decide(make_local_view(topo, j, measured, est), cfg, topo.lost_time, topo.cycle_length);
  return d;
}

/// Runs the scenario for `s.horizon` cycles under its controller. Metrics are
/// sampled at the end of every decision period (and at the horizon).
inline RunResult run_horizon(const Scenario& s, const RunOptions& opt = {}) {
  if (s.horizon < 1) throw Error(ErrorCode::BadHorizon, "horizon must be at least one cycle");
  const auto& topo = s.topology;
  const std::size_t n = topo.in_roads.size();

  RunResult res;
  res.schedule = make_schedule(s.controller, topo.cycle_length);
  const auto sub = res.schedule.substeps;
  const auto hold = res.schedule.hold;
  const double fraction = 1.0 / static_cast<double>(sub);

  res.state = make_state(n, s.seed, s.mode, s.initial_queues);
  auto& st = res.state;
  TurningEstimator est(s.turning, s.controller.window);

  std::vector<std::optional<double>> capacity(n);
  auto& series = res.metrics;
  for (std::size_t i = 0; i < n; ++i) {
    series.road_ids.push_back(topo.in_roads[i].id);
    capacity[i] = topo.in_roads[i].capacity;
  }

  PolicyDecision current;
  double exits_since = 0.0;
  for (std::int64_t c = 0; c < s.horizon; ++c) {
    if (opt.keep_cycle_queues) res.cycle_queues.push_back(st.queues);
    const auto rates = s.demand.rates_at(c, n);
    for (std::int64_t k = 0; k < sub; ++k) {
      if (sub > 1 || c % hold == 0) {
        const auto measured = measure_queues(st, s.measurement, s.mode);
        current = decide_all(topo, s.controller, measured, est);
        ++res.decisions;
      }
      auto rec = step(st, topo, s.turning, rates, current, s.mode, fraction);
      for (std::size_t i = 0; i < n && i < est.size(); ++i)
        if (rec.departures[i] > 0.0 && !est.targets(i).empty()) est.observe(i, rec.realised[i]);
      exits_since += rec.exits;

      if (sub > 1 || (c + 1) % hold == 0 || c + 1 == s.horizon) {
        MetricsSample m;
        m.t = static_cast<double>(c * sub + k + 1) / static_cast<double>(sub);
        m.queues = st.queues;
        for (std::size_t i = 0; i < n; ++i) {
          m.q_sigma += st.queues[i];
          if (congested(st.queues[i], capacity[i])) ++m.congested_links;
        }
        m.exits = exits_since;
        m.exits_cum = st.exits_total;
        exits_since = 0.0;
        series.samples.push_back(std::move(m));
      }
      if (opt.keep_records) res.records.push_back(std::move(rec));
    }
    st.cycle = c + 1;
  }
  if (opt.keep_cycle_queues) res.cycle_queues.push_back(st.queues);

  summarize_densities(series, capacity);
  if (s.mode == Mode::Integer) {
    const double step_seconds = topo.cycle_length * fraction;
    if (st.exited_vehicles > 0.0) series.travel_time = st.travel_steps_total / st.exited_vehicles * step_seconds;
  } else {
    // Little's law: mean vehicles in the network over mean exit rate.
    const double throughput = st.exits_total / static_cast<double>(s.horizon);
    if (throughput > 0.0) series.travel_time = series.mean_q_sigma() / throughput * topo.cycle_length;
  }
  return res;
}

}  // namespace sigctl
