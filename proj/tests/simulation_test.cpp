#include <gtest/gtest.h>

#include "sigctl/generators.hpp"
#include "sigctl/output.hpp"
#include "sigctl/simulation.hpp"

using namespace sigctl;

namespace {

Scenario short_two_junction(Policy p, double interval = 10.0) {
  TwoJunctionOptions o;
  o.horizon = 200;
  o.half_period = 50;
  auto s = generate_two_junction(o);
  s.controller.policy = p;
  s.controller.decision_interval = interval;
  return s;
}

ErrorCode run_error(const Scenario& s) {
  try {
    run_horizon(s);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "ran without error";
  return ErrorCode::IoFailure;
}

}  // namespace

TEST(Schedule, SlotPoliciesSubdivideTheCycle) {
  ControllerConfig c;
  c.policy = Policy::BackPressure;
  c.decision_interval = 10.0;
  EXPECT_EQ(make_schedule(c, 30.0).substeps, 3);
  c.decision_interval = 30.0;
  EXPECT_EQ(make_schedule(c, 30.0).substeps, 1);
  c.decision_interval = 90.0;
  EXPECT_EQ(make_schedule(c, 30.0).hold, 3);
  c.decision_interval = 7.0;
  EXPECT_THROW(make_schedule(c, 30.0), Error);
  c.policy = Policy::CyclicBackPressure;
  EXPECT_EQ(make_schedule(c, 30.0).substeps, 1);
}

TEST(Run, HorizonMustBePositive) {
  auto s = generate_single_queue(4.0, 1.0);
  s.horizon = 0;
  EXPECT_EQ(run_error(s), ErrorCode::BadHorizon);
}

TEST(Run, NonIntegralIntervalIsRejected) {
  EXPECT_EQ(run_error(short_two_junction(Policy::Greedy, 7.0)), ErrorCode::NonIntegralInterval);
}

TEST(Run, FluidSingleQueueSettlesImmediately) {
  auto s = generate_single_queue(4.0, 3.6, 30.0, 0.0);
  s.mode = Mode::Fluid;
  s.horizon = 50;
  const auto r = run_horizon(s);
  ASSERT_EQ(r.metrics.samples.size(), 50u);
  for (const auto& m : r.metrics.samples) EXPECT_DOUBLE_EQ(m.q_sigma, 3.6);
  EXPECT_EQ(r.cycle_queues.front()[0], 0.0);
  // Little's law: 3.6 vehicles in the network, 3.6 leaving per cycle.
  EXPECT_NEAR(r.metrics.travel_time, 30.0, 30.0 * 3.6 / 50.0 + 1e-9);
}

TEST(Run, SameSeedSameTrajectory) {
  for (Policy p : kAllPolicies) {
    const auto s = short_two_junction(p);
    const auto a = run_horizon(s), b = run_horizon(s);
    EXPECT_EQ(a.metrics, b.metrics);
    EXPECT_EQ(io::metrics_csv(a.metrics), io::metrics_csv(b.metrics));
  }
}

TEST(Run, SeedChangesTheTrajectory) {
  auto s = short_two_junction(Policy::CyclicBackPressure);
  const auto a = run_horizon(s);
  s.seed += 1;
  EXPECT_NE(a.metrics.samples, run_horizon(s).metrics.samples);
}

TEST(Run, DecisionCountsFollowTheSchedule) {
  const auto cyc = run_horizon(short_two_junction(Policy::CyclicBackPressure));
  const auto prop = run_horizon(short_two_junction(Policy::Proportional));
  const auto bp = run_horizon(short_two_junction(Policy::BackPressure, 10.0));
  const auto held = run_horizon(short_two_junction(Policy::Greedy, 60.0));
  EXPECT_EQ(cyc.decisions, 200u);
  EXPECT_EQ(prop.decisions, cyc.decisions);
  EXPECT_EQ(bp.decisions, 600u);
  EXPECT_EQ(held.decisions, 100u);
  EXPECT_EQ(cyc.metrics.samples.size(), 200u);
  EXPECT_EQ(bp.metrics.samples.size(), 600u);
  EXPECT_EQ(held.metrics.samples.size(), 100u);
  EXPECT_DOUBLE_EQ(bp.metrics.samples.front().t, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(held.metrics.samples.front().t, 2.0);
}

TEST(Run, QueueTotalIsTheSumOfRoads) {
  for (Policy p : kAllPolicies) {
    const auto r = run_horizon(short_two_junction(p));
    for (const auto& m : r.metrics.samples) {
      double s = 0.0;
      for (double q : m.queues) s += q;
      EXPECT_EQ(m.q_sigma, s);
    }
  }
}

TEST(Run, IntegerModeConservesVehicles) {
  auto s = short_two_junction(Policy::BackPressure);
  s.horizon = 1000;
  s.initial_queues.assign(s.topology.in_roads.size(), 2.0);
  RunOptions opt;
  opt.keep_records = true;
  const auto r = run_horizon(s, opt);
  double arrived = 2.0 * static_cast<double>(s.topology.in_roads.size()), exited = 0.0;
  std::size_t k = 0;
  for (const auto& rec : r.records) {
    for (double a : rec.arrivals) arrived += a;
    exited += rec.exits;
    if (++k % 3 == 0) {
      const auto& q = r.cycle_queues[k / 3];
      double total = 0.0;
      for (double v : q) total += v;
      ASSERT_EQ(arrived, total + exited);
    }
  }
  EXPECT_EQ(r.state.arrivals_total, arrived);
}

TEST(Run, TravelTimeInIntegerModeCountsSteps) {
  // Under full service with demand below capacity every vehicle leaves in
  // the step after it arrives.
  auto s = generate_single_queue(10.0, 1.0, 30.0, 0.0);
  s.mode = Mode::Integer;
  s.horizon = 2000;
  const auto r = run_horizon(s);
  EXPECT_GT(r.state.exited_vehicles, 1500.0);
  EXPECT_GE(r.metrics.travel_time, 30.0);
  EXPECT_LT(r.metrics.travel_time, 31.0);
}

TEST(Run, CongestionCountUsesCapacity) {
  auto s = short_two_junction(Policy::CyclicBackPressure);
  s.initial_queues.assign(s.topology.in_roads.size(), 0.0);
  const auto i = s.topology.in_road_index("J1_E_tr");
  s.initial_queues[i] = 500.0;
  s.horizon = 1;
  s.mode = Mode::Fluid;
  const auto r = run_horizon(s);
  EXPECT_EQ(r.metrics.samples[0].congested_links, 1u);
  EXPECT_GT(r.metrics.max_density, 0.85);
}

TEST(Run, MeasurementNoiseReachesTheController) {
  auto s = short_two_junction(Policy::CyclicBackPressure);
  const auto clean = run_horizon(s);
  s.measurement.delta_max = 5.0;
  const auto noisy = run_horizon(s);
  EXPECT_NE(clean.metrics.samples, noisy.metrics.samples);
}
