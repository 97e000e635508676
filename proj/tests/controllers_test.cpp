#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "fixtures.hpp"
#include "sigctl/controllers.hpp"

using namespace sigctl;

namespace {

// In-roads (0, 1) at one junction, phases A = (2, 0) and B = (0, 3); road 0
// feeds road 2 (at another junction) with estimate 0.5.
struct HandNet {
  fixtures::Net n = fixtures::blank({2, 1});
  TurningEstimator est;
  HandNet() {
    fixtures::phase(n, 0, {{0, 2.0}}, "A");
    fixtures::phase(n, 0, {{1, 3.0}}, "B");
    fixtures::phase(n, 1, {{2, 1.0}});
    fixtures::link(n, 0, 2, 0.5);
    est = TurningEstimator(n.turning, 1);
    est.observe(0, std::vector<double>{0.5});
  }
  LocalView view(const std::vector<double>& measured) const { return make_local_view(n.topo, 0, measured, est); }
};

std::vector<double> random_weights(std::mt19937_64& g, std::size_t k, double scale = 100.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> w(k);
  for (auto& v : w) v = u(g);
  return w;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

LocalView queue_view(std::span<const Phase> phases, std::vector<double> measured) {
  LocalView v;
  v.phases = phases;
  for (std::size_t i = 0; i < measured.size(); ++i) v.members.push_back({i, measured[i], {}});
  return v;
}

}  // namespace

TEST(Policy, NamesRoundTrip) {
  for (Policy p : kAllPolicies) EXPECT_EQ(parse_policy(to_string(p)), p);
  EXPECT_FALSE(parse_policy("fixed_time").has_value());
  EXPECT_TRUE(decides_per_cycle(Policy::CyclicBackPressure));
  EXPECT_TRUE(decides_per_cycle(Policy::Proportional));
  EXPECT_FALSE(decides_per_cycle(Policy::BackPressure));
  EXPECT_FALSE(decides_per_cycle(Policy::Greedy));
}

TEST(Estimator, SingleObservationWindow) {
  HandNet h;
  EXPECT_DOUBLE_EQ(h.est.estimate(0, 2), 0.5);
  TurningEstimator e(h.n.turning, 1);
  e.observe(0, std::vector<double>{0.3});
  EXPECT_DOUBLE_EQ(e.estimate(0, 2), 0.3);
}

TEST(Estimator, WindowMean) {
  HandNet h;
  TurningEstimator e(h.n.turning, 3);
  for (double p : {0.9, 0.2, 0.4, 0.6}) e.observe(0, std::vector<double>{p});
  EXPECT_NEAR(e.estimate(0, 2), 0.4, 1e-15);
  EXPECT_EQ(e.observations(0), 3u);
}

TEST(Estimator, ColdStartIsUniformIncludingExit) {
  auto n = fixtures::blank({1, 1, 1});
  for (std::size_t j = 0; j < 3; ++j) fixtures::phase(n, j, {{j, 1.0}});
  fixtures::link(n, 0, 1, 0.2);
  fixtures::link(n, 0, 2, 0.2);
  TurningEstimator e(n.turning, 10);
  EXPECT_DOUBLE_EQ(e.estimate(0, 1), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(e.estimate(0, 2), 1.0 / 3.0);
  EXPECT_EQ(e.estimate(1, 0), 0.0);
}

TEST(Estimator, UnobservedRoadKeepsItsEstimate) {
  HandNet h;
  const double before = h.est.estimate(0, 2);
  // An engine step without departures from road 0 produces no observation.
  EXPECT_EQ(h.est.estimate(0, 2), before);
  EXPECT_EQ(h.est.observations(0), 1u);
}

TEST(Estimator, StaysInUnitSimplex) {
  auto n = fixtures::blank({1, 1, 1});
  for (std::size_t j = 0; j < 3; ++j) fixtures::phase(n, j, {{j, 1.0}});
  fixtures::link(n, 0, 1, 0.4);
  fixtures::link(n, 0, 2, 0.4);
  TurningEstimator e(n.turning, 5);
  std::mt19937_64 g(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double x = u(g), y = u(g) * (1.0 - x);
    e.observe(0, std::vector<double>{x, y});
    const auto& q = e.estimates(0);
    EXPECT_GE(q[0], 0.0);
    EXPECT_GE(q[1], 0.0);
    EXPECT_LE(q[0] + q[1], 1.0 + 1e-12);
    EXPECT_LE(e.observations(0), 5u);
  }
}

TEST(Weights, ZeroQueuesGiveZeroWeights) {
  HandNet h;
  for (double w : compute_weights(h.view({0.0, 0.0, 0.0}))) EXPECT_EQ(w, 0.0);
}

TEST(Weights, HandComputed) {
  HandNet h;
  const auto w = compute_weights(h.view({10.0, 4.0, 4.0}));
  EXPECT_DOUBLE_EQ(w[0], 16.0);
  EXPECT_DOUBLE_EQ(w[1], 12.0);
  EXPECT_EQ(argmax_lowest(w), 0u);
  EXPECT_EQ(allocate_classic_bp(w, 0.0, 30.0), (JunctionDecision{1.0, 0.0}));
}

TEST(Weights, FullTurnIntoEqualQueueCancels) {
  auto n = fixtures::blank({1, 1});
  fixtures::phase(n, 0, {{0, 1.0}});
  fixtures::phase(n, 1, {{1, 1.0}});
  fixtures::link(n, 0, 1, 1.0);
  TurningEstimator e(n.turning, 1);
  e.observe(0, std::vector<double>{1.0});
  EXPECT_EQ(compute_weights(make_local_view(n.topo, 0, std::vector<double>{7.0, 7.0}, e))[0], 0.0);
}

TEST(CyclicBp, EqualWeightsSplitEvenly) {
  const auto d = allocate_cyclic_bp(std::vector<double>{3.0, 3.0}, 2.5, 0.0, 30.0);
  EXPECT_DOUBLE_EQ(d[0], 0.5);
  EXPECT_DOUBLE_EQ(d[1], 0.5);
}

TEST(CyclicBp, HandComputedSoftmax) {
  const auto d = allocate_cyclic_bp(std::vector<double>{16.0, 12.0}, 0.25, 3.0, 30.0);
  const double e = std::exp(1.0);
  EXPECT_NEAR(d[0], 0.9 * e / (e + 1.0), 1e-12);
  EXPECT_NEAR(d[0], 0.6580, 1e-3);
  EXPECT_NEAR(d[1], 0.2420, 1e-3);
}

TEST(CyclicBp, VanishingEtaIsUniform) {
  std::mt19937_64 g(1);
  for (std::size_t k = 2; k <= 6; ++k) {
    const auto d = allocate_cyclic_bp(random_weights(g, k), 1e-9, 3.0, 30.0);
    for (double v : d) EXPECT_NEAR(v, 0.9 / static_cast<double>(k), 1e-6);
  }
}

TEST(CyclicBp, RejectsNonPositiveEta) {
  EXPECT_THROW(allocate_cyclic_bp(std::vector<double>{1.0}, 0.0, 0.0, 30.0), Error);
}

TEST(CyclicBp, SimplexAndPositivity) {
  std::mt19937_64 g(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 5000; ++trial) {
    const std::size_t k = 2 + trial % 5;
    const double L = 30.0 * 0.5 * u(g);
    const double eta = std::pow(10.0, -3.0 + 6.0 * u(g));
    const auto d = allocate_cyclic_bp(random_weights(g, k, 1e4), eta, L, 30.0);
    double s = 0.0;
    for (double v : d) {
      ASSERT_GT(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0 - L / 30.0, 1e-12);
  }
}

TEST(CyclicBp, ShiftInvariance) {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t k = 2 + trial % 5;
    auto w = random_weights(g, k, 50.0);
    auto shifted = w;
    const double c = u(g);
    for (auto& v : shifted) v += c;
    const auto a = allocate_cyclic_bp(w, 0.3, 3.0, 30.0), b = allocate_cyclic_bp(shifted, 0.3, 3.0, 30.0);
    for (std::size_t s = 0; s < k; ++s) EXPECT_NEAR(a[s], b[s], 1e-12);
    EXPECT_EQ(allocate_classic_bp(w, 3.0, 30.0), allocate_classic_bp(shifted, 3.0, 30.0));
  }
}

TEST(CyclicBp, RaisingAWeightNeverLowersItsShare) {
  std::mt19937_64 g(4);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t k = 2 + trial % 5;
    auto w = random_weights(g, k, 20.0);
    const std::size_t s = trial % k;
    const auto before = allocate_cyclic_bp(w, 0.5, 0.0, 30.0);
    w[s] += u(g) + 1e-9;
    const auto after = allocate_cyclic_bp(w, 0.5, 0.0, 30.0);
    EXPECT_GE(after[s], before[s]);
  }
}

TEST(Softmax, EntropyBound) {
  std::mt19937_64 g(5);
  for (std::size_t k = 2; k <= 6; ++k)
    for (int trial = 0; trial < 1000; ++trial) {
      const auto w = random_weights(g, k);
      const double eta = 0.01 + 3.0 * (trial % 10) / 10.0;
      const auto p = softmax(w, eta);
      double expected = 0.0;
      for (std::size_t s = 0; s < k; ++s) expected += p[s] * w[s];
      const double top = *std::max_element(w.begin(), w.end());
      EXPECT_GE(expected, top - std::log(static_cast<double>(k)) / eta);
    }
}

TEST(Softmax, LargeEtaConcentrates) {
  const auto d = allocate_cyclic_bp(std::vector<double>{1.0, 2.0, 1.5}, 1e3, 3.0, 30.0);
  EXPECT_GE(d[1], 0.999 * 0.9);
}

TEST(ClassicBp, TiesGoToLowestIndex) {
  EXPECT_EQ(allocate_classic_bp(std::vector<double>{5.0, 3.0}, 0.0, 30.0), (JunctionDecision{1.0, 0.0}));
  EXPECT_EQ(allocate_classic_bp(std::vector<double>{3.0, 3.0}, 0.0, 30.0), (JunctionDecision{1.0, 0.0}));
  EXPECT_EQ(allocate_classic_bp(std::vector<double>{-1.0, 2.0, 2.0}, 3.0, 30.0), (JunctionDecision{0.0, 0.9, 0.0}));
}

TEST(Proportional, RatioOfQueueSums) {
  std::vector<Phase> phases{{"a", {{0, 1.0}}}, {"b", {{1, 1.0}}}};
  const auto d = allocate_proportional(queue_view(phases, {10.0, 30.0}), 0.0, 30.0);
  EXPECT_DOUBLE_EQ(d[0], 0.25);
  EXPECT_DOUBLE_EQ(d[1], 0.75);
}

TEST(Proportional, EmptyQueuesFallBackToUniform) {
  std::vector<Phase> phases{{"a", {{0, 1.0}}}, {"b", {{1, 1.0}}}, {"c", {{0, 1.0}, {1, 2.0}}}};
  const auto d = allocate_proportional(queue_view(phases, {0.0, -2.0}), 3.0, 30.0);
  for (double v : d) EXPECT_DOUBLE_EQ(v, 0.3);
}

TEST(Proportional, SinglePhaseGetsAllGreen) {
  std::vector<Phase> phases{{"a", {{0, 1.0}}}};
  EXPECT_DOUBLE_EQ(allocate_proportional(queue_view(phases, {4.0}), 6.0, 30.0)[0], 0.8);
}

TEST(Proportional, NegativeReadingsAreFloored) {
  std::vector<Phase> phases{{"a", {{0, 1.0}}}, {"b", {{1, 1.0}}}};
  const auto d = allocate_proportional(queue_view(phases, {-5.0, 2.0}), 0.0, 30.0);
  EXPECT_EQ(d, (JunctionDecision{0.0, 1.0}));
}

TEST(Greedy, LargestQueueSumWins) {
  std::vector<Phase> phases{{"a", {{0, 1.0}}}, {"b", {{1, 1.0}}}};
  EXPECT_EQ(allocate_greedy(queue_view(phases, {10.0, 30.0}), 0.0, 30.0), (JunctionDecision{0.0, 1.0}));
  EXPECT_EQ(allocate_greedy(queue_view(phases, {7.0, 7.0}), 0.0, 30.0), (JunctionDecision{1.0, 0.0}));
  EXPECT_EQ(allocate_greedy(queue_view(phases, {0.0, 0.0}), 0.0, 30.0), (JunctionDecision{1.0, 0.0}));
}

TEST(Decide, EveryPolicyMeetsItsSimplexContract) {
  std::mt19937_64 g(6);
  std::uniform_real_distribution<double> u(-5.0, 40.0);
  for (int trial = 0; trial < 300; ++trial) {
    auto n = fixtures::random_net(g, 3, 9, 0.1);
    TurningEstimator est(n.turning, 10);
    std::vector<double> measured(n.topo.in_roads.size());
    for (auto& q : measured) q = u(g);
    const double green = n.topo.green_fraction();
    for (Policy p : kAllPolicies) {
      ControllerConfig cfg;
      cfg.policy = p;
      for (std::size_t j = 0; j < n.topo.junctions.size(); ++j) {
        const auto d = decide(make_local_view(n.topo, j, measured, est), cfg, n.topo.lost_time, n.topo.cycle_length);
        ASSERT_EQ(d.size(), n.topo.junctions[j].phases.size());
        EXPECT_NEAR(sum(d), green, 1e-12);
        std::size_t positive = 0;
        for (double v : d) {
          ASSERT_GE(v, 0.0);
          positive += v > 0.0;
        }
        if (p == Policy::CyclicBackPressure) {
          EXPECT_EQ(positive, d.size());
        }
        if (p == Policy::BackPressure || p == Policy::Greedy) {
          EXPECT_EQ(positive, 1u);
          EXPECT_EQ(*std::max_element(d.begin(), d.end()), green);
        }
      }
    }
  }
}

TEST(Decide, OnlyTheNeighbourhoodMatters) {
  // Changing queues outside junction 0's members and their direct downstream
  // roads leaves its decision untouched.
  auto n = fixtures::blank({2, 1, 1});
  fixtures::phase(n, 0, {{0, 2.0}});
  fixtures::phase(n, 0, {{1, 3.0}});
  fixtures::phase(n, 1, {{2, 1.0}});
  fixtures::phase(n, 2, {{3, 1.0}});
  fixtures::link(n, 0, 2, 0.6);
  fixtures::link(n, 2, 3, 0.5);
  TurningEstimator est(n.turning, 10);
  std::mt19937_64 g(9);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  for (Policy p : kAllPolicies) {
    ControllerConfig cfg;
    cfg.policy = p;
    std::vector<double> q{u(g), u(g), u(g), u(g)};
    const auto base = decide(make_local_view(n.topo, 0, q, est), cfg, 0.0, 30.0);
    for (int k = 0; k < 50; ++k) {
      q[3] = u(g);
      EXPECT_EQ(decide(make_local_view(n.topo, 0, q, est), cfg, 0.0, 30.0), base);
    }
  }
}
