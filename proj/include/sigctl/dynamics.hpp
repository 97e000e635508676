#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "sigctl/decision.hpp"
#include "sigctl/error.hpp"
#include "sigctl/network.hpp"

namespace sigctl {

enum class Mode { Fluid, Integer };

constexpr std::string_view to_string(Mode m) noexcept { return m == Mode::Fluid ? "fluid" : "integer"; }

inline std::optional<Mode> parse_mode(std::string_view s) {
  if (s == "fluid") return Mode::Fluid;
  if (s == "integer") return Mode::Integer;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Random streams. Each in-road owns one independent engine per purpose, so a
// draw on one road never shifts the sequence seen by another.

enum class Stream : std::uint64_t { Arrivals = 0, Service = 1, Turning = 2, Measurement = 3 };

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class RngStreams {
 public:
  RngStreams() = default;
  RngStreams(std::uint64_t seed, std::size_t roads) {
    engines_.reserve(roads * 4);
    for (std::size_t i = 0; i < roads; ++i)
      for (std::uint64_t s = 0; s < 4; ++s)
        engines_.emplace_back(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(i) * 4 + s + 1)));
  }
  std::mt19937_64& get(std::size_t road, Stream s) { return engines_[road * 4 + static_cast<std::size_t>(s)]; }

 private:
  std::vector<std::mt19937_64> engines_;
};

// ---------------------------------------------------------------------------

struct MeasurementModel {
  double delta_max = 0.0;

  bool operator==(const MeasurementModel&) const = default;
};

inline constexpr std::int64_t kOpenEnd = std::numeric_limits<std::int64_t>::max();

struct RateSegment {
  std::int64_t start = 0;
  std::int64_t end = kOpenEnd;  // exclusive
  double rate = 0.0;            // vehicles per cycle

  bool operator==(const RateSegment&) const = default;
};

struct RoadDemand {
  std::size_t in_road = npos;
  std::vector<RateSegment> segments;

  bool operator==(const RoadDemand&) const = default;
};

/// Piecewise-constant external arrival rates a_bar_i(t) per in-road. With a
/// non-zero period the schedule repeats: the rate at cycle t is the rate at
/// t mod period.
struct DemandProfile {
  std::vector<RoadDemand> roads;
  std::int64_t period = 0;

  double rate(std::size_t in_road, std::int64_t cycle) const {
    const std::int64_t t = period > 0 ? cycle % period : cycle;
    for (const auto& r : roads) {
      if (r.in_road != in_road) continue;
      for (const auto& s : r.segments)
        if (t >= s.start && t < s.end) return s.rate;
    }
    return 0.0;
  }

  std::vector<double> rates_at(std::int64_t cycle, std::size_t n) const {
    std::vector<double> a(n, 0.0);
    const std::int64_t t = period > 0 ? cycle % period : cycle;
    for (const auto& r : roads) {
      if (r.in_road >= n) continue;
      for (const auto& s : r.segments)
        if (t >= s.start && t < s.end) a[r.in_road] = s.rate;
    }
    return a;
  }

  /// Cycles at which some rate may change, within [0, horizon).
  std::vector<std::int64_t> breakpoints(std::int64_t horizon) const {
    std::vector<std::int64_t> b{0};
    const std::int64_t span = period > 0 ? std::min(period, horizon) : horizon;
    for (const auto& r : roads)
      for (const auto& s : r.segments) {
        if (s.start > 0 && s.start < span) b.push_back(s.start);
        if (s.end != kOpenEnd && s.end < span) b.push_back(s.end);
      }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
  }

  /// Scales every rate by `factor`.
  DemandProfile scaled(double factor) const {
    DemandProfile d = *this;
    for (auto& r : d.roads)
      for (auto& s : r.segments) s.rate *= factor;
    return d;
  }

  bool operator==(const DemandProfile&) const = default;
};

// ---------------------------------------------------------------------------

struct SimState {
  std::int64_t cycle = 0;
  std::int64_t step = 0;  // global sub-step counter
  std::vector<double> queues;
  RngStreams rng;
  std::vector<std::deque<std::int64_t>> tags;  // integer mode: entry step per vehicle, FIFO

  double arrivals_total = 0.0;
  double exits_total = 0.0;
  double travel_steps_total = 0.0;  // integer mode: sum of (exit - entry) steps
  double exited_vehicles = 0.0;

  double q_sigma() const {
    double s = 0.0;
    for (double q : queues) s += q;
    return s;
  }
};

inline SimState make_state(std::size_t roads, std::uint64_t seed, Mode mode,
                           std::span<const double> initial = {}) {
  SimState s;
  s.queues.assign(roads, 0.0);
  for (std::size_t i = 0; i < roads && i < initial.size(); ++i)
    s.queues[i] = mode == Mode::Integer ? std::floor(std::max(0.0, initial[i])) : std::max(0.0, initial[i]);
  s.rng = RngStreams(seed, roads);
  if (mode == Mode::Integer) {
    s.tags.resize(roads);
    for (std::size_t i = 0; i < roads; ++i) s.tags[i].assign(static_cast<std::size_t>(s.queues[i]), 0);
  }
  // Initial vehicles count as arrivals so conservation holds from t = 0.
  s.arrivals_total = s.q_sigma();
  return s;
}

struct StepRecord {
  std::vector<double> arrivals;    // A_i
  std::vector<double> potential;   // S_i
  std::vector<double> departures;  // S_i ^ Q_i
  /// Realised turning split p_hat per in-road, aligned with the turning row;
  /// empty for in-roads without departures.
  std::vector<std::vector<double>> realised;
  double exits = 0.0;
};

/// Q_hat = Q + delta with delta uniform on [-delta_max, delta_max]
/// (integer-valued in integer mode). Never clamped.
inline std::vector<double> measure_queues(SimState& state, const MeasurementModel& model, Mode mode) {
  std::vector<double> m = state.queues;
  if (model.delta_max <= 0.0) return m;
  for (std::size_t i = 0; i < m.size(); ++i) {
    auto& g = state.rng.get(i, Stream::Measurement);
    if (mode == Mode::Fluid) {
      std::uniform_real_distribution<double> d(-model.delta_max, model.delta_max);
      m[i] += d(g);
    } else {
      const auto k = static_cast<long long>(std::floor(model.delta_max));
      std::uniform_int_distribution<long long> d(-k, k);
      m[i] += static_cast<double>(d(g));
    }
  }
  return m;
}

/// Potential service S_i for one step covering `fraction` of a cycle. Fluid
/// mode returns the mean; integer mode rounds the mean up with probability
/// equal to its fractional part, so E[S_i] is exact.
inline std::vector<double> realize_service(SimState& state, const NetworkTopology& topo,
                                           const PolicyDecision& allocation, Mode mode, double fraction = 1.0) {
  std::vector<double> s(topo.in_roads.size(), 0.0);
  for (std::size_t j = 0; j < topo.junctions.size(); ++j) {
    const auto rate = service_rate(topo, j, allocation[j]);
    const auto& members = topo.junctions[j].in_roads;
    for (std::size_t m = 0; m < members.size(); ++m) s[members[m]] = rate[m] * fraction;
  }
  if (mode == Mode::Integer) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double base = std::floor(s[i]);
      const double frac = s[i] - base;
      double extra = 0.0;
      if (frac > 0.0) {
        std::bernoulli_distribution b(frac);
        extra = b(state.rng.get(i, Stream::Service)) ? 1.0 : 0.0;
      }
      s[i] = base + extra;
    }
  }
  return s;
}

/// Advances the exact queues by one step:
/// Q_i' = Q_i - S_i^Q_i + A_i + sum_i' [S_i'^Q_i'] p_i'i.
/// Departures are taken from the step-start snapshot before any arrival.
/// `arrival_rate` is the per-cycle mean, scaled by `fraction`.
inline StepRecord step(SimState& state, const NetworkTopology& topo, const TurningMatrix& turning,
                       std::span<const double> arrival_rate, const PolicyDecision& allocation, Mode mode,
                       double fraction = 1.0) {
  const std::size_t n = topo.in_roads.size();
  StepRecord rec;
  rec.potential = realize_service(state, topo, allocation, mode, fraction);
  rec.departures.assign(n, 0.0);
  rec.arrivals.assign(n, 0.0);
  rec.realised.assign(n, {});

  std::vector<double> inflow(n, 0.0);
  std::vector<std::vector<std::int64_t>> moved;  // integer mode: tags joining each road
  if (mode == Mode::Integer) moved.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const double dep = std::min(rec.potential[i], state.queues[i]);
    rec.departures[i] = dep;
    if (!(dep > 0.0)) continue;
    static const std::vector<Outflow> kNoOutflow;
    const auto& row = i < turning.size() ? turning.row(i) : kNoOutflow;
    std::vector<double> flow(row.size(), 0.0);
    double exits = 0.0;
    if (mode == Mode::Fluid) {
      double routed = 0.0;
      for (std::size_t k = 0; k < row.size(); ++k) {
        flow[k] = dep * row[k].p;
        routed += flow[k];
      }
      exits = std::max(0.0, dep - routed);
    } else {
      auto& g = state.rng.get(i, Stream::Turning);
      auto left = static_cast<long long>(dep);
      double mass = 1.0;
      for (std::size_t k = 0; k < row.size() && left > 0; ++k) {
        const double cond = mass > 0.0 ? std::clamp(row[k].p / mass, 0.0, 1.0) : 0.0;
        std::binomial_distribution<long long> b(left, cond);
        const long long c = b(g);
        flow[k] = static_cast<double>(c);
        left -= c;
        mass -= row[k].p;
      }
      exits = static_cast<double>(left);
      auto& q = state.tags[i];
      for (std::size_t k = 0; k < row.size(); ++k)
        for (long long c = 0; c < static_cast<long long>(flow[k]); ++c) {
          moved[row[k].to].push_back(q.front());
          q.pop_front();
        }
      for (long long c = 0; c < left; ++c) {
        state.travel_steps_total += static_cast<double>(state.step - q.front());
        q.pop_front();
      }
      state.exited_vehicles += static_cast<double>(left);
    }
    auto& split = rec.realised[i];
    split.resize(row.size());
    for (std::size_t k = 0; k < row.size(); ++k) {
      inflow[row[k].to] += flow[k];
      split[k] = flow[k] / dep;
    }
    rec.exits += exits;
  }

  for (std::size_t i = 0; i < n; ++i) {
    const double mean = (i < arrival_rate.size() ? arrival_rate[i] : 0.0) * fraction;
    double a = 0.0;
    if (mean > 0.0) {
      if (mode == Mode::Fluid) {
        a = mean;
      } else {
        std::poisson_distribution<long long> p(mean);
        a = static_cast<double>(p(state.rng.get(i, Stream::Arrivals)));
      }
    }
    rec.arrivals[i] = a;
    state.queues[i] = state.queues[i] - rec.departures[i] + inflow[i] + a;
    if (mode == Mode::Fluid) state.queues[i] = std::max(0.0, state.queues[i]);
  }

  if (mode == Mode::Integer) {
    for (std::size_t i = 0; i < n; ++i) {
      auto& q = state.tags[i];
      q.insert(q.end(), moved[i].begin(), moved[i].end());
      q.insert(q.end(), static_cast<std::size_t>(rec.arrivals[i]), state.step);
    }
  }

  for (double a : rec.arrivals) state.arrivals_total += a;
  state.exits_total += rec.exits;
  ++state.step;
  return rec;
}

}  // namespace sigctl
