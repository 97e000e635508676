#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sigctl/decision.hpp"
#include "sigctl/error.hpp"
#include "sigctl/network.hpp"

namespace sigctl {

enum class Policy {
  CyclicBackPressure,  // softmax over BackPressure weights, every phase served each cycle
  BackPressure,        // classic max-weight, whole slot to the argmax phase
  Proportional,        // green split proportional to phase queue sums
  Greedy,              // whole slot to the phase with the longest queue sum
};

inline constexpr Policy kAllPolicies[] = {Policy::CyclicBackPressure, Policy::BackPressure,
                                          Policy::Proportional, Policy::Greedy};

constexpr std::string_view to_string(Policy p) noexcept {
  switch (p) {
    case Policy::CyclicBackPressure: return "cyclic_bp";
    case Policy::BackPressure: return "bp";
    case Policy::Proportional: return "proportional";
    case Policy::Greedy: return "greedy";
  }
  return "unknown";
}

inline std::optional<Policy> parse_policy(std::string_view s) {
  for (Policy p : kAllPolicies)
    if (to_string(p) == s) return p;
  return std::nullopt;
}

/// Cyclic BP and proportional decide once per cycle; the other two once per
/// slot of `decision_interval` seconds.
constexpr bool decides_per_cycle(Policy p) noexcept {
  return p == Policy::CyclicBackPressure || p == Policy::Proportional;
}

constexpr bool uses_turning_estimates(Policy p) noexcept {
  return p == Policy::CyclicBackPressure || p == Policy::BackPressure;
}

struct ControllerConfig {
  Policy policy = Policy::CyclicBackPressure;
  double eta = 2.5;
  std::size_t window = 10;         // k, estimator window in observations
  double decision_interval = 10.0; // seconds, slot policies only

  bool operator==(const ControllerConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Turning-fraction estimator: moving window mean of realised proportions.

class TurningEstimator {
 public:
  TurningEstimator() = default;

  TurningEstimator(const TurningMatrix& structure, std::size_t window) : window_(window) {
    if (window_ == 0) window_ = 1;
    const std::size_t n = structure.size();
    targets_.resize(n);
    history_.resize(n);
    head_.assign(n, 0);
    estimate_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& o : structure.row(i)) targets_[i].push_back(o.to);
      // Cold start: uniform over the out-links and the exit.
      const double u = 1.0 / static_cast<double>(targets_[i].size() + 1);
      estimate_[i].assign(targets_[i].size(), u);
    }
  }

  std::size_t window() const noexcept { return window_; }
  std::size_t size() const noexcept { return targets_.size(); }

  /// Out-link targets of in-road i, in the order of its estimates.
  const std::vector<std::size_t>& targets(std::size_t i) const { return targets_[i]; }
  const std::vector<double>& estimates(std::size_t i) const { return estimate_[i]; }
  std::size_t observations(std::size_t i) const { return history_[i].size(); }

  double estimate(std::size_t from, std::size_t to) const {
    const auto& t = targets_[from];
    for (std::size_t k = 0; k < t.size(); ++k)
      if (t[k] == to) return estimate_[from][k];
    return 0.0;
  }

  /// Records one realised split of in-road i's departures (aligned with
  /// targets(i)). Callers skip in-roads that had no departures.
  void observe(std::size_t i, std::span<const double> realised) {
    auto& hist = history_[i];
    std::vector<double> obs(realised.begin(), realised.end());
    if (hist.size() < window_) {
      hist.push_back(std::move(obs));
    } else {
      hist[head_[i]] = std::move(obs);
      head_[i] = (head_[i] + 1) % window_;
    }
    auto& est = estimate_[i];
    std::fill(est.begin(), est.end(), 0.0);
    for (const auto& h : hist)
      for (std::size_t k = 0; k < est.size(); ++k) est[k] += h[k];
    for (auto& e : est) e /= static_cast<double>(hist.size());
  }

 private:
  std::size_t window_ = 10;
  std::vector<std::vector<std::size_t>> targets_;
  std::vector<std::vector<std::vector<double>>> history_;
  std::vector<std::size_t> head_;
  std::vector<std::vector<double>> estimate_;
};

// ---------------------------------------------------------------------------
// Local view: everything a junction controller is allowed to see.

struct DownstreamTerm {
  double turning = 0.0;   // q_bar_{ii'}
  double measured = 0.0;  // Q_hat_{i'}
};

struct MemberView {
  std::size_t in_road = npos;
  double measured = 0.0;  // Q_hat_i
  std::vector<DownstreamTerm> downstream;
};

struct LocalView {
  std::span<const Phase> phases;
  std::vector<MemberView> members;
  double green_fraction = 1.0;  // 1 - L/T
};

/// Builds junction j's view from global measured queues and estimates.
inline LocalView make_local_view(const NetworkTopology& topo, std::size_t j, std::span<const double> measured,
                                 const TurningEstimator& est) {
  const auto& junc = topo.junctions[j];
  LocalView v;
  v.phases = junc.phases;
  v.green_fraction = topo.green_fraction();
  v.members.reserve(junc.in_roads.size());
  for (std::size_t i : junc.in_roads) {
    MemberView m;
    m.in_road = i;
    m.measured = measured[i];
    if (i < est.size()) {
      const auto& tg = est.targets(i);
      const auto& q = est.estimates(i);
      for (std::size_t k = 0; k < tg.size(); ++k) m.downstream.push_back({q[k], measured[tg[k]]});
    }
    v.members.push_back(std::move(m));
  }
  return v;
}

/// BackPressure weight of every phase:
/// w_sigma = sum_i sigma_i (Q_hat_i - sum_i' q_bar_ii' Q_hat_i').
inline std::vector<double> compute_weights(const LocalView& view) {
  std::vector<double> w(view.phases.size(), 0.0);
  for (const auto& m : view.members) {
    double pressure = m.measured;
    for (const auto& d : m.downstream) pressure -= d.turning * d.measured;
    for (std::size_t s = 0; s < view.phases.size(); ++s) w[s] += view.phases[s].rate_of(m.in_road) * pressure;
  }
  return w;
}

/// Queue-sum weight sum_{i green in sigma} max(Q_hat_i, 0).
inline std::vector<double> queue_sum_weights(const LocalView& view) {
  std::vector<double> w(view.phases.size(), 0.0);
  for (const auto& m : view.members)
    for (std::size_t s = 0; s < view.phases.size(); ++s)
      if (view.phases[s].rate_of(m.in_road) > 0.0) w[s] += std::max(m.measured, 0.0);
  return w;
}

/// Unscaled softmax exp(eta w)/sum exp(eta w), shifted by the max weight.
inline std::vector<double> softmax(std::span<const double> weights, double eta) {
  std::vector<double> p(weights.size());
  if (weights.empty()) return p;
  const double top = *std::max_element(weights.begin(), weights.end());
  double z = 0.0;
  for (std::size_t s = 0; s < weights.size(); ++s) {
    p[s] = std::exp(eta * (weights[s] - top));
    z += p[s];
  }
  for (auto& v : p) v /= z;
  return p;
}

inline std::size_t argmax_lowest(std::span<const double> w) {
  std::size_t best = 0;
  for (std::size_t s = 1; s < w.size(); ++s)
    if (w[s] > w[best]) best = s;
  return best;
}

inline JunctionDecision allocate_cyclic_bp(std::span<const double> weights, double eta, double lost_time,
                                           double cycle_length) {
  if (!(eta > 0.0)) throw Error(ErrorCode::Schema, "eta must be positive");
  const double green = 1.0 - lost_time / cycle_length;
  auto p = softmax(weights, eta);
  // Every phase keeps strictly positive time even when exp underflows.
  constexpr double floor = std::numeric_limits<double>::min();
  for (auto& v : p) v = std::max(v * green, floor);
  return p;
}

inline JunctionDecision allocate_classic_bp(std::span<const double> weights, double lost_time,
                                            double cycle_length) {
  JunctionDecision d(weights.size(), 0.0);
  if (!weights.empty()) d[argmax_lowest(weights)] = 1.0 - lost_time / cycle_length;
  return d;
}

inline JunctionDecision allocate_proportional(const LocalView& view, double lost_time, double cycle_length) {
  const double green = 1.0 - lost_time / cycle_length;
  const auto w = queue_sum_weights(view);
  double total = 0.0;
  for (double v : w) total += v;
  JunctionDecision d(w.size(), 0.0);
  if (d.empty()) return d;
  if (total <= 0.0) {
    std::fill(d.begin(), d.end(), green / static_cast<double>(d.size()));
  } else {
    for (std::size_t s = 0; s < w.size(); ++s) d[s] = green * w[s] / total;
  }
  return d;
}

inline JunctionDecision allocate_greedy(const LocalView& view, double lost_time, double cycle_length) {
  const auto w = queue_sum_weights(view);
  return allocate_classic_bp(w, lost_time, cycle_length);
}

/// One junction's decision under `cfg`. Reads nothing outside `view`.
inline JunctionDecision decide(const LocalView& view, const ControllerConfig& cfg, double lost_time,
                               double cycle_length) {
  switch (cfg.policy) {
    case Policy::CyclicBackPressure:
      return allocate_cyclic_bp(compute_weights(view), cfg.eta, lost_time, cycle_length);
    case Policy::BackPressure:
      return allocate_classic_bp(compute_weights(view), lost_time, cycle_length);
    case Policy::Proportional:
      return allocate_proportional(view, lost_time, cycle_length);
    case Policy::Greedy:
      return allocate_greedy(view, lost_time, cycle_length);
  }
  return {};
}

}  // namespace sigctl
