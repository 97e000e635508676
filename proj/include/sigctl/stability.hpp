#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sigctl/dynamics.hpp"
#include "sigctl/error.hpp"
#include "sigctl/lp.hpp"
#include "sigctl/network.hpp"

namespace sigctl {

struct StabilityReport {
  double epsilon_star = 0.0;
  bool feasible = false;  // a is in the open region: epsilon_star > 0
  bool in_closure = false;
  std::vector<std::vector<double>> witness_rho;  // per junction, per phase
  std::vector<double> witness_s;                 // per in-road
  double minmax_bound = 0.0;
};

namespace detail {

inline void check_rates(const NetworkTopology& topo, std::span<const double> a) {
  if (a.size() != topo.in_roads.size())
    throw Error(ErrorCode::Infeasible, "arrival vector size does not match in-road count");
  for (double v : a)
    if (!(v >= 0.0)) throw Error(ErrorCode::Infeasible, "negative arrival rate");
}

/// in[i] = list of (upstream i', p_bar_{i'i}).
inline std::vector<std::vector<Outflow>> incoming(const TurningMatrix& p, std::size_t n) {
  std::vector<std::vector<Outflow>> in(n);
  for (std::size_t i = 0; i < p.size() && i < n; ++i)
    for (const auto& o : p.row(i))
      if (o.to < n) in[o.to].push_back({i, o.p});
  return in;
}

/// Least non-negative solution of s = b + p_bar^T s by fixed-point iteration
/// (the Neumann series of (I - p_bar^T)^{-1} b).
inline std::vector<double> neumann_solve(const TurningMatrix& p, std::vector<double> b, double tol = 1e-13,
                                         std::size_t max_iter = 1000000) {
  std::vector<double> s = b;
  for (std::size_t it = 0; it < max_iter; ++it) {
    auto next = p.propagate(s);
    double diff = 0.0, scale = 1.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      next[i] += b[i];
      diff = std::max(diff, std::abs(next[i] - s[i]));
      scale = std::max(scale, std::abs(next[i]));
    }
    s = std::move(next);
    if (diff <= tol * scale) break;
  }
  return s;
}

}  // namespace detail

/// Largest uniform margin epsilon such that a + epsilon 1 satisfies the
/// closed stability constraints, with an optimal (rho, s) witness:
///   a_i + eps + sum_i' s_i' p_i'i <= s_i,  sum_sigma rho^j <= 1 - L/T,
///   s_i <= sum_sigma rho^j_sigma sigma_i,  rho, s >= 0.
inline StabilityReport max_epsilon(const NetworkTopology& topo, const TurningMatrix& turning,
                                   std::span<const double> a) {
  detail::check_rates(topo, a);
  const std::size_t n = topo.in_roads.size();
  const auto in = detail::incoming(turning, n);

  lp::Problem prob;
  const std::size_t eps = prob.add_variable(-lp::kInf, lp::kInf, 1.0);
  std::vector<std::vector<std::size_t>> rho(topo.junctions.size());
  for (std::size_t j = 0; j < topo.junctions.size(); ++j)
    for (std::size_t s = 0; s < topo.junctions[j].phases.size(); ++s)
      rho[j].push_back(prob.add_variable(0.0, lp::kInf));
  std::vector<std::size_t> sv(n);
  for (std::size_t i = 0; i < n; ++i) sv[i] = prob.add_variable(0.0, lp::kInf);

  for (std::size_t i = 0; i < n; ++i) {
    std::vector<lp::Term> t{{eps, 1.0}, {sv[i], -1.0}};
    for (const auto& u : in[i]) t.push_back({sv[u.to], u.p});
    prob.add_row(std::move(t), lp::Sense::LessEq, -a[i]);
  }
  for (std::size_t j = 0; j < topo.junctions.size(); ++j) {
    std::vector<lp::Term> t;
    for (std::size_t v : rho[j]) t.push_back({v, 1.0});
    prob.add_row(std::move(t), lp::Sense::LessEq, topo.green_fraction());
  }
  for (std::size_t j = 0; j < topo.junctions.size(); ++j) {
    const auto& junc = topo.junctions[j];
    for (std::size_t i : junc.in_roads) {
      std::vector<lp::Term> t{{sv[i], 1.0}};
      for (std::size_t s = 0; s < junc.phases.size(); ++s) {
        const double rate = junc.phases[s].rate_of(i);
        if (rate != 0.0) t.push_back({rho[j][s], -rate});
      }
      prob.add_row(std::move(t), lp::Sense::LessEq, 0.0);
    }
  }

  const auto sol = lp::solve(prob);
  if (sol.status == lp::Status::Unbounded)
    throw Error(ErrorCode::Unbounded, "stability LP is unbounded; phase rates must be finite");
  if (sol.status == lp::Status::Infeasible) throw Error(ErrorCode::Infeasible, "stability LP is infeasible");

  StabilityReport rep;
  rep.epsilon_star = sol.x[eps];
  rep.feasible = rep.epsilon_star > 0.0;
  rep.in_closure = rep.epsilon_star >= 0.0;
  rep.witness_rho.resize(topo.junctions.size());
  for (std::size_t j = 0; j < rho.size(); ++j)
    for (std::size_t v : rho[j]) rep.witness_rho[j].push_back(std::max(0.0, sol.x[v]));
  rep.witness_s.resize(n);
  for (std::size_t i = 0; i < n; ++i) rep.witness_s[i] = std::max(0.0, sol.x[sv[i]]);
  return rep;
}

/// Re-checks a witness by direct substitution at margin `epsilon`.
inline bool verify_witness(const NetworkTopology& topo, const TurningMatrix& turning, std::span<const double> a,
                           const StabilityReport& rep, double epsilon, double tol = 1e-12) {
  const std::size_t n = topo.in_roads.size();
  const auto in = detail::incoming(turning, n);
  for (std::size_t i = 0; i < n; ++i) {
    double lhs = a[i] + epsilon;
    for (const auto& u : in[i]) lhs += rep.witness_s[u.to] * u.p;
    if (lhs > rep.witness_s[i]) return false;
    if (rep.witness_s[i] < 0.0) return false;
  }
  for (std::size_t j = 0; j < topo.junctions.size(); ++j) {
    const auto& junc = topo.junctions[j];
    double total = 0.0;
    for (double r : rep.witness_rho[j]) {
      if (r < 0.0) return false;
      total += r;
    }
    if (total > topo.green_fraction() + tol) return false;
    for (std::size_t i : junc.in_roads) {
      double cap = 0.0;
      for (std::size_t s = 0; s < junc.phases.size(); ++s) cap += rep.witness_rho[j][s] * junc.phases[s].rate_of(i);
      if (rep.witness_s[i] > cap + tol) return false;
    }
  }
  return true;
}

enum class PressureForm {
  Clamped,  // max(0, u_i - sum_i' p_bar_ii' u_i'): the dual of the margin LP
  Raw,      // u_i - sum_i' p_bar_ii' u_i' as written in the min-max expression
};

/// (1 - L/T) * min over the simplex u of
///   sum_j max_sigma w_sigma(u) - sum_i u_i a_i,
/// evaluated through its epigraph LP. With PressureForm::Clamped each
/// in-road term of w_sigma(u) is floored at zero; that is the form for which
/// epsilon* <= bound always holds (junctions may leave green time unused, so
/// negative pressure never helps). The raw form can fall below epsilon*,
/// e.g. on a tandem whose upstream phase has negative weight.
inline double minmax_bound(const NetworkTopology& topo, const TurningMatrix& turning, std::span<const double> a,
                           PressureForm form = PressureForm::Clamped) {
  detail::check_rates(topo, a);
  const std::size_t n = topo.in_roads.size();
  lp::Problem prob;
  std::vector<std::size_t> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = prob.add_variable(0.0, lp::kInf, a[i]);
  std::vector<std::size_t> m(topo.junctions.size());
  for (std::size_t j = 0; j < m.size(); ++j) m[j] = prob.add_variable(-lp::kInf, lp::kInf, -1.0);

  // Pressure of in-road i as LP terms over u.
  auto pressure = [&](std::size_t i) {
    std::vector<lp::Term> t{{u[i], 1.0}};
    if (i < turning.size())
      for (const auto& o : turning.row(i)) t.push_back({u[o.to], -o.p});
    return t;
  };
  std::vector<std::size_t> z(n, npos);
  if (form == PressureForm::Clamped) {
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = prob.add_variable(0.0, lp::kInf);
      auto t = pressure(i);
      t.push_back({z[i], -1.0});
      prob.add_row(std::move(t), lp::Sense::LessEq, 0.0);
    }
  }

  for (std::size_t j = 0; j < topo.junctions.size(); ++j) {
    const auto& junc = topo.junctions[j];
    for (const auto& ph : junc.phases) {
      std::vector<lp::Term> t{{m[j], -1.0}};
      for (const auto& r : ph.rates) {
        if (r.rate == 0.0) continue;
        if (form == PressureForm::Clamped) {
          t.push_back({z[r.in_road], r.rate});
        } else {
          for (const auto& pt : pressure(r.in_road)) t.push_back({pt.var, pt.coef * r.rate});
        }
      }
      prob.add_row(std::move(t), lp::Sense::LessEq, 0.0);
    }
  }
  std::vector<lp::Term> simplex;
  for (std::size_t i = 0; i < n; ++i) simplex.push_back({u[i], 1.0});
  prob.add_row(std::move(simplex), lp::Sense::Equal, 1.0);

  const auto sol = lp::solve(prob);
  if (sol.status == lp::Status::Unbounded) throw Error(ErrorCode::Unbounded, "min-max bound LP is unbounded");
  if (sol.status == lp::Status::Infeasible) throw Error(ErrorCode::Infeasible, "min-max bound LP is infeasible");
  return topo.green_fraction() * -sol.objective;
}

/// Largest factor lambda such that lambda * a lies in the closed region.
/// Infinite when a is zero.
inline double max_load_factor(const NetworkTopology& topo, const TurningMatrix& turning, std::span<const double> a) {
  detail::check_rates(topo, a);
  const std::size_t n = topo.in_roads.size();
  if (std::all_of(a.begin(), a.end(), [](double v) { return v == 0.0; })) return lp::kInf;
  const auto in = detail::incoming(turning, n);
  lp::Problem prob;
  const std::size_t lam = prob.add_variable(0.0, lp::kInf, 1.0);
  std::vector<std::vector<std::size_t>> rho(topo.junctions.size());
  for (std::size_t j = 0; j < topo.junctions.size(); ++j)
    for (std::size_t s = 0; s < topo.junctions[j].phases.size(); ++s)
      rho[j].push_back(prob.add_variable(0.0, lp::kInf));
  std::vector<std::size_t> sv(n);
  for (std::size_t i = 0; i < n; ++i) sv[i] = prob.add_variable(0.0, lp::kInf);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<lp::Term> t{{lam, a[i]}, {sv[i], -1.0}};
    for (const auto& up : in[i]) t.push_back({sv[up.to], up.p});
    prob.add_row(std::move(t), lp::Sense::LessEq, 0.0);
  }
  for (std::size_t j = 0; j < topo.junctions.size(); ++j) {
    std::vector<lp::Term> t;
    for (std::size_t v : rho[j]) t.push_back({v, 1.0});
    prob.add_row(std::move(t), lp::Sense::LessEq, topo.green_fraction());
    const auto& junc = topo.junctions[j];
    for (std::size_t i : junc.in_roads) {
      std::vector<lp::Term> c{{sv[i], 1.0}};
      for (std::size_t s = 0; s < junc.phases.size(); ++s)
        if (double r = junc.phases[s].rate_of(i); r != 0.0) c.push_back({rho[j][s], -r});
      prob.add_row(std::move(c), lp::Sense::LessEq, 0.0);
    }
  }
  const auto sol = lp::solve(prob);
  if (sol.status != lp::Status::Optimal) throw Error(ErrorCode::Unbounded, "load-factor LP did not solve");
  return sol.x[lam];
}

/// Margin of a time-varying profile: the smallest max_epsilon over the
/// distinct rate vectors the profile takes within the horizon.
struct ProfileMargin {
  double epsilon = 0.0;
  std::vector<std::int64_t> segment_starts;
  std::vector<double> segment_epsilon;
};

inline ProfileMargin profile_margin(const NetworkTopology& topo, const TurningMatrix& turning,
                                    const DemandProfile& demand, std::int64_t horizon) {
  ProfileMargin out;
  out.epsilon = lp::kInf;
  for (std::int64_t t : demand.breakpoints(horizon)) {
    const auto a = demand.rates_at(t, topo.in_roads.size());
    const double e = max_epsilon(topo, turning, a).epsilon_star;
    out.segment_starts.push_back(t);
    out.segment_epsilon.push_back(e);
    out.epsilon = std::min(out.epsilon, e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Grid oracle for small instances.

inline constexpr std::size_t kBruteForceMaxPhases = 6;

/// Best margin over green splits rho on a simplex grid with step
/// `resolution` (each junction uses its full 1 - L/T). For a fixed rho the
/// least departure vector is s = (I - p_bar^T)^{-1}(a + eps 1), so the
/// margin has a closed form whenever it is non-negative; negative margins
/// are found by bisection on the least fixed point with s >= 0.
inline double brute_force_region(const NetworkTopology& topo, const TurningMatrix& turning,
                                 std::span<const double> a, double resolution) {
  detail::check_rates(topo, a);
  if (topo.phase_count() > kBruteForceMaxPhases)
    throw Error(ErrorCode::TooLarge, "grid enumeration supports at most 6 phases");
  if (!(resolution > 0.0 && resolution <= 1.0)) throw Error(ErrorCode::TooLarge, "resolution must be in (0, 1]");
  const std::size_t n = topo.in_roads.size();
  const auto steps = static_cast<int>(std::llround(1.0 / resolution));
  const double green = topo.green_fraction();

  const auto x = detail::neumann_solve(turning, std::vector<double>(a.begin(), a.end()));
  const auto y = detail::neumann_solve(turning, std::vector<double>(n, 1.0));

  // Enumerate compositions of `steps` into |S_j| parts per junction.
  const std::size_t nj = topo.junctions.size();
  std::vector<std::vector<int>> parts(nj);
  for (std::size_t j = 0; j < nj; ++j) {
    parts[j].assign(topo.junctions[j].phases.size(), 0);
    if (!parts[j].empty()) parts[j].back() = steps;
  }
  auto next_composition = [](std::vector<int>& c) {
    // Lexicographic successor over compositions with fixed total.
    const std::size_t k = c.size();
    if (k <= 1) return false;
    std::size_t i = k - 1;
    while (i > 0 && c[i] == 0) --i;
    if (i == 0) return false;
    const int tail = c[i];
    c[i] = 0;
    ++c[i - 1];
    c[k - 1] = tail - 1;
    return true;
  };

  auto capacity = [&](std::vector<double>& cap) {
    std::fill(cap.begin(), cap.end(), 0.0);
    for (std::size_t j = 0; j < nj; ++j) {
      const auto& junc = topo.junctions[j];
      for (std::size_t s = 0; s < junc.phases.size(); ++s) {
        const double r = green * parts[j][s] / steps;
        for (const auto& pr : junc.phases[s].rates) cap[pr.in_road] += r * pr.rate;
      }
    }
  };

  auto exact_negative = [&](const std::vector<double>& cap) {
    // Largest eps in [-max a, 0) with least fixed point of
    // s = max(0, a + eps + p_bar^T s) below cap.
    auto feasible = [&](double eps) {
      std::vector<double> s(n, 0.0);
      for (std::size_t it = 0; it < 100000; ++it) {
        auto next = turning.propagate(s);
        double diff = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          next[i] = std::max(0.0, next[i] + a[i] + eps);
          diff = std::max(diff, std::abs(next[i] - s[i]));
        }
        s = std::move(next);
        for (std::size_t i = 0; i < n; ++i)
          if (s[i] > cap[i] + 1e-12) return false;
        if (diff <= 1e-14) break;
      }
      return true;
    };
    double lo = -*std::max_element(a.begin(), a.end()), hi = 0.0;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (feasible(mid) ? lo : hi) = mid;
    }
    return lo;
  };

  double best = -lp::kInf;
  std::vector<std::vector<double>> negative_caps;
  std::vector<double> cap(n);
  while (true) {
    capacity(cap);
    double e = lp::kInf;
    for (std::size_t i = 0; i < n; ++i) e = std::min(e, (cap[i] - x[i]) / y[i]);
    if (e >= 0.0)
      best = std::max(best, e);
    else if (best < 0.0)
      negative_caps.push_back(cap);

    std::size_t j = 0;
    while (j < nj && !next_composition(parts[j])) {
      parts[j].assign(parts[j].size(), 0);
      if (!parts[j].empty()) parts[j].back() = steps;
      ++j;
    }
    if (j == nj) break;
  }
  if (best >= 0.0) return best;
  for (const auto& c : negative_caps) best = std::max(best, exact_negative(c));
  return best;
}

// ---------------------------------------------------------------------------
// Lyapunov drift diagnostics.

inline constexpr std::size_t kMinDriftCycles = 1000;

struct DriftReport {
  std::vector<double> increments;  // Delta V(t) = 1/2 sum_i (Q_i(t+1)^2 - Q_i(t)^2)
  std::vector<double> cesaro;      // (1/tau) sum_{t<tau} Q_sigma(t), tau = 1..
  std::vector<double> quartile_mean_increment;  // bins by Q_sigma(t), lowest first
  double top_quartile_mean = 0.0;
};

/// `queues[t]` is the queue vector at the start of cycle t.
inline DriftReport drift_diagnostic(std::span<const std::vector<double>> queues) {
  if (queues.size() < kMinDriftCycles + 1)
    throw Error(ErrorCode::TrajectoryTooShort, "drift diagnostic needs at least 1000 cycles");
  const std::size_t cycles = queues.size() - 1;
  DriftReport rep;
  rep.increments.resize(cycles);
  std::vector<double> qsum(cycles);
  double running = 0.0;
  for (std::size_t t = 0; t < cycles; ++t) {
    double dv = 0.0, total = 0.0;
    for (std::size_t i = 0; i < queues[t].size(); ++i) {
      dv += 0.5 * (queues[t + 1][i] * queues[t + 1][i] - queues[t][i] * queues[t][i]);
      total += queues[t][i];
    }
    rep.increments[t] = dv;
    qsum[t] = total;
    running += total;
    rep.cesaro.push_back(running / static_cast<double>(t + 1));
  }
  std::vector<std::size_t> order(cycles);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return qsum[l] < qsum[r]; });
  rep.quartile_mean_increment.assign(4, 0.0);
  for (std::size_t b = 0; b < 4; ++b) {
    const std::size_t lo = b * cycles / 4, hi = (b + 1) * cycles / 4;
    double s = 0.0;
    for (std::size_t k = lo; k < hi; ++k) s += rep.increments[order[k]];
    rep.quartile_mean_increment[b] = hi > lo ? s / static_cast<double>(hi - lo) : 0.0;
  }
  rep.top_quartile_mean = rep.quartile_mean_increment[3];
  return rep;
}

}  // namespace sigctl
