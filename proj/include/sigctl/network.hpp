#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sigctl/decision.hpp"
#include "sigctl/error.hpp"

namespace sigctl {

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

struct InRoad {
  std::string id;
  std::size_t junction = npos;
  std::optional<double> capacity;  // vehicles; nullopt = unbounded
  bool ingress = false;

  bool operator==(const InRoad&) const = default;
};

struct PhaseRate {
  std::size_t in_road = npos;
  double rate = 0.0;  // vehicles per full cycle

  bool operator==(const PhaseRate&) const = default;
};

/// A service phase sigma. Only in-roads listed in `rates` are served; every
/// other in-road implicitly has sigma_i = 0.
struct Phase {
  std::string name;
  std::vector<PhaseRate> rates;

  double rate_of(std::size_t in_road) const {
    for (const auto& r : rates)
      if (r.in_road == in_road) return r.rate;
    return 0.0;
  }
  double max_rate() const {
    double m = 0.0;
    for (const auto& r : rates) m = std::max(m, r.rate);
    return m;
  }
  bool operator==(const Phase&) const = default;
};

struct Junction {
  std::string id;
  std::vector<std::size_t> in_roads;
  std::vector<Phase> phases;

  bool operator==(const Junction&) const = default;
};

struct Link {
  std::size_t from = npos;
  std::size_t to = npos;

  bool operator==(const Link&) const = default;
};

struct NetworkTopology {
  std::vector<Junction> junctions;
  std::vector<InRoad> in_roads;
  std::vector<Link> links;
  double cycle_length = 0.0;  // T, seconds
  double lost_time = 0.0;     // L, seconds

  /// 1 - L/T, the allocatable share of each cycle.
  double green_fraction() const { return 1.0 - lost_time / cycle_length; }

  std::size_t junction_index(std::string_view id) const {
    for (std::size_t j = 0; j < junctions.size(); ++j)
      if (junctions[j].id == id) return j;
    return npos;
  }
  std::size_t in_road_index(std::string_view id) const {
    for (std::size_t i = 0; i < in_roads.size(); ++i)
      if (in_roads[i].id == id) return i;
    return npos;
  }
  std::size_t phase_count() const {
    std::size_t n = 0;
    for (const auto& j : junctions) n += j.phases.size();
    return n;
  }
  /// S_max: ceiling of the largest saturation rate of any phase.
  double max_service() const {
    double m = 0.0;
    for (const auto& j : junctions)
      for (const auto& p : j.phases) m = std::max(m, p.max_rate());
    return std::ceil(m);
  }

  bool operator==(const NetworkTopology&) const = default;
};

struct Outflow {
  std::size_t to = npos;
  double p = 0.0;

  bool operator==(const Outflow&) const = default;
};

/// Mean turning proportions p_bar, stored row-wise. The exit share of an
/// in-road is one minus its row sum.
class TurningMatrix {
 public:
  TurningMatrix() = default;
  explicit TurningMatrix(std::size_t n) : rows_(n) {}

  std::size_t size() const noexcept { return rows_.size(); }

  void set(std::size_t from, std::size_t to, double p) {
    if (from >= rows_.size()) rows_.resize(from + 1);
    for (auto& o : rows_[from])
      if (o.to == to) {
        o.p = p;
        return;
      }
    rows_[from].push_back({to, p});
  }
  double get(std::size_t from, std::size_t to) const {
    if (from >= rows_.size()) return 0.0;
    for (const auto& o : rows_[from])
      if (o.to == to) return o.p;
    return 0.0;
  }
  const std::vector<Outflow>& row(std::size_t from) const { return rows_[from]; }

  double row_sum(std::size_t from) const {
    double s = 0.0;
    for (const auto& o : rows_[from]) s += o.p;
    return s;
  }
  double exit_share(std::size_t from) const { return std::max(0.0, 1.0 - row_sum(from)); }

  /// y = p_bar^T x, i.e. y_k = sum_i x_i p_bar_{ik}: where mass at x flows next.
  std::vector<double> propagate(const std::vector<double>& x) const {
    std::vector<double> y(rows_.size(), 0.0);
    for (std::size_t i = 0; i < rows_.size(); ++i)
      for (const auto& o : rows_[i])
        if (o.to < y.size()) y[o.to] += x[i] * o.p;
    return y;
  }

  bool operator==(const TurningMatrix&) const = default;

 private:
  std::vector<std::vector<Outflow>> rows_;
};

/// Spectral radius of a non-negative matrix by power iteration on the
/// shifted operator (I + p_bar)/2, which is aperiodic whenever p_bar is
/// non-negative. Starts from a generic positive vector and stops once the
/// normalised iterate moves by less than `rel_tol` in the max-norm.
inline double spectral_radius(const TurningMatrix& p, double rel_tol = 1e-9,
                              std::size_t max_iter = 200000) {
  const std::size_t n = p.size();
  if (n == 0) return 0.0;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 0.5 * std::fmod(0.6180339887498949 * static_cast<double>(i + 1), 1.0);
  double lambda = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    auto y = p.propagate(x);
    double norm = 0.0, xnorm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = 0.5 * (x[i] + y[i]);
      norm = std::max(norm, std::abs(y[i]));
      xnorm = std::max(xnorm, std::abs(x[i]));
    }
    if (norm == 0.0) return 0.0;
    lambda = norm / xnorm;
    double moved = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] /= norm;
      moved = std::max(moved, std::abs(y[i] - x[i] / xnorm));
    }
    x = std::move(y);
    if (moved <= rel_tol) break;
  }
  return std::max(0.0, 2.0 * lambda - 1.0);
}

/// Number of Neumann-series terms sum_k p_bar^k needed until the max-norm of
/// the next term drops below `tol`; nullopt if that does not happen within
/// `max_terms`.
inline std::optional<std::size_t> neumann_terms(const TurningMatrix& p, double tol = 1e-9,
                                                std::size_t max_terms = 10000) {
  const std::size_t n = p.size();
  // x holds the column sums of p^k, which bound every entry of p^k.
  std::vector<double> x(n, 1.0);
  for (std::size_t k = 1; k <= max_terms; ++k) {
    x = p.propagate(x);
    double m = 0.0;
    for (double v : x) m = std::max(m, v);
    if (m < tol) return k;
  }
  return std::nullopt;
}

struct Violation {
  ErrorCode code;
  std::string message;
};

struct ValidationResult {
  std::vector<Violation> violations;
  double spectral_radius = 0.0;

  bool ok() const noexcept { return violations.empty(); }
  bool has(ErrorCode code) const {
    return std::any_of(violations.begin(), violations.end(),
                       [code](const Violation& v) { return v.code == code; });
  }
  std::string summary() const {
    std::ostringstream os;
    for (const auto& v : violations) os << to_string(v.code) << ": " << v.message << '\n';
    return os.str();
  }
};

inline constexpr double kRowSumTolerance = 1e-12;
inline constexpr double kDrainMargin = 1e-6;

/// Checks every structural invariant of the network and the turning matrix
/// and collects all violations instead of stopping at the first.
inline ValidationResult validate_topology(const NetworkTopology& topo, const TurningMatrix& turning) {
  ValidationResult out;
  auto add = [&](ErrorCode c, std::string msg) { out.violations.push_back({c, std::move(msg)}); };
  const std::size_t n = topo.in_roads.size();

  if (!(topo.cycle_length > 0.0))
    add(ErrorCode::BadTopology, "cycle length must be positive");
  else if (!(topo.lost_time >= 0.0 && topo.lost_time < topo.cycle_length))
    add(ErrorCode::BadTopology, "lost time must satisfy 0 <= L < T");

  std::vector<int> owner_count(n, 0);
  for (std::size_t j = 0; j < topo.junctions.size(); ++j) {
    const auto& junc = topo.junctions[j];
    for (std::size_t i : junc.in_roads) {
      if (i >= n) {
        add(ErrorCode::DanglingReference, "junction " + junc.id + " lists an unknown in-road");
        continue;
      }
      ++owner_count[i];
      if (topo.in_roads[i].junction != j)
        add(ErrorCode::BadTopology,
            "in-road " + topo.in_roads[i].id + " is listed by junction " + junc.id + " but owned elsewhere");
    }
    if (junc.phases.empty()) add(ErrorCode::EmptyPhaseSet, "junction " + junc.id + " has no phases");
    for (const auto& ph : junc.phases) {
      bool positive = false;
      for (const auto& r : ph.rates) {
        if (r.in_road >= n) {
          add(ErrorCode::DanglingReference, "phase " + junc.id + "/" + ph.name + " names an unknown in-road");
          continue;
        }
        if (topo.in_roads[r.in_road].junction != j)
          add(ErrorCode::BadTopology, "phase " + junc.id + "/" + ph.name + " serves in-road " +
                                          topo.in_roads[r.in_road].id + " of another junction");
        if (!(r.rate >= 0.0) || !std::isfinite(r.rate))
          add(ErrorCode::BadTopology, "phase " + junc.id + "/" + ph.name + " has a negative rate");
        if (r.rate > 0.0) positive = true;
      }
      if (!positive)
        add(ErrorCode::BadTopology, "phase " + junc.id + "/" + ph.name + " has no positive rate");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& road = topo.in_roads[i];
    if (road.junction >= topo.junctions.size())
      add(ErrorCode::DanglingReference, "in-road " + road.id + " references an unknown junction");
    else if (owner_count[i] != 1)
      add(ErrorCode::BadTopology, "in-road " + road.id + " must belong to exactly one junction");
    if (road.capacity && !(*road.capacity > 0.0))
      add(ErrorCode::BadTopology, "in-road " + road.id + " has non-positive capacity");
  }

  for (const auto& l : topo.links) {
    if (l.from >= n || l.to >= n) {
      add(ErrorCode::DanglingReference, "link references an unknown in-road");
      continue;
    }
    if (topo.in_roads[l.from].junction == topo.in_roads[l.to].junction)
      add(ErrorCode::BadTopology,
          "link " + topo.in_roads[l.from].id + "->" + topo.in_roads[l.to].id + " stays within one junction");
  }

  bool shape_ok = turning.size() <= n;
  if (!shape_ok) add(ErrorCode::DanglingReference, "turning matrix has rows for unknown in-roads");
  for (std::size_t i = 0; shape_ok && i < turning.size(); ++i) {
    for (const auto& o : turning.row(i)) {
      if (o.to >= n) {
        add(ErrorCode::DanglingReference, "turning entry references an unknown in-road");
        shape_ok = false;
        continue;
      }
      const bool linked = std::any_of(topo.links.begin(), topo.links.end(),
                                      [&](const Link& l) { return l.from == i && l.to == o.to; });
      if (!linked)
        add(ErrorCode::DanglingReference,
            "turning entry " + topo.in_roads[i].id + "->" + topo.in_roads[o.to].id + " is not a link");
      if (!(o.p >= 0.0 && o.p <= 1.0))
        add(ErrorCode::BadProportion,
            "turning entry " + topo.in_roads[i].id + "->" + topo.in_roads[o.to].id + " outside [0,1]");
    }
    if (turning.row_sum(i) > 1.0 + kRowSumTolerance)
      add(ErrorCode::BadProportion, "turning row of " + topo.in_roads[i].id + " sums above 1");
  }

  if (shape_ok) {
    out.spectral_radius = spectral_radius(turning);
    if (!(out.spectral_radius < 1.0 - kDrainMargin)) {
      std::ostringstream os;
      os << "spectral radius of turning matrix is " << out.spectral_radius << ", traffic never drains";
      add(ErrorCode::NonDraining, os.str());
    }
  }
  return out;
}

/// Mean vehicles served per cycle at each member of junction `j` under the
/// given allocation: sum over phases of sigma_i * P_sigma. Aligned with
/// `topo.junctions[j].in_roads`.
inline std::vector<double> service_rate(const NetworkTopology& topo, std::size_t j,
                                        const JunctionDecision& allocation) {
  if (j >= topo.junctions.size()) throw Error(ErrorCode::UnknownJunction, "junction index out of range");
  const auto& junc = topo.junctions[j];
  if (allocation.size() != junc.phases.size())
    throw Error(ErrorCode::BadTopology, "allocation size does not match phase count of " + junc.id);
  std::vector<double> rate(junc.in_roads.size(), 0.0);
  for (std::size_t m = 0; m < junc.in_roads.size(); ++m)
    for (std::size_t s = 0; s < junc.phases.size(); ++s)
      rate[m] += junc.phases[s].rate_of(junc.in_roads[m]) * allocation[s];
  return rate;
}

inline std::vector<double> service_rate(const NetworkTopology& topo, std::string_view junction_id,
                                        const PolicyDecision& decision) {
  const std::size_t j = topo.junction_index(junction_id);
  if (j == npos) throw Error(ErrorCode::UnknownJunction, std::string(junction_id));
  if (j >= decision.size()) throw Error(ErrorCode::UnknownJunction, "no allocation for " + std::string(junction_id));
  return service_rate(topo, j, decision[j]);
}

}  // namespace sigctl
