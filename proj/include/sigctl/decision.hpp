#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

namespace sigctl {

// Green-time proportions P^j_sigma for one junction, indexed like the
// junction's phase list.
using JunctionDecision = std::vector<double>;

struct PolicyDecision {
  std::vector<JunctionDecision> junctions;

  std::size_t size() const noexcept { return junctions.size(); }
  const JunctionDecision& operator[](std::size_t j) const { return junctions[j]; }
  JunctionDecision& operator[](std::size_t j) { return junctions[j]; }
};

inline double total_green(const JunctionDecision& d) {
  return std::accumulate(d.begin(), d.end(), 0.0);
}

}  // namespace sigctl
