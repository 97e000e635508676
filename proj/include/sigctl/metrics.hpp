#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace sigctl {

inline constexpr double kCongestionShare = 0.85;

/// A link is congested when it holds more than 85% of a bounded capacity.
inline bool congested(double queue, std::optional<double> capacity) {
  return capacity.has_value() && queue > kCongestionShare * *capacity;
}

struct MetricsSample {
  double t = 0.0;  // cycles since the start of the run
  double q_sigma = 0.0;
  std::size_t congested_links = 0;
  double exits = 0.0;  // since the previous sample
  double exits_cum = 0.0;
  std::vector<double> queues;

  bool operator==(const MetricsSample&) const = default;
};

struct MetricsSeries {
  std::vector<std::string> road_ids;
  std::vector<MetricsSample> samples;

  std::vector<double> avg_density;  // mean queue per in-road over the samples
  double max_density = 0.0;         // largest Q_i / capacity over bounded roads and samples
  double travel_time = 0.0;         // seconds; 0 when nothing has left the network

  bool empty() const noexcept { return samples.empty(); }

  double mean_q_sigma() const {
    double s = 0.0;
    for (const auto& m : samples) s += m.q_sigma;
    return samples.empty() ? 0.0 : s / static_cast<double>(samples.size());
  }
  double mean_congested() const {
    double s = 0.0;
    for (const auto& m : samples) s += static_cast<double>(m.congested_links);
    return samples.empty() ? 0.0 : s / static_cast<double>(samples.size());
  }

  bool operator==(const MetricsSeries&) const = default;
};

/// Fills the per-run aggregates that depend only on the samples.
inline void summarize_densities(MetricsSeries& series, const std::vector<std::optional<double>>& capacity) {
  const std::size_t n = series.road_ids.size();
  series.avg_density.assign(n, 0.0);
  series.max_density = 0.0;
  for (const auto& s : series.samples)
    for (std::size_t i = 0; i < n; ++i) {
      series.avg_density[i] += s.queues[i];
      if (capacity[i]) series.max_density = std::max(series.max_density, s.queues[i] / *capacity[i]);
    }
  if (!series.samples.empty())
    for (auto& d : series.avg_density) d /= static_cast<double>(series.samples.size());
}

}  // namespace sigctl
