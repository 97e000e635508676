#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sigctl/error.hpp"
#include "sigctl/metrics.hpp"
#include "sigctl/scenario_io.hpp"

namespace sigctl::io {

/// Shortest text that reads back to the same double.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline void require_samples(const MetricsSeries& s) {
  if (s.empty()) throw Error(ErrorCode::EmptySeries, "metrics series has no samples");
}

inline std::string metrics_csv(const MetricsSeries& s) {
  require_samples(s);
  std::string out = "t,q_sigma,congested_links,exits_cum";
  for (const auto& id : s.road_ids) out += "," + id;
  out += "\n";
  for (const auto& m : s.samples) {
    out += format_number(m.t) + "," + format_number(m.q_sigma) + "," + std::to_string(m.congested_links) + "," +
           format_number(m.exits_cum);
    for (double q : m.queues) out += "," + format_number(q);
    out += "\n";
  }
  return out;
}

inline Json metrics_json(const MetricsSeries& s) {
  require_samples(s);
  Json samples = Json::array();
  for (const auto& m : s.samples)
    samples.push_back({{"t", m.t},
                       {"q_sigma", m.q_sigma},
                       {"congested_links", m.congested_links},
                       {"exits", m.exits},
                       {"exits_cum", m.exits_cum},
                       {"queues", m.queues}});
  Json out;
  out["road_ids"] = s.road_ids;
  out["samples"] = std::move(samples);
  out["summary"] = {{"mean_q_sigma", s.mean_q_sigma()},
                    {"mean_congested_links", s.mean_congested()},
                    {"avg_density", s.avg_density},
                    {"max_density", s.max_density},
                    {"travel_time", s.travel_time}};
  return out;
}

// ---------------------------------------------------------------------------
// SVG line charts.

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  bool right_axis = false;
};

namespace detail {

inline std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// Step of roughly `target` intervals across [0, hi], snapped to 1, 2 or 5
/// times a power of ten.
inline double nice_step(double hi, int target = 5) {
  if (!(hi > 0.0)) return 1.0;
  const double raw = hi / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

inline std::string tick_label(double v) {
  if (std::abs(v - std::round(v)) < 1e-9) return format_number(std::round(v));
  return fixed(v, 2);
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

}  // namespace detail

/// Static SVG 1.1 chart. Series flagged `right_axis` are scaled against a
/// secondary axis on the right.
inline std::string render_chart(const std::vector<PlotSeries>& series, std::string_view title,
                                std::string_view x_label, std::string_view y_label,
                                std::string_view y2_label = {}) {
  using detail::fixed;
  constexpr double W = 800, H = 450, left = 80, right = 80, top = 50, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;

  double xmax = 0.0, ymax = 0.0, y2max = 0.0;
  for (const auto& s : series) {
    for (double x : s.x) xmax = std::max(xmax, x);
    double& m = s.right_axis ? y2max : ymax;
    for (double y : s.y) m = std::max(m, y);
  }
  const double xs = detail::nice_step(xmax), ys = detail::nice_step(ymax), y2s = detail::nice_step(y2max);
  const double xtop = xmax > 0 ? std::ceil(xmax / xs) * xs : 1.0;
  const double ytop = ymax > 0 ? std::ceil(ymax / ys) * ys : 1.0;
  const double y2top = y2max > 0 ? std::ceil(y2max / y2s) * y2s : 1.0;
  auto px = [&](double x) { return left + pw * x / xtop; };
  auto py = [&](double y, bool r) { return top + ph * (1.0 - y / (r ? y2top : ytop)); };

  std::string o;
  o += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + fixed(W, 0) + "\" height=\"" +
       fixed(H, 0) + "\" viewBox=\"0 0 " + fixed(W, 0) + " " + fixed(H, 0) + "\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + fixed(W / 2, 0) + "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
       detail::escape(title) + "</text>\n";

  o += "<g font-family=\"sans-serif\" font-size=\"11\" stroke=\"none\" fill=\"#333\">\n";
  for (double x = 0; x <= xtop + 1e-9 * xtop; x += xs)
    o += "<line x1=\"" + fixed(px(x)) + "\" y1=\"" + fixed(top) + "\" x2=\"" + fixed(px(x)) + "\" y2=\"" +
         fixed(top + ph) + "\" stroke=\"#e5e5e5\"/>\n<text x=\"" + fixed(px(x)) + "\" y=\"" + fixed(top + ph + 16) +
         "\" text-anchor=\"middle\">" + detail::tick_label(x) + "</text>\n";
  for (double y = 0; y <= ytop + 1e-9 * ytop; y += ys)
    o += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(py(y, false)) + "\" x2=\"" + fixed(left + pw) + "\" y2=\"" +
         fixed(py(y, false)) + "\" stroke=\"#e5e5e5\"/>\n<text x=\"" + fixed(left - 6) + "\" y=\"" +
         fixed(py(y, false) + 4) + "\" text-anchor=\"end\">" + detail::tick_label(y) + "</text>\n";
  if (!y2_label.empty())
    for (double y = 0; y <= y2top + 1e-9 * y2top; y += y2s)
      o += "<text x=\"" + fixed(left + pw + 6) + "\" y=\"" + fixed(py(y, true) + 4) + "\">" + detail::tick_label(y) +
           "</text>\n";
  o += "</g>\n";
  o += "<rect x=\"" + fixed(left) + "\" y=\"" + fixed(top) + "\" width=\"" + fixed(pw) + "\" height=\"" + fixed(ph) +
       "\" fill=\"none\" stroke=\"#333\"/>\n";

  o += "<g font-family=\"sans-serif\" font-size=\"13\" fill=\"#333\">\n";
  o += "<text x=\"" + fixed(left + pw / 2) + "\" y=\"" + fixed(H - 18) + "\" text-anchor=\"middle\">" +
       detail::escape(x_label) + "</text>\n";
  o += "<text transform=\"translate(20," + fixed(top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       detail::escape(y_label) + "</text>\n";
  if (!y2_label.empty())
    o += "<text transform=\"translate(" + fixed(W - 20) + "," + fixed(top + ph / 2) +
         ") rotate(90)\" text-anchor=\"middle\">" + detail::escape(y2_label) + "</text>\n";
  o += "</g>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = detail::kPalette[k % std::size(detail::kPalette)];
    o += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t p = 0; p < s.x.size() && p < s.y.size(); ++p) {
      if (p) o += ' ';
      o += fixed(px(s.x[p])) + "," + fixed(py(s.y[p], s.right_axis));
    }
    o += "\"/>\n";
    const double ly = top + 14 + 16 * static_cast<double>(k);
    o += "<line x1=\"" + fixed(left + 10) + "\" y1=\"" + fixed(ly) + "\" x2=\"" + fixed(left + 30) + "\" y2=\"" +
         fixed(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    o += "<text x=\"" + fixed(left + 36) + "\" y=\"" + fixed(ly + 4) +
         "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">" + detail::escape(s.label) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

/// Q_sigma(t) against the left axis and the congested-link count on the right.
inline std::string render_svg(const MetricsSeries& s, std::string_view title = "Total queue") {
  require_samples(s);
  PlotSeries q{"total queue", {}, {}, false}, c{"congested links", {}, {}, true};
  for (const auto& m : s.samples) {
    q.x.push_back(m.t);
    q.y.push_back(m.q_sigma);
    c.x.push_back(m.t);
    c.y.push_back(static_cast<double>(m.congested_links));
  }
  return render_chart({q, c}, title, "time (cycles)", "vehicles in network", "congested links");
}

enum class MetricsFormat { Csv, Json };

inline void write_metrics(const MetricsSeries& s, const std::filesystem::path& path, MetricsFormat format) {
  write_file(path, format == MetricsFormat::Csv ? metrics_csv(s) : metrics_json(s).dump(2) + "\n");
}

inline void write_svg(const MetricsSeries& s, const std::filesystem::path& path) { write_file(path, render_svg(s)); }

}  // namespace sigctl::io
