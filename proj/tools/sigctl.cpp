// sigctl: batch front end for the signal-control simulator.
//
//   sigctl simulate  --scenario s.json [overrides] [--out DIR]
//   sigctl sweep     --scenario s.json [--policies ..] [--cycles ..] [--slots ..]
//   sigctl stability --scenario s.json
//   sigctl compare   --scenario s.json [overrides]
//   sigctl generate  two-junction|grid|single-queue [--rows R --cols C] --file out.json
//
// Exit codes: 0 success, 2 invalid configuration, 3 scenario fails
// validation, 4 runtime failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sigctl/sigctl.hpp"

namespace fs = std::filesystem;
using sigctl::io::Json;

namespace {

constexpr int kOk = 0;
constexpr int kBadConfig = 2;
constexpr int kInvalid = 3;
constexpr int kRuntime = 4;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Overrides {
  std::optional<std::string> policy;
  std::optional<double> eta;
  std::optional<double> cycle;
  std::optional<double> slot;
  std::optional<std::int64_t> horizon;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<double> delta_max;
  std::optional<std::int64_t> k;

  Json to_json() const {
    Json j = Json::object();
    if (policy) j["policy"] = *policy;
    if (eta) j["eta"] = *eta;
    if (cycle) j["cycle"] = *cycle;
    if (slot) j["slot"] = *slot;
    if (horizon) j["horizon"] = *horizon;
    if (seed) j["seed"] = *seed;
    if (mode) j["mode"] = *mode;
    if (delta_max) j["delta_max"] = *delta_max;
    if (k) j["k"] = *k;
    return j;
  }
};

struct Common {
  std::string scenario;
  std::string out;
  Overrides ov;
};

void add_common(CLI::App* cmd, Common& c, bool overrides = true) {
  cmd->add_option("--scenario", c.scenario, "scenario file (JSON)")->required();
  cmd->add_option("--out", c.out, "output directory (default $SIGCTL_OUT_DIR or ./sigctl-out)");
  if (!overrides) return;
  auto& o = c.ov;
  cmd->add_option("--policy", o.policy, "cyclic_bp | bp | proportional | greedy")
      ->check(CLI::IsMember({"cyclic_bp", "bp", "proportional", "greedy"}));
  cmd->add_option("--eta", o.eta, "softmax sharpness of cyclic_bp")->check(CLI::PositiveNumber);
  cmd->add_option("--cycle", o.cycle, "cycle length in seconds")->check(CLI::PositiveNumber);
  cmd->add_option("--slot", o.slot, "decision interval of bp/greedy in seconds")->check(CLI::PositiveNumber);
  cmd->add_option("--horizon", o.horizon, "cycles to simulate")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--mode", o.mode, "fluid | integer")->check(CLI::IsMember({"fluid", "integer"}));
  cmd->add_option("--delta-max", o.delta_max, "measurement noise bound")->check(CLI::NonNegativeNumber);
  cmd->add_option("--k", o.k, "turning estimator window")->check(CLI::PositiveNumber);
}

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("SIGCTL_OUT_DIR"); env && *env) return env;
  return "sigctl-out";
}

sigctl::Scenario load_scenario(const std::string& path) {
  if (!fs::exists(path)) throw ConfigError("scenario file not found: " + path);
  sigctl::Scenario s;
  try {
    s = sigctl::io::load(path);
  } catch (const sigctl::Error& e) {
    if (e.code() == sigctl::ErrorCode::DanglingReference) throw ValidationError(e.what());
    if (e.code() == sigctl::ErrorCode::IoFailure) throw ConfigError(e.what());
    throw ConfigError(std::string("invalid scenario: ") + e.what());
  }
  return s;
}

void validate(const sigctl::Scenario& s) {
  const auto v = sigctl::validate_topology(s.topology, s.turning);
  if (!v.ok()) throw ValidationError("scenario failed validation:\n" + v.summary());
  if (s.horizon < 1) throw ConfigError("run.horizon must be at least 1");
}

sigctl::Scenario apply(sigctl::Scenario s, const Overrides& o) {
  try {
    if (o.cycle) s = sigctl::with_cycle_length(std::move(s), *o.cycle);
  } catch (const sigctl::Error& e) {
    throw ConfigError(e.what());
  }
  if (o.policy) s.controller.policy = *sigctl::parse_policy(*o.policy);
  if (o.eta) s.controller.eta = *o.eta;
  if (o.slot) s.controller.decision_interval = *o.slot;
  if (o.horizon) s.horizon = *o.horizon;
  if (o.seed) s.seed = *o.seed;
  if (o.mode) s.mode = *sigctl::parse_mode(*o.mode);
  if (o.delta_max) s.measurement.delta_max = *o.delta_max;
  if (o.k) s.controller.window = static_cast<std::size_t>(*o.k);
  return s;
}

sigctl::RunResult run(const sigctl::Scenario& s, bool keep_cycle_queues = false) {
  try {
    sigctl::RunOptions opt;
    opt.keep_cycle_queues = keep_cycle_queues;
    return sigctl::run_horizon(s, opt);
  } catch (const sigctl::Error& e) {
    if (e.code() == sigctl::ErrorCode::NonIntegralInterval || e.code() == sigctl::ErrorCode::BadHorizon)
      throw ConfigError(e.what());
    throw;
  }
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw sigctl::Error(sigctl::ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
}

Json manifest(const std::string& subcommand, const Common& c, const sigctl::Scenario& resolved) {
  Json m;
  m["manifest_version"] = 1;
  m["tool"] = "sigctl";
  m["subcommand"] = subcommand;
  m["scenario_path"] = c.scenario;
  m["overrides"] = c.ov.to_json();
  m["scenario"] = sigctl::io::to_json(resolved);
  return m;
}

void write_json(const fs::path& path, const Json& j) { sigctl::io::write_file(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------

int cmd_simulate(const Common& c) {
  const auto s = apply(load_scenario(c.scenario), c.ov);
  validate(s);
  const auto res = run(s);
  const auto dir = output_dir(c.out);
  prepare_dir(dir);
  sigctl::io::write_metrics(res.metrics, dir / "metrics.csv", sigctl::io::MetricsFormat::Csv);
  sigctl::io::write_metrics(res.metrics, dir / "metrics.json", sigctl::io::MetricsFormat::Json);
  sigctl::io::write_file(dir / "qsigma.svg",
                         sigctl::io::render_svg(res.metrics, s.name + " / " + std::string(to_string(s.controller.policy))));
  auto m = manifest("simulate", c, s);
  m["artifacts"] = {"metrics.csv", "metrics.json", "qsigma.svg", "manifest.json"};
  write_json(dir / "manifest.json", m);
  std::cout << "policy " << to_string(s.controller.policy) << ", " << s.horizon << " cycles, mean total queue "
            << sigctl::io::format_number(res.metrics.mean_q_sigma()) << ", travel time "
            << sigctl::io::format_number(res.metrics.travel_time) << " s\n"
            << "wrote " << dir.string() << "\n";
  return kOk;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> parse_seconds(const std::string& text, const char* flag) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size() || !(v > 0.0)) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError(std::string(flag) + ": not a positive number: " + item);
    }
  }
  return out;
}

struct SweepGrid {
  std::string policies = "cyclic_bp,bp,proportional,greedy";
  std::string cycles = "30,60,90,120";
  std::string slots = "10,30,60,90";
};

int cmd_sweep(const Common& c, const SweepGrid& g) {
  std::vector<sigctl::Policy> policies;
  for (const auto& name : split_list(g.policies)) {
    const auto p = sigctl::parse_policy(name);
    if (!p) throw ConfigError("--policies: unknown policy " + name);
    policies.push_back(*p);
  }
  const auto cycles = parse_seconds(g.cycles, "--cycles");
  const auto slots = parse_seconds(g.slots, "--slots");

  struct Cell {
    sigctl::Policy policy;
    double interval;
  };
  std::vector<Cell> cells;
  for (auto p : policies)
    for (double v : sigctl::decides_per_cycle(p) ? cycles : slots) cells.push_back({p, v});
  if (cells.empty()) throw ConfigError("sweep grid is empty");

  const auto base = apply(load_scenario(c.scenario), c.ov);
  validate(base);
  const auto dir = output_dir(c.out);
  prepare_dir(dir);

  std::string csv = "policy,interval,mean_q_sigma,mean_congested_links,travel_time\n";
  Json jcells = Json::array();
  for (const auto& cell : cells) {
    Overrides o;
    o.policy = std::string(to_string(cell.policy));
    if (sigctl::decides_per_cycle(cell.policy))
      o.cycle = cell.interval;
    else
      o.slot = cell.interval;
    const auto s = apply(base, o);
    const auto res = run(s);
    using sigctl::io::format_number;
    csv += std::string(to_string(cell.policy)) + "," + format_number(cell.interval) + "," +
           format_number(res.metrics.mean_q_sigma()) + "," + format_number(res.metrics.mean_congested()) + "," +
           format_number(res.metrics.travel_time) + "\n";
    jcells.push_back({{"policy", std::string(to_string(cell.policy))},
                      {"interval", cell.interval},
                      {"cycle_length", s.topology.cycle_length},
                      {"decision_interval", s.controller.decision_interval},
                      {"horizon", s.horizon}});
  }
  sigctl::io::write_file(dir / "sweep.csv", csv);
  auto m = manifest("sweep", c, base);
  m["grid"] = {{"policies", g.policies}, {"cycles", g.cycles}, {"slots", g.slots}};
  m["cells"] = std::move(jcells);
  m["artifacts"] = {"sweep.csv", "manifest.json"};
  write_json(dir / "manifest.json", m);
  std::cout << csv;
  return kOk;
}

Json stability_json(const sigctl::Scenario& s) {
  const auto& topo = s.topology;
  const auto v = sigctl::validate_topology(topo, s.turning);
  Json segments = Json::array();
  double worst = sigctl::lp::kInf;
  for (std::int64_t start : s.demand.breakpoints(s.horizon)) {
    const auto a = s.demand.rates_at(start, topo.in_roads.size());
    const auto rep = sigctl::max_epsilon(topo, s.turning, a);
    worst = std::min(worst, rep.epsilon_star);
    Json rates = Json::object(), sv = Json::object(), rho = Json::object();
    for (std::size_t i = 0; i < a.size(); ++i) {
      rates[topo.in_roads[i].id] = a[i];
      sv[topo.in_roads[i].id] = rep.witness_s[i];
    }
    for (std::size_t j = 0; j < topo.junctions.size(); ++j) {
      Json phases = Json::object();
      for (std::size_t p = 0; p < topo.junctions[j].phases.size(); ++p)
        phases[topo.junctions[j].phases[p].name.empty() ? std::to_string(p) : topo.junctions[j].phases[p].name] =
            rep.witness_rho[j][p];
      rho[topo.junctions[j].id] = std::move(phases);
    }
    segments.push_back({{"start_cycle", start},
                        {"rates", std::move(rates)},
                        {"epsilon_star", rep.epsilon_star},
                        {"feasible", rep.feasible},
                        {"in_closure", rep.in_closure},
                        {"minmax_bound", sigctl::minmax_bound(topo, s.turning, a)},
                        {"load_factor", sigctl::max_load_factor(topo, s.turning, a)},
                        {"witness_rho", std::move(rho)},
                        {"witness_s", std::move(sv)}});
  }
  Json out;
  out["scenario"] = s.name;
  out["spectral_radius"] = v.spectral_radius;
  out["epsilon_star"] = worst;
  out["feasible"] = worst > 0.0;
  out["in_closure"] = worst >= 0.0;
  out["segments"] = std::move(segments);
  return out;
}

int cmd_stability(const Common& c) {
  const auto s = apply(load_scenario(c.scenario), c.ov);
  validate(s);
  const auto report = stability_json(s);
  const auto dir = output_dir(c.out);
  prepare_dir(dir);
  write_json(dir / "stability.json", report);
  auto m = manifest("stability", c, s);
  m["artifacts"] = {"stability.json", "manifest.json"};
  write_json(dir / "manifest.json", m);
  std::cout << report.dump(2) << "\n";
  return kOk;
}

/// Least-squares slope of y over x.
double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double d = n * sxx - sx * sx;
  return d > 0 ? (n * sxy - sx * sy) / d : 0.0;
}

int cmd_compare(const Common& c) {
  const auto base = apply(load_scenario(c.scenario), c.ov);
  validate(base);
  const auto dir = output_dir(c.out);
  prepare_dir(dir);

  // A policy is flagged diverging when Q_sigma grows over the second half of
  // the run by more than 0.5% of the peak external arrival rate per cycle.
  double arrival = 0.0;
  for (std::int64_t t : base.demand.breakpoints(base.horizon)) {
    double total = 0.0;
    for (double a : base.demand.rates_at(t, base.topology.in_roads.size())) total += a;
    arrival = std::max(arrival, total);
  }
  const double threshold = 0.005 * std::max(arrival, 1e-9);

  struct Row {
    std::string policy;
    double cesaro, mean, growth;
    bool diverging;
    std::size_t decisions;
  };
  std::vector<Row> rows;
  std::vector<sigctl::io::PlotSeries> plot;
  for (auto p : sigctl::kAllPolicies) {
    auto s = base;
    s.controller.policy = p;
    const auto res = run(s, true);
    // Cesaro average over cycle boundaries, t = 0 .. horizon - 1.
    double total = 0.0;
    for (std::size_t t = 0; t + 1 < res.cycle_queues.size(); ++t)
      for (double q : res.cycle_queues[t]) total += q;
    const double cesaro = total / static_cast<double>(base.horizon);
    std::vector<double> x, y;
    const auto& samples = res.metrics.samples;
    for (std::size_t k = samples.size() / 2; k < samples.size(); ++k) {
      x.push_back(samples[k].t);
      y.push_back(samples[k].q_sigma);
    }
    const double g = slope(x, y);
    rows.push_back({std::string(to_string(p)), cesaro, res.metrics.mean_q_sigma(), g, g > threshold, res.decisions});
    sigctl::io::PlotSeries ps{std::string(to_string(p)), {}, {}, false};
    for (const auto& m : samples) {
      ps.x.push_back(m.t);
      ps.y.push_back(m.q_sigma);
    }
    plot.push_back(std::move(ps));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.cesaro < b.cesaro; });

  using sigctl::io::format_number;
  std::string csv = "rank,policy,cesaro_q_sigma,mean_q_sigma,growth_per_cycle,diverging,decisions\n";
  for (std::size_t r = 0; r < rows.size(); ++r)
    csv += std::to_string(r + 1) + "," + rows[r].policy + "," + format_number(rows[r].cesaro) + "," +
           format_number(rows[r].mean) + "," + format_number(rows[r].growth) + "," +
           (rows[r].diverging ? "yes" : "no") + "," + std::to_string(rows[r].decisions) + "\n";
  sigctl::io::write_file(dir / "compare.csv", csv);
  sigctl::io::write_file(dir / "compare.svg", sigctl::io::render_chart(plot, base.name + ": total queue by policy",
                                                                        "time (cycles)", "vehicles in network"));
  auto m = manifest("compare", c, base);
  m["artifacts"] = {"compare.csv", "compare.svg", "manifest.json"};
  write_json(dir / "manifest.json", m);
  std::cout << csv;
  return kOk;
}

int cmd_generate(const std::string& kind, std::size_t rows, std::size_t cols, const std::string& file) {
  sigctl::Scenario s;
  if (kind == "two-junction") {
    s = sigctl::generate_two_junction();
  } else if (kind == "grid") {
    try {
      s = sigctl::generate_grid(rows, cols);
    } catch (const sigctl::Error& e) {
      throw ConfigError(e.what());
    }
  } else {
    s = sigctl::generate_single_queue(4.0, 3.6);
  }
  const auto text = sigctl::io::serialize(s);
  if (file.empty() || file == "-")
    std::cout << text;
  else
    sigctl::io::write_file(file, text);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralised traffic-signal control: simulation, sweeps and stability analysis"};
  app.require_subcommand(1);

  Common simulate, sweep, stability, compare;
  auto* c_sim = app.add_subcommand("simulate", "run one scenario and write metrics, plot and manifest");
  add_common(c_sim, simulate);

  SweepGrid grid;
  auto* c_sweep = app.add_subcommand("sweep", "policies x decision intervals, one seeded run each");
  add_common(c_sweep, sweep);
  c_sweep->add_option("--policies", grid.policies, "comma-separated policies");
  c_sweep->add_option("--cycles", grid.cycles, "cycle lengths (s) for cyclic_bp and proportional");
  c_sweep->add_option("--slots", grid.slots, "decision intervals (s) for bp and greedy");

  auto* c_stab = app.add_subcommand("stability", "stability margin, witness and bounds per demand segment");
  add_common(c_stab, stability);

  auto* c_cmp = app.add_subcommand("compare", "all four policies on the same seeded scenario");
  add_common(c_cmp, compare);

  std::string kind = "two-junction", file;
  std::size_t rows = 4, cols = 4;
  auto* c_gen = app.add_subcommand("generate", "write a generated scenario");
  c_gen->add_option("kind", kind, "two-junction | grid | single-queue")
      ->check(CLI::IsMember({"two-junction", "grid", "single-queue"}));
  c_gen->add_option("--rows", rows, "grid rows");
  c_gen->add_option("--cols", cols, "grid columns");
  c_gen->add_option("--file", file, "output path, '-' for stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadConfig;
  }

  try {
    if (*c_sim) return cmd_simulate(simulate);
    if (*c_sweep) return cmd_sweep(sweep, grid);
    if (*c_stab) return cmd_stability(stability);
    if (*c_cmp) return cmd_compare(compare);
    if (*c_gen) return cmd_generate(kind, rows, cols, file);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadConfig;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kBadConfig;
}
