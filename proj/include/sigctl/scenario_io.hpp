#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "sigctl/controllers.hpp"
#include "sigctl/dynamics.hpp"
#include "sigctl/error.hpp"
#include "sigctl/network.hpp"
#include "sigctl/scenario.hpp"

namespace sigctl::io {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Serialization

inline Json to_json(const Scenario& s) {
  const auto& topo = s.topology;
  auto road_id = [&](std::size_t i) { return topo.in_roads.at(i).id; };

  Json roads = Json::array();
  for (const auto& r : topo.in_roads) {
    Json o;
    o["id"] = r.id;
    o["junction"] = r.junction < topo.junctions.size() ? Json(topo.junctions[r.junction].id) : Json(nullptr);
    o["capacity"] = r.capacity ? Json(*r.capacity) : Json(nullptr);
    o["ingress"] = r.ingress;
    roads.push_back(std::move(o));
  }
  Json junctions = Json::array();
  for (const auto& j : topo.junctions) {
    Json o;
    o["id"] = j.id;
    o["in_roads"] = Json::array();
    for (std::size_t i : j.in_roads) o["in_roads"].push_back(road_id(i));
    o["phases"] = Json::array();
    for (const auto& p : j.phases) {
      Json ph;
      ph["name"] = p.name;
      ph["rates"] = Json::object();
      for (const auto& r : p.rates) ph["rates"][road_id(r.in_road)] = r.rate;
      o["phases"].push_back(std::move(ph));
    }
    junctions.push_back(std::move(o));
  }
  Json links = Json::array();
  for (const auto& l : topo.links) links.push_back(Json::array({road_id(l.from), road_id(l.to)}));

  Json turning = Json::array();
  for (std::size_t i = 0; i < s.turning.size(); ++i)
    for (const auto& o : s.turning.row(i)) turning.push_back({{"from", road_id(i)}, {"to", road_id(o.to)}, {"p", o.p}});

  Json demand_roads = Json::array();
  for (const auto& d : s.demand.roads) {
    Json segs = Json::array();
    for (const auto& seg : d.segments) {
      Json o;
      o["start"] = seg.start;
      if (seg.end != kOpenEnd) o["end"] = seg.end;
      o["rate"] = seg.rate;
      segs.push_back(std::move(o));
    }
    demand_roads.push_back({{"in_road", road_id(d.in_road)}, {"segments", std::move(segs)}});
  }

  Json run;
  run["horizon"] = s.horizon;
  run["seed"] = s.seed;
  run["mode"] = std::string(to_string(s.mode));
  if (!s.initial_queues.empty()) {
    run["initial_queues"] = Json::object();
    for (std::size_t i = 0; i < s.initial_queues.size(); ++i) run["initial_queues"][road_id(i)] = s.initial_queues[i];
  }

  Json out;
  out["schema_version"] = kSchemaVersion;
  out["name"] = s.name;
  out["topology"] = {{"cycle_length", topo.cycle_length},
                     {"lost_time", topo.lost_time},
                     {"in_roads", std::move(roads)},
                     {"junctions", std::move(junctions)},
                     {"links", std::move(links)}};
  out["turning"] = std::move(turning);
  out["demand"] = {{"period", s.demand.period}, {"roads", std::move(demand_roads)}};
  out["measurement"] = {{"delta_max", s.measurement.delta_max}};
  out["controller"] = {{"policy", std::string(to_string(s.controller.policy))},
                       {"eta", s.controller.eta},
                       {"window", s.controller.window},
                       {"decision_interval", s.controller.decision_interval}};
  out["run"] = std::move(run);
  return out;
}

inline std::string serialize(const Scenario& s) { return to_json(s).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Parsing. Errors carry the JSON pointer of the offending value.

namespace detail {

[[noreturn]] inline void fail(const std::string& at, const std::string& msg,
                              ErrorCode code = ErrorCode::Schema) {
  throw Error(code, (at.empty() ? std::string("/") : at) + ": " + msg);
}

inline std::string child(const std::string& at, std::string_view key) { return at + "/" + std::string(key); }
inline std::string child(const std::string& at, std::size_t index) { return at + "/" + std::to_string(index); }

inline void expect_object(const Json& j, const std::string& at) {
  if (!j.is_object()) fail(at, "expected an object");
}
inline void expect_array(const Json& j, const std::string& at) {
  if (!j.is_array()) fail(at, "expected an array");
}

inline void only_fields(const Json& j, const std::string& at, std::initializer_list<std::string_view> allowed) {
  for (const auto& [k, v] : j.items())
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) fail(child(at, k), "unknown field");
}

inline const Json& field(const Json& j, const std::string& at, std::string_view key) {
  auto it = j.find(std::string(key));
  if (it == j.end()) fail(at, "missing required field '" + std::string(key) + "'");
  return *it;
}

inline double number(const Json& j, const std::string& at) {
  if (!j.is_number()) fail(at, "expected a number");
  return j.get<double>();
}

inline double non_negative(const Json& j, const std::string& at) {
  const double v = number(j, at);
  if (!(v >= 0.0)) fail(at, "must be non-negative");
  return v;
}

inline std::int64_t integer(const Json& j, const std::string& at) {
  if (!j.is_number_integer()) fail(at, "expected an integer");
  return j.get<std::int64_t>();
}

inline std::string text(const Json& j, const std::string& at) {
  if (!j.is_string()) fail(at, "expected a string");
  return j.get<std::string>();
}

inline std::size_t road_ref(const NetworkTopology& topo, const Json& j, const std::string& at) {
  const auto i = topo.in_road_index(text(j, at));
  if (i == npos) fail(at, "unknown in-road '" + j.get<std::string>() + "'", ErrorCode::DanglingReference);
  return i;
}

inline NetworkTopology parse_topology(const Json& j, const std::string& at) {
  expect_object(j, at);
  only_fields(j, at, {"cycle_length", "lost_time", "in_roads", "junctions", "links"});
  NetworkTopology topo;
  topo.cycle_length = number(field(j, at, "cycle_length"), child(at, "cycle_length"));
  if (j.contains("lost_time")) topo.lost_time = non_negative(j["lost_time"], child(at, "lost_time"));

  const auto roads_at = child(at, "in_roads");
  const auto& roads = field(j, at, "in_roads");
  expect_array(roads, roads_at);
  std::vector<std::string> owner_ids;
  for (std::size_t k = 0; k < roads.size(); ++k) {
    const auto& r = roads[k];
    const auto rat = child(roads_at, k);
    expect_object(r, rat);
    only_fields(r, rat, {"id", "junction", "capacity", "ingress"});
    InRoad road;
    road.id = text(field(r, rat, "id"), child(rat, "id"));
    if (topo.in_road_index(road.id) != npos) fail(child(rat, "id"), "duplicate in-road id '" + road.id + "'");
    const auto& owner = field(r, rat, "junction");
    owner_ids.push_back(owner.is_null() ? std::string() : text(owner, child(rat, "junction")));
    if (r.contains("capacity") && !r["capacity"].is_null()) road.capacity = number(r["capacity"], child(rat, "capacity"));
    if (r.contains("ingress")) {
      if (!r["ingress"].is_boolean()) fail(child(rat, "ingress"), "expected a boolean");
      road.ingress = r["ingress"].get<bool>();
    }
    topo.in_roads.push_back(std::move(road));
  }

  const auto junc_at = child(at, "junctions");
  const auto& juncs = field(j, at, "junctions");
  expect_array(juncs, junc_at);
  for (std::size_t k = 0; k < juncs.size(); ++k) {
    const auto& jj = juncs[k];
    const auto jat = child(junc_at, k);
    expect_object(jj, jat);
    only_fields(jj, jat, {"id", "in_roads", "phases"});
    Junction junc;
    junc.id = text(field(jj, jat, "id"), child(jat, "id"));
    if (topo.junction_index(junc.id) != npos) fail(child(jat, "id"), "duplicate junction id '" + junc.id + "'");
    const auto& members = field(jj, jat, "in_roads");
    expect_array(members, child(jat, "in_roads"));
    for (std::size_t m = 0; m < members.size(); ++m)
      junc.in_roads.push_back(topo.in_road_index(text(members[m], child(child(jat, "in_roads"), m))));
    const auto& phases = field(jj, jat, "phases");
    const auto pat = child(jat, "phases");
    expect_array(phases, pat);
    for (std::size_t p = 0; p < phases.size(); ++p) {
      const auto ppat = child(pat, p);
      expect_object(phases[p], ppat);
      only_fields(phases[p], ppat, {"name", "rates"});
      Phase ph;
      if (phases[p].contains("name")) ph.name = text(phases[p]["name"], child(ppat, "name"));
      const auto& rates = field(phases[p], ppat, "rates");
      expect_object(rates, child(ppat, "rates"));
      for (const auto& [id, v] : rates.items())
        ph.rates.push_back({topo.in_road_index(id), non_negative(v, child(child(ppat, "rates"), id))});
      junc.phases.push_back(std::move(ph));
    }
    topo.junctions.push_back(std::move(junc));
  }
  for (std::size_t i = 0; i < topo.in_roads.size(); ++i)
    topo.in_roads[i].junction = topo.junction_index(owner_ids[i]);

  if (j.contains("links")) {
    const auto lat = child(at, "links");
    expect_array(j["links"], lat);
    for (std::size_t k = 0; k < j["links"].size(); ++k) {
      const auto& l = j["links"][k];
      const auto llat = child(lat, k);
      if (!l.is_array() || l.size() != 2) fail(llat, "expected a [from, to] pair");
      topo.links.push_back({topo.in_road_index(text(l[0], child(llat, 0))),
                            topo.in_road_index(text(l[1], child(llat, 1)))});
    }
  }
  return topo;
}

inline TurningMatrix parse_turning(const Json& j, const std::string& at, const NetworkTopology& topo) {
  expect_array(j, at);
  TurningMatrix p(topo.in_roads.size());
  for (std::size_t k = 0; k < j.size(); ++k) {
    const auto eat = child(at, k);
    expect_object(j[k], eat);
    only_fields(j[k], eat, {"from", "to", "p"});
    const auto from = road_ref(topo, field(j[k], eat, "from"), child(eat, "from"));
    const auto to = road_ref(topo, field(j[k], eat, "to"), child(eat, "to"));
    p.set(from, to, number(field(j[k], eat, "p"), child(eat, "p")));
  }
  return p;
}

inline DemandProfile parse_demand(const Json& j, const std::string& at, const NetworkTopology& topo) {
  expect_object(j, at);
  only_fields(j, at, {"period", "roads"});
  DemandProfile d;
  if (j.contains("period")) {
    d.period = integer(j["period"], child(at, "period"));
    if (d.period < 0) fail(child(at, "period"), "must be non-negative");
  }
  const auto rat = child(at, "roads");
  const auto& roads = field(j, at, "roads");
  expect_array(roads, rat);
  for (std::size_t k = 0; k < roads.size(); ++k) {
    const auto kat = child(rat, k);
    expect_object(roads[k], kat);
    only_fields(roads[k], kat, {"in_road", "segments"});
    RoadDemand rd;
    rd.in_road = road_ref(topo, field(roads[k], kat, "in_road"), child(kat, "in_road"));
    const auto sat = child(kat, "segments");
    const auto& segs = field(roads[k], kat, "segments");
    expect_array(segs, sat);
    for (std::size_t s = 0; s < segs.size(); ++s) {
      const auto ssat = child(sat, s);
      expect_object(segs[s], ssat);
      only_fields(segs[s], ssat, {"start", "end", "rate"});
      RateSegment seg;
      seg.start = integer(field(segs[s], ssat, "start"), child(ssat, "start"));
      if (seg.start < 0) fail(child(ssat, "start"), "must be non-negative");
      if (segs[s].contains("end")) {
        seg.end = integer(segs[s]["end"], child(ssat, "end"));
        if (seg.end <= seg.start) fail(child(ssat, "end"), "must be greater than start");
      }
      seg.rate = non_negative(field(segs[s], ssat, "rate"), child(ssat, "rate"));
      for (const auto& prev : rd.segments)
        if (seg.start < prev.end && prev.start < seg.end) fail(ssat, "overlaps an earlier segment");
      rd.segments.push_back(seg);
    }
    for (const auto& prev : d.roads)
      if (prev.in_road == rd.in_road) fail(child(kat, "in_road"), "in-road already has a demand entry");
    d.roads.push_back(std::move(rd));
  }
  return d;
}

inline ControllerConfig parse_controller(const Json& j, const std::string& at) {
  expect_object(j, at);
  only_fields(j, at, {"policy", "eta", "window", "decision_interval"});
  ControllerConfig c;
  if (j.contains("policy")) {
    const auto name = text(j["policy"], child(at, "policy"));
    const auto p = parse_policy(name);
    if (!p) fail(child(at, "policy"), "unknown policy '" + name + "'");
    c.policy = *p;
  }
  if (j.contains("eta")) {
    c.eta = number(j["eta"], child(at, "eta"));
    if (!(c.eta > 0.0)) fail(child(at, "eta"), "must be positive");
  }
  if (j.contains("window")) {
    const auto k = integer(j["window"], child(at, "window"));
    if (k < 1) fail(child(at, "window"), "must be at least 1");
    c.window = static_cast<std::size_t>(k);
  }
  if (j.contains("decision_interval")) {
    c.decision_interval = number(j["decision_interval"], child(at, "decision_interval"));
    if (!(c.decision_interval > 0.0)) fail(child(at, "decision_interval"), "must be positive");
  }
  return c;
}

}  // namespace detail

inline Scenario from_json(const Json& j) {
  using namespace detail;
  const std::string root;
  expect_object(j, root);
  only_fields(j, root,
              {"schema_version", "name", "topology", "turning", "demand", "measurement", "controller", "run"});
  const auto version = integer(field(j, root, "schema_version"), "/schema_version");
  if (version != kSchemaVersion) fail("/schema_version", "unsupported schema version " + std::to_string(version));

  Scenario s;
  if (j.contains("name")) s.name = text(j["name"], "/name");
  s.topology = parse_topology(field(j, root, "topology"), "/topology");
  s.turning = j.contains("turning") ? parse_turning(j["turning"], "/turning", s.topology)
                                    : TurningMatrix(s.topology.in_roads.size());
  if (j.contains("demand")) s.demand = parse_demand(j["demand"], "/demand", s.topology);
  if (j.contains("measurement")) {
    const auto& m = j["measurement"];
    expect_object(m, "/measurement");
    only_fields(m, "/measurement", {"delta_max"});
    if (m.contains("delta_max")) s.measurement.delta_max = non_negative(m["delta_max"], "/measurement/delta_max");
  }
  if (j.contains("controller")) s.controller = parse_controller(j["controller"], "/controller");

  const auto& run = field(j, root, "run");
  expect_object(run, "/run");
  only_fields(run, "/run", {"horizon", "seed", "mode", "initial_queues"});
  s.horizon = integer(field(run, "/run", "horizon"), "/run/horizon");
  const auto& seed = field(run, "/run", "seed");
  if (!seed.is_number_unsigned()) fail("/run/seed", "expected a non-negative integer");
  s.seed = seed.get<std::uint64_t>();
  if (run.contains("mode")) {
    const auto name = text(run["mode"], "/run/mode");
    const auto m = parse_mode(name);
    if (!m) fail("/run/mode", "unknown mode '" + name + "'");
    s.mode = *m;
  }
  if (run.contains("initial_queues")) {
    const auto& iq = run["initial_queues"];
    expect_object(iq, "/run/initial_queues");
    s.initial_queues.assign(s.topology.in_roads.size(), 0.0);
    for (const auto& [id, v] : iq.items()) {
      const auto at = "/run/initial_queues/" + id;
      const auto i = s.topology.in_road_index(id);
      if (i == npos) fail(at, "unknown in-road '" + id + "'", ErrorCode::DanglingReference);
      s.initial_queues[i] = non_negative(v, at);
    }
  }
  return s;
}

/// Parses scenario text. A run manifest is accepted too; its embedded
/// scenario is returned.
inline Scenario parse(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Schema, std::string("malformed scenario at byte ") + std::to_string(e.byte) + ": " +
                                       e.what());
  }
  if (j.is_object() && j.contains("manifest_version") && j.contains("scenario")) return from_json(j["scenario"]);
  return from_json(j);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

inline Scenario load(const std::filesystem::path& path) { return parse(read_file(path)); }

}  // namespace sigctl::io
