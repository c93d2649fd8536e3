// Copyright 2026 The dotsn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dotsn/scenario.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace dotsn {

namespace {

using nlohmann::json;

// Participant guid prefix: vendor-ish bytes followed by the participant id.
constexpr std::uint64_t kPrefixHi = 0x010f'5a00'0000'0000ULL;
constexpr std::uint32_t kParticipantEntity = 0x000001c1;
constexpr std::uint32_t kWriterKind = 0x02;
constexpr std::uint32_t kReaderKind = 0x07;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ScenarioError(where + ": " + what);
}

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) fail(where, std::string("missing field '") + key + "'");
  return j.at(key);
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return field(j, key, where).get<T>();
  } catch (const json::exception& e) {
    fail(where + "." + key, e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return get<T>(j, key, where);
}

Nanos micros(const json& j, const char* key, const std::string& where) {
  auto v = get<std::int64_t>(j, key, where);
  if (v < 0) fail(where + "." + key, "must be >= 0");
  return v * kMicro;
}

Route route_of(const json& j, const std::string& where, const Topology& topo) {
  if (!j.is_array()) fail(where, "route must be an array of node names");
  Route r;
  for (const auto& n : j) {
    if (!n.is_string()) fail(where, "route must be an array of node names");
    r.push_back(n.get<std::string>());
  }
  if (r.size() < 2) fail(where, "route needs at least two nodes");
  for (const auto& n : r) {
    if (!topo.has_node(n)) fail(where, "unknown node " + n);
  }
  try {
    (void)topo.hops(r);
  } catch (const InvalidValue& e) {
    fail(where, e.what());
  }
  return r;
}

QosPolicies qos_of(const json& j, const std::string& where) {
  QosPolicies q;
  q.partition = get_or<std::uint16_t>(j, "vid", 1, where);
  q.priority = get_or<std::uint8_t>(j, "priority", 0, where);
  q.deadline = micros(j, "period_us", where);
  q.latency = j.contains("latency_us") ? micros(j, "latency_us", where) : q.deadline;
  q.jitter = j.contains("jitter_us") ? micros(j, "jitter_us", where) : 0;
  q.reliability = Reliability::kBestEffort;
  if (j.contains("reliability")) {
    try {
      q.reliability = parse_reliability(get<std::string>(j, "reliability", where));
    } catch (const InvalidValue& e) {
      fail(where + ".reliability", e.what());
    }
  }
  q.size = get<std::uint32_t>(j, "size", where);
  try {
    q.validate();
  } catch (const InvalidValue& e) {
    fail(where, e.what());
  }
  return q;
}

EndpointLatencyModel model_of(const json& j, const std::string& where) {
  EndpointLatencyModel m;
  auto ns = [&](const char* key, Nanos& out) {
    if (j.contains(key)) out = get<Nanos>(j, key, where);
  };
  auto list = [&](const char* key, std::vector<Nanos>& out) {
    if (j.contains(key)) out = get<std::vector<Nanos>>(j, key, where);
  };
  ns("t_ser_ns", m.t_ser);
  ns("t_hd_ns", m.t_hd);
  list("t_sub_ns", m.t_sub);
  ns("t_skt_s_ns", m.t_skt_s);
  ns("t_skt_r_ns", m.t_skt_r);
  ns("t_phd_ns", m.t_phd);
  list("t_psub_ns", m.t_psub);
  ns("t_cb_ns", m.t_cb);
  ns("t_dser_ns", m.t_dser);
  ns("t_disc_ns", m.t_disc);
  list("t_wait_ns", m.t_wait);
  ns("jitter_bound_ns", m.jitter_bound);
  try {
    m.validate();
  } catch (const InvalidValue& e) {
    fail(where, e.what());
  }
  return m;
}

}  // namespace

std::vector<InterferenceSpec> Scenario::interference_for(const std::string& level) const {
  std::vector<InterferenceSpec> out;
  if (level.empty()) return out;
  auto it = interference_levels.find(level);
  if (it == interference_levels.end()) throw ScenarioError("unknown interference level " + level);
  for (const auto& name : it->second) {
    for (const auto& spec : interference) {
      if (spec.name == name) out.push_back(spec);
    }
  }
  return out;
}

Scenario parse_scenario(std::string_view text, std::string name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ScenarioError(name + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object()) throw ScenarioError(name + ": top level must be an object");

  Scenario s;
  s.name = get_or<std::string>(doc, "name", name, "scenario");
  s.hash = fnv1a64(text);

  // Topology.
  std::uint8_t next_device = 1;
  const auto& nodes = field(doc, "nodes", "scenario");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string where = "nodes[" + std::to_string(i) + "]";
    const auto& j = nodes[i];
    Node n;
    n.name = get<std::string>(j, "name", where);
    auto role = get<std::string>(j, "role", where);
    if (role == "switch") {
      n.role = NodeRole::kSwitch;
      n.device_id = get_or<std::uint8_t>(j, "device_id", next_device, where);
      next_device = static_cast<std::uint8_t>(n.device_id + 1);
      n.processing_delay = j.contains("processing_delay_us") ? micros(j, "processing_delay_us", where) : 10 * kMicro;
    } else if (role == "end_station") {
      n.role = NodeRole::kEndStation;
      n.processing_delay = 0;
    } else {
      fail(where + ".role", "expected 'switch' or 'end_station'");
    }
    if (j.contains("ip")) {
      try {
        n.ip = parse_ipv4(get<std::string>(j, "ip", where));
      } catch (const InvalidValue& e) {
        fail(where + ".ip", e.what());
      }
    }
    try {
      s.topology.add_node(n);
    } catch (const InvalidValue& e) {
      fail(where, e.what());
    }
    if (n.ip) s.routes.add_host(n.ip, n.name);
  }
  const auto& links = field(doc, "links", "scenario");
  for (std::size_t i = 0; i < links.size(); ++i) {
    const std::string where = "links[" + std::to_string(i) + "]";
    const auto& j = links[i];
    Link l;
    l.a = get<std::string>(j, "a", where);
    l.a_port = get<std::uint8_t>(j, "a_port", where);
    l.b = get<std::string>(j, "b", where);
    l.b_port = get<std::uint8_t>(j, "b_port", where);
    l.bandwidth_bps = get<std::int64_t>(j, "bandwidth_mbps", where) * 1'000'000;
    l.propagation = get_or<Nanos>(j, "propagation_ns", 0, where);
    s.topology.add_link(l);
  }
  try {
    s.topology.validate();
  } catch (const InvalidValue& e) {
    throw ScenarioError(std::string("topology: ") + e.what());
  }

  // Routes.
  const auto& routes = field(doc, "routes", "scenario");
  for (std::size_t i = 0; i < routes.size(); ++i) {
    s.routes.add_route(route_of(routes[i], "routes[" + std::to_string(i) + "]", s.topology));
  }

  // Participants.
  std::set<Locator> locators;
  std::set<std::uint32_t> ids;
  const auto& parts = field(doc, "participants", "scenario");
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string where = "participants[" + std::to_string(i) + "]";
    const auto& j = parts[i];
    ParticipantSpec p;
    p.node = get<std::string>(j, "node", where);
    if (!s.topology.has_node(p.node)) fail(where + ".node", "unknown node " + p.node);
    const auto& node = s.topology.node(p.node);
    if (node.ip == 0) fail(where + ".node", p.node + " has no ip address");
    auto id = get<std::uint32_t>(j, "id", where);
    if (!ids.insert(id).second) fail(where + ".id", "duplicate participant id");
    p.guid = Guid::from_parts(kPrefixHi | id, 1, kParticipantEntity);
    p.locator = Locator{node.ip, get_or<std::uint16_t>(j, "port", 7410, where)};
    if (!locators.insert(p.locator).second) fail(where, "two participants share locator " + p.locator.to_string());
    const auto& eps = field(j, "endpoints", where);
    for (std::size_t k = 0; k < eps.size(); ++k) {
      const std::string ew = where + ".endpoints[" + std::to_string(k) + "]";
      const auto& e = eps[k];
      EndpointDescriptor d;
      auto kind = get<std::string>(e, "kind", ew);
      if (kind == "writer") {
        d.kind = EndpointKind::kWriter;
      } else if (kind == "reader") {
        d.kind = EndpointKind::kReader;
      } else {
        fail(ew + ".kind", "expected 'writer' or 'reader'");
      }
      auto entity = get<std::uint32_t>(e, "entity", ew);
      d.guid = Guid::from_parts(kPrefixHi | id, 1,
                                (entity << 8) | (d.kind == EndpointKind::kWriter ? kWriterKind : kReaderKind));
      d.topic = get<std::string>(e, "topic", ew);
      d.locator = p.locator;
      d.qos = qos_of(field(e, "qos", ew), ew + ".qos");
      try {
        d.validate();
      } catch (const InvalidValue& ex) {
        fail(ew, ex.what());
      }
      p.endpoints.push_back(std::move(d));
    }
    s.participants.push_back(std::move(p));
  }

  const auto& disc = field(doc, "discovery", "scenario");
  s.server_node = get<std::string>(disc, "server", "discovery");
  if (!s.topology.has_node(s.server_node) || s.topology.node(s.server_node).ip == 0) {
    fail("discovery.server", "must name an end station with an ip address");
  }
  s.server_locator = Locator{s.topology.node(s.server_node).ip, get_or<std::uint16_t>(disc, "port", 11811, "discovery")};

  // Static flows.
  if (doc.contains("static_flows")) {
    const auto& sf = doc.at("static_flows");
    for (std::size_t i = 0; i < sf.size(); ++i) {
      const std::string where = "static_flows[" + std::to_string(i) + "]";
      const auto& j = sf[i];
      DdsFlow f;
      f.topic = get<std::string>(j, "name", where);
      f.route = route_of(field(j, "route", where), where + ".route", s.topology);
      f.id = FlowId{Guid::from_parts(0xffff'0000'0000'0000ULL, static_cast<std::uint32_t>(i + 1), 0x02),
                    Guid::from_parts(0xffff'0000'0000'0000ULL, static_cast<std::uint32_t>(i + 1), 0x07)};
      f.size = get<std::uint32_t>(j, "size", where);
      f.prd = micros(j, "period_us", where);
      f.latency = j.contains("latency_us") ? micros(j, "latency_us", where) : f.prd;
      f.jitter = j.contains("jitter_us") ? micros(j, "jitter_us", where) : 0;
      f.prio = get<std::uint8_t>(j, "priority", where);
      f.vid = get_or<std::uint16_t>(j, "vid", 1, where);
      const auto& src = s.topology.node(f.route.front());
      const auto& dst = s.topology.node(f.route.back());
      f.src = Locator{src.ip, 0};
      f.dst = Locator{dst.ip, 0};
      if (f.prd <= 0 || f.size < 64 || f.prio > 7) fail(where, "needs period > 0, size >= 64, priority 0..7");
      s.static_flows.push_back(std::move(f));
    }
  }

  // Interference.
  if (doc.contains("interference")) {
    const auto& inf = doc.at("interference");
    for (std::size_t i = 0; i < inf.size(); ++i) {
      const std::string where = "interference[" + std::to_string(i) + "]";
      const auto& j = inf[i];
      InterferenceSpec spec;
      spec.name = get<std::string>(j, "name", where);
      spec.size = get<std::uint32_t>(j, "size", where);
      spec.period = micros(j, "period_us", where);
      spec.path = route_of(field(j, "path", where), where + ".path", s.topology);
      spec.prio = get_or<std::uint8_t>(j, "priority", 0, where);
      if (spec.period <= 0 || spec.prio > 7) fail(where, "needs period > 0 and priority 0..7");
      s.interference.push_back(std::move(spec));
    }
  }
  if (doc.contains("interference_levels")) {
    for (const auto& [level, names] : doc.at("interference_levels").items()) {
      std::vector<std::string> list;
      for (const auto& n : names) {
        auto name_str = n.get<std::string>();
        bool known = false;
        for (const auto& spec : s.interference) known = known || spec.name == name_str;
        if (!known) fail("interference_levels." + level, "unknown interference flow " + name_str);
        list.push_back(name_str);
      }
      s.interference_levels[level] = std::move(list);
    }
  }

  // Conditions.
  const auto& conds = field(doc, "conditions", "scenario");
  if (!conds.is_array() || conds.empty()) throw ScenarioError("conditions: at least one condition is required");
  for (std::size_t i = 0; i < conds.size(); ++i) {
    const std::string where = "conditions[" + std::to_string(i) + "]";
    ConditionSpec c;
    c.name = get<std::string>(conds[i], "name", where);
    c.tas = get<bool>(conds[i], "tas", where);
    c.interference = get_or<std::string>(conds[i], "interference", "", where);
    if (!c.interference.empty() && !s.interference_levels.contains(c.interference)) {
      fail(where + ".interference", "unknown level " + c.interference);
    }
    s.conditions.push_back(std::move(c));
  }

  // Faults.
  if (doc.contains("faults")) {
    const auto& fs = doc.at("faults");
    for (std::size_t i = 0; i < fs.size(); ++i) {
      const std::string where = "faults[" + std::to_string(i) + "]";
      Fault f;
      f.time = micros(fs[i], "time_us", where);
      auto kind = get<std::string>(fs[i], "kind", where);
      if (kind == "link_down") {
        f.kind = FaultKind::kLinkDown;
      } else if (kind == "link_up") {
        f.kind = FaultKind::kLinkUp;
      } else if (kind == "frame_corrupt") {
        f.kind = FaultKind::kFrameCorrupt;
      } else {
        fail(where + ".kind", "expected link_down, link_up or frame_corrupt");
      }
      f.a = get<std::string>(fs[i], "a", where);
      f.b = get<std::string>(fs[i], "b", where);
      if (!s.topology.hop(f.a, f.b)) fail(where, "no link " + f.a + "-" + f.b);
      s.faults.push_back(std::move(f));
    }
  }

  // Knobs.
  s.fixed_size = get_or<std::uint32_t>(doc, "fixed_size", kDefaultFixedSize, "scenario");
  const auto& sim = field(doc, "simulation", "scenario");
  s.duration = micros(sim, "duration_us", "simulation");
  if (s.duration <= 0) fail("simulation.duration_us", "must be > 0");
  s.seed = get_or<std::uint64_t>(sim, "seed", 1, "simulation");
  if (sim.contains("latency_model")) s.latency_model = model_of(sim.at("latency_model"), "simulation.latency_model");
  s.search_budget = get_or<std::size_t>(doc, "search_budget", s.search_budget, "scenario");
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("cannot open scenario " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.stem().string());
}

std::string provenance(const Scenario& s) {
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(s.hash));
  return std::string("dotsn ") + kToolVersion + " scenario=" + s.name + " hash=" + hex;
}

}  // namespace dotsn
