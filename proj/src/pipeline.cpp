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

#include "dotsn/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace dotsn {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::kDiscover: return "discover";
    case Stage::kIdentify: return "identify";
    case Stage::kSchedule: return "schedule";
    case Stage::kConfigure: return "configure";
    case Stage::kSimulate: return "simulate";
  }
  return "?";
}

Stage parse_stage(std::string_view text) {
  for (auto s : {Stage::kDiscover, Stage::kIdentify, Stage::kSchedule, Stage::kConfigure, Stage::kSimulate}) {
    if (to_string(s) == text) return s;
  }
  throw InvalidValue("unknown stage " + std::string(text));
}

namespace {

Nanos steady_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string_view state_name(ClientSession::State s) {
  switch (s) {
    case ClientSession::State::kIdle: return "idle";
    case ClientSession::State::kAnnouncing: return "announcing";
    case ClientSession::State::kRegistered: return "registered";
    case ClientSession::State::kComplete: return "complete";
    case ClientSession::State::kTimedOut: return "timed-out";
  }
  return "?";
}

}  // namespace

// ---------------------------------------------------------------------------
// Stages.
// ---------------------------------------------------------------------------

DiscoveryRun discover(const Scenario& s, bool udp) {
  DiscoveryRun run;
  std::mutex mutex;
  auto sink = [&](const EndpointAnnouncement& ann, Nanos now) {
    std::lock_guard lock(mutex);
    run.announcements.push_back({now, ann});
    Nanos t0 = steady_ns();
    auto step = dfia_step(run.registry, ann, s.routes, s.fixed_size);
    run.dfia_wall_ns += steady_ns() - t0;
    if (step.changed()) run.identified_at = now;
    run.missing_routes.insert(run.missing_routes.end(), step.missing_routes.begin(), step.missing_routes.end());
  };
  const ServerIdentity identity{Guid::from_parts(0x010f'5aff'0000'0000ULL, 1, 0x000001c1), s.server_locator,
                                10 * kSecond};

  if (!udp) {
    DiscoveryServer server(identity);
    server.set_sink(sink);
    InMemoryDiscoveryNetwork net;
    net.attach_server(&server);
    for (const auto& p : s.participants) {
      net.add_client(ClientSession(p.guid, p.locator, p.endpoints, s.server_locator));
    }
    run.clients = net.run();
  } else {
    ServerIdentity id = identity;
    UdpSocket server_socket(parse_ipv4("127.0.0.1"), 0);
    id.locator = server_socket.local();
    DiscoveryServer server(id);
    server.set_sink(sink);
    std::atomic<bool> stop{false};
    std::thread serving([&] { serve_udp(server, server_socket, stop); });
    std::vector<ClientOutcome> outcomes(s.participants.size());
    {
      std::vector<std::jthread> clients;
      for (std::size_t i = 0; i < s.participants.size(); ++i) {
        clients.emplace_back([&, i] {
          const auto& p = s.participants[i];
          UdpSocket socket(parse_ipv4("127.0.0.1"), 0);
          ClientSession session(p.guid, socket.local(), p.endpoints, server_socket.local());
          outcomes[i] = udp_client_discover(session, socket);
        });
      }
    }
    stop = true;
    serving.join();
    run.clients = std::move(outcomes);
  }
  for (const auto& c : run.clients) run.last_completion = std::max(run.last_completion, c.completed_at);
  return run;
}

Plan plan_schedule(const Scenario& s, const std::vector<DdsFlow>& flows) {
  Plan plan;
  ScheduleOptions opts;
  opts.search_budget = s.search_budget;
  for (const auto& f : flows) {
    if (f.reliability != Reliability::kReliable) continue;
    try {
      plan.frer.emplace(f.id, plan_frer(f, s.topology));
    } catch (const NoDisjointPath&) {
      // scheduled without replication; the schedule carries a warning
    }
  }
  opts.frer = plan.frer;
  Nanos t0 = steady_ns();
  plan.result = schedule(flows, s.static_flows, s.topology, opts);
  plan.schedule_ns = steady_ns() - t0;
  return plan;
}

std::string sim_name(const DdsFlow& f, const std::vector<DdsFlow>& all) {
  auto same = std::count_if(all.begin(), all.end(), [&](const DdsFlow& o) { return o.topic == f.topic; });
  if (same <= 1) return f.topic;
  auto r = f.id.reader.to_string();
  return f.topic + "@" + r.substr(r.size() - 11);
}

std::vector<SimFlow> sim_flows(const Schedule& schedule, const std::vector<DdsFlow>& dds_flows) {
  std::vector<DdsFlow> all;
  for (const auto& sf : schedule.flows) all.push_back(sf.flow);
  std::vector<SimFlow> out;
  for (const auto& sf : schedule.flows) {
    SimFlow f;
    f.flow = sf.flow;
    f.name = sim_name(sf.flow, all);
    f.dds = std::any_of(dds_flows.begin(), dds_flows.end(), [&](const DdsFlow& d) { return d.id == sf.flow.id; });
    f.release = sf.release_time;
    out.push_back(std::move(f));
  }
  return out;
}

SimConfig condition_config(const Scenario& s, const Schedule& schedule, const std::map<FlowId, FrerPlan>& frer,
                           const std::vector<SimFlow>& flows, const std::vector<InterferenceSpec>& interference,
                           bool tas, std::uint64_t seed) {
  SimConfig c;
  c.topology = &s.topology;
  c.gcl = tas ? &schedule.gcl : nullptr;
  c.flows = flows;
  c.frer = frer;
  c.default_model = s.latency_model;
  c.interference = interference;
  c.faults = s.faults;
  c.duration = s.duration;
  c.seed = seed;
  return c;
}

// ---------------------------------------------------------------------------
// Artifacts.
// ---------------------------------------------------------------------------

namespace {

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw MissingArtifact("cannot read " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

ordered_json header(const Scenario& s) { return provenance(s); }

std::string gate_hex(std::uint8_t v) {
  char buf[5];
  std::snprintf(buf, sizeof buf, "0x%02X", v);
  return buf;
}

ordered_json hops_json(const std::vector<HopSlot>& hops) {
  ordered_json a = ordered_json::array();
  for (const auto& h : hops) {
    a.push_back({{"egress", h.egress.to_string()}, {"to", h.to}, {"start_ns", h.start}, {"duration_ns", h.duration}});
  }
  return a;
}

std::string sanitize(std::string name) {
  for (auto& c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return name;
}

void write_discovery(const Scenario& s, const DiscoveryRun& d, const fs::path& out) {
  ordered_json j;
  j["header"] = header(s);
  ordered_json parts = ordered_json::array();
  for (std::size_t i = 0; i < d.clients.size(); ++i) {
    const auto& c = d.clients[i];
    parts.push_back({{"node", s.participants[i].node},
                     {"guid", c.participant.to_string()},
                     {"state", state_name(c.state)},
                     {"registered_at_ns", c.registered_at},
                     {"completed_at_ns", c.completed_at},
                     {"discovered", c.discovered.size()}});
  }
  j["participants"] = parts;
  ordered_json anns = ordered_json::array();
  for (const auto& a : d.announcements) {
    const auto& e = a.announcement.endpoint;
    anns.push_back({{"time_ns", a.time},
                    {"participant", a.announcement.participant_guid.to_string()},
                    {"endpoint", e.guid.to_string()},
                    {"kind", to_string(e.kind)},
                    {"topic", e.topic},
                    {"status", to_string(e.status)}});
  }
  j["announcements"] = anns;
  j["identified_at_ns"] = d.identified_at;
  j["last_completion_ns"] = d.last_completion;
  ordered_json missing = ordered_json::array();
  for (const auto& m : d.missing_routes) missing.push_back(m.detail);
  j["missing_routes"] = missing;
  write_file(out / "discovery.json", dump(j));
}

void write_schedule(const Scenario& s, const Schedule& sched, const std::map<FlowId, FrerPlan>& frer,
                    const std::vector<DdsFlow>& dds, const fs::path& out) {
  ordered_json j;
  j["header"] = header(s);
  j["hyperperiod_ns"] = sched.gcl.hyperperiod;
  std::vector<DdsFlow> all;
  for (const auto& sf : sched.flows) all.push_back(sf.flow);
  ordered_json flows = ordered_json::array();
  for (const auto& sf : sched.flows) {
    const bool is_dds = std::any_of(dds.begin(), dds.end(), [&](const DdsFlow& d) { return d.id == sf.flow.id; });
    ordered_json f;
    f["name"] = sim_name(sf.flow, all);
    f["kind"] = is_dds ? "dds" : "static";
    f["writer"] = sf.flow.id.writer.to_string();
    f["reader"] = sf.flow.id.reader.to_string();
    f["size"] = sf.flow.size;
    f["priority"] = sf.flow.prio;
    f["period_ns"] = sf.flow.prd;
    f["latency_bound_ns"] = sf.flow.latency;
    f["release_ns"] = sf.release_time;
    f["latency_ns"] = sf.latency(s.topology);
    f["route"] = sf.flow.route;
    f["hops"] = hops_json(sf.hops);
    if (sf.replica) f["replica"] = {{"route", sf.replica->route}, {"hops", hops_json(sf.replica->hops)}};
    flows.push_back(f);
  }
  j["flows"] = flows;
  ordered_json plans = ordered_json::array();
  for (const auto& [id, p] : frer) {
    plans.push_back({{"writer", id.writer.to_string()},
                     {"reader", id.reader.to_string()},
                     {"primary", p.primary},
                     {"secondary", p.secondary},
                     {"replication", p.replication.to_string()},
                     {"elimination", p.elimination.to_string()},
                     {"recovery_window", p.recovery_window}});
  }
  j["frer"] = plans;
  ordered_json gcl = ordered_json::object();
  for (const auto& [port, entries] : sched.gcl.ports) {
    ordered_json list = ordered_json::array();
    for (const auto& e : entries) {
      list.push_back({{"gate_states", gate_hex(e.gate_states)}, {"start_ns", e.start}, {"duration_ns", e.duration}});
    }
    gcl[port.to_string()] = list;
  }
  j["gcl"] = gcl;
  j["warnings"] = sched.warnings;
  write_file(out / "schedule.json", dump(j));
}

std::string validation_text(const Scenario& s, const ValidationReport& r) {
  std::ostringstream o;
  o << "# " << provenance(s) << "\n";
  o << "violations: " << r.violations.size() << "\n";
  for (const auto& v : r.violations) o << to_string(v.kind) << ": " << v.detail << "\n";
  return o.str();
}

std::string frames_dump(const std::vector<TsnConfigFrame>& frames, const Scenario& s) {
  std::ostringstream o;
  o << "# " << provenance(s) << "\n";
  for (const auto& f : frames) {
    auto bytes = encode_frame(f);
    o << to_string(f.tsn_type) << " dev=" << int(f.device_id) << " seq=" << int(f.sequence)
      << (f.last ? " last" : "") << " len=" << bytes.size() << " ";
    for (auto b : bytes) {
      char buf[3];
      std::snprintf(buf, sizeof buf, "%02x", b);
      o << buf;
    }
    o << "\n";
  }
  return o.str();
}

}  // namespace

int run_pipeline(const Scenario& s, const RunOptions& options, std::ostream& log) {
  const fs::path out = options.out;
  fs::create_directories(out);
  const auto reached = [&](Stage st) { return static_cast<int>(options.stage) >= static_cast<int>(st); };

  auto d = discover(s, options.udp);
  write_discovery(s, d, out);
  std::size_t complete = 0;
  for (const auto& c : d.clients) complete += c.state == ClientSession::State::kComplete;
  log << "discover: " << complete << "/" << d.clients.size() << " sessions complete, " << d.announcements.size()
      << " announcements\n";
  if (complete != d.clients.size()) {
    log << "discover: some sessions did not complete\n";
    return exit_code::kStageError;
  }
  if (!reached(Stage::kIdentify)) return exit_code::kOk;

  auto flows = d.registry.all_flows();
  write_file(out / "flowinfo.xml", emit_flowinfo(flows, provenance(s)));
  log << "identify: " << flows.size() << " flows\n";
  for (const auto& m : d.missing_routes) log << "identify: warning: " << m.detail << "\n";
  if (!reached(Stage::kSchedule)) return exit_code::kOk;

  auto plan = plan_schedule(s, flows);
  if (auto* inf = std::get_if<Infeasible>(&plan.result)) {
    ordered_json j;
    j["header"] = header(s);
    j["conflict"] = inf->conflict;
    j["constraints"] = inf->constraints;
    write_file(out / "infeasible.json", dump(j));
    log << "schedule: infeasible; conflicting flows:";
    for (const auto& c : inf->conflict) log << " [" << c << "]";
    log << "\n";
    return exit_code::kInfeasible;
  }
  const auto& sched = std::get<Schedule>(plan.result);
  write_schedule(s, sched, plan.frer, flows, out);
  auto report_v = validate_schedule(sched.flows, sched.gcl, s.topology);
  write_file(out / "validation.txt", validation_text(s, report_v));
  log << "schedule: " << sched.flows.size() << " flows, hyperperiod " << sched.gcl.hyperperiod << " ns, "
      << report_v.violations.size() << " violations\n";
  for (const auto& w : sched.warnings) log << "schedule: warning: " << w << "\n";
  if (!report_v.ok()) return exit_code::kValidation;
  if (!reached(Stage::kConfigure)) return exit_code::kOk;

  // Configuration plane.
  Agent agent;
  std::vector<std::unique_ptr<SwitchDevice>> switches;
  for (const auto& [name, n] : s.topology.nodes()) {
    if (n.role != NodeRole::kSwitch) continue;
    switches.push_back(std::make_unique<SwitchDevice>(n.device_id));
    agent.attach(switches.back().get());
  }
  std::vector<std::unique_ptr<DdsEndpointNode>> endpoints;
  std::vector<DdsEndpointNode*> endpoint_ptrs;
  {
    std::map<Guid, DdsEndpointNode*> by_writer;
    for (const auto& f : flows) {
      auto& node = by_writer[f.id.writer];
      if (!node) {
        endpoints.push_back(std::make_unique<DdsEndpointNode>(f.route.front() + "/" + f.topic));
        node = endpoints.back().get();
        endpoint_ptrs.push_back(node);
      }
      node->add_flow(f);
    }
  }
  PipelineOptions popts;
  popts.schedule.search_budget = s.search_budget;
  ConfigPipeline pipeline(s.topology, s.static_flows, agent, endpoint_ptrs, popts);
  DfiaStep dirty;
  dirty.added = flows;
  pipeline.on_flow_change(dirty, 0, d.dfia_wall_ns);
  PipelineOutcome outcome;
  try {
    outcome = pipeline.run(flows);
  } catch (const NotifyTimeout& e) {
    log << "configure: " << e.what() << "\n";
    return exit_code::kStageError;
  }

  for (const auto& c : outcome.configs) {
    write_file(out / "config" / (c.name + ".xml"), emit_switch_config(c, provenance(s)));
    write_file(out / "frames" / (c.name + ".txt"), frames_dump(agent_translate(c), s));
  }
  bool states_match = true;
  for (const auto& c : outcome.configs) {
    for (const auto& sw : switches) {
      if (sw->device_id() == c.device_id && !(sw->live() == expected_state(c))) states_match = false;
    }
  }
  ordered_json st;
  st["header"] = header(s);
  ordered_json statuses = ordered_json::array();
  for (const auto& x : outcome.statuses) {
    statuses.push_back({{"device_id", x.device_id},
                        {"tsn_type", to_string(x.tsn_type)},
                        {"result", to_string(x.result)},
                        {"detail", x.detail}});
  }
  st["statuses"] = statuses;
  ordered_json deliveries = ordered_json::array();
  for (const auto& x : agent.deliveries()) {
    deliveries.push_back({{"switch", x.switch_name}, {"device_id", x.device_id}, {"frames", x.frames}});
  }
  st["deliveries"] = deliveries;
  ordered_json notices = ordered_json::array();
  for (const auto& n : outcome.notices) {
    notices.push_back({{"writer", n.flow.writer.to_string()},
                       {"reader", n.flow.reader.to_string()},
                       {"release_ns", n.release_time},
                       {"effective_from_ns", n.effective_from}});
  }
  st["notices"] = notices;
  ordered_json acks = ordered_json::array();
  for (const auto& a : outcome.notify.acks) {
    acks.push_back({{"endpoint", a.endpoint}, {"result", to_string(a.result)}, {"adopted", a.adopted}});
  }
  st["acks"] = acks;
  st["switch_state_matches_documents"] = states_match;
  st["runtime_ready"] = pipeline.state() == PipelineState::kRunTime;
  write_file(out / "config_status.json", dump(st));

  ordered_json timing;
  timing["header"] = header(s);
  timing["dfia_ns"] = outcome.timing.dfia_ns;
  timing["delta_t1_schedule_ns"] = outcome.timing.schedule_ns;
  timing["delta_t2_translate_send_ns"] = outcome.timing.translate_ns;
  timing["delta_t3_apply_status_ns"] = outcome.timing.apply_ns;
  timing["total_ns"] = outcome.timing.total();
  write_file(out / "timing.json", dump(timing));

  log << "configure: " << outcome.configs.size() << " switch documents, " << outcome.statuses.size()
      << " statuses, " << outcome.notify.acks.size() << " endpoint acks, state " << to_string(pipeline.state())
      << "\n";
  if (pipeline.state() != PipelineState::kRunTime) return exit_code::kStageError;
  if (!states_match) {
    log << "configure: switch state differs from the documents\n";
    return exit_code::kValidation;
  }
  if (!reached(Stage::kSimulate)) return exit_code::kOk;

  // Simulation.
  const auto publishers = sim_flows(sched, flows);
  const std::uint64_t seed = options.seed.value_or(s.seed);
  std::vector<StatsRow> rows;
  ordered_json conds = ordered_json::array();
  for (const auto& c : s.conditions) {
    auto cfg = condition_config(s, sched, plan.frer, publishers, s.interference_for(c.interference), c.tas, seed);
    auto trace = run(cfg);
    if (options.traces) {
      std::ostringstream t;
      t << ordered_json{{"header", provenance(s)}, {"condition", c.name}}.dump() << "\n";
      write_trace_ndjson(trace, t);
      write_file(out / "traces" / (sanitize(c.name) + ".ndjson"), t.str());
    }
    for (const auto& p : publishers) rows.push_back({c.name, measure(trace, p.name)});
    conds.push_back({{"name", c.name}, {"tas", c.tas}, {"interference", c.interference}});
    log << "simulate: " << c.name << " done, " << trace.events.size() << " events\n";
  }
  std::ostringstream csv;
  csv << "# " << provenance(s) << "\n";
  write_stats_csv(rows, csv);
  write_file(out / "stats.csv", csv.str());
  ordered_json cj;
  cj["header"] = header(s);
  cj["seed"] = seed;
  cj["duration_ns"] = s.duration;
  cj["conditions"] = conds;
  write_file(out / "conditions.json", dump(cj));
  return exit_code::kOk;
}

// ---------------------------------------------------------------------------
// Report.
// ---------------------------------------------------------------------------

namespace {

struct CsvRow {
  std::string condition;
  std::string flow;
  double mean = 0;
  long long max = 0;
  long long jitter = 0;
  long long delivered = 0;
  long long duplicates = 0;
  long long loss = 0;
};

std::vector<CsvRow> read_stats(const fs::path& p) {
  std::vector<CsvRow> rows;
  std::istringstream in(read_file(p));
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() < 8) throw MissingArtifact("malformed stats.csv line: " + line);
    CsvRow r;
    r.condition = cells[0];
    r.flow = cells[1];
    r.mean = std::stod(cells[2]);
    r.max = std::stoll(cells[3]);
    r.jitter = std::stoll(cells[4]);
    r.delivered = std::stoll(cells[5]);
    r.duplicates = std::stoll(cells[6]);
    r.loss = std::stoll(cells[7]);
    rows.push_back(r);
  }
  return rows;
}

std::string us(double ns) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", ns / 1000.0);
  return buf;
}

}  // namespace

int report(const fs::path& dir, std::ostream& out) {
  if (!fs::is_directory(dir)) throw MissingArtifact("no artifact directory " + dir.string());
  const std::vector<std::string> known{"discovery.json", "flowinfo.xml", "schedule.json", "infeasible.json",
                                       "validation.txt", "config_status.json", "timing.json", "stats.csv"};
  bool any = false;
  for (const auto& k : known) any = any || fs::exists(dir / k);
  if (!any) throw MissingArtifact("no artifacts in " + dir.string());

  if (fs::exists(dir / "discovery.json")) {
    auto j = ordered_json::parse(read_file(dir / "discovery.json"));
    out << "== discovery\n";
    out << "  " << j["header"].get<std::string>() << "\n";
    out << "  participants: " << j["participants"].size() << ", announcements: " << j["announcements"].size()
        << "\n";
    out << "  identification finished at " << j["identified_at_ns"].get<Nanos>() << " ns, last session completed at "
        << j["last_completion_ns"].get<Nanos>() << " ns\n";
  }
  if (fs::exists(dir / "flowinfo.xml")) {
    auto text = read_file(dir / "flowinfo.xml");
    std::size_t n = 0;
    for (std::size_t pos = 0; (pos = text.find("<Topic Name>", pos)) != std::string::npos; ++pos) ++n;
    out << "== identification\n  flows: " << n << "\n";
  }
  if (fs::exists(dir / "infeasible.json")) {
    auto j = ordered_json::parse(read_file(dir / "infeasible.json"));
    out << "== schedule: INFEASIBLE\n";
    for (const auto& c : j["conflict"]) out << "  conflict: " << c.get<std::string>() << "\n";
    for (const auto& c : j["constraints"]) out << "  " << c.get<std::string>() << "\n";
  }
  if (fs::exists(dir / "schedule.json")) {
    auto j = ordered_json::parse(read_file(dir / "schedule.json"));
    out << "== schedule\n  hyperperiod: " << j["hyperperiod_ns"].get<Nanos>() << " ns\n";
    out << "  flow                 prio  period_us  release_us  latency_us  bound_us  frer\n";
    for (const auto& f : j["flows"]) {
      char line[160];
      std::snprintf(line, sizeof line, "  %-20s %4d %10s %11s %11s %9s  %s\n", f["name"].get<std::string>().c_str(),
                    f["priority"].get<int>(), us(f["period_ns"].get<double>()).c_str(),
                    us(f["release_ns"].get<double>()).c_str(), us(f["latency_ns"].get<double>()).c_str(),
                    us(f["latency_bound_ns"].get<double>()).c_str(), f.contains("replica") ? "yes" : "no");
      out << line;
    }
  }
  if (fs::exists(dir / "validation.txt")) {
    std::istringstream in(read_file(dir / "validation.txt"));
    std::string line;
    out << "== validator\n";
    while (std::getline(in, line)) {
      if (!line.empty() && line[0] != '#') out << "  " << line << "\n";
    }
  }
  if (fs::exists(dir / "config_status.json")) {
    auto j = ordered_json::parse(read_file(dir / "config_status.json"));
    std::size_t ok = 0;
    for (const auto& s : j["statuses"]) ok += s["result"] == "Ok";
    out << "== configuration\n  switch documents: " << j["deliveries"].size() << ", statuses Ok: " << ok << "/"
        << j["statuses"].size() << ", endpoint acks: " << j["acks"].size()
        << ", run-time: " << (j["runtime_ready"].get<bool>() ? "yes" : "no") << "\n";
  }
  if (fs::exists(dir / "timing.json")) {
    auto j = ordered_json::parse(read_file(dir / "timing.json"));
    out << "== timing (wall clock)\n";
    out << "  dfia:      " << us(j["dfia_ns"].get<double>()) << " us\n";
    out << "  delta t1:  " << us(j["delta_t1_schedule_ns"].get<double>()) << " us (scheduling)\n";
    out << "  delta t2:  " << us(j["delta_t2_translate_send_ns"].get<double>()) << " us (agent parse + send)\n";
    out << "  delta t3:  " << us(j["delta_t3_apply_status_ns"].get<double>()) << " us (switch apply + status)\n";
    out << "  total:     " << us(j["total_ns"].get<double>()) << " us\n";
  }

  if (!fs::exists(dir / "stats.csv")) {
    out << "== simulation\n  not run\n";
    return exit_code::kOk;
  }
  auto rows = read_stats(dir / "stats.csv");
  std::map<std::string, bool> tas_of;
  std::vector<std::string> order;
  if (fs::exists(dir / "conditions.json")) {
    auto j = ordered_json::parse(read_file(dir / "conditions.json"));
    for (const auto& c : j["conditions"]) {
      tas_of[c["name"].get<std::string>()] = c["tas"].get<bool>();
      order.push_back(c["name"].get<std::string>());
    }
  }
  out << "== simulation (latency in us)\n";
  out << "  condition            flow                     mean        max     jitter  delivered  dup  loss\n";
  for (const auto& r : rows) {
    char line[200];
    std::snprintf(line, sizeof line, "  %-20s %-20s %10s %10s %10s %10lld %4lld %5lld\n", r.condition.c_str(),
                  r.flow.c_str(), us(r.mean).c_str(), us(static_cast<double>(r.max)).c_str(),
                  us(static_cast<double>(r.jitter)).c_str(), r.delivered, r.duplicates, r.loss);
    out << line;
  }

  // Per flow: are the TAS conditions identical across interference levels?
  std::map<std::string, std::vector<const CsvRow*>> tas_rows;
  for (const auto& r : rows) {
    if (tas_of.contains(r.condition) && tas_of[r.condition]) tas_rows[r.flow].push_back(&r);
  }
  out << "== TAS invariance across interference levels\n";
  for (const auto& [flow, list] : tas_rows) {
    bool same = std::all_of(list.begin(), list.end(), [&](const CsvRow* r) {
      return r->mean == list.front()->mean && r->max == list.front()->max && r->jitter == list.front()->jitter;
    });
    out << "  " << flow << ": " << (same ? "identical" : "DIFFERENT") << " over " << list.size() << " TAS conditions\n";
  }
  out << "== FRER delivery accounting\n";
  for (const auto& r : rows) {
    if (r.duplicates > 0) {
      out << "  " << r.condition << " " << r.flow << ": delivered " << r.delivered << ", duplicates eliminated "
          << r.duplicates << ", lost " << r.loss << "\n";
    }
  }

  std::ostringstream plot;
  plot << "condition,flow,mean_us,max_us,jitter_us\n";
  for (const auto& r : rows) {
    plot << r.condition << "," << r.flow << "," << us(r.mean) << "," << us(static_cast<double>(r.max)) << ","
         << us(static_cast<double>(r.jitter)) << "\n";
  }
  write_file(dir / "plot.csv", plot.str());
  out << "plot data: " << (dir / "plot.csv").string() << "\n";
  return exit_code::kOk;
}

int validate_scenario(const Scenario& s, std::ostream& out) {
  auto d = discover(s);
  auto flows = d.registry.all_flows();
  auto plan = plan_schedule(s, flows);
  if (auto* inf = std::get_if<Infeasible>(&plan.result)) {
    out << "infeasible:";
    for (const auto& c : inf->conflict) out << " [" << c << "]";
    out << "\n";
    for (const auto& c : inf->constraints) out << "  " << c << "\n";
    return exit_code::kInfeasible;
  }
  const auto& sched = std::get<Schedule>(plan.result);
  auto r = validate_schedule(sched.flows, sched.gcl, s.topology);
  out << flows.size() << " DDS flows, " << s.static_flows.size() << " static flows, " << r.violations.size()
      << " violations\n";
  for (const auto& v : r.violations) out << "  " << to_string(v.kind) << ": " << v.detail << "\n";
  return r.ok() ? exit_code::kOk : exit_code::kValidation;
}

}  // namespace dotsn
