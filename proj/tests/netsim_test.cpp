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

#include <gtest/gtest.h>

#include <sstream>

#include "dotsn/netsim.hpp"
#include "dotsn/pipeline.hpp"
#include "test_support.hpp"

namespace dotsn {
namespace {

struct RingSim {
  Scenario s = load_scenario(testing::scenario_path("vehicle_ring.json"));
  std::vector<DdsFlow> flows;
  Plan plan;
  std::vector<SimFlow> publishers;
  RingSim() {
    flows = discover(s).registry.all_flows();
    plan = plan_schedule(s, flows);
    publishers = sim_flows(sched(), flows);
  }
  [[nodiscard]] const Schedule& sched() const { return std::get<Schedule>(plan.result); }
  [[nodiscard]] SimConfig config(bool tas, const std::string& level, std::uint64_t seed = 1) const {
    return condition_config(s, sched(), plan.frer, publishers, s.interference_for(level), tas, seed);
  }
};

const RingSim& vehicle_ring() {
  static const RingSim t;
  return t;
}

// E1 -> SW -> E2, 1 Gb/s.
Topology line() {
  Topology t;
  t.add_node(Node{"SW", NodeRole::kSwitch, 1, 0, 10 * kMicro});
  t.add_node(Node{"E1", NodeRole::kEndStation, 0, 0x0a000001, 0});
  t.add_node(Node{"E2", NodeRole::kEndStation, 0, 0x0a000002, 0});
  t.add_link(Link{"SW", 1, "E1", 1, 1'000'000'000, 100});
  t.add_link(Link{"SW", 2, "E2", 1, 1'000'000'000, 100});
  return t;
}

SimFlow line_flow() {
  SimFlow f;
  f.flow.id = FlowId{Guid::from_parts(1, 1, 2), Guid::from_parts(1, 2, 7)};
  f.flow.topic = "T";
  f.flow.size = 500;
  f.flow.prd = 100 * kMicro;
  f.flow.latency = 100 * kMicro;
  f.flow.prio = 7;
  f.flow.route = {"E1", "SW", "E2"};
  f.name = "T";
  f.release = 0;
  return f;
}

TEST(Latency, EquationsHoldForDefaults) {
  EndpointLatencyModel m;
  EXPECT_EQ(m.t_write(), 26'231);
  EXPECT_EQ(m.t_read(), 34'469);
  EXPECT_EQ(m.t_total(), m.t_disc + m.t_write() + m.t_read());
  m.t_ser = -1;
  EXPECT_THROW(m.validate(), InvalidValue);
}

TEST(Run, SingleFlowMatchesAnalyticSum) {
  auto topo = line();
  SimConfig c;
  c.topology = &topo;
  c.flows = {line_flow()};
  c.duration = 2 * kMilli;
  auto trace = run(c);
  auto st = measure(trace, "T");
  const Nanos tx = wire_time(500, 1'000'000'000);
  const Nanos expected = c.default_model.t_write() + (tx + 100) + 10 * kMicro + (tx + 100) + c.default_model.t_read();
  ASSERT_GT(st.delivered, 10u);
  for (auto l : st.latencies) EXPECT_EQ(l, expected);
  EXPECT_EQ(st.jitter, 0);
}

TEST(Run, DeterministicTraces) {
  const auto& t = vehicle_ring();
  auto a = run(t.config(false, "800M", 3));
  auto b = run(t.config(false, "800M", 3));
  std::ostringstream sa, sb;
  write_trace_ndjson(a, sa);
  write_trace_ndjson(b, sb);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Run, UnknownTopologyElementsRejected) {
  auto topo = line();
  SimConfig c;
  c.topology = &topo;
  auto f = line_flow();
  f.flow.route = {"E1", "SWX", "E2"};
  c.flows = {f};
  c.duration = kMilli;
  EXPECT_THROW(run(c), ConfigMismatch);
  c.flows = {line_flow()};
  c.faults = {Fault{0, FaultKind::kLinkDown, "E1", "E2"}};
  EXPECT_THROW(run(c), ConfigMismatch);
}

TEST(Measure, ConstantSeries) {
  SimTrace tr;
  tr.flows = {"F"};
  tr.counters.resize(1);
  for (std::uint64_t k = 0; k < 3; ++k) {
    tr.events.push_back(TraceEvent{static_cast<Nanos>(k) * kMilli, EventKind::kPublishStart, 0, k});
    tr.events.push_back(TraceEvent{static_cast<Nanos>(k) * kMilli + 100 * kMicro, EventKind::kDelivered, 0, k});
  }
  auto st = measure(tr, "F");
  EXPECT_DOUBLE_EQ(st.mean, 100.0 * kMicro);
  EXPECT_EQ(st.jitter, 0);
  EXPECT_EQ(st.delivered, 3u);
  EXPECT_THROW(measure(tr, "G"), UnknownFlow);
}

TEST(Measure, NoDeliveriesMeansEverythingLost) {
  auto topo = line();
  SimConfig c;
  c.topology = &topo;
  c.flows = {line_flow()};
  c.duration = kMilli;
  c.faults = {Fault{0, FaultKind::kLinkDown, "SW", "E2"}};
  auto st = measure(run(c), "T");
  EXPECT_EQ(st.delivered, 0u);
  EXPECT_GT(st.published, 0u);
  EXPECT_EQ(st.loss, st.published);
}

TEST(Measure, FaultFreeFrerEliminatesOneCopyPerPublication) {
  const auto& t = vehicle_ring();
  auto tr = run(t.config(true, ""));
  for (const char* name : {"Flow1", "Flow4"}) {
    auto st = measure(tr, name);
    EXPECT_EQ(st.duplicates, st.published) << name;
    EXPECT_EQ(st.delivered, st.published) << name;
  }
}

TEST(Interference, OfferedLoadArithmetic) {
  EXPECT_DOUBLE_EQ(offered_load_bps(1000, 40 * kMicro), 200e6);
  const auto& t = vehicle_ring();
  double total = 0;
  for (const auto& spec : t.s.interference_for("800M")) total += offered_load_bps(spec.size, spec.period);
  EXPECT_DOUBLE_EQ(total, 800e6);
  total = 0;
  for (const auto& spec : t.s.interference_for("300M")) total += offered_load_bps(spec.size, spec.period);
  EXPECT_DOUBLE_EQ(total, 300e6);
}

TEST(Interference, LinkCountersMatchOfferedLoad) {
  const auto& t = vehicle_ring();
  auto cfg = t.config(false, "800M");
  cfg.flows.clear();
  auto tr = run(cfg);
  // SW2 -> SW1 carries all four 800M flows
  auto hop = t.s.topology.hop("SW2", "SW1");
  ASSERT_TRUE(hop.has_value());
  double expected_bits = 0;
  for (const auto& spec : cfg.interference) {
    expected_bits += static_cast<double>(spec.size + kWireOverhead) * 8.0 * static_cast<double>(cfg.duration / spec.period);
  }
  const double seen_bits = static_cast<double>(tr.link_bytes[hop->egress]) * 8.0;
  EXPECT_NEAR(seen_bits / expected_bits, 1.0, 0.02);
}

TEST(Interference, EmptySpecInjectsNothing) {
  const auto& t = vehicle_ring();
  auto cfg = t.config(true, "");
  cfg.flows.clear();
  auto tr = run(cfg);
  EXPECT_TRUE(tr.events.empty());
}

TEST(Tas, FlowLatenciesInvariantAcrossInterference) {
  const auto& t = vehicle_ring();
  auto base = run(t.config(true, ""));
  for (const char* level : {"300M", "800M"}) {
    auto tr = run(t.config(true, level));
    for (const auto& p : t.publishers) {
      EXPECT_EQ(measure(tr, p.name).latencies, measure(base, p.name).latencies) << level << " " << p.name;
    }
  }
}

TEST(Tas, EthernetInterferenceDegradesFlow1) {
  const auto& t = vehicle_ring();
  auto quiet = measure(run(t.config(false, "")), "Flow1");
  auto loud = measure(run(t.config(false, "800M")), "Flow1");
  EXPECT_GT(loud.max, quiet.max);
  EXPECT_GT(loud.jitter, quiet.jitter);
}

TEST(Tas, GateEnforcementAndScheduleFidelity) {
  const auto& t = vehicle_ring();
  auto cfg = t.config(true, "800M");
  auto tr = run(cfg);
  std::map<std::string, const ScheduledFlow*> by_name;
  for (std::size_t i = 0; i < t.sched().flows.size(); ++i) by_name[t.publishers[i].name] = &t.sched().flows[i];
  std::size_t checked = 0;
  for (const auto& e : tr.events) {
    if (e.kind != EventKind::kGateOpenTx) continue;
    auto it = by_name.find(tr.flows[e.flow]);
    if (it == by_name.end()) continue;  // interference
    const auto& sf = *it->second;
    const Port port{e.node, static_cast<std::uint8_t>(e.port)};
    const auto& hops = e.member == Member::kPrimary ? sf.hops : sf.replica->hops;
    auto h = std::find_if(hops.begin(), hops.end(), [&](const HopSlot& s) { return s.egress == port; });
    ASSERT_NE(h, hops.end());
    EXPECT_TRUE(cfg.gcl->open_for(port, sf.flow.prio, e.time, h->duration)) << e.node << " " << e.time;
    EXPECT_EQ(((e.time - h->start) % sf.flow.prd + sf.flow.prd) % sf.flow.prd, 0) << tr.flows[e.flow];
    ++checked;
  }
  EXPECT_GT(checked, 1000u);
}

TEST(Frer, LinkDownOnPrimaryStillDeliversEverySequenceOnce) {
  const auto& t = vehicle_ring();
  auto cfg = t.config(true, "300M");
  cfg.faults = {Fault{7 * kMilli + 123, FaultKind::kLinkDown, "SW2", "SW1"}};
  auto tr = run(cfg);
  auto st = measure(tr, "Flow1");
  EXPECT_EQ(st.delivered, st.published);
  EXPECT_EQ(st.loss, 0u);
  std::map<std::uint64_t, int> deliveries;
  const auto idx = *tr.flow_index("Flow1");
  for (const auto& e : tr.events) {
    if (e.flow == idx && e.kind == EventKind::kDelivered) ++deliveries[e.seq];
  }
  for (const auto& [seq, n] : deliveries) EXPECT_EQ(n, 1) << seq;
}

TEST(Frer, CorruptedFrameDroppedAndRecoveredByReplica) {
  const auto& t = vehicle_ring();
  auto cfg = t.config(true, "");
  cfg.faults = {Fault{3 * kMilli, FaultKind::kFrameCorrupt, "SW2", "SW1"}};
  auto tr = run(cfg);
  bool fcs = false;
  for (const auto& e : tr.events) fcs = fcs || (e.kind == EventKind::kDropped && e.detail == "FCS error");
  EXPECT_TRUE(fcs);
  auto st = measure(tr, "Flow1");
  EXPECT_EQ(st.delivered, st.published);
}

TEST(Conservation, PublishedEqualsOutcomes) {
  const auto& t = vehicle_ring();
  auto cfg = t.config(false, "800M");
  cfg.faults = {Fault{5 * kMilli, FaultKind::kLinkDown, "SW3", "SW2"}};
  auto tr = run(cfg);
  for (const auto& c : tr.counters) {
    EXPECT_EQ(c.published + c.replicated, c.delivered + c.dropped + c.eliminated + c.in_flight());
    EXPECT_EQ(c.in_flight(), 0u);
  }
}

TEST(Equations, EveryRecordMatchesItsComponents) {
  const auto& t = vehicle_ring();
  auto cfg = t.config(false, "800M");
  cfg.default_model.jitter_bound = 3 * kMicro;
  cfg.default_model.t_wait = {1000, 2000};
  auto tr = run(cfg);
  EXPECT_EQ(count_latency_equation_mismatches(tr), 0u);
  std::size_t with_breakdown = 0;
  for (const auto& e : tr.events) with_breakdown += (e.write || e.read) ? 1 : 0;
  EXPECT_GT(with_breakdown, 100u);
}

TEST(Export, StatsCsvShape) {
  std::ostringstream out;
  FlowStats st;
  st.flow = "Flow1";
  st.mean = 1234.56;
  st.max = 2000;
  st.jitter = 10;
  write_stats_csv({{"control", st}}, out);
  EXPECT_EQ(out.str(), "condition,flow,mean,max,jitter,delivered,duplicates,loss\ncontrol,Flow1,1234.6,2000,10,0,0,0\n");
}

}  // namespace
}  // namespace dotsn
