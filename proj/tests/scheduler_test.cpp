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

#include "dotsn/pipeline.hpp"
#include "dotsn/scheduler.hpp"
#include "test_support.hpp"

namespace dotsn {
namespace {

// E1, E2 -> SW -> E3, all 1 Gb/s.
Topology vee() {
  Topology t;
  t.add_node(Node{"SW", NodeRole::kSwitch, 1, 0, 10 * kMicro});
  for (int i = 1; i <= 3; ++i) {
    t.add_node(Node{"E" + std::to_string(i), NodeRole::kEndStation, 0, 0x0a000000u + static_cast<std::uint32_t>(i), 0});
    t.add_link(Link{"SW", static_cast<std::uint8_t>(i), "E" + std::to_string(i), 1, 1'000'000'000, 0});
  }
  return t;
}

DdsFlow flow(std::uint32_t n, Route route, std::uint32_t size, Nanos period, std::uint8_t prio = 7,
             Nanos latency = 0) {
  DdsFlow f;
  f.id = FlowId{Guid::from_parts(0x0100000000000000ULL, n, 0x02), Guid::from_parts(0x0100000000000000ULL, n, 0x07)};
  f.topic = "F" + std::to_string(n);
  f.size = size;
  f.prd = period;
  f.latency = latency > 0 ? latency : period;
  f.prio = prio;
  f.vid = 2;
  f.route = std::move(route);
  return f;
}

struct VehicleRing {
  Scenario s = load_scenario(testing::scenario_path("vehicle_ring.json"));
  std::vector<DdsFlow> flows = discover(s).registry.all_flows();
};

const VehicleRing& vehicle_ring() {
  static const VehicleRing t;
  return t;
}

TEST(Hyperperiod, TablePeriods) {
  EXPECT_EQ(hyperperiod(std::vector<Nanos>{500 * kMicro, 300 * kMicro, 200 * kMicro}), 3000 * kMicro);
  EXPECT_EQ(hyperperiod(std::vector<Nanos>{500 * kMicro}), 500 * kMicro);
  EXPECT_EQ(hyperperiod(std::vector<Nanos>{500 * kMicro, 500 * kMicro}), 500 * kMicro);
}

TEST(Hyperperiod, OverflowAndBadPeriods) {
  EXPECT_THROW(hyperperiod(std::vector<Nanos>{999'999'937, 999'999'929, 999'999'893}), Overflow);
  EXPECT_THROW(hyperperiod(std::vector<Nanos>{0}), InvalidValue);
}

TEST(PlanFrer, RingGivesTheOtherDirection) {
  const auto& t = vehicle_ring();
  DdsFlow f = flow(1, {"ZCU1", "SW2", "SW1", "CCU"}, 100, 500 * kMicro);
  f.reliability = Reliability::kReliable;
  auto plan = plan_frer(f, t.s.topology);
  EXPECT_EQ(plan.primary, f.route);
  EXPECT_EQ(plan.secondary, (Route{"ZCU1", "SW2", "SW3", "SW4", "SW1", "CCU"}));
  EXPECT_EQ(plan.replication_node(), "SW2");
  EXPECT_EQ(plan.elimination_node(), "SW1");
}

TEST(PlanFrer, SharedSwitchHasNoDisjointPath) {
  auto t = vee();
  DdsFlow f = flow(1, {"E1", "SW", "E3"}, 100, 500 * kMicro);
  f.reliability = Reliability::kReliable;
  EXPECT_THROW(plan_frer(f, t), NoDisjointPath);
}

TEST(PlanFrer, BestEffortIsAPreconditionViolation) {
  const auto& t = vehicle_ring();
  DdsFlow f = flow(1, {"ZCU1", "SW2", "SW1", "CCU"}, 100, 500 * kMicro);
  EXPECT_THROW(plan_frer(f, t.s.topology), InvalidValue);
}

TEST(PlanFrer, RoutesShareNoLinks) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    auto inst = testing::random_instance(rng, 5, 3);
    for (auto f : inst.flows) {
      f.reliability = Reliability::kReliable;
      auto plan = plan_frer(f, inst.topology);
      std::set<std::size_t> primary;
      for (const auto& h : inst.topology.hops(plan.primary)) primary.insert(h.link_index);
      const auto sec = inst.topology.hops(plan.secondary);
      // the access links to the end stations are necessarily shared
      for (std::size_t k = 1; k + 1 < sec.size(); ++k) EXPECT_FALSE(primary.contains(sec[k].link_index));
    }
  }
}

TEST(Schedule, SingleFlowIdleNetworkIsBackToBack) {
  auto t = vee();
  auto f = flow(1, {"E1", "SW", "E3"}, 1000, 500 * kMicro);
  auto result = schedule({f}, {}, t);
  ASSERT_TRUE(std::holds_alternative<Schedule>(result));
  const auto& s = std::get<Schedule>(result);
  ASSERT_EQ(s.flows.size(), 1u);
  const Nanos tx = wire_time(1000, 1'000'000'000);
  EXPECT_EQ(s.flows[0].latency(t), tx + 10 * kMicro + tx);
  EXPECT_LE(s.flows[0].latency(t), f.latency);
  EXPECT_TRUE(validate_schedule(s.flows, s.gcl, t).ok());
}

TEST(Schedule, TableFlowsFeasibleWithinBounds) {
  const auto& t = vehicle_ring();
  auto plan = plan_schedule(t.s, t.flows);
  ASSERT_TRUE(std::holds_alternative<Schedule>(plan.result));
  const auto& s = std::get<Schedule>(plan.result);
  EXPECT_EQ(s.flows.size(), 8u);
  for (const auto& sf : s.flows) EXPECT_LE(sf.latency(t.s.topology), sf.flow.latency) << sf.flow.topic;
  auto report = validate_schedule(s.flows, s.gcl, t.s.topology);
  EXPECT_TRUE(report.ok()) << (report.ok() ? "" : report.violations[0].detail);
  EXPECT_EQ(s.gcl.hyperperiod, 3000 * kMicro);
}

TEST(Schedule, InfeasibleWhenTwoFramesCannotShareAPeriod) {
  auto t = vee();
  const Nanos tx = wire_time(1000, 1'000'000'000);
  // Period shorter than two transmissions on the shared SW->E3 link.
  const Nanos period = tx + tx / 2;
  auto a = flow(1, {"E1", "SW", "E3"}, 1000, period, 7, 3 * tx + 10 * kMicro);
  auto b = flow(2, {"E2", "SW", "E3"}, 1000, period, 7, 3 * tx + 10 * kMicro);
  auto result = schedule({a, b}, {}, t);
  ASSERT_TRUE(std::holds_alternative<Infeasible>(result));
  const auto& inf = std::get<Infeasible>(result);
  EXPECT_EQ(inf.conflict.size(), 2u);
  EXPECT_EQ(inf.conflict[0], flow_label(a));
  EXPECT_EQ(inf.conflict[1], flow_label(b));
}

TEST(Schedule, LatencyBelowTransmissionFloorIsInfeasible) {
  auto t = vee();
  auto a = flow(1, {"E1", "SW", "E3"}, 1000, 500 * kMicro, 7, 5 * kMicro);
  auto result = schedule({a}, {}, t);
  ASSERT_TRUE(std::holds_alternative<Infeasible>(result));
  EXPECT_EQ(std::get<Infeasible>(result).conflict, std::vector<std::string>{flow_label(a)});
}

TEST(Schedule, Deterministic) {
  std::mt19937_64 rng(9);
  auto inst = testing::random_instance(rng, 4, 8);
  auto a = schedule(inst.flows, {}, inst.topology);
  auto b = schedule(inst.flows, {}, inst.topology);
  ASSERT_TRUE(std::holds_alternative<Schedule>(a));
  EXPECT_EQ(std::get<Schedule>(a).flows, std::get<Schedule>(b).flows);
  EXPECT_EQ(std::get<Schedule>(a).gcl, std::get<Schedule>(b).gcl);
}

TEST(Schedule, RandomInstancesPassTheValidator) {
  std::mt19937_64 rng(21);
  int feasible = 0;
  for (int i = 0; i < 25; ++i) {
    auto inst = testing::random_instance(rng, 4, 6);
    auto r = schedule(inst.flows, {}, inst.topology);
    if (!std::holds_alternative<Schedule>(r)) continue;
    ++feasible;
    const auto& s = std::get<Schedule>(r);
    auto rep = validate_schedule(s.flows, s.gcl, inst.topology);
    EXPECT_TRUE(rep.ok()) << rep.violations.front().detail;
  }
  EXPECT_GT(feasible, 15);
}

TEST(Schedule, ZeroScheduledJitter) {
  const auto& t = vehicle_ring();
  auto plan = plan_schedule(t.s, t.flows);
  const auto& s = std::get<Schedule>(plan.result);
  EXPECT_EQ(validate_schedule(s.flows, s.gcl, t.s.topology).count(ViolationKind::kJitter), 0u);
}

TEST(Gcl, WindowsAreExclusiveAndBestEffortHasGuardBand) {
  auto t = vee();
  auto f = flow(1, {"E1", "SW", "E3"}, 1000, 500 * kMicro);
  const auto result = schedule({f}, {}, t);
  const auto& s = std::get<Schedule>(result);
  const Port out{"SW", 3};
  const auto& hop = s.flows[0].hops[1];
  ASSERT_EQ(hop.egress, out);
  EXPECT_TRUE(s.gcl.open_for(out, 7, hop.start, hop.duration));
  EXPECT_FALSE(s.gcl.open_for(out, 0, hop.start, 1));
  const Nanos guard = wire_time(kMaxBestEffortFrame, 1'000'000'000);
  EXPECT_FALSE(s.gcl.open_for(out, 0, hop.start - guard, 1));
  EXPECT_TRUE(s.gcl.open_for(out, 0, hop.start - guard - 1, 1));
  EXPECT_EQ(s.gcl.next_open(out, 7, hop.start + 1), hop.start + s.gcl.hyperperiod);
  EXPECT_EQ(s.gcl.next_open(Port{"E9", 1}, 7, 123), 123);
}

// ---- validator on constructed violations ---------------------------------

struct TwoFlows {
  Topology t = vee();
  Schedule s;
  TwoFlows() {
    auto a = flow(1, {"E1", "SW", "E3"}, 500, 100 * kMicro);
    auto b = flow(2, {"E2", "SW", "E3"}, 500, 100 * kMicro);
    s = std::get<Schedule>(schedule({a, b}, {}, t));
  }
};

TEST(Validator, SolverOutputIsClean) {
  TwoFlows x;
  EXPECT_TRUE(validate_schedule(x.s.flows, x.s.gcl, x.t).ok());
}

TEST(Validator, InjectedOverlapReportedOnce) {
  TwoFlows x;
  auto flows = x.s.flows;
  // Shift the second flow so its last hop lands on the first flow's.
  const Nanos delta = flows[0].hops[1].start - flows[1].hops[1].start;
  flows[1].release_time += delta;
  for (auto& h : flows[1].hops) h.start += delta;
  auto rep = validate_schedule(flows, x.s.gcl, x.t);
  EXPECT_EQ(rep.count(ViolationKind::kOverlap), 1u);
}

TEST(Validator, InjectedLatencyOverrunReportedOnce) {
  TwoFlows x;
  auto flows = x.s.flows;
  auto& last = flows[0].hops.back();
  last.start = flows[0].release_time + flows[0].flow.latency;  // past the bound, still after its predecessor
  auto gcl = build_gcl(flows, x.t);
  auto rep = validate_schedule(flows, gcl, x.t);
  EXPECT_EQ(rep.count(ViolationKind::kLatency), 1u);
}

TEST(Validator, GateClosedDuringTransmissionIsAWindowViolation) {
  TwoFlows x;
  Gcl closed = x.s.gcl;
  for (auto& [port, entries] : closed.ports) {
    for (auto& e : entries) e.gate_states = 0x01;
  }
  auto rep = validate_schedule(x.s.flows, closed, x.t);
  EXPECT_GT(rep.count(ViolationKind::kWindow), 0u);
}

}  // namespace
}  // namespace dotsn
