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

/**
 * @file scheduler.hpp
 * @brief Time-aware-shaper scheduling: per-hop transmission offsets for every
 *        scheduled flow, the resulting gate control lists, FRER plans, and an
 *        independent schedule validator.
 *
 * Constraint model (integer ns):
 *  - hop precedence: a hop starts no earlier than the previous hop's end plus
 *    propagation plus the receiving switch's processing delay;
 *  - port exclusivity: no two frame transmissions on one egress port overlap,
 *    over every pair of period instances within the hyperperiod;
 *  - FIFO isolation: frames of one queue that share the queue must leave in
 *    arrival order;
 *  - latency: listener arrival minus hop-0 start is within the flow's bound.
 * Jitter is zero by construction, since all instances reuse the same offsets.
 */

#ifndef DOTSN_SCHEDULER_HPP_
#define DOTSN_SCHEDULER_HPP_

#include <atomic>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "dotsn/dfia.hpp"
#include "dotsn/topology.hpp"

namespace dotsn {

class Overflow : public Error {
 public:
  using Error::Error;
};

class NoDisjointPath : public Error {
 public:
  using Error::Error;
};

/// Least common multiple of all periods. Throws Overflow past INT64_MAX and
/// InvalidValue on a non-positive period.
Nanos hyperperiod(const std::vector<DdsFlow>& flows);
Nanos hyperperiod(const std::vector<Nanos>& periods);

struct FrerPlan {
  FlowId flow;
  Route primary;
  Route secondary;
  Port replication;  // first switch, ingress port from the talker
  Port elimination;  // last switch, egress port towards the listener
  std::uint16_t recovery_window = 32;

  [[nodiscard]] const std::string& replication_node() const { return replication.node; }
  [[nodiscard]] const std::string& elimination_node() const { return elimination.node; }
};

/// Secondary route is link-disjoint from the primary between the first and
/// last switch. Throws NoDisjointPath, or InvalidValue for a BestEffort flow.
FrerPlan plan_frer(const DdsFlow& flow, const Topology& topology, std::uint16_t recovery_window = 32);

struct HopSlot {
  Port egress;
  std::string to;
  Nanos start = 0;     // offset from the start of the flow's period instance
  Nanos duration = 0;

  bool operator==(const HopSlot&) const = default;
};

struct ReplicaSchedule {
  Route route;                 // secondary route, talker to listener
  std::vector<HopSlot> hops;   // replication switch to elimination switch only

  bool operator==(const ReplicaSchedule&) const = default;
};

struct ScheduledFlow {
  DdsFlow flow;
  Nanos release_time = 0;  // hop-0 start within the period
  std::vector<HopSlot> hops;
  std::optional<ReplicaSchedule> replica;

  /// Listener arrival minus release, identical for every instance.
  [[nodiscard]] Nanos latency(const Topology& topology) const;

  bool operator==(const ScheduledFlow&) const = default;
};

struct GclEntry {
  std::uint8_t gate_states = 0;  // bit q open => queue q may transmit
  Nanos start = 0;
  Nanos duration = 0;

  bool operator==(const GclEntry&) const = default;
};

struct Gcl {
  Nanos hyperperiod = 0;
  std::uint8_t scheduled_queues = 0;
  std::map<Port, std::vector<GclEntry>> ports;

  /// True when `queue` may transmit during the whole of [t, t + len). Ports
  /// without entries are always open.
  [[nodiscard]] bool open_for(const Port& port, std::uint8_t queue, Nanos t, Nanos len) const;
  /// Start of the next window open to `queue` strictly after t; t itself for
  /// ungated ports.
  [[nodiscard]] Nanos next_open(const Port& port, std::uint8_t queue, Nanos t) const;

  bool operator==(const Gcl&) const = default;
};

struct Schedule {
  std::vector<ScheduledFlow> flows;
  Gcl gcl;
  std::vector<std::string> warnings;
};

struct Infeasible {
  /// Flow labels ("topic writer->reader") of a minimal conflicting subset.
  std::vector<std::string> conflict;
  std::vector<std::string> constraints;
};

struct ScheduleOptions {
  /// Plans for Reliable flows; keyed by flow id.
  std::map<FlowId, FrerPlan> frer;
  std::uint32_t guard_band_bytes = kMaxBestEffortFrame;
  std::size_t search_budget = 200'000;
  bool minimize_conflicts = true;
  const std::atomic<bool>* cancel = nullptr;
};

using ScheduleResult = std::variant<Schedule, Infeasible>;

std::string flow_label(const DdsFlow& f);

/// Backtracking earliest-fit search, flows ordered by (priority desc,
/// period asc, canonical order). Throws InvalidValue for routes that do not
/// exist in the topology and Error("cancelled") if cancelled.
ScheduleResult schedule(const std::vector<DdsFlow>& flows, const std::vector<DdsFlow>& static_flows,
                        const Topology& topology, const ScheduleOptions& options = {});

/// Gate control lists for a set of offsets: one exclusive window per frame
/// transmission, best-effort windows in the gaps less a guard band.
Gcl build_gcl(const std::vector<ScheduledFlow>& flows, const Topology& topology,
              std::uint32_t guard_band_bytes = kMaxBestEffortFrame);

enum class ViolationKind { kRoute, kDuration, kPrecedence, kWindow, kOverlap, kLatency, kJitter, kGcl };

std::string_view to_string(ViolationKind k);

struct Violation {
  ViolationKind kind;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  [[nodiscard]] bool ok() const { return violations.empty(); }
  [[nodiscard]] std::size_t count(ViolationKind k) const;
};

/// Re-derives every constraint from the offsets by explicit expansion of
/// all instances over the hyperperiod. Shares no code with the solver.
ValidationReport validate_schedule(const std::vector<ScheduledFlow>& flows, const Gcl& gcl,
                                   const Topology& topology);

}  // namespace dotsn

#endif  // DOTSN_SCHEDULER_HPP_
