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
 * @file netsim.hpp
 * @brief Deterministic discrete-event simulator: end stations, switches with
 *        8 strict-priority queues per egress port, optional time-aware gating,
 *        FRER replication/elimination, DDS endpoint processing latency,
 *        interference generators and fault injection.
 *
 * Time is integer ns. Events at equal times run in insertion order, so the
 * same inputs and seed always produce the same trace.
 */

#ifndef DOTSN_NETSIM_HPP_
#define DOTSN_NETSIM_HPP_

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dotsn/scheduler.hpp"

namespace dotsn {

class ConfigMismatch : public Error {
 public:
  using Error::Error;
};

class UnknownFlow : public Error {
 public:
  using Error::Error;
};

/// DDS processing latency of one node. Defaults are lightweight-stack means at
/// 25% CPU load (t_write 26.231 us, t_read 34.469 us) split over components.
struct EndpointLatencyModel {
  // publish path
  Nanos t_ser = 6'000;
  Nanos t_hd = 2'000;
  std::vector<Nanos> t_sub{2'000, 4'000};
  Nanos t_skt_s = 12'231;
  // subscribe path
  Nanos t_skt_r = 12'000;
  Nanos t_phd = 2'000;
  std::vector<Nanos> t_psub{1'500, 3'500};
  Nanos t_cb = 5'000;
  Nanos t_dser = 10'469;

  Nanos t_disc = 0;
  std::vector<Nanos> t_wait;  // one draw per thread hand-off on the read side
  /// When > 0, socket components get an extra uniform draw in [0, bound].
  Nanos jitter_bound = 0;

  [[nodiscard]] Nanos t_write() const;
  [[nodiscard]] Nanos t_read() const;
  [[nodiscard]] Nanos t_total() const;
  /// Throws InvalidValue on a negative component.
  void validate() const;
};

struct WriteBreakdown {
  Nanos t_ser = 0;
  Nanos t_hd = 0;
  std::vector<Nanos> t_sub;
  Nanos t_skt_s = 0;
  Nanos t_write = 0;  // reported

  [[nodiscard]] Nanos sum() const;
};

struct ReadBreakdown {
  Nanos t_skt_r = 0;
  Nanos t_phd = 0;
  std::vector<Nanos> t_psub;
  Nanos t_cb = 0;
  Nanos t_dser = 0;
  Nanos t_read = 0;  // reported
  Nanos t_disc = 0;
  std::vector<Nanos> t_wait;
  Nanos t_write = 0;  // of the matching publication
  Nanos t_total = 0;  // reported

  [[nodiscard]] Nanos sum() const;
};

enum class Member : std::uint8_t { kPrimary, kReplica };

enum class EventKind : std::uint8_t {
  kPublishStart,
  kEnqueuePort,
  kGateOpenTx,
  kLinkDeliver,
  kEliminated,
  kDelivered,
  kDropped,
};

std::string_view to_string(EventKind k);
std::string_view to_string(Member m);

struct TraceEvent {
  Nanos time = 0;
  EventKind kind = EventKind::kPublishStart;
  std::uint32_t flow = 0;  // index into SimTrace::flows
  std::uint64_t seq = 0;
  std::string node;
  int port = -1;
  Member member = Member::kPrimary;
  std::string detail;
  std::optional<WriteBreakdown> write;  // PublishStart of DDS flows
  std::optional<ReadBreakdown> read;    // Delivered of DDS flows
};

struct FlowCounters {
  std::uint64_t published = 0;
  std::uint64_t replicated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t eliminated = 0;

  [[nodiscard]] std::uint64_t in_flight() const { return published + replicated - delivered - dropped - eliminated; }
};

struct SimTrace {
  std::vector<std::string> flows;
  std::vector<TraceEvent> events;
  std::vector<FlowCounters> counters;       // parallel to flows
  std::map<Port, std::uint64_t> link_bytes; // on-wire bytes per egress port
  Nanos duration = 0;

  [[nodiscard]] std::optional<std::uint32_t> flow_index(std::string_view name) const;
};

/// A flow the simulator publishes periodically.
struct SimFlow {
  DdsFlow flow;
  std::string name;           // trace label
  bool dds = true;            // false: static traffic, no endpoint latency
  Nanos release = 0;          // hop-0 offset within the period
};

struct InterferenceSpec {
  std::string name;
  std::uint32_t size = 1000;
  Nanos period = 0;
  Route path;
  std::uint8_t prio = 0;
};

enum class FaultKind : std::uint8_t { kLinkDown, kLinkUp, kFrameCorrupt };

struct Fault {
  Nanos time = 0;
  FaultKind kind = FaultKind::kLinkDown;
  std::string a;  // link end points
  std::string b;
};

struct SimConfig {
  const Topology* topology = nullptr;
  const Gcl* gcl = nullptr;  // nullptr: plain strict-priority Ethernet
  std::vector<SimFlow> flows;
  std::map<FlowId, FrerPlan> frer;
  EndpointLatencyModel default_model;
  std::map<std::string, EndpointLatencyModel> models;  // per node
  std::vector<InterferenceSpec> interference;
  std::vector<Fault> faults;
  Nanos duration = 0;  // publication window; in-flight frames drain afterwards (capped at +1 s)
  std::uint64_t seed = 1;
  std::size_t queue_capacity = 256;
};

/// Throws ConfigMismatch when flows, GCL ports or faults reference elements
/// missing from the topology.
SimTrace run(const SimConfig& config);

/// Offered load in bit/s of the frames themselves (no preamble, IPG or FCS).
double offered_load_bps(std::uint32_t size, Nanos period);

struct FlowStats {
  std::string flow;
  std::vector<Nanos> latencies;  // per delivered sequence number, ascending seq
  double mean = 0;
  Nanos max = 0;
  Nanos min = 0;
  Nanos jitter = 0;
  std::uint64_t published = 0;
  std::uint64_t delivered = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t loss = 0;     // every copy dropped
  std::uint64_t pending = 0;  // still in the network when the run ended
};

/// Throws UnknownFlow.
FlowStats measure(const SimTrace& trace, std::string_view flow);

/// Checks every PublishStart/Delivered record against the latency equations.
/// Returns the number of mismatching records.
std::size_t count_latency_equation_mismatches(const SimTrace& trace);

/// One JSON object per line: time, event, flow, seq, node, port, member.
void write_trace_ndjson(const SimTrace& trace, std::ostream& out);

struct StatsRow {
  std::string condition;
  FlowStats stats;
};

void write_stats_csv(const std::vector<StatsRow>& rows, std::ostream& out);

}  // namespace dotsn

#endif  // DOTSN_NETSIM_HPP_
