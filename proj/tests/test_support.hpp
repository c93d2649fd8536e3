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

// Fixtures and generators shared by the unit tests and the acceptance runner.

#ifndef DOTSN_TESTS_TEST_SUPPORT_HPP_
#define DOTSN_TESTS_TEST_SUPPORT_HPP_

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dotsn/dfia.hpp"
#include "dotsn/discovery.hpp"
#include "dotsn/scenario.hpp"
#include "dotsn/scheduler.hpp"
#include "dotsn/topology.hpp"

namespace dotsn::testing {

inline std::filesystem::path scenario_path(const std::string& file) {
  return std::filesystem::path(DOTSN_SOURCE_DIR) / "scenarios" / file;
}

inline QosPolicies make_qos(std::uint8_t prio = 7, Nanos period = 500 * kMicro, Reliability rel = Reliability::kReliable,
                            std::uint32_t size = 38) {
  QosPolicies q;
  q.partition = 2;
  q.priority = prio;
  q.deadline = period;
  q.latency = period;
  q.jitter = 25 * kMicro;
  q.reliability = rel;
  q.size = size;
  return q;
}

inline Guid participant_guid(std::uint32_t p) { return Guid::from_parts(0x010f'0000'0000'0000ULL | p, 1, 0x1c1); }

inline EndpointDescriptor endpoint(EndpointKind kind, std::uint32_t participant, std::uint32_t entity,
                                   std::string topic, QosPolicies qos,
                                   Locator loc = Locator::make("192.168.137.20", 7411)) {
  EndpointDescriptor d;
  d.kind = kind;
  d.guid = Guid::from_parts(0x010f'0000'0000'0000ULL | participant, 1,
                            (entity << 8) | (kind == EndpointKind::kWriter ? 0x02 : 0x07));
  d.topic = std::move(topic);
  d.locator = loc;
  d.qos = qos;
  return d;
}

inline EndpointAnnouncement announce(const EndpointDescriptor& d, std::uint32_t participant) {
  return EndpointAnnouncement{participant_guid(participant), d};
}

/// QoS drawn from a small value grid so that compatible and incompatible
/// pairs both occur often.
inline QosPolicies random_qos(std::mt19937_64& rng) {
  auto pick = [&](std::initializer_list<Nanos> v) {
    return *(v.begin() + std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng));
  };
  QosPolicies q;
  q.partition = static_cast<std::uint16_t>(std::uniform_int_distribution<int>(1, 2)(rng));
  q.priority = static_cast<std::uint8_t>(std::uniform_int_distribution<int>(0, 7)(rng));
  q.deadline = pick({300 * kMicro, 500 * kMicro, 1000 * kMicro});
  q.latency = pick({300 * kMicro, 500 * kMicro, 1000 * kMicro});
  q.jitter = pick({0, 25 * kMicro, 50 * kMicro});
  q.reliability = std::bernoulli_distribution(0.5)(rng) ? Reliability::kReliable : Reliability::kBestEffort;
  q.size = std::uniform_int_distribution<std::uint32_t>(1, 1400)(rng);
  return q;
}

/// Star of end stations H0..H{n-1} around one switch; every ordered pair routed.
struct Star {
  Topology topology;
  RouteTable routes;
  std::vector<Locator> hosts;
};

inline Star star(std::size_t n) {
  Star s;
  s.topology.add_node(Node{"S", NodeRole::kSwitch, 1, 0, 10 * kMicro});
  for (std::size_t i = 0; i < n; ++i) {
    const std::string name = "H" + std::to_string(i);
    const std::uint32_t ip = 0x0a000001u + static_cast<std::uint32_t>(i);
    s.topology.add_node(Node{name, NodeRole::kEndStation, 0, ip, 0});
    s.topology.add_link(Link{"S", static_cast<std::uint8_t>(i + 1), name, 1, 1'000'000'000, 0});
    s.routes.add_host(ip, name);
    s.hosts.push_back(Locator{ip, 7411});
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) s.routes.add_route({"H" + std::to_string(i), "S", "H" + std::to_string(j)});
    }
  }
  return s;
}

/// The brute-force flow set: every compatible (writer, reader) pair per topic.
inline std::set<FlowId> brute_force_flows(const std::vector<EndpointDescriptor>& alive) {
  std::set<FlowId> out;
  for (const auto& w : alive) {
    if (w.kind != EndpointKind::kWriter) continue;
    for (const auto& r : alive) {
      if (r.kind == EndpointKind::kReader && r.topic == w.topic && qos_compatible(w.qos, r.qos)) {
        out.insert(FlowId{w.guid, r.guid});
      }
    }
  }
  return out;
}

inline std::set<FlowId> flow_ids(const FlowRegistry& reg) {
  std::set<FlowId> out;
  for (const auto& f : reg.all_flows()) out.insert(f.id);
  return out;
}

/// Random schedulable instance on a ring of `switches` switches, each with
/// one end station. Periods from {250, 500, 1000} us, sizes 64..1500 bytes.
struct RandomInstance {
  Topology topology;
  std::vector<DdsFlow> flows;
};

inline RandomInstance random_instance(std::mt19937_64& rng, std::size_t switches, std::size_t flows) {
  RandomInstance inst;
  auto& t = inst.topology;
  for (std::size_t i = 0; i < switches; ++i) {
    t.add_node(Node{"SW" + std::to_string(i), NodeRole::kSwitch, static_cast<std::uint8_t>(i + 1), 0, 10 * kMicro});
    t.add_node(Node{"E" + std::to_string(i), NodeRole::kEndStation, 0, 0x0a000100u + static_cast<std::uint32_t>(i), 0});
    t.add_link(Link{"SW" + std::to_string(i), 3, "E" + std::to_string(i), 1, 1'000'000'000, 0});
  }
  for (std::size_t i = 0; i < switches; ++i) {
    t.add_link(Link{"SW" + std::to_string(i), 1, "SW" + std::to_string((i + 1) % switches), 2, 1'000'000'000, 0});
  }
  const Nanos periods[] = {250 * kMicro, 500 * kMicro, 1000 * kMicro};
  for (std::size_t k = 0; k < flows; ++k) {
    std::size_t a = std::uniform_int_distribution<std::size_t>(0, switches - 1)(rng);
    std::size_t b = std::uniform_int_distribution<std::size_t>(0, switches - 2)(rng);
    if (b >= a) ++b;
    // clockwise or counter-clockwise around the ring
    const bool cw = std::bernoulli_distribution(0.5)(rng);
    Route r{"E" + std::to_string(a)};
    std::size_t cur = a;
    r.push_back("SW" + std::to_string(cur));
    while (cur != b) {
      cur = cw ? (cur + 1) % switches : (cur + switches - 1) % switches;
      r.push_back("SW" + std::to_string(cur));
    }
    r.push_back("E" + std::to_string(b));
    DdsFlow f;
    f.id = FlowId{Guid::from_parts(0xabcd000000000000ULL, static_cast<std::uint32_t>(k + 1), 0x02),
                  Guid::from_parts(0xabcd000000000000ULL, static_cast<std::uint32_t>(k + 1), 0x07)};
    f.topic = "T" + std::to_string(k);
    f.size = std::uniform_int_distribution<std::uint32_t>(64, 1500)(rng);
    f.prd = periods[std::uniform_int_distribution<int>(0, 2)(rng)];
    f.latency = f.prd;
    f.jitter = 0;
    f.prio = static_cast<std::uint8_t>(std::uniform_int_distribution<int>(5, 7)(rng));
    f.vid = 2;
    f.route = r;
    f.src = Locator{t.node(r.front()).ip, 7411};
    f.dst = Locator{t.node(r.back()).ip, 7411};
    inst.flows.push_back(std::move(f));
  }
  return inst;
}

}  // namespace dotsn::testing

#endif  // DOTSN_TESTS_TEST_SUPPORT_HPP_
