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
 * @file scenario.hpp
 * @brief JSON scenario files: topology, DDS participants and their
 *        endpoints, static flows, routes, interference, faults and the list
 *        of simulation conditions. The schema is documented in
 *        docs/scenario-schema.md.
 */

#ifndef DOTSN_SCENARIO_HPP_
#define DOTSN_SCENARIO_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dotsn/dfia.hpp"
#include "dotsn/netsim.hpp"
#include "dotsn/topology.hpp"

namespace dotsn {

class ScenarioError : public Error {
 public:
  using Error::Error;
};

struct ParticipantSpec {
  std::string node;
  Guid guid;
  Locator locator;
  std::vector<EndpointDescriptor> endpoints;
};

struct ConditionSpec {
  std::string name;
  bool tas = true;
  std::string interference;  // level name; empty for none
};

struct Scenario {
  std::string name;
  std::uint64_t hash = 0;  // fnv1a64 of the file bytes

  Topology topology;
  RouteTable routes;
  std::vector<ParticipantSpec> participants;
  std::string server_node;
  Locator server_locator;

  std::vector<DdsFlow> static_flows;
  std::vector<InterferenceSpec> interference;
  std::map<std::string, std::vector<std::string>> interference_levels;
  std::vector<ConditionSpec> conditions;
  std::vector<Fault> faults;

  std::uint32_t fixed_size = kDefaultFixedSize;
  Nanos duration = 0;
  std::uint64_t seed = 1;
  EndpointLatencyModel latency_model;
  std::size_t search_budget = 200'000;

  /// Interference specs active in `level` (empty level: none).
  [[nodiscard]] std::vector<InterferenceSpec> interference_for(const std::string& level) const;
};

/// Throws ScenarioError with the offending field in the message.
Scenario parse_scenario(std::string_view json_text, std::string name = "scenario");
Scenario load_scenario(const std::filesystem::path& path);

/// "dotsn <version> scenario=<name> hash=<16 hex digits>"
std::string provenance(const Scenario& s);

}  // namespace dotsn

#endif  // DOTSN_SCENARIO_HPP_
