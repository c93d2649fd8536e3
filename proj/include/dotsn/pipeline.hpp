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
 * @file pipeline.hpp
 * @brief End-to-end runs over a scenario: discover -> identify -> schedule
 *        -> configure -> simulate, the artifacts each stage writes, and the
 *        report over an artifact directory.
 */

#ifndef DOTSN_PIPELINE_HPP_
#define DOTSN_PIPELINE_HPP_

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "dotsn/netsim.hpp"
#include "dotsn/scenario.hpp"
#include "dotsn/transport.hpp"
#include "dotsn/tsn_config.hpp"

namespace dotsn {

class MissingArtifact : public Error {
 public:
  using Error::Error;
};

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kStageError = 1;
inline constexpr int kScenario = 2;
inline constexpr int kInfeasible = 3;
inline constexpr int kValidation = 4;
}  // namespace exit_code

enum class Stage { kDiscover, kIdentify, kSchedule, kConfigure, kSimulate };

std::string_view to_string(Stage s);
/// Throws InvalidValue.
Stage parse_stage(std::string_view text);

struct TimedAnnouncement {
  Nanos time = 0;
  EndpointAnnouncement announcement;
};

struct DiscoveryRun {
  std::vector<ClientOutcome> clients;
  std::vector<TimedAnnouncement> announcements;  // as delivered to DFIA
  FlowRegistry registry;
  std::vector<UnroutedPair> missing_routes;
  Nanos identified_at = -1;    // last flow-set change
  Nanos last_completion = -1;  // latest client completion
  Nanos dfia_wall_ns = 0;      // wall-clock time spent in DFIA steps
};

/// Runs every participant's discovery session against one Discovery Server
/// and feeds the server's announcements to DFIA. In-memory (virtual time,
/// deterministic) unless `udp` is set.
DiscoveryRun discover(const Scenario& s, bool udp = false);

struct Plan {
  std::map<FlowId, FrerPlan> frer;
  ScheduleResult result;
  Nanos schedule_ns = 0;
};

/// Plans FRER for Reliable flows and schedules DDS and static flows.
Plan plan_schedule(const Scenario& s, const std::vector<DdsFlow>& flows);

/// Trace name of each flow: its topic, or topic plus reader guid suffix when
/// a topic has several flows.
std::string sim_name(const DdsFlow& f, const std::vector<DdsFlow>& all);

/// Scheduled flows as simulator publishers.
std::vector<SimFlow> sim_flows(const Schedule& schedule, const std::vector<DdsFlow>& dds_flows);

SimConfig condition_config(const Scenario& s, const Schedule& schedule, const std::map<FlowId, FrerPlan>& frer,
                           const std::vector<SimFlow>& flows, const std::vector<InterferenceSpec>& interference,
                           bool tas, std::uint64_t seed);

struct RunOptions {
  Stage stage = Stage::kSimulate;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  bool udp = false;
  bool traces = true;
};

/// Writes every artifact up to `options.stage` and returns an exit code.
int run_pipeline(const Scenario& s, const RunOptions& options, std::ostream& log);

/// Prints the summary of an artifact directory and writes plot.csv next to
/// the artifacts. Throws MissingArtifact.
int report(const std::filesystem::path& dir, std::ostream& out);

/// Discover, identify, schedule, validate; prints the validator report.
int validate_scenario(const Scenario& s, std::ostream& out);

}  // namespace dotsn

#endif  // DOTSN_PIPELINE_HPP_
