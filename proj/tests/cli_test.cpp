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
#include <sys/wait.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dotsn/pipeline.hpp"
#include "test_support.hpp"

namespace dotsn {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("dotsn_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

int cli(const std::string& args, std::string* output = nullptr) {
  auto log = fs::temp_directory_path() / ("dotsn_cli_out_" + std::to_string(::getpid()));
  const std::string cmd = std::string(DOTSN_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (output) {
    std::ifstream in(log);
    std::ostringstream s;
    s << in.rdbuf();
    *output = s.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string ring_path() { return testing::scenario_path("vehicle_ring.json").string(); }

TEST(Cli, SimulateWritesFiveConditionRowsForFlow1) {
  auto out = scratch("sim");
  ASSERT_EQ(cli("run --scenario " + ring_path() + " --stage simulate --out " + out.string() + " --no-traces"), 0);
  std::istringstream csv(slurp(out / "stats.csv"));
  std::string line;
  std::vector<std::string> conditions;
  while (std::getline(csv, line)) {
    if (line.find(",Flow1,") != std::string::npos) conditions.push_back(line.substr(0, line.find(',')));
  }
  EXPECT_EQ(conditions,
            (std::vector<std::string>{"control", "300M/Ethernet", "300M/TAS", "800M/Ethernet", "800M/TAS"}));
}

TEST(Cli, IdentifyOnFanOutScenarioGivesFourFlows) {
  auto out = scratch("fan4");
  ASSERT_EQ(cli("run --scenario " + testing::scenario_path("dfia_1w4r.json").string() + " --stage identify --out " +
                out.string()),
            0);
  RouteTable any;  // only count elements, routes unused
  auto doc = slurp(out / "flowinfo.xml");
  std::size_t n = 0;
  for (std::size_t pos = 0; (pos = doc.find("Flow ID=", pos)) != std::string::npos; ++pos) ++n;
  EXPECT_EQ(n, 4u);
  EXPECT_FALSE(fs::exists(out / "schedule.json"));
}

TEST(Cli, MissingScenarioIsScenarioError) {
  std::string text;
  EXPECT_EQ(cli("run --scenario /nonexistent/x.json --out " + scratch("none").string(), &text), 2);
  EXPECT_NE(text.find("scenario"), std::string::npos);
  EXPECT_THROW(load_scenario("/nonexistent/x.json"), ScenarioError);
}

TEST(Cli, InfeasibleScenarioExitsThree) {
  auto doc = nlohmann::json::parse(slurp(ring_path()));
  for (auto& p : doc["participants"]) {
    for (auto& e : p["endpoints"]) {
      if (e["topic"] == "Flow1") e["qos"]["latency_us"] = 5;
    }
  }
  auto dir = scratch("infeasible");
  fs::create_directories(dir);
  std::ofstream(dir / "tight.json") << doc.dump(2);
  auto out = dir / "out";
  EXPECT_EQ(cli("run --scenario " + (dir / "tight.json").string() + " --stage schedule --out " + out.string()), 3);
  ASSERT_TRUE(fs::exists(out / "infeasible.json"));
  auto inf = nlohmann::json::parse(slurp(out / "infeasible.json"));
  ASSERT_FALSE(inf["conflict"].empty());
  EXPECT_EQ(inf["conflict"][0].get<std::string>().rfind("Flow1 ", 0), 0u);
  EXPECT_EQ(cli("validate --scenario " + (dir / "tight.json").string()), 3);
}

TEST(Cli, BadScenarioFieldsAreScenarioErrors) {
  auto doc = nlohmann::json::parse(slurp(ring_path()));
  doc["links"][0]["b"] = "SW9";
  EXPECT_THROW(parse_scenario(doc.dump()), ScenarioError);
  doc = nlohmann::json::parse(slurp(ring_path()));
  doc["conditions"] = nlohmann::json::array();
  EXPECT_THROW(parse_scenario(doc.dump()), ScenarioError);
  doc = nlohmann::json::parse(slurp(ring_path()));
  doc["routes"][0] = {"ZCU1", "SW1"};
  EXPECT_THROW(parse_scenario(doc.dump()), ScenarioError);
}

TEST(Cli, ValidateVerbOnTable) {
  std::string text;
  EXPECT_EQ(cli("validate --scenario " + ring_path(), &text), 0);
  EXPECT_NE(text.find("0 violations"), std::string::npos);
}

TEST(Cli, RerunsAreByteIdenticalExceptWallClockTiming) {
  auto a = scratch("det_a");
  auto b = scratch("det_b");
  ASSERT_EQ(cli("run --scenario " + ring_path() + " --out " + a.string()), 0);
  ASSERT_EQ(cli("run --scenario " + ring_path() + " --out " + b.string()), 0);
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file() || e.path().filename() == "timing.json") continue;
    auto rel = fs::relative(e.path(), a);
    EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
    ++compared;
  }
  EXPECT_GT(compared, 15u);
}

TEST(Cli, EveryArtifactCarriesProvenance) {
  auto out = scratch("prov");
  ASSERT_EQ(cli("run --scenario " + ring_path() + " --out " + out.string()), 0);
  const auto s = load_scenario(ring_path());
  const auto header = provenance(s);
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path());
    std::string head;
    std::getline(in, head);
    std::string second;
    std::getline(in, second);
    const bool found = head.find(header) != std::string::npos || second.find(header) != std::string::npos ||
                       slurp(e.path()).substr(0, 400).find(header) != std::string::npos;
    EXPECT_TRUE(found) << e.path();
  }
}

TEST(Report, SimulationSummaryShowsTasInvariance) {
  auto out = scratch("rep");
  ASSERT_EQ(cli("run --scenario " + ring_path() + " --out " + out.string() + " --no-traces"), 0);
  std::ostringstream text;
  EXPECT_EQ(report(out, text), 0);
  EXPECT_NE(text.str().find("Flow1: identical over 3 TAS conditions"), std::string::npos) << text.str();
  EXPECT_NE(text.str().find("FRER delivery accounting"), std::string::npos);
  EXPECT_NE(text.str().find("delta t1"), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "plot.csv"));
}

TEST(Report, EmptyDirectoryIsMissingArtifact) {
  auto dir = scratch("empty");
  fs::create_directories(dir);
  std::ostringstream text;
  EXPECT_THROW(report(dir, text), MissingArtifact);
  EXPECT_NE(cli("report --in " + dir.string()), 0);
}

TEST(Report, ScheduleOnlyMarksSimulationNotRun) {
  auto out = scratch("sched_only");
  ASSERT_EQ(cli("run --scenario " + ring_path() + " --stage schedule --out " + out.string()), 0);
  std::string text;
  EXPECT_EQ(cli("report --in " + out.string(), &text), 0);
  EXPECT_NE(text.find("== schedule"), std::string::npos);
  EXPECT_NE(text.find("violations: 0"), std::string::npos);
  EXPECT_NE(text.find("not run"), std::string::npos);
}

TEST(Pipeline, UdpDiscoveryFindsTheSameFlows) {
  const auto s = load_scenario(testing::scenario_path("dfia_1w4r.json"));
  auto mem = discover(s, false);
  auto udp = discover(s, true);
  EXPECT_EQ(testing::flow_ids(udp.registry), testing::flow_ids(mem.registry));
  EXPECT_EQ(mem.registry.flow_count(), 4u);
}

TEST(Pipeline, StageNames) {
  EXPECT_EQ(parse_stage("configure"), Stage::kConfigure);
  EXPECT_EQ(to_string(Stage::kSimulate), "simulate");
  EXPECT_THROW(parse_stage("deploy"), InvalidValue);
}

}  // namespace
}  // namespace dotsn
