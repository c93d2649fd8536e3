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

// dotsn: scenario runner and report generator.

#include <iostream>

#include <CLI11.hpp>

#include "dotsn/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"dotsn: DDS flow identification, TSN scheduling, configuration and simulation"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string stage_text = "simulate";
  std::string out_dir;
  std::uint64_t seed = 0;
  bool udp = false;
  bool no_traces = false;
  auto* run = app.add_subcommand("run", "Run the pipeline up to a stage and write artifacts");
  run->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  run->add_option("--stage", stage_text, "discover | identify | schedule | configure | simulate");
  run->add_option("--out", out_dir, "Artifact directory")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Override the scenario's simulation seed");
  run->add_flag("--udp", udp, "Run discovery over loopback UDP instead of in memory");
  run->add_flag("--no-traces", no_traces, "Skip per-condition NDJSON traces");

  std::string in_dir;
  auto* rep = app.add_subcommand("report", "Summarize an artifact directory");
  rep->add_option("--in", in_dir, "Artifact directory")->required();

  std::string validate_path;
  auto* val = app.add_subcommand("validate", "Schedule a scenario and run the independent validator");
  val->add_option("--scenario", validate_path, "Scenario JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      dotsn::RunOptions opts;
      opts.stage = dotsn::parse_stage(stage_text);
      opts.out = out_dir;
      if (*seed_opt) opts.seed = seed;
      opts.udp = udp;
      opts.traces = !no_traces;
      auto s = dotsn::load_scenario(scenario_path);
      return dotsn::run_pipeline(s, opts, std::cout);
    }
    if (*rep) return dotsn::report(in_dir, std::cout);
    if (*val) return dotsn::validate_scenario(dotsn::load_scenario(validate_path), std::cout);
  } catch (const dotsn::ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return dotsn::exit_code::kScenario;
  } catch (const dotsn::InvalidValue& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dotsn::exit_code::kScenario;
  } catch (const dotsn::MissingArtifact& e) {
    std::cerr << "missing artifact: " << e.what() << "\n";
    return dotsn::exit_code::kStageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dotsn::exit_code::kStageError;
  }
  return dotsn::exit_code::kOk;
}
