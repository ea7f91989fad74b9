// Copyright 2026 The mcquic Authors
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

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "mcquic/runner.hpp"
#include "mcquic/scenarios_builtin.hpp"
#include "mcquic/verify.hpp"

namespace {

std::string load_scenario_text(const std::string& name_or_path) {
  const auto& builtin = mcquic::builtin_scenarios();
  auto it = builtin.find(name_or_path);
  if (it != builtin.end()) return it->second;
  std::ifstream in(name_or_path);
  if (!in) throw mcquic::ConfigError("no such scenario file or bundled name: " + name_or_path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_run(const std::string& scenario, std::optional<uint64_t> seed,
            const std::string& report_path, const std::string& trace_path) {
  mcquic::Scenario sc = mcquic::parse_scenario(load_scenario_text(scenario));
  if (seed) sc.seed = *seed;

  std::ofstream trace_file;
  std::ostream* trace_os = nullptr;
  if (!trace_path.empty()) {
    trace_file.open(trace_path, std::ios::binary | std::ios::trunc);
    if (!trace_file) throw mcquic::ConfigError("cannot open trace file: " + trace_path);
    trace_os = &trace_file;
  }

  mcquic::SimulationHarness harness(std::move(sc), trace_os);
  harness.run();
  const mcquic::RunReport& report = harness.report();

  if (!report_path.empty()) {
    std::ofstream rf(report_path, std::ios::trunc);
    if (!rf) throw mcquic::ConfigError("cannot open report file: " + report_path);
    rf << report.to_json().dump(2) << "\n";
  }
  std::cout << report.summary();
  return report.ok() ? 0 : 1;
}

int cmd_verify(const std::string& trace_path, uint64_t bundling_ms) {
  std::ifstream in(trace_path);
  if (!in) throw mcquic::ConfigError("cannot open trace file: " + trace_path);
  auto records = mcquic::parse_trace(in);
  mcquic::VerifyResult result = mcquic::verify_trace(records, bundling_ms * 1000);
  std::cout << result.summary();
  return result.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mcquic: multicast transport engine over a deterministic network simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a scenario and report results");
  std::string scenario;
  std::optional<uint64_t> seed;
  std::string report_path, trace_path;
  run->add_option("scenario", scenario, "scenario file path or bundled scenario name")->required();
  run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--report", report_path, "write the JSON report here");
  run->add_option("--trace", trace_path, "write the event trace here");

  auto* verify = app.add_subcommand("verify", "replay a trace through the offline checkers");
  std::string verify_path;
  uint64_t bundling_ms = 25;
  verify->add_option("trace", verify_path, "trace file produced by run")->required();
  verify->add_option("--bundling-ms", bundling_ms, "ack bundling delay used by the run");

  auto* scenarios = app.add_subcommand("scenarios", "bundled scenario operations");
  auto* list = scenarios->add_subcommand("list", "list bundled scenarios");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(scenario, seed, report_path, trace_path);
    if (verify->parsed()) return cmd_verify(verify_path, bundling_ms);
    if (scenarios->parsed() && list->parsed()) {
      for (const auto& [name, text] : mcquic::builtin_scenarios()) std::cout << name << "\n";
      return 0;
    }
    std::cerr << app.help();
    return 2;
  } catch (const mcquic::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
