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

#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "mcquic/runner.hpp"
#include "mcquic/scenarios_builtin.hpp"
#include "mcquic/verify.hpp"

using namespace mcquic;

TEST_CASE("all bundled scenarios parse and validate") {
  for (const auto& [name, text] : builtin_scenarios()) {
    INFO("scenario " << name);
    Scenario sc = parse_scenario(text);
    CHECK(sc.name == name);
  }
}

TEST_CASE("scenario schema errors carry field context") {
  CHECK_THROWS_AS(parse_scenario("not json"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("{}"), ConfigError);  // no channels
  CHECK_THROWS_AS(parse_scenario(R"({
    "channels": [{"id": "0a", "source": "10.0.0.1", "group": "224.0.0.1"}],
    "clients": [{"count": 1}],
    "workload": []
  })"),
                  ConfigError);  // ASM group address
  CHECK_THROWS_AS(parse_scenario(R"({
    "channels": [{"id": "0a", "source": "10.0.0.1", "group": "232.1.1.1"}],
    "clients": [{"count": 1, "link": {"loss": 1.5}}]
  })"),
                  ConfigError);  // loss out of range
  CHECK_THROWS_AS(parse_scenario(R"({
    "channels": [{"id": "0a", "source": "10.0.0.1", "group": "232.1.1.1"}],
    "clients": [{"count": 1}],
    "workload": [{"content": "nope", "bytes": 100}]
  })"),
                  ConfigError);  // unknown content
}

TEST_CASE("smoke scenario runs clean end to end") {
  Scenario sc = parse_scenario(builtin_scenarios().at("smoke"));
  std::ostringstream trace;
  SimulationHarness harness(sc, &trace);
  harness.run();
  const RunReport& report = harness.report();
  INFO(report.summary());
  REQUIRE(report.ok());
  CHECK(report.clients.size() == 3);
  for (const auto& c : report.clients) {
    CHECK(c.delivered_bytes == 262144);
    CHECK(c.multicast_bytes == 262144);
    CHECK_FALSE(c.fallback);
    CHECK(c.attacker_bytes == 0);
  }
  CHECK(report.savings_ratio > 0.0);
  CHECK(report.trace_lines > 0);

  // The trace satisfies the offline checkers.
  std::istringstream in(trace.str());
  auto records = parse_trace(in);
  VerifyResult vr = verify_trace(records);
  INFO(vr.summary());
  CHECK(vr.ok());
}

TEST_CASE("offline checkers reject doctored traces") {
  Scenario sc = parse_scenario(builtin_scenarios().at("smoke"));
  std::ostringstream trace;
  SimulationHarness harness(sc, &trace);
  harness.run();
  REQUIRE(harness.report().ok());

  SECTION("a trusted digest with no verified packet behind it fails anchoring") {
    std::string doctored = trace.str();
    doctored += "99999999 trust node=1 ch=0a start=999999 n=1 src=mc:999999\n";
    std::istringstream in(doctored);
    VerifyResult vr = verify_trace(parse_trace(in));
    CHECK_FALSE(vr.ok());
    bool anchoring_failed = false;
    for (const auto& c : vr.checks)
      if (c.name == "anchoring" && !c.passed) anchoring_failed = true;
    CHECK(anchoring_failed);
  }

  SECTION("an unbalanced linkstats record fails conservation") {
    std::string doctored = trace.str();
    doctored += "99999999 linkstats link=nX sent=10 sentb=1000 delivered=8 deliveredb=800 dropped=1 droppedb=100\n";
    std::istringstream in(doctored);
    VerifyResult vr = verify_trace(parse_trace(in));
    CHECK_FALSE(vr.ok());
  }

  SECTION("a budget overrun fails the budget check") {
    std::string doctored = trace.str();
    doctored += "99999999 budget node=1 used=99999 limit=50000\n";
    std::istringstream in(doctored);
    VerifyResult vr = verify_trace(parse_trace(in));
    CHECK_FALSE(vr.ok());
  }

  SECTION("an illegal state transition fails the state check") {
    std::string doctored = trace.str();
    doctored += "99999999 state node=1 ch=0a old=joined ev=retire new=retired\n";
    std::istringstream in(doctored);
    VerifyResult vr = verify_trace(parse_trace(in));
    CHECK_FALSE(vr.ok());
  }
}

TEST_CASE("empty trace passes vacuously with a warning") {
  std::istringstream in("");
  VerifyResult vr = verify_trace(parse_trace(in));
  CHECK(vr.ok());
  CHECK(vr.empty_trace);
}

TEST_CASE("corrupt traces are parse errors") {
  std::istringstream in("garbage line without structure\n");
  CHECK_THROWS_AS(parse_trace(in), ConfigError);
  std::istringstream in2("123 kind field-without-equals\n");
  CHECK_THROWS_AS(parse_trace(in2), ConfigError);
}

TEST_CASE("seed override changes the trace, same seed reproduces it") {
  Scenario sc = parse_scenario(builtin_scenarios().at("smoke"));
  sc.duration_ms = 5000;

  auto run_hash = [&](uint64_t seed) {
    Scenario s = sc;
    s.seed = seed;
    SimulationHarness h(s, nullptr);
    h.run();
    return h.report().trace_hash;
  };
  std::string h1 = run_hash(1);
  std::string h2 = run_hash(1);
  std::string h3 = run_hash(2);
  CHECK(h1 == h2);
  CHECK(h1 != h3);
}

TEST_CASE("report conservation: delivered bytes partition by origin") {
  Scenario sc = parse_scenario(builtin_scenarios().at("smoke"));
  SimulationHarness harness(sc, nullptr);
  harness.run();
  for (const auto& c : harness.report().clients)
    CHECK(c.multicast_bytes + c.unicast_bytes == c.delivered_bytes);
}
