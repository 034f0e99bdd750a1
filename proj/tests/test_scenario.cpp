#include "epds/cli_commands.hpp"
#include "epds/report_json.hpp"
#include "epds/scenario.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace epds;
using nlohmann::json;

namespace {

const std::string kData = EPDS_TEST_DATA;

std::string data(const std::string& name) { return kData + "/" + name; }

json higs_json() {
  return json::parse(R"({
    "name": "t",
    "plant": {"model": "mass_spring_damper", "mass": 1, "stiffness": 1, "damping": 1},
    "controller": {"model": "higs", "k_h": 1, "omega_h": 1},
    "initial_state": [-1, 0, 0.5],
    "horizon": 1
  })");
}

std::string field_of(const json& j) {
  try {
    scenario_from_json(j);
  } catch (const ScenarioError& e) {
    return e.field();
  }
  return "<none>";
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("epds_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("scenario round trip") {
  for (const char* name : {"higs_benchmark.json", "higs_step.json", "tracking.json", "blowup.json"}) {
    INFO(name);
    const Scenario s = load_scenario(data(name));
    const json j = scenario_to_json(s);
    const Scenario back = scenario_from_json(j);
    CHECK(scenario_to_json(back) == j);
    CHECK(back.initial_state == s.initial_state);
  }
  const Scenario step = load_scenario(data("higs_step.json"));
  REQUIRE(step.input.has_value());
  CHECK(step.input->segments.size() == 3);
  CHECK(step.input->segments[1].start == 1.2345);
  CHECK(step.input->segments[2].kind == InputSegment::Kind::sinusoid);
}

TEST_CASE("scenario errors name the offending field") {
  json j = higs_json();
  j["plant"]["Gp"] = {0.0, 0.0};
  CHECK(field_of(j) == "plant.Gp");

  j = higs_json();
  j["sector"] = {{"k1", 0.0}, {"k2", 2.0}};
  CHECK(field_of(j) == "sector");

  j = higs_json();
  j["initial_state"] = {-1.0, 0.0, 3.0};
  CHECK(field_of(j) == "initial_state");

  j = higs_json();
  j["initial_state"] = {-1.0, 0.0};
  CHECK(field_of(j) == "initial_state");

  j = higs_json();
  j["plant"]["springiness"] = 2.0;
  CHECK(field_of(j) == "plant.springiness");

  j = higs_json();
  j["input"] = json::parse(R"({"segments": [{"start": 0, "kind": "constant", "value": 0},
                                            {"start": 0, "kind": "constant", "value": 1}]})");
  CHECK(field_of(j) == "input.segments[1].start");

  j = higs_json();
  j["controller"]["k_h"] = -1.0;
  CHECK(field_of(j) == "controller.k_h");

  j = higs_json();
  j.erase("horizon");
  CHECK(field_of(j) == "horizon");

  try {
    parse_scenario("{\n  \"name\": \"x\",\n  oops\n}");
    FAIL("parse error expected");
  } catch (const ScenarioError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("trace csv layout") {
  const Scenario s = load_scenario(data("higs_benchmark.json"));
  const Trace tr = integrate(build_system(s), s.initial_state, build_input(s), 0.05, 0.01);
  std::ostringstream os;
  write_trace_csv(os, tr);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "t,xi_0,xi_1,xi_2,e,u,edot,vstar,branch,correction_norm,sector_residual,drift_corrected");
  int lines = 0;
  for (std::string line; std::getline(is, line);) ++lines;
  CHECK(lines == 6);

  const json summary = trace_summary(tr);
  CHECK(summary["steps"] == 5);
  CHECK(summary.contains("time_in_branch"));
}

TEST_CASE("run writes one row per step plus the initial row") {
  const auto out = scratch("run");
  cli::RunArgs args{data("tracking.json"), out.string(), std::nullopt, 1.0};
  std::ostringstream so, se;
  REQUIRE(cli::cmd_run(args, so, se) == cli::kExitOk);
  std::ifstream csv(out / "trace.csv");
  int lines = 0;
  for (std::string line; std::getline(csv, line);) ++lines;
  CHECK(lines == 1 + 1000 + 1);
  CHECK(json::parse(so.str())["steps"] == 1000);
  CHECK(std::filesystem::exists(out / "summary.json"));
}

TEST_CASE("cli exit codes and error reports") {
  std::ostringstream so, se;
  cli::RunArgs bad{data("outside_set.json"), scratch("outside").string(), std::nullopt, std::nullopt};
  CHECK(cli::cmd_run(bad, so, se) == cli::kExitInvalid);
  const json err = json::parse(se.str());
  CHECK(err["field"] == "initial_state");

  std::ostringstream so2, se2;
  cli::RunArgs boom{data("blowup.json"), scratch("blowup").string(), std::nullopt, std::nullopt};
  CHECK(cli::cmd_run(boom, so2, se2) == cli::kExitExploded);
  CHECK(json::parse(se2.str())["error"] == "StateExploded");

  std::ostringstream so3, se3;
  CHECK(cli::cmd_sweep(data("blowup.json"), {1e-2, 5e-3}, so3, se3) == cli::kExitExploded);

  std::ostringstream so4, se4;
  CHECK(cli::cmd_sweep(data("higs_benchmark.json"), {1e-2, 2e-2}, so4, se4) == cli::kExitInvalid);
}

TEST_CASE("verify-projection is deterministic for a fixed seed") {
  std::ostringstream a, b, e;
  REQUIRE(cli::cmd_verify_projection(200, 11, 5, a, e) == cli::kExitOk);
  REQUIRE(cli::cmd_verify_projection(200, 11, 5, b, e) == cli::kExitOk);
  CHECK(a.str() == b.str());
}
