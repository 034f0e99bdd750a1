#include "epds/cli_commands.hpp"

#include "epds/report_json.hpp"
#include "epds/scenario.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <filesystem>
#include <sstream>

namespace epds::cli {

using nlohmann::json;

void write_error(std::ostream& err, const std::string& error, const std::string& field, const std::string& message,
                 int line) {
  json j = {{"error", error}, {"field", field.empty() ? json(nullptr) : json(field)}, {"message", message}};
  if (line > 0) {
    j["line"] = line;
  }
  err << j.dump() << '\n';
}

namespace {

class Stopwatch {
 public:
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int report_error(std::ostream& err, const Error& e, const std::string& field = "") {
  write_error(err, to_string(e.code()), field, e.what());
  return e.code() == ErrorCode::StateExploded ? kExitExploded : kExitInvalid;
}

}  // namespace

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
  Scenario sc;
  try {
    sc = load_scenario(args.scenario);
  } catch (const ScenarioError& e) {
    write_error(err, "ValidationError", e.field(), e.what(), e.line());
    return kExitInvalid;
  }
  const double h = args.h.value_or(sc.step.value_or(kDefaultStep));
  const double horizon = args.horizon.value_or(sc.horizon);
  if (!(h > 0.0)) {
    write_error(err, "ValidationError", "--h", "step must be positive");
    return kExitInvalid;
  }
  if (!(horizon > 0.0)) {
    write_error(err, "ValidationError", "--T", "horizon must be positive");
    return kExitInvalid;
  }
  if (sc.input && sc.input->end && !(*sc.input->end > horizon)) {
    write_error(err, "ValidationError", "input.end", "the input must be defined on [0, horizon]");
    return kExitInvalid;
  }

  spdlog::info("run '{}': h={} T={}", sc.name, h, horizon);
  Trace trace;
  try {
    const ClosedLoopSystem sys = build_system(sc);
    const Stopwatch clock;
    trace = integrate(sys, sc.initial_state, build_input(sc), horizon, h, build_options(sc));
    spdlog::info("run '{}': {} steps in {:.3f} s", sc.name, trace.steps(), clock.seconds());
  } catch (const ScenarioError& e) {
    write_error(err, "ValidationError", e.field(), e.what());
    return kExitInvalid;
  } catch (const Error& e) {
    return report_error(err, e, e.code() == ErrorCode::InitialStateOutsideSet ? "initial_state" : "");
  }

  const json summary = trace_summary(trace);
  try {
    const std::filesystem::path dir(args.out_dir);
    std::filesystem::create_directories(dir);
    std::ostringstream csv;
    write_trace_csv(csv, trace);
    write_file_atomic(dir / "trace.csv", csv.str());
    write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");
  } catch (const std::exception& e) {
    write_error(err, "IoError", "--out", e.what());
    return kExitInvalid;
  }
  out << summary.dump(2) << '\n';
  return kExitOk;
}

int cmd_verify_projection(int count, std::uint64_t seed, int max_dim, std::ostream& out, std::ostream& err) {
  if (count < 1 || max_dim < 1) {
    write_error(err, "ValidationError", count < 1 ? "--count" : "--max-dim", "must be >= 1");
    return kExitInvalid;
  }
  const Stopwatch clock;
  const ProjectionSuiteResult res = run_projection_suite(count, seed, max_dim);
  spdlog::info("verify-projection: {} checked, {} skipped in {:.2f} s", res.checked, res.skipped_infeasible,
               clock.seconds());
  json report = to_json(res);
  report["seed"] = seed;
  report["max_dim"] = max_dim;
  const bool ok = res.mismatches == 0 && res.solver_errors == 0 && res.uniqueness_failures == 0 &&
                  res.branch_contradictions == 0;
  report["pass"] = ok;
  out << report.dump(2) << '\n';
  return ok ? kExitOk : kExitInvalid;
}

int cmd_verify_krasovskii(int count, std::uint64_t seed, std::ostream& out, std::ostream& err) {
  if (count < 1) {
    write_error(err, "ValidationError", "--count", "must be >= 1");
    return kExitInvalid;
  }
  const Stopwatch clock;
  const KrasovskiiSuiteResult finite = run_krasovskii_suite(count, seed);
  const SectorPatternResult sector = run_sector_pattern_suite(count, seed + 1);
  const VerificationReport fig = figure_counterexample();
  spdlog::info("verify-krasovskii: {} finite + {} sector cases in {:.2f} s", finite.checked, sector.checked,
               clock.seconds());

  bool fig_witness = false;
  for (const auto& w : fig.witnesses) {
    fig_witness = fig_witness || (w - Vector::Unit(2, 0)).norm() <= 1e-9;
  }
  const bool finite_ok = finite.holds_coarse == finite.checked && finite.holds_fine == finite.checked &&
                         finite.grid_disagreements == 0;
  const bool ok = finite_ok && sector.mismatches == 0 && !fig.holds && fig_witness;

  json report;
  report["seed"] = seed;
  report["finitely_generated"] = to_json(finite);
  report["sector"] = to_json(sector);
  report["counterexample"] = to_json(fig);
  report["pass"] = ok;
  out << report.dump(2) << '\n';
  return ok ? kExitOk : kExitInvalid;
}

int cmd_sweep(const std::string& scenario, const std::vector<double>& h_list, std::ostream& out,
              std::ostream& err) {
  Scenario sc;
  try {
    sc = load_scenario(scenario);
  } catch (const ScenarioError& e) {
    write_error(err, "ValidationError", e.field(), e.what(), e.line());
    return kExitInvalid;
  }
  ConvergenceReport rep;
  try {
    const ClosedLoopSystem sys = build_system(sc);
    rep = convergence_study(sys, sc.initial_state, build_input(sc), sc.horizon, h_list, build_options(sc));
  } catch (const ScenarioError& e) {
    write_error(err, "ValidationError", e.field(), e.what());
    return kExitInvalid;
  } catch (const Error& e) {
    return report_error(err, e, e.code() == ErrorCode::InvalidArgument ? "--h-list" : "");
  }
  json report = to_json(rep);
  report["scenario"] = sc.name;
  out << report.dump(2) << '\n';
  for (const auto& e : rep.entries) {
    if (e.error) {
      write_error(err, "StateExploded", "", *e.error);
      return kExitExploded;
    }
  }
  return kExitOk;
}

}  // namespace epds::cli
