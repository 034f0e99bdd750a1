#pragma once

#include "epds/krasovskii.hpp"
#include "epds/sim.hpp"
#include "epds/suites.hpp"

#include <json.hpp>

#include <filesystem>
#include <ostream>
#include <string>

namespace epds {

nlohmann::json to_json(const Vector& v);
nlohmann::json to_json(const Matrix& m);
nlohmann::json to_json(const KrasovskiiHull& hull);
nlohmann::json to_json(const VerificationReport& r);
nlohmann::json to_json(const ProjectionSuiteResult& r);
nlohmann::json to_json(const VstarSuiteResult& r);
nlohmann::json to_json(const KrasovskiiSuiteResult& r);
nlohmann::json to_json(const SectorPatternResult& r);
nlohmann::json to_json(const ReductionSuiteResult& r);
nlohmann::json to_json(const ConvergenceReport& r);

/// 17 significant digits, enough to round-trip a double.
std::string format_double(double v);

/// Header t, xi_0..xi_{N-1}, e, u, edot, vstar, branch, correction_norm, sector_residual, drift_corrected.
void write_trace_csv(std::ostream& os, const Trace& trace);

/// max_sector_residual, steps, drift_corrections, time_in_branch, terminal_state.
nlohmann::json trace_summary(const Trace& trace);

/// Writes to a temporary file next to `path` and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace epds
