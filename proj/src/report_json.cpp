#include "epds/report_json.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace epds {

using nlohmann::json;

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    a.push_back(v(i));
  }
  return a;
}

json to_json(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    a.push_back(to_json(Vector(m.row(i).transpose())));
  }
  return a;
}

namespace {

json vectors(const std::vector<Vector>& vs) {
  json a = json::array();
  for (const auto& v : vs) {
    a.push_back(to_json(v));
  }
  return a;
}

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

json to_json(const KrasovskiiHull& hull) {
  json gens = json::array();
  for (const auto& g : hull.generators) {
    gens.push_back({{"label", g.label}, {"w", to_json(g.w)}, {"correction_norm", g.correction_norm}});
  }
  return {{"point", to_json(hull.point)},
          {"field", to_json(hull.field)},
          {"vertices", vectors(hull.vertices)},
          {"labels", hull.labels},
          {"generators", gens}};
}

json to_json(const VerificationReport& r) {
  return {{"holds", r.holds},
          {"point", to_json(r.point)},
          {"field", to_json(r.field)},
          {"vertices", vectors(r.vertices)},
          {"witness_count", r.witnesses.size()},
          {"witnesses", vectors(r.witnesses)},
          {"resolution", r.resolution},
          {"combinations_checked", r.combinations_checked},
          {"combinations_in_cone", r.combinations_in_cone}};
}

json to_json(const ProjectionSuiteResult& r) {
  json j = {{"requested", r.requested},
            {"checked", r.checked},
            {"skipped_infeasible", r.skipped_infeasible},
            {"mismatches", r.mismatches},
            {"solver_errors", r.solver_errors},
            {"oracle_failures", r.oracle_failures},
            {"uniqueness_failures", r.uniqueness_failures},
            {"max_discrepancy", r.max_discrepancy},
            {"sector_origin", {{"instances", r.sector_origin_instances},
                               {"branch_contradictions", r.branch_contradictions},
                               {"max_discrepancy", r.sector_origin_max_discrepancy}}}};
  if (r.worst) {
    j["worst_case"] = {{"v", to_json(r.worst->v)},
                       {"rows", to_json(r.worst->rows)},
                       {"E", to_json(r.worst->basis)},
                       {"solver", to_json(r.worst->solver)},
                       {"oracle", to_json(r.worst->oracle)},
                       {"discrepancy", r.worst->discrepancy}};
  } else {
    j["worst_case"] = nullptr;
  }
  return j;
}

json to_json(const VstarSuiteResult& r) {
  return {{"checked", r.checked},
          {"not_in_candidates", r.not_in_candidates},
          {"selector_disagreements", r.selector_disagreements},
          {"max_selector_gap", r.max_selector_gap}};
}

json to_json(const KrasovskiiSuiteResult& r) {
  json failures = json::array();
  for (const auto& f : r.failures) {
    failures.push_back(to_json(f));
  }
  return {{"requested", r.requested},     {"checked", r.checked},
          {"skipped", r.skipped},         {"holds_at_0.02", r.holds_coarse},
          {"holds_at_0.01", r.holds_fine}, {"grid_disagreements", r.grid_disagreements},
          {"failures", failures}};
}

json to_json(const SectorPatternResult& r) {
  json reports = json::array();
  for (const auto& f : r.mismatch_reports) {
    reports.push_back(to_json(f));
  }
  return {{"checked", r.checked},
          {"expected_failures", r.expected_failures},
          {"observed_failures", r.observed_failures},
          {"mismatches", r.mismatches},
          {"mismatch_reports", reports}};
}

json to_json(const ReductionSuiteResult& r) {
  return {{"checked", r.checked}, {"mismatches", r.mismatches}, {"max_discrepancy", r.max_discrepancy}};
}

json to_json(const ConvergenceReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    json j = {{"h", e.h},
              {"steps", e.steps},
              {"max_sector_residual", e.max_sector_residual},
              {"terminal_delta", optional_json(e.terminal_delta)},
              {"error", optional_json(e.error)}};
    j["terminal_state"] = e.terminal_state.size() ? to_json(e.terminal_state) : json(nullptr);
    entries.push_back(j);
  }
  json orders = json::array();
  for (const auto& o : r.observed_order) {
    orders.push_back(optional_json(o));
  }
  return {{"entries", entries}, {"observed_order", orders}};
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trace_csv(std::ostream& os, const Trace& trace) {
  const Eigen::Index dim = trace.rows.empty() ? 0 : trace.rows.front().xi.size();
  os << "t";
  for (Eigen::Index i = 0; i < dim; ++i) {
    os << ",xi_" << i;
  }
  os << ",e,u,edot,vstar,branch,correction_norm,sector_residual,drift_corrected\n";
  for (const auto& r : trace.rows) {
    os << format_double(r.t);
    for (Eigen::Index i = 0; i < dim; ++i) {
      os << ',' << format_double(r.xi(i));
    }
    os << ',' << format_double(r.e) << ',' << format_double(r.u) << ',' << format_double(r.edot) << ','
       << format_double(r.vstar) << ',' << to_string(r.mode) << ',' << format_double(r.correction_norm) << ','
       << format_double(r.sector_residual) << ',' << (r.drift_corrected ? 1 : 0) << '\n';
  }
}

json trace_summary(const Trace& trace) {
  double time_in[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t k = 0; k + 1 < trace.rows.size(); ++k) {
    time_in[static_cast<int>(trace.rows[k].mode)] += trace.rows[k + 1].t - trace.rows[k].t;
  }
  return {{"max_sector_residual", trace.max_sector_residual()},
          {"steps", trace.steps()},
          {"drift_corrections", trace.drift_corrections()},
          {"time_in_branch",
           {{"interior", time_in[0]}, {"K", time_in[1]}, {"minusK", time_in[2]}, {"corner", time_in[3]}}},
          {"terminal_state", trace.rows.empty() ? json(nullptr) : to_json(trace.rows.back().xi)}};
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::system_error(errno, std::generic_category(), "cannot write " + tmp.string());
    }
    out << content;
    out.flush();
    if (!out) {
      throw std::system_error(errno, std::generic_category(), "write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace epds
