// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include "epds/krasovskii.hpp"
#include "epds/oracle.hpp"
#include "epds/sim.hpp"
#include "epds/suites.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>

using namespace epds;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

// Shared by criteria 1 and 2.
const ProjectionSuiteResult& projection_suite(double* runtime = nullptr) {
  static double elapsed = 0.0;
  static const ProjectionSuiteResult res = [] {
    const auto t0 = std::chrono::steady_clock::now();
    ProjectionSuiteResult r = run_projection_suite(10000, 1, 6, 1000);
    elapsed = seconds_since(t0);
    return r;
  }();
  if (runtime) *runtime = elapsed;
  return res;
}

Outcome criterion1() {
  double runtime = 0.0;
  const ProjectionSuiteResult& r = projection_suite(&runtime);
  const bool ok = r.checked >= 10000 && r.mismatches == 0 && r.solver_errors == 0 &&
                  r.max_discrepancy <= kOracleAgreement && runtime <= 300.0;
  return {ok, fmt("%d instances, %d mismatches, %d solver errors, max |w - w_oracle| = %.3g, %.1f s", r.checked,
                  r.mismatches, r.solver_errors, r.max_discrepancy, runtime)};
}

Outcome criterion2() {
  const ProjectionSuiteResult& r = projection_suite();
  const bool ok = r.checked >= 10000 && r.uniqueness_failures == 0 && r.sector_origin_instances >= 1000 &&
                  r.branch_contradictions == 0 && r.sector_origin_max_discrepancy <= kOracleAgreement;
  return {ok, fmt("%d uniqueness failures; %d sector-origin instances, %d branch contradictions, "
                  "max |w - w_oracle| at the origin %.3g",
                  r.uniqueness_failures, r.sector_origin_instances, r.branch_contradictions,
                  r.sector_origin_max_discrepancy)};
}

Outcome criterion3() {
  const KrasovskiiSuiteResult r = run_krasovskii_suite(1000, 1, true);
  const bool ok = r.checked == 1000 && r.holds_coarse == r.checked && r.holds_fine == r.checked &&
                  r.grid_disagreements == 0;
  return {ok, fmt("%d instances, holds at 0.02: %d, at 0.01: %d, grid disagreements %d", r.checked, r.holds_coarse,
                  r.holds_fine, r.grid_disagreements)};
}

Outcome criterion4() {
  const Sector sec(0.0, 1.0);
  const Vector origin = Vector::Zero(2);
  const Vector w = vec2(1.0, 2.0);
  const KrasovskiiHull hull = sector_krasovskii_vertices(sec, origin, w);

  // Re-derive each stratum's vertex with the brute-force oracle.
  const ProjectionSubspace vertical = ProjectionSubspace::trailing_axes(2, 1);
  static const std::map<std::string, std::pair<double, double>> lines = {
      {"K:k2-line", {1.0, -1.0}}, {"K:k1-line", {0.0, 1.0}}, {"-K:k2-line", {-1.0, 1.0}}, {"-K:k1-line", {0.0, -1.0}}};
  double stratum_gap = 0.0;
  for (const auto& g : hull.generators) {
    TangentCone cone(PolyhedralCone::full(2));
    if (g.label == "K|-K") {
      cone = sector_tangent_cone(sec, origin);
    } else if (g.label == "K") {
      cone = TangentCone(sec.branch_cone(false));
    } else if (g.label == "-K") {
      cone = TangentCone(sec.branch_cone(true));
    } else if (g.label != "R2") {
      const auto& [a, b] = lines.at(g.label);
      Matrix row(1, 2);
      row << a, b;
      cone = TangentCone(PolyhedralCone(2, row));
    }
    stratum_gap = std::max(stratum_gap, (oracle_project(cone, vertical, w) - g.w).norm());
  }

  bool vertices_ok = hull.vertices.size() == 3;
  for (const Vector& p : {vec2(1, 2), vec2(1, 1), vec2(1, 0)}) {
    bool found = false;
    for (const Vector& v : hull.vertices) found = found || (v - p).norm() <= 1e-9;
    vertices_ok = vertices_ok && found;
  }
  const Vector pi = sector_project(sec, origin, w).w;
  const VerificationReport rep = verify_equality(hull, sector_tangent_cone(sec, origin), pi, 0.02);
  bool witness = false;
  for (const Vector& x : rep.witnesses) witness = witness || (x - vec2(1, 0)).norm() <= 1e-9;

  // edot = 0 at the corner and elsewhere on the sector: equality holds.
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  int zero_edot = 0;
  int zero_edot_fail = 0;
  for (int i = 0; i < 200; ++i) {
    const double k1 = std::uniform_real_distribution<double>(-3.0, 3.0)(rng);
    const Sector sk(k1, k1 + std::uniform_real_distribution<double>(0.1, 4.0)(rng));
    const double e = i % 2 == 0 ? 0.0 : u(rng);
    const Vector s = vec2(e, (i % 4 == 1 ? sk.k1() : sk.k2()) * e);
    const Vector wz = vec2(0.0, u(rng));
    const KrasovskiiHull h = sector_krasovskii_vertices(sk, s, wz);
    const VerificationReport r = verify_equality(h, sector_tangent_cone(sk, s), sector_project(sk, s, wz).w, 0.02);
    ++zero_edot;
    zero_edot_fail += r.holds ? 0 : 1;
  }

  const bool ok = vertices_ok && stratum_gap <= 1e-6 && (pi - vec2(1, 1)).norm() <= 1e-9 && !rep.holds && witness &&
                  zero_edot_fail == 0;
  return {ok, fmt("%zu vertices (expected set matched: %s), oracle gap per stratum %.2g, Pi = (%.3g, %.3g), "
                  "holds = %s, witness (1,0): %s; edot = 0: %d/%d hold",
                  hull.vertices.size(), vertices_ok ? "yes" : "no", stratum_gap, pi(0), pi(1),
                  rep.holds ? "true" : "false", witness ? "yes" : "no", zero_edot - zero_edot_fail, zero_edot)};
}

Outcome criterion5() {
  const VstarSuiteResult r = run_vstar_suite(10000, 1);
  const bool ok = r.checked == 10000 && r.not_in_candidates == 0 && r.selector_disagreements == 0;
  return {ok, fmt("%d states, %d outside {fc1, k1 edot, k2 edot}, %d selector disagreements (max gap %.2g)",
                  r.checked, r.not_in_candidates, r.selector_disagreements, r.max_selector_gap)};
}

Outcome criterion6() {
  const ClosedLoopSystem sys = higs_benchmark();
  const double m = higs_benchmark_matrix().operatorNorm();
  const GrowthReport r = growth_check(sys, m, 10000, 1);
  const double kappa = std::max({1.0, std::abs(sys.sector().k1()), std::abs(sys.sector().k2())});
  const bool ok = r.samples == 10000 && r.precondition_holds() && r.violations.empty() && r.c_observed <= kappa + 1e-6;
  return {ok, fmt("M = %.6g, %d samples, %zu violations, c = %.6g (limit %.6g)", m, r.samples, r.violations.size(),
                  r.c_observed, kappa + 1e-6)};
}

Outcome criterion7() {
  const ClosedLoopSystem sys = higs_benchmark();
  Vector xi0(3);
  xi0 << -1.0, 0.0, 0.5;
  double res[3];
  double worst_runtime = 0.0;
  bool invariant = true;
  const double hs[3] = {1e-2, 5e-3, 2.5e-3};
  for (int i = 0; i < 3; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const Trace tr = integrate(sys, xi0, InputSignal(), 20.0, hs[i]);
    worst_runtime = std::max(worst_runtime, seconds_since(t0));
    res[i] = tr.max_sector_residual();
    for (const auto& row : tr.rows) invariant = invariant && sys.contains(row.xi);
  }
  const double r1 = res[0] / res[1];
  const double r2 = res[1] / res[2];
  const bool ok = invariant && r1 >= 1.8 && r2 >= 1.8 && worst_runtime <= 10.0;
  return {ok, fmt("residuals %.4g, %.4g, %.4g; ratios %.3g, %.3g; stored states in set: %s; slowest run %.2f s",
                  res[0], res[1], res[2], r1, r2, invariant ? "yes" : "no", worst_runtime)};
}

Outcome criterion8() {
  Plant p;
  p.n = 1;
  p.g_p = Eigen::RowVectorXd::Ones(1);
  p.f_p = [](const Vector&, double, double) -> Vector { return Vector::Ones(1); };
  Controller c;
  c.m = 1;
  c.f_c = [](const Vector&, double) -> Vector { return Vector::Constant(1, 2.0); };
  const ClosedLoopSystem sys = build_closed_loop(p, c, 0.0, 1.0);
  double worst = 0.0;
  bool ok = true;
  for (double h : {1e-2, 1e-3}) {
    const Trace tr = integrate(sys, Vector::Zero(2), InputSignal(), 5.0, h);
    for (const auto& row : tr.rows) {
      const double gap = std::abs(row.u - row.t);
      worst = std::max(worst, gap / h);
      ok = ok && gap <= 2.0 * h;
    }
  }
  return {ok, fmt("max |u(t_k) - t_k| / h = %.3g (limit 2)", worst)};
}

Outcome criterion9() {
  const ReductionSuiteResult r = run_reduction_suite(higs_benchmark(), 1000, 1);
  const bool ok = r.checked == 1000 && r.mismatches == 0 && r.max_discrepancy <= 1e-6;
  return {ok, fmt("%d boundary states, %d mismatches, max discrepancy %.3g", r.checked, r.mismatches,
                  r.max_discrepancy)};
}

Outcome criterion10() {
  const ClosedLoopSystem sys = higs_benchmark();
  Vector xi0(3);
  xi0 << -1.0, 0.0, 0.5;
  const double breaks[2] = {1.2345, 7.5};
  const InputSignal in({InputSegment::constant(0.0, 0.0), InputSegment::constant(breaks[0], 2.0),
                        InputSegment::sinusoid(breaks[1], 0.5, 1.0, 3.0, 0.0)});
  const Trace a = integrate(sys, xi0, in, 10.0, 0.01);
  const Trace b = integrate_embedded(sys, xi0, in, 10.0, 0.01);
  bool identical = a.rows.size() == b.rows.size();
  for (std::size_t k = 0; identical && k < a.rows.size(); ++k) {
    const TraceRow& x = a.rows[k];
    const TraceRow& y = b.rows[k];
    identical = x.t == y.t && x.xi == y.xi && x.e == y.e && x.u == y.u && x.edot == y.edot && x.vstar == y.vstar &&
                x.mode == y.mode && x.correction_norm == y.correction_norm && x.sector_residual == y.sector_residual &&
                x.drift_corrected == y.drift_corrected;
  }
  int landed = 0;
  for (double t : breaks) {
    for (const auto& row : a.rows) landed += row.t == t ? 1 : 0;
  }
  const bool ends = !a.rows.empty() && a.rows.back().t == 10.0;
  const bool ok = identical && landed == 2 && ends;
  return {ok, fmt("%zu rows, bitwise identical: %s, breakpoint rows %d/2, final t exact: %s", a.rows.size(),
                  identical ? "yes" : "no", landed, ends ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"projection-oracle equivalence", criterion1},
      {"uniqueness of the projection", criterion2},
      {"Krasovskii equality, finitely generated sets", criterion3},
      {"sector counterexample at the corner", criterion4},
      {"piecewise v* selection", criterion5},
      {"linear growth on the HIGS benchmark", criterion6},
      {"forward invariance and residual decay", criterion7},
      {"tracking from the corner", criterion8},
      {"planar reduction equivalence", criterion9},
      {"piecewise-continuous input segmentation", criterion10},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
