#pragma once

#include "epds/krasovskii.hpp"
#include "epds/pbc.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace epds {

// ---------------------------------------------------------------------------
// Random instances

struct ProjectionCase {
  PolyhedralCone cone;
  ProjectionSubspace e;
  Vector v;
};

/// Cone with up to 4 rows in R^n (n <= max_dim), n_E <= min(3, n), well-conditioned E.
ProjectionCase random_projection_case(std::mt19937_64& rng, int max_dim);

struct SectorCase {
  Sector sector;
  Vector s;
  Vector w;  // (edot, fc1)
};

/// kind: 0 = k1 line, 1 = k2 line, 2 = corner; the branch (K or -K) is random.
SectorCase random_sector_case(std::mt19937_64& rng, int kind);

struct FiniteSetCase {
  ConstraintSet set;
  ProjectionSubspace e;
  Vector x;
  Vector f;
};

/// Finitely generated set with affine and quadratic constraints, CQ at x and |J(x)| <= 2.
FiniteSetCase random_finite_set_case(std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Suites

struct ProjectionMismatch {
  Vector v;
  Matrix rows;
  Matrix basis;
  Vector solver;
  Vector oracle;
  double discrepancy = 0.0;
};

struct ProjectionSuiteResult {
  int requested = 0;
  int checked = 0;
  int skipped_infeasible = 0;
  int mismatches = 0;
  int solver_errors = 0;
  int oracle_failures = 0;  // counted as mismatches too
  int uniqueness_failures = 0;  // distinct passing KKT points differing by more than 1e-9
  double max_discrepancy = 0.0;
  std::optional<ProjectionMismatch> worst;
  int sector_origin_instances = 0;
  int branch_contradictions = 0;
  double sector_origin_max_discrepancy = 0.0;  // vs. the oracle on K u -K
};

/// `count` feasible instances (infeasible draws are skipped and counted), each solved by
/// project_partial and oracle_project; plus `origin_count` sector-origin instances.
ProjectionSuiteResult run_projection_suite(int count, std::uint64_t seed, int max_dim, int origin_count = 1000);

inline constexpr double kOracleAgreement = 1e-6;
inline constexpr double kUniquenessTol = 1e-9;

struct VstarSuiteResult {
  int checked = 0;
  int not_in_candidates = 0;  // v* farther than 1e-9 from {fc1, k1 edot, k2 edot}
  int selector_disagreements = 0;
  double max_selector_gap = 0.0;
};

VstarSuiteResult run_vstar_suite(int count, std::uint64_t seed);

struct KrasovskiiSuiteResult {
  int requested = 0;
  int checked = 0;
  int skipped = 0;  // CQ or feasibility fails
  int holds_coarse = 0;
  int holds_fine = 0;
  int grid_disagreements = 0;
  std::vector<VerificationReport> failures;  // first few
};

/// Finitely generated instances; equality is checked at resolutions 0.02 and (if `fine`) 0.01.
KrasovskiiSuiteResult run_krasovskii_suite(int count, std::uint64_t seed, bool fine = true);

struct SectorPatternResult {
  int checked = 0;
  int expected_failures = 0;
  int observed_failures = 0;
  int mismatches = 0;
  std::vector<VerificationReport> mismatch_reports;  // first few
};

/// Expected: equality fails exactly at the corner with edot != 0.
bool expected_sector_equality(const Sector& sec, const Vector& s, const Vector& w);

/// Random sector points (interior, boundary lines, corner with and without edot = 0).
SectorPatternResult run_sector_pattern_suite(int count, std::uint64_t seed);

/// Sector (0, 1), origin, w = (1, 2).
VerificationReport figure_counterexample(double resolution = 0.02);

struct ReductionSuiteResult {
  int checked = 0;
  int mismatches = 0;
  double max_discrepancy = 0.0;
};

/// Linear closed loop: mass-spring-damper with unit parameters and G_p = [-1, 0],
/// HIGS controller with k_h = omega_h = 1.
ClosedLoopSystem higs_benchmark();
/// Matrix A of the unprojected benchmark field f(xi, 0) = A xi.
Matrix higs_benchmark_matrix();

/// closed_loop_rhs vs. oracle_project on the lifted cone at random boundary states of `sys`.
ReductionSuiteResult run_reduction_suite(const ClosedLoopSystem& sys, int count, std::uint64_t seed);

}  // namespace epds
