#include "epds/suites.hpp"

#include "epds/oracle.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace epds {

namespace {

constexpr std::size_t kKeepReports = 5;

std::string fmt_mat(const Matrix& m) {
  std::ostringstream os;
  os.precision(17);
  os << '[';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    os << (i ? "; " : "");
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      os << (j ? " " : "") << m(i, j);
    }
  }
  os << ']';
  return os.str();
}

std::string fmt_vec(const Vector& v) { return fmt_mat(v.transpose()); }

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

Matrix gaussian(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) {
      m(i, j) = g(rng);
    }
  }
  return m;
}

Vector gaussian_vector(std::mt19937_64& rng, int n) { return gaussian(rng, n, 1).col(0); }

double condition_ratio(const Matrix& m) {
  const Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  return s.size() == 0 || s(0) == 0.0 ? 0.0 : s(s.size() - 1) / s(0);
}

/// Basis of a random n_E-dimensional subspace; a third of the draws are coordinate axes.
ProjectionSubspace random_subspace(std::mt19937_64& rng, int n, int ne) {
  if (uniform(rng, 0.0, 1.0) < 1.0 / 3.0) {
    return ProjectionSubspace::trailing_axes(n, ne);
  }
  while (true) {
    Matrix b = gaussian(rng, n, ne);
    if (condition_ratio(b) >= 0.1) {
      return ProjectionSubspace(std::move(b));
    }
  }
}

/// No two rows of m (after normalization) are closer to parallel than |cos| = limit.
bool rows_separated(const Matrix& m, double limit) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < m.rows(); ++j) {
      const double c = m.row(i).dot(m.row(j)) / (m.row(i).norm() * m.row(j).norm());
      if (std::abs(c) > limit) {
        return false;
      }
    }
  }
  return true;
}

/// Every subset of at most `size` rows has sigma_min / sigma_max >= limit.
bool blocks_conditioned(const Matrix& m, int size, double limit) {
  const auto rows = static_cast<int>(m.rows());
  for (int mask = 1; mask < (1 << rows); ++mask) {
    const int k = __builtin_popcount(static_cast<unsigned>(mask));
    if (k < 2 || k > size) {
      continue;
    }
    Matrix sub(k, m.cols());
    for (int i = 0, r = 0; i < rows; ++i) {
      if (mask & (1 << i)) {
        sub.row(r++) = m.row(i);
      }
    }
    if (condition_ratio(sub) < limit) {
      return false;
    }
  }
  return true;
}

Sector random_sector(std::mt19937_64& rng) {
  const double k1 = uniform(rng, -3.0, 3.0);
  return Sector(k1, k1 + uniform(rng, 0.1, 4.0));
}

}  // namespace

// ---------------------------------------------------------------------------
// Instances

ProjectionCase random_projection_case(std::mt19937_64& rng, int max_dim) {
  if (max_dim < 1) {
    throw Error(ErrorCode::InvalidArgument, "random_projection_case: max_dim must be >= 1");
  }
  while (true) {
    const int n = uniform_int(rng, 1, max_dim);
    const int ne = uniform_int(rng, 1, std::min(3, n));
    const int m = uniform_int(rng, 1, 4);
    const Matrix rows = gaussian(rng, m, n);
    ProjectionSubspace e = random_subspace(rng, n, ne);
    const Matrix b = rows * e.basis();
    // Nearly dependent constraints (in R^n, or any candidate active block after
    // restriction to Im E) make the brute-force reference too slow to converge; redraw.
    if (!rows_separated(rows, 0.99) || !blocks_conditioned(b, ne, 0.02)) {
      continue;
    }
    if ((b.rowwise().norm().array() < 1e-2 * rows.rowwise().norm().array()).any()) {
      continue;
    }
    Vector v = gaussian_vector(rng, n) * uniform(rng, 0.2, 5.0);
    return ProjectionCase{PolyhedralCone(n, rows), std::move(e), std::move(v)};
  }
}

SectorCase random_sector_case(std::mt19937_64& rng, int kind) {
  const Sector sec = random_sector(rng);
  const bool minus = uniform(rng, 0.0, 1.0) < 0.5;
  Vector s = Vector::Zero(2);
  if (kind != 2) {
    const double e = (minus ? -1.0 : 1.0) * uniform(rng, 0.1, 5.0);
    s << e, (kind == 0 ? sec.k1() : sec.k2()) * e;
  }
  Vector w = gaussian_vector(rng, 2) * uniform(rng, 0.2, 5.0);
  const double tie = uniform(rng, 0.0, 1.0);
  if (tie < 0.1) {
    w(0) = 0.0;
  } else if (tie < 0.2) {
    w(1) = sec.k1() * w(0);
  } else if (tie < 0.3) {
    w(1) = sec.k2() * w(0);
  }
  return SectorCase{sec, std::move(s), std::move(w)};
}

FiniteSetCase random_finite_set_case(std::mt19937_64& rng) {
  while (true) {
    const int n = uniform_int(rng, 2, 4);
    const int active = uniform_int(rng, 0, 2);
    const int ne = uniform_int(rng, std::max(1, active), std::min(3, n));
    const int inactive = uniform_int(rng, 1, 2);
    const Vector x = gaussian_vector(rng, n);

    std::vector<ScalarConstraint> cons;
    for (int i = 0; i < active; ++i) {
      if (uniform(rng, 0.0, 1.0) < 0.5) {
        const Vector a = gaussian_vector(rng, n);
        cons.push_back(ScalarConstraint::affine(a, -a.dot(x)));
      } else {
        const Matrix g = gaussian(rng, n, n);
        const Matrix q = 0.25 * (g + g.transpose());
        const Vector c = gaussian_vector(rng, n);
        cons.push_back(ScalarConstraint::quadratic(q, c, -(x.dot(q * x) + c.dot(x))));
      }
    }
    for (int i = 0; i < inactive; ++i) {
      const Vector a = gaussian_vector(rng, n);
      cons.push_back(ScalarConstraint::affine(a, -a.dot(x) + uniform(rng, 0.5, 2.0)));
    }
    std::shuffle(cons.begin(), cons.end(), rng);
    ConstraintSet set(n, std::move(cons));
    ProjectionSubspace e = random_subspace(rng, n, ne);

    const ActiveSet act = active_set(set, x);
    if (static_cast<int>(act.indices.size()) != active) {
      continue;
    }
    if (active > 0) {
      const Matrix grads = set.gradient_rows(x, act.indices);
      if (condition_ratio(grads) < 0.05 || condition_ratio(Matrix(grads * e.basis())) < 0.05) {
        continue;
      }
    }
    Vector f = gaussian_vector(rng, n) * uniform(rng, 0.2, 5.0);
    return FiniteSetCase{std::move(set), std::move(e), x, std::move(f)};
  }
}

// ---------------------------------------------------------------------------
// Suites

ProjectionSuiteResult run_projection_suite(int count, std::uint64_t seed, int max_dim, int origin_count) {
  ProjectionSuiteResult res;
  res.requested = count;
  std::mt19937_64 rng(seed);
  const long max_draws = 50L * std::max(count, 1);
  for (long draw = 0; res.checked < count && draw < max_draws; ++draw) {
    const ProjectionCase c = random_projection_case(rng, max_dim);
    if (!feasible(c.cone, c.e, c.v)) {
      ++res.skipped_infeasible;
      continue;
    }
    ++res.checked;
    Vector solver;
    try {
      solver = project_partial(c.cone, c.e, c.v).w;
    } catch (const Error& err) {
      ++res.solver_errors;
      spdlog::debug("projection suite: solver error {}", err.what());
      continue;
    }
    Vector oracle;
    try {
      oracle = oracle_project(TangentCone(c.cone), c.e, c.v);
    } catch (const Error& err) {
      // Feasible per the simplex test but the brute-force search found nothing.
      ++res.oracle_failures;
      ++res.mismatches;
      spdlog::warn("projection suite: oracle failed ({}) on v={} rows={} E={}", err.what(),
                   fmt_vec(c.v), fmt_mat(c.cone.rows()), fmt_mat(c.e.basis()));
      continue;
    }
    const double gap = (solver - oracle).norm();
    if (gap > kOracleAgreement) {
      ++res.mismatches;
    }
    if (gap >= res.max_discrepancy) {
      res.max_discrepancy = gap;
      res.worst = ProjectionMismatch{c.v, c.cone.rows(), c.e.basis(), solver, oracle, gap};
    }
    for (const auto& cand : kkt_candidates(c.cone, c.e, c.v)) {
      if ((cand.w - solver).norm() > kUniquenessTol) {
        ++res.uniqueness_failures;
        break;
      }
    }
  }

  static const ProjectionSubspace vertical = ProjectionSubspace::trailing_axes(2, 1);
  for (int i = 0; i < origin_count; ++i) {
    const SectorCase c = random_sector_case(rng, 2);
    ++res.sector_origin_instances;
    try {
      const Vector w = sector_project(c.sector, c.s, c.w).w;
      const Vector o = oracle_project(sector_tangent_cone(c.sector, c.s), vertical, c.w);
      res.sector_origin_max_discrepancy = std::max(res.sector_origin_max_discrepancy, (w - o).norm());
    } catch (const Error& err) {
      if (err.code() != ErrorCode::BranchContradiction) {
        throw;
      }
      ++res.branch_contradictions;
    }
  }
  return res;
}

VstarSuiteResult run_vstar_suite(int count, std::uint64_t seed) {
  VstarSuiteResult res;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < count; ++i) {
    const SectorCase c = random_sector_case(rng, i % 3);
    const double edot = c.w(0);
    const double fc1 = c.w(1);
    const double vstar = sector_project(c.sector, c.s, c.w).w(1);
    const double to_set = std::min({std::abs(vstar - fc1), std::abs(vstar - c.sector.k1() * edot),
                                    std::abs(vstar - c.sector.k2() * edot)});
    if (to_set > 1e-9) {
      ++res.not_in_candidates;
    }
    const double sel = vstar_selector(c.sector, edot, fc1, tight_constraints(c.sector, c.s));
    const double gap = std::abs(sel - vstar);
    res.max_selector_gap = std::max(res.max_selector_gap, gap);
    if (gap > 1e-9) {
      ++res.selector_disagreements;
    }
    ++res.checked;
  }
  return res;
}

KrasovskiiSuiteResult run_krasovskii_suite(int count, std::uint64_t seed, bool fine) {
  KrasovskiiSuiteResult res;
  res.requested = count;
  std::mt19937_64 rng(seed);
  const long max_draws = 20L * std::max(count, 1);
  for (long draw = 0; res.checked < count && draw < max_draws; ++draw) {
    const FiniteSetCase c = random_finite_set_case(rng);
    KrasovskiiHull hull;
    Vector pi;
    TangentCone cone(PolyhedralCone::full(c.set.dim()));
    try {
      cone = tangent_cone(c.set, c.x);
      if (!feasible(cone, c.e, c.f)) {
        ++res.skipped;
        continue;
      }
      pi = project_partial(cone.as_convex(), c.e, c.f).w;
      hull = krasovskii_vertices(c.set, c.e, c.x, c.f);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::Infeasible && err.code() != ErrorCode::CqViolated) {
        throw;
      }
      ++res.skipped;
      continue;
    }
    ++res.checked;
    const VerificationReport coarse = verify_equality(hull, cone, pi, 0.02);
    res.holds_coarse += coarse.holds ? 1 : 0;
    bool agree = true;
    if (fine) {
      const VerificationReport fine_rep = verify_equality(hull, cone, pi, 0.01);
      res.holds_fine += fine_rep.holds ? 1 : 0;
      agree = fine_rep.holds == coarse.holds;
      if (!fine_rep.holds && res.failures.size() < kKeepReports) {
        res.failures.push_back(fine_rep);
      }
    }
    if (!agree) {
      ++res.grid_disagreements;
    }
    if (!coarse.holds && res.failures.size() < kKeepReports) {
      res.failures.push_back(coarse);
    }
  }
  return res;
}

bool expected_sector_equality(const Sector& sec, const Vector& s, const Vector& w) {
  return !(sec.is_corner(s) && w(0) != 0.0);
}

SectorPatternResult run_sector_pattern_suite(int count, std::uint64_t seed) {
  SectorPatternResult res;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < count; ++i) {
    const int kind = i % 5;
    Sector sec = random_sector(rng);
    Vector s = Vector::Zero(2);
    Vector w = gaussian_vector(rng, 2) * uniform(rng, 0.2, 5.0);
    const bool minus = uniform(rng, 0.0, 1.0) < 0.5;
    const double e = (minus ? -1.0 : 1.0) * uniform(rng, 0.1, 5.0);
    switch (kind) {
      case 0:  // strictly inside K or -K
        s << e, (sec.k1() + uniform(rng, 0.1, 0.9) * (sec.k2() - sec.k1())) * e;
        break;
      case 1:
        s << e, sec.k1() * e;
        break;
      case 2:
        s << e, sec.k2() * e;
        break;
      case 3: {  // corner, edot bounded away from 0; half of the fields tangent to the sector
        w(0) = (uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0) * uniform(rng, 0.1, 5.0);
        if (uniform(rng, 0.0, 1.0) < 0.5) {
          const double a = sec.k1() * w(0);
          const double b = sec.k2() * w(0);
          w(1) = std::min(a, b) + uniform(rng, 0.0, 1.0) * std::abs(b - a);
        }
        break;
      }
      default:  // corner with edot = 0
        w(0) = 0.0;
        break;
    }
    const KrasovskiiHull hull = sector_krasovskii_vertices(sec, s, w);
    const TangentCone cone = sector_tangent_cone(sec, s);
    const Vector pi = sector_project(sec, s, w).w;
    const VerificationReport rep = verify_equality(hull, cone, pi, 0.02);
    const bool expected = expected_sector_equality(sec, s, w);
    ++res.checked;
    res.expected_failures += expected ? 0 : 1;
    res.observed_failures += rep.holds ? 0 : 1;
    if (rep.holds != expected) {
      ++res.mismatches;
      if (res.mismatch_reports.size() < kKeepReports) {
        res.mismatch_reports.push_back(rep);
      }
    }
  }
  return res;
}

VerificationReport figure_counterexample(double resolution) {
  const Sector sec(0.0, 1.0);
  const Vector s = Vector::Zero(2);
  Vector w(2);
  w << 1.0, 2.0;
  const KrasovskiiHull hull = sector_krasovskii_vertices(sec, s, w);
  const Vector pi = sector_project(sec, s, w).w;
  return verify_equality(hull, sector_tangent_cone(sec, s), pi, resolution);
}

Matrix higs_benchmark_matrix() {
  Matrix a(3, 3);
  a << 0.0, 1.0, 0.0,  //
      -1.0, -1.0, 1.0,  //
      -1.0, 0.0, 0.0;
  return a;
}

ClosedLoopSystem higs_benchmark() {
  Plant p;
  p.n = 2;
  p.g_p = Eigen::RowVectorXd(2);
  p.g_p << -1.0, 0.0;
  p.f_p = [](const Vector& x, double u, double w) -> Vector {
    Vector out(2);
    out << x(1), -x(0) - x(1) + u + w;
    return out;
  };
  HigsPreset h = higs_preset(1.0, 1.0);
  return build_closed_loop(std::move(p), std::move(h.controller), h.sector);
}

ReductionSuiteResult run_reduction_suite(const ClosedLoopSystem& sys, int count, std::uint64_t seed) {
  ReductionSuiteResult res;
  std::mt19937_64 rng(seed);
  const int n = sys.plant().n;
  const Eigen::RowVectorXd& g = sys.plant().g_p;
  for (int i = 0; i < count; ++i) {
    Vector xi = gaussian_vector(rng, sys.state_dim()) * uniform(rng, 0.2, 5.0);
    const int kind = i % 3;
    if (kind == 2) {
      xi.head(n) -= (g.dot(xi.head(n)) / g.squaredNorm()) * g.transpose();
      xi(n) = 0.0;
    } else {
      xi(n) = (kind == 0 ? sys.sector().k1() : sys.sector().k2()) * g.dot(xi.head(n));
    }
    const double w = uniform(rng, -2.0, 2.0);
    const RhsEvaluation r = closed_loop_rhs(sys, xi, w);
    const LiftedCone lifted =
        lifted_tangent_cone(sys.output_map(), sector_tangent_cone(sys.sector(), sys.output(xi)), xi);
    const Vector o = oracle_project(lifted.composed(), sys.subspace(), r.unprojected);
    const double gap = (o - r.value).norm();
    res.max_discrepancy = std::max(res.max_discrepancy, gap);
    if (gap > kOracleAgreement) {
      ++res.mismatches;
    }
    ++res.checked;
  }
  return res;
}

}  // namespace epds
