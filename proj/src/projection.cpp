#include "epds/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace epds {

const char* to_string(Branch b) {
  switch (b) {
    case Branch::none: return "none";
    case Branch::K: return "K";
    case Branch::minusK: return "minusK";
  }
  return "none";
}

ProjectionSubspace::ProjectionSubspace(Matrix basis) : basis_(std::move(basis)) {
  if (basis_.cols() < 1 || basis_.rows() < basis_.cols()) {
    throw Error(ErrorCode::InvalidArgument, "projection subspace needs 1 <= n_E <= n columns");
  }
  if (numerical_rank(basis_) != basis_.cols()) {
    throw Error(ErrorCode::RankDeficient, "projection subspace basis is not full column rank");
  }
}

ProjectionSubspace ProjectionSubspace::trailing_axes(int dim, int count) {
  Matrix e = Matrix::Zero(dim, count);
  e.bottomRows(count).setIdentity();
  return ProjectionSubspace(std::move(e));
}

double ProjectionSubspace::residual(const Vector& d) const {
  const Vector coeff = basis_.colPivHouseholderQr().solve(d);
  return (d - basis_ * coeff).norm();
}

namespace {

constexpr double kDualTol = 1e-10;
constexpr double kPivotTol = 1e-12;

/// Rows of the cone normalized to unit length; all-zero rows are dropped since they
/// never constrain anything. `index` maps back to the original row numbers.
struct NormalizedRows {
  Matrix rows;
  std::vector<int> index;
};

NormalizedRows normalize(const Matrix& a) {
  NormalizedRows out;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (a.row(i).norm() > 0.0) {
      keep.push_back(i);
    }
  }
  out.rows.resize(static_cast<Eigen::Index>(keep.size()), a.cols());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const auto i = keep[r];
    out.rows.row(static_cast<Eigen::Index>(r)) = a.row(i) / a.row(i).norm();
    out.index.push_back(static_cast<int>(i));
  }
  return out;
}

/// Phase-1 simplex with Bland's rule: is there x with B x >= c?
///
/// Free x is split as x+ - x-, each row gets a surplus s >= 0 (B x - s = c). Rows with
/// c < 0 are negated so s starts basic; the remaining rows get an artificial variable.
bool linear_feasible(const Matrix& b, const Vector& c) {
  const int m = static_cast<int>(b.rows());
  const int n = static_cast<int>(b.cols());
  if (m == 0) {
    return true;
  }
  int artificial = 0;
  for (int i = 0; i < m; ++i) {
    if (c(i) >= 0.0) {
      ++artificial;
    }
  }
  const int cols = 2 * n + m + artificial;
  Matrix tab = Matrix::Zero(m, cols + 1);
  std::vector<int> basis(static_cast<std::size_t>(m));
  Vector cost = Vector::Zero(cols);
  int next_art = 2 * n + m;
  for (int i = 0; i < m; ++i) {
    const double sign = c(i) < 0.0 ? -1.0 : 1.0;
    tab.block(i, 0, 1, n) = sign * b.row(i);
    tab.block(i, n, 1, n) = -sign * b.row(i);
    tab(i, 2 * n + i) = -sign;
    tab(i, cols) = sign * c(i);
    if (c(i) < 0.0) {
      basis[static_cast<std::size_t>(i)] = 2 * n + i;
    } else {
      tab(i, next_art) = 1.0;
      cost(next_art) = 1.0;
      basis[static_cast<std::size_t>(i)] = next_art++;
    }
  }

  for (int iter = 0; iter < 10000; ++iter) {
    int enter = -1;
    for (int j = 0; j < cols; ++j) {
      double reduced = cost(j);
      for (int i = 0; i < m; ++i) {
        reduced -= cost(basis[static_cast<std::size_t>(i)]) * tab(i, j);
      }
      if (reduced < -kPivotTol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) {
      break;
    }
    int leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      if (tab(i, enter) > kPivotTol) {
        const double ratio = tab(i, cols) / tab(i, enter);
        if (ratio < best_ratio - kPivotTol ||
            (std::abs(ratio - best_ratio) <= kPivotTol && leave >= 0 &&
             basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          best_ratio = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) {
      break;  // phase-1 objective is bounded below; cannot happen
    }
    tab.row(leave) /= tab(leave, enter);
    for (int i = 0; i < m; ++i) {
      if (i != leave && tab(i, enter) != 0.0) {
        tab.row(i) -= tab(i, enter) * tab.row(leave);
      }
    }
    basis[static_cast<std::size_t>(leave)] = enter;
  }

  double infeasibility = 0.0;
  for (int i = 0; i < m; ++i) {
    infeasibility += cost(basis[static_cast<std::size_t>(i)]) * tab(i, cols);
  }
  return infeasibility <= kConeTol * (1.0 + c.lpNorm<Eigen::Infinity>());
}

struct Problem {
  NormalizedRows rows;
  Matrix b;     // normalized rows times E
  Vector c;     // -normalized rows times v
  Matrix gram;  // E'E
};

Problem make_problem(const PolyhedralCone& cone, const ProjectionSubspace& e, const Vector& v) {
  if (cone.dim() != e.ambient_dim() || v.size() != cone.dim()) {
    throw Error(ErrorCode::InvalidArgument, "projection: cone, subspace and vector dimensions differ");
  }
  Problem p;
  p.rows = normalize(cone.rows());
  p.b = p.rows.rows * e.basis();
  p.c = -(p.rows.rows * v);
  p.gram = e.basis().transpose() * e.basis();
  return p;
}

/// Lexicographic enumeration of k-subsets of {0..m-1}, smallest subsets first.
template <typename Visit>
bool for_each_subset(int m, int max_size, Visit&& visit) {
  for (int k = 0; k <= std::min(m, max_size); ++k) {
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
      idx[static_cast<std::size_t>(i)] = i;
    }
    while (true) {
      if (visit(idx)) {
        return true;
      }
      int pos = k - 1;
      while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == m - k + pos) {
        --pos;
      }
      if (pos < 0) {
        break;
      }
      ++idx[static_cast<std::size_t>(pos)];
      for (int j = pos + 1; j < k; ++j) {
        idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
      }
    }
  }
  return false;
}

/// Solves the equality-constrained KKT system for one subset and applies both tests.
bool try_subset(const Problem& p, const Vector& v, const std::vector<int>& subset, KktCandidate& out) {
  const int ne = static_cast<int>(p.gram.rows());
  const int k = static_cast<int>(subset.size());
  Matrix kkt = Matrix::Zero(ne + k, ne + k);
  Vector rhs = Vector::Zero(ne + k);
  kkt.topLeftCorner(ne, ne) = p.gram;
  for (int r = 0; r < k; ++r) {
    const auto row = p.b.row(subset[static_cast<std::size_t>(r)]);
    kkt.block(0, ne + r, ne, 1) = -row.transpose();
    kkt.block(ne + r, 0, 1, ne) = row;
    rhs(ne + r) = p.c(subset[static_cast<std::size_t>(r)]);
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(kkt);
  qr.setThreshold(kRankTol);
  if (qr.rank() != ne + k) {
    return false;
  }
  const Vector sol = qr.solve(rhs);
  const Vector eta = sol.head(ne);
  const Vector lambda = sol.tail(k);

  const double primal_tol = kConeTol * (1.0 + v.norm());
  if (p.b.rows() > 0 && (p.b * eta - p.c).minCoeff() < -primal_tol) {
    return false;
  }
  if (k > 0 && lambda.minCoeff() < -kDualTol * (1.0 + lambda.lpNorm<Eigen::Infinity>())) {
    return false;
  }
  out.eta = eta;
  out.multipliers = lambda;
  out.subset.clear();
  for (int r : subset) {
    out.subset.push_back(p.rows.index[static_cast<std::size_t>(r)]);
  }
  return true;
}

ProjectionResult to_result(const KktCandidate& cand, const ProjectionSubspace& e, const Vector& v) {
  ProjectionResult r;
  r.eta = cand.eta;
  const Vector correction = e.basis() * cand.eta;
  r.w = v + correction;
  r.correction_norm = correction.norm();
  r.active_indices = cand.subset;
  return r;
}

}  // namespace

bool feasible(const PolyhedralCone& cone, const ProjectionSubspace& e, const Vector& v) {
  const Problem p = make_problem(cone, e, v);
  return linear_feasible(p.b, p.c);
}

bool feasible(const TangentCone& cone, const ProjectionSubspace& e, const Vector& v) {
  return std::any_of(cone.branches().begin(), cone.branches().end(),
                     [&](const PolyhedralCone& b) { return feasible(b, e, v); });
}

ProjectionResult project_partial(const PolyhedralCone& cone, const ProjectionSubspace& e,
                                 const Vector& v) {
  const Problem p = make_problem(cone, e, v);
  if (!linear_feasible(p.b, p.c)) {
    throw Error(ErrorCode::Infeasible, "project_partial: cone does not meet v + Im E");
  }
  KktCandidate cand;
  const bool found = for_each_subset(static_cast<int>(p.b.rows()), e.size(),
                                     [&](const std::vector<int>& s) { return try_subset(p, v, s, cand); });
  if (!found) {
    throw Error(ErrorCode::DegenerateKKT, "project_partial: no active subset passed the KKT checks");
  }
  return to_result(cand, e, v);
}

std::vector<KktCandidate> kkt_candidates(const PolyhedralCone& cone, const ProjectionSubspace& e,
                                         const Vector& v) {
  const Problem p = make_problem(cone, e, v);
  std::vector<KktCandidate> out;
  for_each_subset(static_cast<int>(p.b.rows()), e.size(), [&](const std::vector<int>& s) {
    KktCandidate cand;
    if (try_subset(p, v, s, cand)) {
      cand.w = v + e.basis() * cand.eta;
      out.push_back(std::move(cand));
    }
    return false;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Sector path

namespace {

const ProjectionSubspace& vertical() {
  static const ProjectionSubspace e = ProjectionSubspace::trailing_axes(2, 1);
  return e;
}

/// Closed-form branch solve at the origin: u-rate clamped into [lo, hi].
ProjectionResult corner_branch(const Sector& sec, const Vector& w, Branch branch) {
  const double edot = w(0);
  const double a = sec.k1() * edot;
  const double b = sec.k2() * edot;
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  const double target = std::clamp(w(1), lo, hi);
  ProjectionResult r;
  r.branch = branch;
  r.w = w;
  r.w(1) = target;
  r.eta = Vector::Constant(1, target - w(1));
  r.correction_norm = std::abs(target - w(1));
  if (target == a) {
    r.active_indices.push_back(0);
  }
  if (target == b) {
    r.active_indices.push_back(1);
  }
  return r;
}

}  // namespace

ProjectionResult sector_project(const Sector& sec, const Vector& s, const Vector& w) {
  if (w.size() != 2) {
    throw Error(ErrorCode::InvalidArgument, "sector_project: w must be 2-dimensional");
  }
  const TangentCone cone = sector_tangent_cone(sec, s);
  if (cone.convex()) {
    ProjectionResult r = project_partial(cone.as_convex(), vertical(), w);
    const bool minus = !sec.in_k(s);
    r.branch = minus ? Branch::minusK : Branch::K;
    // Cone rows are the active lines of the branch; report line indices instead.
    const std::vector<int> lines = active_set(sec.branch_set(minus), s).indices;
    for (int& i : r.active_indices) {
      i = lines[static_cast<std::size_t>(i)];
    }
    return r;
  }

  // K admits (edot, v) iff edot >= 0, -K iff edot <= 0.
  const double edot = w(0);
  const double slack = kConeTol * (1.0 + w.norm());
  const bool k_ok = edot >= -slack;
  const bool minus_ok = edot <= slack;
  if (k_ok && minus_ok) {
    ProjectionResult rk = corner_branch(sec, w, Branch::K);
    const ProjectionResult rm = corner_branch(sec, w, Branch::minusK);
    const double gap = (rk.w - rm.w).norm();
    if (gap > 1e-9 * (1.0 + w.norm()) * sec.slope_bound()) {
      std::ostringstream os;
      os << "sector_project: K and -K branches disagree by " << gap;
      throw Error(ErrorCode::BranchContradiction, os.str());
    }
    return rk;
  }
  return corner_branch(sec, w, k_ok ? Branch::K : Branch::minusK);
}

TightConstraints tight_constraints(const Sector& sec, const Vector& s) {
  if (!sec.contains(s)) {
    throw Error(ErrorCode::NotInSet, "tight_constraints: point is not in the sector");
  }
  TightConstraints t;
  if (sec.is_corner(s)) {
    t.k1_line = t.k2_line = true;
    return t;
  }
  const bool minus = !sec.in_k(s);
  t.branch = minus ? Branch::minusK : Branch::K;
  const ActiveSet act = active_set(sec.branch_set(minus), s);
  for (int i : act.indices) {
    (i == 0 ? t.k1_line : t.k2_line) = true;
  }
  return t;
}

double vstar_selector(const Sector& sec, double edot, double fc1, const TightConstraints& active) {
  const double a = sec.k1() * edot;
  const double b = sec.k2() * edot;
  if (active.k1_line && active.k2_line) {
    return std::clamp(fc1, std::min(a, b), std::max(a, b));
  }
  const bool on_k = active.branch != Branch::minusK;
  if (active.k1_line) {
    return on_k ? std::max(fc1, a) : std::min(fc1, a);
  }
  if (active.k2_line) {
    return on_k ? std::min(fc1, b) : std::max(fc1, b);
  }
  return fc1;
}

}  // namespace epds
