#include "epds/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace epds {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotInSet: return "NotInSet";
    case ErrorCode::CqViolated: return "CqViolated";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::DegenerateKKT: return "DegenerateKKT";
    case ErrorCode::BranchContradiction: return "BranchContradiction";
    case ErrorCode::NoFeasiblePoint: return "NoFeasiblePoint";
    case ErrorCode::ZeroOutputRow: return "ZeroOutputRow";
    case ErrorCode::DegenerateSector: return "DegenerateSector";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InitialStateOutsideSet: return "InitialStateOutsideSet";
    case ErrorCode::StateExploded: return "StateExploded";
    case ErrorCode::Extrapolation: return "Extrapolation";
  }
  return "Unknown";
}

int numerical_rank(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) {
    return 0;
  }
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) {
    return 0;
  }
  const double cutoff = kRankTol * sv(0);
  return static_cast<int>((sv.array() > cutoff).count());
}

namespace {

void require_dim(const Vector& x, int dim, const char* what) {
  if (x.size() != dim) {
    std::ostringstream os;
    os << what << ": expected dimension " << dim << ", got " << x.size();
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ScalarConstraint

ScalarConstraint ScalarConstraint::affine(Vector a, double b) {
  ScalarConstraint c;
  c.kind_ = ConstraintKind::affine;
  c.dim_ = static_cast<int>(a.size());
  c.linear_ = a;
  c.offset_ = b;
  c.value_ = [a, b](const Vector& x) { return a.dot(x) + b; };
  c.gradient_ = [a](const Vector&) { return a; };
  return c;
}

ScalarConstraint ScalarConstraint::quadratic(Matrix q, Vector lin, double d) {
  if (q.rows() != q.cols() || q.rows() != lin.size()) {
    throw Error(ErrorCode::InvalidArgument, "quadratic constraint: Q must be square and match c");
  }
  ScalarConstraint c;
  c.kind_ = ConstraintKind::quadratic;
  c.dim_ = static_cast<int>(lin.size());
  c.quad_ = q;
  c.linear_ = lin;
  c.offset_ = d;
  const Matrix sym = q + q.transpose();
  c.value_ = [q, lin, d](const Vector& x) { return x.dot(q * x) + lin.dot(x) + d; };
  c.gradient_ = [sym, lin](const Vector& x) { return Vector(sym * x + lin); };
  return c;
}

ScalarConstraint ScalarConstraint::user(int dim, ValueFn value, GradientFn gradient) {
  ScalarConstraint c;
  c.kind_ = ConstraintKind::user;
  c.dim_ = dim;
  c.value_ = std::move(value);
  c.gradient_ = std::move(gradient);
  return c;
}

// ---------------------------------------------------------------------------
// ConstraintSet

ConstraintSet::ConstraintSet(int dim, std::vector<ScalarConstraint> constraints)
    : dim_(dim), constraints_(std::move(constraints)) {
  if (dim_ <= 0) {
    throw Error(ErrorCode::InvalidArgument, "constraint set dimension must be positive");
  }
  for (const auto& c : constraints_) {
    if (c.dim() != dim_) {
      throw Error(ErrorCode::InvalidArgument, "constraint dimension does not match set dimension");
    }
  }
}

bool ConstraintSet::contains(const Vector& x) const {
  require_dim(x, dim_, "ConstraintSet::contains");
  const double tol = scaled_tolerance(kMembershipTol, x);
  return std::all_of(constraints_.begin(), constraints_.end(),
                     [&](const ScalarConstraint& c) { return c.value(x) >= -tol; });
}

Matrix ConstraintSet::gradient_rows(const Vector& x, const std::vector<int>& indices) const {
  Matrix rows(static_cast<Eigen::Index>(indices.size()), dim_);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    rows.row(static_cast<Eigen::Index>(r)) = constraint(indices[r]).gradient(x).transpose();
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Cones

PolyhedralCone::PolyhedralCone(int dim, Matrix rows) : dim_(dim), rows_(std::move(rows)) {
  if (dim_ <= 0 || rows_.cols() != dim_) {
    throw Error(ErrorCode::InvalidArgument, "polyhedral cone rows do not match dimension");
  }
}

bool PolyhedralCone::contains(const Vector& v, double tol) const {
  return min_slack(v) >= -tol;
}

double PolyhedralCone::min_slack(const Vector& v) const {
  require_dim(v, dim_, "PolyhedralCone");
  if (rows_.rows() == 0) {
    return 0.0;
  }
  return (rows_ * v).minCoeff();
}

TangentCone TangentCone::union_of(PolyhedralCone first, PolyhedralCone second) {
  if (first.dim() != second.dim()) {
    throw Error(ErrorCode::InvalidArgument, "union branches must share a dimension");
  }
  TangentCone t;
  t.branches_ = {std::move(first), std::move(second)};
  return t;
}

const PolyhedralCone& TangentCone::as_convex() const {
  if (!convex()) {
    throw Error(ErrorCode::InvalidArgument, "expected a convex cone, got a union");
  }
  return branches_.front();
}

bool TangentCone::contains(const Vector& v, double tol) const {
  return std::any_of(branches_.begin(), branches_.end(),
                     [&](const PolyhedralCone& c) { return c.contains(v, tol); });
}

// ---------------------------------------------------------------------------
// Sector

Sector::Sector(double k1, double k2) : k1_(k1), k2_(k2) {
  if (!std::isfinite(k1) || !std::isfinite(k2) || !(k1 < k2)) {
    std::ostringstream os;
    os << "sector requires finite k1 < k2, got k1=" << k1 << " k2=" << k2;
    throw Error(ErrorCode::DegenerateSector, os.str());
  }
  // span{(0,1)} meets the sector only at the origin, and every vertical line meets it.
  Vector up(2);
  up << 0.0, 1.0;
  Vector below_k1(2);
  below_k1 << 1.0, k1_;
  if (contains(up) || contains(Vector(-up)) || !contains(below_k1)) {
    throw Error(ErrorCode::DegenerateSector, "sector fails the structural conditions on span{(0,1)}");
  }
}

double Sector::slope_bound() const { return std::max({1.0, std::abs(k1_), std::abs(k2_)}); }

double Sector::residual(const Vector& s) const {
  require_dim(s, 2, "Sector");
  const double e = s(0);
  const double u = s(1);
  return (u - k1_ * e) * (u - k2_ * e);
}

bool Sector::in_k(const Vector& s) const {
  require_dim(s, 2, "Sector");
  const double tol = scaled_tolerance(kMembershipTol, s);
  return s(1) - k1_ * s(0) >= -tol && k2_ * s(0) - s(1) >= -tol;
}

bool Sector::in_minus_k(const Vector& s) const {
  require_dim(s, 2, "Sector");
  const double tol = scaled_tolerance(kMembershipTol, s);
  return k1_ * s(0) - s(1) >= -tol && s(1) - k2_ * s(0) >= -tol;
}

ConstraintSet Sector::branch_set(bool minus) const {
  const double sign = minus ? -1.0 : 1.0;
  Vector lower(2);
  lower << -k1_, 1.0;
  Vector upper(2);
  upper << k2_, -1.0;
  return ConstraintSet(2, {ScalarConstraint::affine(sign * lower, 0.0),
                           ScalarConstraint::affine(sign * upper, 0.0)});
}

PolyhedralCone Sector::branch_cone(bool minus) const {
  Matrix rows(2, 2);
  rows << -k1_, 1.0, k2_, -1.0;
  return PolyhedralCone(2, minus ? Matrix(-rows) : rows);
}

// ---------------------------------------------------------------------------
// Operations

ActiveSet active_set(const ConstraintSet& set, const Vector& x, double scale) {
  if (scale < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "active_set: scale must be nonnegative");
  }
  if (!set.contains(x)) {
    throw Error(ErrorCode::NotInSet, "active_set: point is not in the constraint set");
  }
  ActiveSet out;
  out.tolerance_used = kActiveTol * scale * (1.0 + x.norm());
  for (int i = 0; i < set.size(); ++i) {
    if (std::abs(set.constraint(i).value(x)) <= out.tolerance_used) {
      out.indices.push_back(i);
    }
  }
  return out;
}

CqReport check_cq(const ConstraintSet& set, const Vector& x) {
  const ActiveSet active = active_set(set, x);
  CqReport report;
  report.active_count = static_cast<int>(active.indices.size());
  if (active.indices.empty()) {
    return report;
  }
  const Matrix grads = set.gradient_rows(x, active.indices);
  Eigen::JacobiSVD<Matrix> svd(grads);
  report.singular_values = svd.singularValues();
  report.rank = numerical_rank(grads);
  report.satisfied = report.rank == report.active_count;
  return report;
}

TangentCone tangent_cone(const ConstraintSet& set, const Vector& x) {
  const CqReport cq = check_cq(set, x);
  if (!cq.satisfied) {
    std::ostringstream os;
    os << "tangent_cone: constraint qualification fails (rank " << cq.rank << " of "
       << cq.active_count << " active gradients)";
    throw Error(ErrorCode::CqViolated, os.str());
  }
  const ActiveSet active = active_set(set, x);
  return TangentCone(PolyhedralCone(set.dim(), set.gradient_rows(x, active.indices)));
}

TangentCone sector_tangent_cone(const Sector& sec, const Vector& s) {
  const bool k = sec.in_k(s);
  const bool minus_k = sec.in_minus_k(s);
  if (!k && !minus_k) {
    throw Error(ErrorCode::NotInSet, "sector_tangent_cone: point is not in the sector");
  }
  if (k && minus_k) {
    return TangentCone::union_of(sec.branch_cone(false), sec.branch_cone(true));
  }
  // Away from the origin at most one constraint of the local branch is active.
  const ConstraintSet branch = sec.branch_set(minus_k);
  const ActiveSet active = active_set(branch, s);
  return TangentCone(PolyhedralCone(2, branch.gradient_rows(s, active.indices)));
}

LiftedCone::LiftedCone(Matrix h, TangentCone low, Vector point)
    : h_(std::move(h)), low_(std::move(low)), point_(std::move(point)) {}

bool LiftedCone::contains(const Vector& v, double tol) const {
  require_dim(v, static_cast<int>(h_.cols()), "LiftedCone");
  return low_.contains(h_ * v, tol);
}

TangentCone LiftedCone::composed() const {
  const int n = static_cast<int>(h_.cols());
  std::vector<PolyhedralCone> parts;
  for (const auto& b : low_.branches()) {
    parts.emplace_back(n, b.rows() * h_);
  }
  if (parts.size() == 1) {
    return TangentCone(std::move(parts.front()));
  }
  return TangentCone::union_of(std::move(parts[0]), std::move(parts[1]));
}

LiftedCone lifted_tangent_cone(const Matrix& h, const TangentCone& low_cone, const Vector& x) {
  if (h.rows() != low_cone.dim() || x.size() != h.cols()) {
    throw Error(ErrorCode::InvalidArgument, "lifted_tangent_cone: dimension mismatch");
  }
  if (h.rows() > h.cols() || numerical_rank(h) != h.rows()) {
    throw Error(ErrorCode::RankDeficient, "lifted_tangent_cone: H is not full row rank");
  }
  return LiftedCone(h, low_cone, x);
}

ConstraintSet pullback_set(const ConstraintSet& low, const Matrix& h) {
  if (h.rows() != low.dim()) {
    throw Error(ErrorCode::InvalidArgument, "pullback_set: H rows must match the set dimension");
  }
  const int n = static_cast<int>(h.cols());
  std::vector<ScalarConstraint> lifted;
  for (const auto& c : low.constraints()) {
    lifted.push_back(ScalarConstraint::user(
        n, [c, h](const Vector& x) { return c.value(h * x); },
        [c, h](const Vector& x) { return Vector(h.transpose() * c.gradient(h * x)); }));
  }
  return ConstraintSet(n, std::move(lifted));
}

}  // namespace epds
