#pragma once

#include "epds/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace epds {

enum class ConstraintKind { affine, quadratic, user };

/// One smooth constraint h(x) >= 0 together with its gradient.
///
/// Affine: h(x) = a'x + b. Quadratic: h(x) = x'Qx + c'x + d, gradient (Q + Q')x + c.
/// User constraints carry arbitrary callbacks and cannot be serialized.
class ScalarConstraint {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;

  static ScalarConstraint affine(Vector a, double b);
  static ScalarConstraint quadratic(Matrix q, Vector c, double d);
  static ScalarConstraint user(int dim, ValueFn value, GradientFn gradient);

  [[nodiscard]] double value(const Vector& x) const { return value_(x); }
  [[nodiscard]] Vector gradient(const Vector& x) const { return gradient_(x); }
  [[nodiscard]] ConstraintKind kind() const { return kind_; }
  [[nodiscard]] int dim() const { return dim_; }

  // Coefficients, meaningful for the matching kind only.
  [[nodiscard]] const Vector& linear() const { return linear_; }
  [[nodiscard]] const Matrix& quadratic_form() const { return quad_; }
  [[nodiscard]] double offset() const { return offset_; }

 private:
  ScalarConstraint() = default;

  ConstraintKind kind_ = ConstraintKind::user;
  int dim_ = 0;
  ValueFn value_;
  GradientFn gradient_;
  Vector linear_;
  Matrix quad_;
  double offset_ = 0.0;
};

struct ActiveSet {
  std::vector<int> indices;
  double tolerance_used = 0.0;
};

struct CqReport {
  bool satisfied = true;
  int rank = 0;
  int active_count = 0;
  Vector singular_values;
};

/// Finitely generated set {x : h_i(x) >= 0 for all i}.
class ConstraintSet {
 public:
  ConstraintSet(int dim, std::vector<ScalarConstraint> constraints);

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] int size() const { return static_cast<int>(constraints_.size()); }
  [[nodiscard]] const ScalarConstraint& constraint(int i) const { return constraints_.at(i); }
  [[nodiscard]] const std::vector<ScalarConstraint>& constraints() const { return constraints_; }

  [[nodiscard]] bool contains(const Vector& x) const;
  /// Gradients of the listed constraints as matrix rows.
  [[nodiscard]] Matrix gradient_rows(const Vector& x, const std::vector<int>& indices) const;

 private:
  int dim_;
  std::vector<ScalarConstraint> constraints_;
};

/// Closed convex cone {v : A v >= 0}. Zero rows means the whole space.
class PolyhedralCone {
 public:
  PolyhedralCone(int dim, Matrix rows);
  static PolyhedralCone full(int dim) { return PolyhedralCone(dim, Matrix(0, dim)); }

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] const Matrix& rows() const { return rows_; }
  [[nodiscard]] bool contains(const Vector& v, double tol = kConeTol) const;
  /// Most negative entry of A v (zero when there are no rows).
  [[nodiscard]] double min_slack(const Vector& v) const;
  [[nodiscard]] PolyhedralCone negated() const { return PolyhedralCone(dim_, -rows_); }

 private:
  int dim_;
  Matrix rows_;
};

/// A tangent cone: either one convex polyhedral cone or, at the sector origin, the
/// non-convex union of two of them.
class TangentCone {
 public:
  explicit TangentCone(PolyhedralCone cone) : branches_{std::move(cone)} {}
  static TangentCone union_of(PolyhedralCone first, PolyhedralCone second);

  [[nodiscard]] bool convex() const { return branches_.size() == 1; }
  [[nodiscard]] int dim() const { return branches_.front().dim(); }
  [[nodiscard]] const std::vector<PolyhedralCone>& branches() const { return branches_; }
  /// The single cone; throws InvalidArgument on a union.
  [[nodiscard]] const PolyhedralCone& as_convex() const;
  [[nodiscard]] bool contains(const Vector& v, double tol = kConeTol) const;

 private:
  TangentCone() = default;
  std::vector<PolyhedralCone> branches_;
};

/// Sector {(e, u) : (u - k1 e)(u - k2 e) <= 0} = K u -K with K = {k1 e <= u <= k2 e}.
///
/// Constraint index 0 is the k1 line and index 1 the k2 line. On K they read
/// u - k1 e >= 0 and k2 e - u >= 0; on -K both signs flip.
class Sector {
 public:
  Sector(double k1, double k2);

  [[nodiscard]] double k1() const { return k1_; }
  [[nodiscard]] double k2() const { return k2_; }
  /// max(1, |k1|, |k2|)
  [[nodiscard]] double slope_bound() const;

  [[nodiscard]] double residual(const Vector& s) const;
  [[nodiscard]] bool in_k(const Vector& s) const;
  [[nodiscard]] bool in_minus_k(const Vector& s) const;
  [[nodiscard]] bool contains(const Vector& s) const { return in_k(s) || in_minus_k(s); }
  [[nodiscard]] bool is_corner(const Vector& s) const { return in_k(s) && in_minus_k(s); }

  /// K (or -K when `minus`) as a finitely generated set of two affine constraints.
  [[nodiscard]] ConstraintSet branch_set(bool minus) const;
  /// Rows of K (or -K) as a polyhedral cone.
  [[nodiscard]] PolyhedralCone branch_cone(bool minus) const;

 private:
  double k1_;
  double k2_;
};

/// Indices i with |h_i(x)| <= kActiveTol * scale * (1 + |x|).
ActiveSet active_set(const ConstraintSet& set, const Vector& x, double scale = 1.0);

CqReport check_cq(const ConstraintSet& set, const Vector& x);

TangentCone tangent_cone(const ConstraintSet& set, const Vector& x);

/// Tangent cone of a sector: T_K(s) on K \ -K, -T_K(s) on -K \ K, K u -K at the origin.
TangentCone sector_tangent_cone(const Sector& sec, const Vector& s);

/// Pullback {v : H v in low} of a tangent cone through a full-row-rank linear map.
class LiftedCone {
 public:
  LiftedCone(Matrix h, TangentCone low, Vector point);

  [[nodiscard]] const Matrix& map() const { return h_; }
  [[nodiscard]] const TangentCone& low() const { return low_; }
  [[nodiscard]] const Vector& point() const { return point_; }
  [[nodiscard]] bool contains(const Vector& v, double tol = kConeTol) const;
  /// Same cone in implicit form: each low branch's rows composed with H.
  [[nodiscard]] TangentCone composed() const;

 private:
  Matrix h_;
  TangentCone low_;
  Vector point_;
};

LiftedCone lifted_tangent_cone(const Matrix& h, const TangentCone& low_cone, const Vector& x);

/// Same constraints evaluated on H x; used to build {x : H x in D}.
ConstraintSet pullback_set(const ConstraintSet& low, const Matrix& h);

}  // namespace epds
