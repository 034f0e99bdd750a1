#pragma once

#include "epds/geometry.hpp"

#include <vector>

namespace epds {

/// Subspace of admissible correction directions, Im E with E of full column rank.
class ProjectionSubspace {
 public:
  explicit ProjectionSubspace(Matrix basis);
  /// Span of the last `count` coordinate axes in R^dim.
  static ProjectionSubspace trailing_axes(int dim, int count);
  /// The whole space (classical projection).
  static ProjectionSubspace full(int dim) { return trailing_axes(dim, dim); }

  [[nodiscard]] int ambient_dim() const { return static_cast<int>(basis_.rows()); }
  [[nodiscard]] int size() const { return static_cast<int>(basis_.cols()); }
  [[nodiscard]] const Matrix& basis() const { return basis_; }
  /// Least-squares residual of fitting d by E.
  [[nodiscard]] double residual(const Vector& d) const;

 private:
  Matrix basis_;
};

enum class Branch { none, K, minusK };

const char* to_string(Branch b);

struct ProjectionResult {
  Vector w;
  Vector eta;
  std::vector<int> active_indices;
  Branch branch = Branch::none;
  double correction_norm = 0.0;
};

/// One active subset that passed both the primal and the dual-sign test.
struct KktCandidate {
  std::vector<int> subset;
  Vector eta;
  Vector multipliers;
  Vector w;
};

/// Whether cone intersects v + Im E (phase-1 linear feasibility in eta).
bool feasible(const PolyhedralCone& cone, const ProjectionSubspace& e, const Vector& v);
/// Any branch feasible.
bool feasible(const TangentCone& cone, const ProjectionSubspace& e, const Vector& v);

/// Minimal-norm correction of v into the cone along Im E, by active-subset enumeration.
ProjectionResult project_partial(const PolyhedralCone& cone, const ProjectionSubspace& e,
                                 const Vector& v);

/// Every active subset whose KKT point passes; used to check uniqueness of the optimum.
std::vector<KktCandidate> kkt_candidates(const PolyhedralCone& cone, const ProjectionSubspace& e,
                                         const Vector& v);

/// Partial projection onto the sector's tangent cone along span{(0,1)}.
ProjectionResult sector_project(const Sector& sec, const Vector& s, const Vector& w);

/// Which of the two boundary lines of the sector are tight at a point, and on which branch.
struct TightConstraints {
  bool k1_line = false;
  bool k2_line = false;
  Branch branch = Branch::K;
};

TightConstraints tight_constraints(const Sector& sec, const Vector& s);

/// Piecewise-linear selection of the projected u-rate: fc1 clamped by whichever
/// boundary lines are tight.
double vstar_selector(const Sector& sec, double edot, double fc1, const TightConstraints& active);

}  // namespace epds
