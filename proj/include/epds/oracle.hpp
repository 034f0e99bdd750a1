#pragma once

#include "epds/geometry.hpp"
#include "epds/projection.hpp"

#include <optional>

namespace epds {

/// Brute-force reference evaluators. Nothing here shares code with the KKT solver in
/// projection.cpp; these exist to certify it.
struct OracleConfig {
  /// Half-width of the eta box; defaults to 10 * (1 + |v|).
  std::optional<double> eta_box_halfwidth;
  /// Defaults to 2001, 201 and 51 points per axis for n_E = 1, 2, 3.
  std::optional<int> grid_points_per_dim;
  int refine_iters = 60;
};

/// Grid search over eta for the smallest |E eta| with v + E eta in the cone (either
/// branch for unions), refined by Dykstra's alternating projections and a final
/// bisection toward the best grid point so the returned vector is always feasible.
/// A Dykstra point that is feasible on its own is accepted even when the grid (box
/// doubled once) has no hit, since thin feasible sets can fall between grid points.
/// Dykstra stops early once a correction term exceeds 1e4 times the constraint offsets,
/// which only happens on an empty branch.
/// Requires n_E <= 3. Throws NoFeasiblePoint when neither yields a feasible point.
Vector oracle_project(const TangentCone& cone, const ProjectionSubspace& e, const Vector& v,
                      const OracleConfig& cfg = {});

/// Grid spacing the oracle uses along each eta axis for this input.
double oracle_grid_spacing(const ProjectionSubspace& e, const Vector& v, const OracleConfig& cfg = {});

/// Sequential tangent-cone test: corrects x + tau v back onto the set for tau = 2^-j,
/// j = 4..24, and checks the difference quotients approach v within 1e-4.
bool oracle_tangent_membership(const ConstraintSet& set, const Vector& x, const Vector& v);
bool oracle_tangent_membership(const Sector& sec, const Vector& s, const Vector& v);

/// Nearest point of the sector (exact, via projection onto the boundary rays of K and -K).
Vector nearest_sector_point(const Sector& sec, const Vector& p);

}  // namespace epds
