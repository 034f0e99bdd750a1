#pragma once

#include "epds/geometry.hpp"
#include "epds/projection.hpp"

#include <string>
#include <vector>

namespace epds {

/// One relaxed projection before deduplication.
struct HullGenerator {
  std::string label;             // "{}", "{0,2}" or a sector stratum name
  std::vector<int> subset;       // generating index subset (finitely generated case)
  Vector w;                      // projection onto the relaxed cone
  double correction_norm = 0.0;
};

/// Finite vertex description of the Krasovskii regularization at one point.
struct KrasovskiiHull {
  Vector point;
  Vector field;
  std::vector<Vector> vertices;                    // sorted lexicographically
  std::vector<std::vector<std::string>> labels;    // generators of each vertex
  std::vector<HullGenerator> generators;
};

struct VerificationReport {
  bool holds = true;
  Vector point;
  Vector field;
  std::vector<Vector> vertices;
  std::vector<Vector> witnesses;
  double resolution = 0.0;
  long combinations_checked = 0;
  long combinations_in_cone = 0;
};

/// One vertex per subset J of J(x): the projection of f onto {v : <grad h_i, v> >= 0, i in J}.
KrasovskiiHull krasovskii_vertices(const ConstraintSet& set, const ProjectionSubspace& e, const Vector& x,
                                   const Vector& f_at_x);

/// Sector version: projections along span{(0,1)} onto the tangent cones of every stratum
/// meeting each neighbourhood of s. Infeasible strata are skipped.
KrasovskiiHull sector_krasovskii_vertices(const Sector& sec, const Vector& s, const Vector& w);

/// Scans convex combinations of the hull vertices on a barycentric grid with the given
/// step. Combinations inside the cone but farther than 1e-6 from pi are witnesses.
VerificationReport verify_equality(const KrasovskiiHull& hull, const TangentCone& cone, const Vector& pi,
                                   double simplex_resolution = 0.02);

/// Distance threshold separating a witness from the projection.
inline constexpr double kWitnessDistance = 1e-6;
/// Vertices closer than this (max-norm) are merged.
inline constexpr double kDedupTol = 1e-10;

}  // namespace epds
