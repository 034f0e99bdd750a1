#include "epds/krasovskii.hpp"
#include "epds/oracle.hpp"
#include "epds/suites.hpp"

#include <catch_amalgamated.hpp>

#include <map>
#include <random>

using namespace epds;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

bool has_vertex(const std::vector<Vector>& vs, const Vector& p, double tol = 1e-9) {
  return std::any_of(vs.begin(), vs.end(), [&](const Vector& v) { return (v - p).norm() <= tol; });
}

ConstraintSet orthant() {
  return ConstraintSet(2, {ScalarConstraint::affine(vec({1, 0}), 0.0), ScalarConstraint::affine(vec({0, 1}), 0.0)});
}

}  // namespace

TEST_CASE("finitely generated hulls") {
  const auto full = ProjectionSubspace::full(2);
  const KrasovskiiHull interior = krasovskii_vertices(orthant(), full, vec({1, 1}), vec({-1, -1}));
  CHECK(interior.vertices.size() == 1);

  const KrasovskiiHull corner = krasovskii_vertices(orthant(), full, vec({0, 0}), vec({-1, -1}));
  REQUIRE(corner.vertices.size() == 4);
  for (const Vector& p : {vec({-1, -1}), vec({0, -1}), vec({-1, 0}), vec({0, 0})}) {
    CHECK(has_vertex(corner.vertices, p));
  }
  CHECK(corner.generators.size() == 4);

  const ConstraintSet half(2, {ScalarConstraint::affine(vec({1, 0}), 0.0)});
  const KrasovskiiHull dedup =
      krasovskii_vertices(half, ProjectionSubspace::trailing_axes(2, 1), vec({0, 0}), vec({1, 3}));
  CHECK(dedup.vertices.size() == 1);
  CHECK(dedup.labels.front().size() == 2);
}

TEST_CASE("sector hull at the corner") {
  const Sector sec(0.0, 1.0);
  const Vector origin = Vector::Zero(2);

  const KrasovskiiHull tangent = sector_krasovskii_vertices(sec, origin, vec({0, 1}));
  REQUIRE(tangent.vertices.size() == 2);
  CHECK(has_vertex(tangent.vertices, vec({0, 1})));
  CHECK(has_vertex(tangent.vertices, vec({0, 0})));

  const KrasovskiiHull fig = sector_krasovskii_vertices(sec, origin, vec({1, 2}));
  REQUIRE(fig.vertices.size() == 3);
  for (const Vector& p : {vec({1, 2}), vec({1, 1}), vec({1, 0})}) {
    CHECK(has_vertex(fig.vertices, p));
  }
  // -K needs v_e <= 0 and is skipped.
  for (const auto& g : fig.generators) {
    CHECK(g.label != "-K");
  }

  const KrasovskiiHull regular = sector_krasovskii_vertices(sec, vec({1, 1}), vec({0, 1}));
  REQUIRE(regular.vertices.size() == 2);
  CHECK(has_vertex(regular.vertices, vec({0, 1})));
  CHECK(has_vertex(regular.vertices, vec({0, 0})));
}

TEST_CASE("each corner stratum agrees with the brute-force oracle") {
  const Sector sec(0.0, 1.0);
  const Vector w = vec({1, 2});
  const KrasovskiiHull hull = sector_krasovskii_vertices(sec, Vector::Zero(2), w);
  const ProjectionSubspace vertical = ProjectionSubspace::trailing_axes(2, 1);
  for (const auto& g : hull.generators) {
    TangentCone cone(PolyhedralCone::full(2));
    if (g.label == "K|-K") {
      cone = sector_tangent_cone(sec, Vector::Zero(2));
    } else if (g.label == "K") {
      cone = TangentCone(sec.branch_cone(false));
    } else if (g.label == "R2") {
      cone = TangentCone(PolyhedralCone::full(2));
    } else {
      // Boundary-line strata near the corner, as {v : a v_e + b v_u >= 0}.
      static const std::map<std::string, std::pair<double, double>> lines = {
          {"K:k2-line", {1.0, -1.0}}, {"K:k1-line", {0.0, 1.0}}, {"-K:k2-line", {-1.0, 1.0}}, {"-K:k1-line", {0.0, -1.0}}};
      const auto& [a, b] = lines.at(g.label);
      Matrix row(1, 2);
      row << a, b;
      cone = TangentCone(PolyhedralCone(2, row));
    }
    INFO(g.label);
    CHECK((oracle_project(cone, vertical, w) - g.w).norm() <= 1e-6);
  }
}

TEST_CASE("verify_equality on the counterexample and on tangent fields") {
  const VerificationReport fig = figure_counterexample(0.02);
  CHECK_FALSE(fig.holds);
  CHECK(has_vertex(fig.witnesses, vec({1, 0})));
  CHECK(has_vertex(fig.witnesses, vec({1, 0.5})));

  const Sector sec(0.0, 1.0);
  const Vector origin = Vector::Zero(2);
  const Vector w = vec({0, 1});
  const KrasovskiiHull hull = sector_krasovskii_vertices(sec, origin, w);
  const VerificationReport ok = verify_equality(hull, sector_tangent_cone(sec, origin), sector_project(sec, origin, w).w);
  CHECK(ok.holds);
  CHECK(ok.combinations_in_cone >= 1);

  CHECK_THROWS_AS(verify_equality(hull, sector_tangent_cone(sec, origin), w, 0.0), Error);
}

TEST_CASE("hull invariants on random finitely generated sets") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 300; ++i) {
    const FiniteSetCase c = random_finite_set_case(rng);
    const KrasovskiiHull hull = krasovskii_vertices(c.set, c.e, c.x, c.f);
    for (const auto& v : hull.vertices) {
      REQUIRE(c.e.residual(v - c.f) <= 1e-10 * (1.0 + c.f.norm()));
    }
    // Relaxing constraints never increases the correction.
    for (const auto& a : hull.generators) {
      for (const auto& b : hull.generators) {
        const bool subset = std::includes(b.subset.begin(), b.subset.end(), a.subset.begin(), a.subset.end());
        if (subset) {
          REQUIRE(a.correction_norm <= b.correction_norm + 1e-9);
        }
      }
    }
    std::vector<Vector> sorted = hull.vertices;
    REQUIRE(std::is_sorted(sorted.begin(), sorted.end(), [](const Vector& x, const Vector& y) {
      return std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(), y.data() + y.size());
    }));
  }
}

TEST_CASE("equality pattern on small random suites") {
  const KrasovskiiSuiteResult finite = run_krasovskii_suite(60, 3);
  CHECK(finite.checked == 60);
  CHECK(finite.holds_coarse == finite.checked);
  CHECK(finite.holds_fine == finite.checked);
  CHECK(finite.grid_disagreements == 0);

  const SectorPatternResult sector = run_sector_pattern_suite(200, 4);
  CHECK(sector.mismatches == 0);
  CHECK(sector.expected_failures == 40);
}
