#include "epds/projection.hpp"
#include "epds/suites.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace epds;
using Catch::Matchers::WithinAbs;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

PolyhedralCone orthant_cone() { return PolyhedralCone(2, Matrix::Identity(2, 2)); }

const ProjectionSubspace& vertical() {
  static const ProjectionSubspace e = ProjectionSubspace::trailing_axes(2, 1);
  return e;
}

bool near(const Vector& a, const Vector& b, double tol = 1e-12) { return (a - b).norm() <= tol; }

}  // namespace

TEST_CASE("projection subspaces validate their basis") {
  CHECK_THROWS_AS(ProjectionSubspace(Matrix::Zero(3, 1)), Error);
  Matrix dependent(3, 2);
  dependent << 1, 2, 0, 0, 0, 0;
  CHECK_THROWS_AS(ProjectionSubspace(dependent), Error);
  CHECK(ProjectionSubspace::full(4).size() == 4);
  CHECK_THAT(vertical().residual(vec({0, 3})), WithinAbs(0.0, 1e-15));
  CHECK_THAT(vertical().residual(vec({1, 3})), WithinAbs(1.0, 1e-12));
}

TEST_CASE("feasibility of v + Im E against a cone") {
  CHECK(feasible(PolyhedralCone::full(3), ProjectionSubspace::trailing_axes(3, 1), vec({-1, -1, -1})));
  const PolyhedralCone half(2, Matrix(vec({1, 0}).transpose()));
  CHECK_FALSE(feasible(half, vertical(), vec({-1, 0})));
  CHECK(feasible(half, vertical(), vec({0, -7})));

  std::mt19937_64 rng(2);
  for (int i = 0; i < 500; ++i) {
    const SectorCase c = random_sector_case(rng, i % 3);
    REQUIRE(feasible(sector_tangent_cone(c.sector, c.s), vertical(), c.w));
  }
}

TEST_CASE("project_partial basic cases") {
  const ProjectionResult free = project_partial(PolyhedralCone::full(2), vertical(), vec({3, 7}));
  CHECK(near(free.w, vec({3, 7})));
  CHECK(free.eta.norm() == 0.0);

  const ProjectionResult up = project_partial(orthant_cone(), vertical(), vec({1, -1}));
  CHECK(near(up.w, vec({1, 0})));
  CHECK_THAT(up.eta(0), WithinAbs(1.0, 1e-12));
  CHECK(up.active_indices == std::vector<int>{1});
  CHECK_THAT(up.correction_norm, WithinAbs(1.0, 1e-12));

  const ProjectionResult classical = project_partial(orthant_cone(), ProjectionSubspace::full(2), vec({-1, -2}));
  CHECK(near(classical.w, vec({0, 0})));

  CHECK_THROWS_AS(project_partial(PolyhedralCone(2, Matrix(vec({1, 0}).transpose())), vertical(), vec({-1, 0})),
                  Error);
}

TEST_CASE("sector_project examples") {
  const Sector sec(0.0, 1.0);
  CHECK(near(sector_project(sec, vec({2, 1}), vec({5, -3})).w, vec({5, -3})));

  const ProjectionResult upper = sector_project(sec, vec({1, 1}), vec({0, 1}));
  CHECK(near(upper.w, vec({0, 0})));
  CHECK(upper.branch == Branch::K);
  CHECK(upper.active_indices == std::vector<int>{1});

  const ProjectionResult corner = sector_project(sec, vec({0, 0}), vec({1, 2}));
  CHECK(near(corner.w, vec({1, 1})));
  CHECK(corner.branch == Branch::K);

  const ProjectionResult minus = sector_project(sec, vec({0, 0}), vec({-2, 1}));
  CHECK(near(minus.w, vec({-2, 0})));
  CHECK(minus.branch == Branch::minusK);

  CHECK_THROWS_AS(sector_project(sec, vec({1, 2}), vec({0, 0})), Error);
}

TEST_CASE("vstar_selector examples") {
  const Sector sec(0.0, 1.0);
  CHECK(vstar_selector(sec, 3.0, -2.0, TightConstraints{}) == -2.0);
  CHECK(vstar_selector(sec, 0.0, 1.0, tight_constraints(sec, vec({1, 1}))) == 0.0);
  CHECK(vstar_selector(sec, 1.0, 2.0, tight_constraints(sec, vec({0, 0}))) == 1.0);
  // -K lower line: s = (-1, 0), -K requires u <= k1 e, so v_u <= k1 edot.
  CHECK(vstar_selector(sec, -1.0, 0.5, tight_constraints(sec, vec({-1, 0}))) == 0.0);
}

TEST_CASE("projection properties on random instances") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g(0.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const ProjectionCase c = random_projection_case(rng, 6);
    if (!feasible(c.cone, c.e, c.v)) continue;
    ++checked;
    const ProjectionResult r = project_partial(c.cone, c.e, c.v);
    REQUIRE(c.cone.contains(r.w, 1e-9 * (1.0 + r.w.norm())));
    REQUIRE(c.e.residual(r.w - c.v) <= 1e-10 * (1.0 + c.v.norm()));

    // Minimality against random feasible competitors.
    int competitors = 0;
    for (int k = 0; k < 400 && competitors < 100; ++k) {
      Vector eta(c.e.size());
      for (Eigen::Index j = 0; j < eta.size(); ++j) eta(j) = r.eta(j) + 3.0 * g(rng);
      const Vector other = c.v + c.e.basis() * eta;
      if (!c.cone.contains(other)) continue;
      ++competitors;
      REQUIRE((other - c.v).norm() >= (r.w - c.v).norm() - 1e-9);
    }

    // Idempotence and zero correction inside the cone.
    const ProjectionResult again = project_partial(c.cone, c.e, r.w);
    REQUIRE((again.w - r.w).norm() <= 1e-9 * (1.0 + r.w.norm()));
    REQUIRE(again.correction_norm <= 1e-9 * (1.0 + r.w.norm()));

    // Every passing KKT subset yields the same point.
    for (const auto& cand : kkt_candidates(c.cone, c.e, c.v)) {
      REQUIRE((cand.w - r.w).norm() <= kUniquenessTol);
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("sector_project lands on one branch and agrees with the selector") {
  std::mt19937_64 rng(123);
  for (int i = 0; i < 3000; ++i) {
    const SectorCase c = random_sector_case(rng, i % 3);
    const ProjectionResult r = sector_project(c.sector, c.s, c.w);
    REQUIRE(r.w(0) == c.w(0));
    bool on_branch = false;
    for (bool minus : {false, true}) {
      // At the corner each branch cone; elsewhere the local (convex) tangent cone.
      if (!c.sector.is_corner(c.s) && minus != !c.sector.in_k(c.s)) continue;
      const PolyhedralCone cone = c.sector.is_corner(c.s) ? c.sector.branch_cone(minus)
                                                          : sector_tangent_cone(c.sector, c.s).as_convex();
      if (!feasible(cone, vertical(), c.w)) continue;
      const ProjectionResult b = project_partial(cone, vertical(), c.w);
      on_branch = on_branch || (b.w - r.w).norm() <= 1e-9 * (1.0 + c.w.norm());
    }
    INFO("k1=" << c.sector.k1() << " k2=" << c.sector.k2() << " s=" << c.s.transpose() << " w=" << c.w.transpose()
                << " pi=" << r.w.transpose());
    REQUIRE(on_branch);
    const double sel = vstar_selector(c.sector, c.w(0), c.w(1), tight_constraints(c.sector, c.s));
    REQUIRE_THAT(sel, WithinAbs(r.w(1), 1e-9));
  }
}
