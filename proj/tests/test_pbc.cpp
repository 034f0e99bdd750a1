#include "epds/oracle.hpp"
#include "epds/pbc.hpp"
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

Plant double_integrator() {
  Plant p;
  p.n = 2;
  p.g_p = Eigen::RowVectorXd(2);
  p.g_p << -1.0, 0.0;
  p.f_p = [](const Vector& x, double u, double w) -> Vector { return vec({x(1), u + w}); };
  return p;
}

Controller integrator() {
  Controller c;
  c.m = 1;
  c.f_c = [](const Vector&, double e) -> Vector { return vec({e}); };
  return c;
}

bool throws_code(auto&& fn, ErrorCode code) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

}  // namespace

TEST_CASE("build_closed_loop assembles H and E") {
  const ClosedLoopSystem sys = build_closed_loop(double_integrator(), integrator(), 0.0, 1.0);
  Matrix h(2, 3);
  h << -1, 0, 0, 0, 0, 1;
  CHECK(sys.output_map() == h);
  CHECK(sys.subspace().basis() == vec({0, 0, 1}));
  CHECK(sys.state_dim() == 3);

  Plant flat = double_integrator();
  flat.g_p.setZero();
  CHECK(throws_code([&] { build_closed_loop(flat, integrator(), 0.0, 1.0); }, ErrorCode::ZeroOutputRow));
  CHECK(throws_code([&] { build_closed_loop(double_integrator(), integrator(), 1.0, 1.0); },
                    ErrorCode::DegenerateSector));
}

TEST_CASE("closed_loop_rhs examples") {
  const ClosedLoopSystem sys = build_closed_loop(double_integrator(), integrator(), 0.0, 1.0);

  // Interior: the unprojected field.
  const RhsEvaluation in = closed_loop_rhs(sys, vec({-2, 0.3, 1}), 0.0);
  CHECK(in.value == in.unprojected);
  CHECK(in.mode == Mode::interior);
  CHECK(in.correction_norm == 0.0);

  // e = 1, u = 1, edot = 0, f_c1 = 1 -> v* = 0.
  const RhsEvaluation upper = closed_loop_rhs(sys, vec({-1, 0, 1}), 0.0);
  CHECK_THAT(upper.vstar, WithinAbs(0.0, 1e-12));
  CHECK(upper.value.head(2) == upper.unprojected.head(2));
  CHECK(upper.mode == Mode::K);
  CHECK(upper.branch == Branch::K);

  // Corner with edot = 0 and f_c1 = 0.5 requires an explicit controller rate.
  Controller half;
  half.m = 1;
  half.f_c = [](const Vector&, double) -> Vector { return vec({0.5}); };
  const ClosedLoopSystem sys2 = build_closed_loop(double_integrator(), half, 0.0, 1.0);
  const RhsEvaluation corner = closed_loop_rhs(sys2, vec({0, 0, 0}), 0.0);
  CHECK(corner.mode == Mode::corner);
  CHECK_THAT(corner.vstar, WithinAbs(0.0, 1e-12));

  CHECK(throws_code([&] { closed_loop_rhs(sys, vec({-1, 0, 3}), 0.0); }, ErrorCode::NotInSet));
}

TEST_CASE("projection only touches z_1 and preserves edot") {
  // Two controller states so that the untouched tail is non-trivial.
  Controller c2;
  c2.m = 2;
  c2.f_c = [](const Vector& z, double e) -> Vector { return vec({3.0 * e - z(1), z(0) + e}); };
  const ClosedLoopSystem sys = build_closed_loop(double_integrator(), c2, -0.5, 2.0);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    Vector xi = vec({g(rng), g(rng), 0.0, g(rng)});
    const double e = -xi(0);
    const int kind = i % 4;
    xi(2) = kind == 0 ? -0.5 * e : kind == 1 ? 2.0 * e : std::min(-0.5 * e, 2.0 * e) + 0.5 * std::abs(2.5 * e);
    if (kind == 3) xi.head(3).setZero();
    const RhsEvaluation r = closed_loop_rhs(sys, xi, g(rng));
    REQUIRE(r.value.head(2) == r.unprojected.head(2));
    REQUIRE(r.value(3) == r.unprojected(3));
    REQUIRE(sys.plant().g_p.dot(r.value.head(2)) == r.edot);
  }
}

TEST_CASE("higs_preset") {
  const HigsPreset a = higs_preset(1.0, 1.0);
  CHECK(a.sector.k1() == 0.0);
  CHECK(a.sector.k2() == 1.0);
  CHECK(a.controller.f_c(vec({0.3}), 2.0)(0) == 2.0);

  const HigsPreset b = higs_preset(2.0, 5.0);
  CHECK(b.sector.k2() == 2.0);
  CHECK(b.controller.f_c(vec({0.0}), 2.0)(0) == 10.0);

  CHECK(throws_code([] { higs_preset(0.0, 1.0); }, ErrorCode::InvalidArgument));
  CHECK(throws_code([] { higs_preset(1.0, -1.0); }, ErrorCode::InvalidArgument));
}

TEST_CASE("planar reduction matches the lifted full-dimensional oracle") {
  const ReductionSuiteResult r = run_reduction_suite(higs_benchmark(), 300, 21);
  CHECK(r.checked == 300);
  CHECK(r.mismatches == 0);
  CHECK(r.max_discrepancy <= 1e-6);

  const ClosedLoopSystem sys = build_closed_loop(double_integrator(), integrator(), -1.0, 3.0);
  CHECK(run_reduction_suite(sys, 300, 22).mismatches == 0);
}

TEST_CASE("growth_check") {
  const ClosedLoopSystem sys = higs_benchmark();
  const double m = higs_benchmark_matrix().operatorNorm();
  const GrowthReport ok = growth_check(sys, m, 2000, 5);
  CHECK(ok.precondition_holds());
  CHECK(ok.violations.empty());
  CHECK(ok.c_observed <= 1.0 + 1e-6);

  Plant still = double_integrator();
  still.f_p = [](const Vector&, double, double) -> Vector { return Vector::Zero(2); };
  Controller idle;
  idle.m = 1;
  idle.f_c = [](const Vector&, double) -> Vector { return Vector::Zero(1); };
  const GrowthReport zero = growth_check(build_closed_loop(still, idle, 0.0, 1.0), 1e-9, 500);
  CHECK(zero.c_observed == 0.0);
  CHECK(zero.violations.empty());

  Plant superlinear = double_integrator();
  superlinear.f_p = [](const Vector& x, double, double) -> Vector { return vec({x.squaredNorm(), 0.0}); };
  const GrowthReport bad = growth_check(build_closed_loop(superlinear, integrator(), 0.0, 1.0), 1.0, 500);
  CHECK_FALSE(bad.precondition_holds());
}
