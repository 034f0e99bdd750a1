#include "epds/pbc.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace epds {

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::interior:
      return "interior";
    case Mode::K:
      return "K";
    case Mode::minusK:
      return "minusK";
    case Mode::corner:
      return "corner";
  }
  return "?";
}

Mode classify(const Sector& sec, const Vector& s) {
  if (sec.is_corner(s)) {
    return Mode::corner;
  }
  const TightConstraints t = tight_constraints(sec, s);
  if (!t.k1_line && !t.k2_line) {
    return Mode::interior;
  }
  return t.branch == Branch::minusK ? Mode::minusK : Mode::K;
}

namespace {

Matrix assemble_output_map(const Plant& p, const Controller& c) {
  Matrix h = Matrix::Zero(2, p.n + c.m);
  h.block(0, 0, 1, p.n) = p.g_p;
  h(1, p.n) = 1.0;
  return h;
}

void validate(const Plant& p, const Controller& c) {
  if (p.n < 1 || p.g_p.size() != p.n || !p.f_p) {
    throw Error(ErrorCode::InvalidArgument, "plant: need n >= 1, dynamics and a 1 x n output row");
  }
  if (c.m < 1 || !c.f_c) {
    throw Error(ErrorCode::InvalidArgument, "controller: need m >= 1 and dynamics");
  }
  if (!p.g_p.allFinite() || p.g_p.isZero(0.0)) {
    throw Error(ErrorCode::ZeroOutputRow, "plant output row G_p must be nonzero");
  }
}

}  // namespace

ClosedLoopSystem::ClosedLoopSystem(Plant plant, Controller controller, Sector sector)
    : plant_((validate(plant, controller), std::move(plant))),
      controller_(std::move(controller)),
      sector_(sector),
      h_(assemble_output_map(plant_, controller_)),
      e_(ProjectionSubspace::trailing_axes(plant_.n + controller_.m, controller_.m)) {
  if (numerical_rank(h_) != 2) {
    throw Error(ErrorCode::ZeroOutputRow, "output map H is not of full row rank");
  }
}

Vector ClosedLoopSystem::unprojected(const Vector& xi, double w) const {
  if (xi.size() != state_dim()) {
    throw Error(ErrorCode::InvalidArgument, "closed loop: state has the wrong dimension");
  }
  const int n = plant_.n;
  const int m = controller_.m;
  const Vector x = xi.head(n);
  const Vector z = xi.tail(m);
  const double e = plant_.g_p.dot(x);
  Vector out(n + m);
  const Vector fp = plant_.f_p(x, z(0), w);
  const Vector fc = controller_.f_c(z, e);
  if (fp.size() != n || fc.size() != m) {
    throw Error(ErrorCode::InvalidArgument, "closed loop: dynamics returned the wrong dimension");
  }
  out << fp, fc;
  return out;
}

ClosedLoopSystem build_closed_loop(Plant plant, Controller controller, double k1, double k2) {
  return build_closed_loop(std::move(plant), std::move(controller), Sector(k1, k2));
}

ClosedLoopSystem build_closed_loop(Plant plant, Controller controller, Sector sector) {
  return ClosedLoopSystem(std::move(plant), std::move(controller), sector);
}

RhsEvaluation closed_loop_rhs(const ClosedLoopSystem& sys, const Vector& xi, double w) {
  const Vector s = sys.output(xi);
  if (!sys.sector().contains(s)) {
    throw Error(ErrorCode::NotInSet, "closed_loop_rhs: (e, u) is outside the sector");
  }
  const int n = sys.plant().n;
  RhsEvaluation r;
  r.unprojected = sys.unprojected(xi, w);
  r.e = s(0);
  r.u = s(1);
  r.edot = sys.plant().g_p.dot(r.unprojected.head(n));
  r.fc1 = r.unprojected(n);
  r.mode = classify(sys.sector(), s);

  Vector planar(2);
  planar << r.edot, r.fc1;
  const ProjectionResult p = sector_project(sys.sector(), s, planar);
  r.vstar = p.w(1);
  r.branch = p.branch;
  r.value = r.unprojected;
  r.value(n) = r.vstar;
  r.correction_norm = std::abs(r.vstar - r.fc1);
  return r;
}

HigsPreset higs_preset(double k_h, double omega_h) {
  if (!(k_h > 0.0) || !(omega_h > 0.0) || !std::isfinite(k_h) || !std::isfinite(omega_h)) {
    std::ostringstream os;
    os << "higs_preset: k_h and omega_h must be positive, got k_h=" << k_h << " omega_h=" << omega_h;
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
  Controller c;
  c.m = 1;
  c.f_c = [omega_h](const Vector&, double e) {
    Vector out(1);
    out << omega_h * e;
    return out;
  };
  return HigsPreset{std::move(c), Sector(0.0, k_h)};
}

// ---------------------------------------------------------------------------
// Growth bound

namespace {

constexpr double kSampleRadius = 1e3;

/// A state of the closed-loop set; `kind` picks interior, k1 line, k2 line or corner.
Vector sample_state(const ClosedLoopSystem& sys, std::mt19937_64& rng, int kind) {
  const int n = sys.plant().n;
  const int dim = sys.state_dim();
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Vector xi(dim);
  for (int i = 0; i < dim; ++i) {
    xi(i) = gauss(rng);
  }
  const Eigen::RowVectorXd& g = sys.plant().g_p;
  if (kind == 3) {
    // e = 0 and u = 0
    xi.head(n) -= (g.dot(xi.head(n)) / g.squaredNorm()) * g.transpose();
    xi(n) = 0.0;
  } else {
    const double e = g.dot(xi.head(n));
    const double a = sys.sector().k1() * e;
    const double b = sys.sector().k2() * e;
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    xi(n) = kind == 1 ? a : kind == 2 ? b : lo + unit(rng) * (hi - lo);
  }
  // The set is a cone, so rescaling keeps the sample inside it.
  const double radius = kSampleRadius * std::pow(unit(rng), 1.0 / dim);
  const double norm = xi.norm();
  if (norm > 0.0) {
    xi *= radius / norm;
  }
  return xi;
}

}  // namespace

GrowthReport growth_check(const ClosedLoopSystem& sys, double m_bound, int samples, std::uint64_t seed,
                          std::optional<double> c_limit) {
  if (!(m_bound > 0.0) || samples < 1) {
    throw Error(ErrorCode::InvalidArgument, "growth_check: need M > 0 and at least one sample");
  }
  const double kappa = sys.sector().slope_bound();
  GrowthReport report;
  report.c_limit = c_limit.value_or(kappa + 1e-6);
  report.samples = samples;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < samples; ++i) {
    const Vector xi = sample_state(sys, rng, i % 4);
    const RhsEvaluation r = closed_loop_rhs(sys, xi, 0.0);
    const double scale = 1.0 + xi.norm();
    if (r.unprojected.norm() > m_bound * scale * (1.0 + 1e-12)) {
      report.precondition_failures.push_back(xi);
    }
    const double ratio = r.value.norm() / scale;
    report.m_prime_observed = std::max(report.m_prime_observed, ratio);
    const double c = ratio / (kappa * m_bound);
    report.c_observed = std::max(report.c_observed, c);
    if (c > report.c_limit) {
      report.violations.push_back(xi);
    }
  }
  return report;
}

}  // namespace epds
