#pragma once

#include "epds/geometry.hpp"
#include "epds/projection.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace epds {

/// SISO plant x' = f_p(x, u, w), e = G_p x.
struct Plant {
  using Dynamics = std::function<Vector(const Vector& x, double u, double w)>;

  int n = 0;
  Dynamics f_p;
  Eigen::RowVectorXd g_p;
};

/// Controller z' = f_c(z, e) with output u = z_1.
struct Controller {
  using Dynamics = std::function<Vector(const Vector& z, double e)>;

  int m = 0;
  Dynamics f_c;
};

/// Location of (e, u) in the sector; written to traces as interior / K / minusK / corner.
enum class Mode { interior, K, minusK, corner };

const char* to_string(Mode mode);
Mode classify(const Sector& sec, const Vector& s);

class ClosedLoopSystem {
 public:
  ClosedLoopSystem(Plant plant, Controller controller, Sector sector);

  [[nodiscard]] const Plant& plant() const { return plant_; }
  [[nodiscard]] const Controller& controller() const { return controller_; }
  [[nodiscard]] const Sector& sector() const { return sector_; }
  /// 2 x (n+m) output map [G_p 0; 0 e_1'].
  [[nodiscard]] const Matrix& output_map() const { return h_; }
  /// (n+m) x m basis of {0} x R^m.
  [[nodiscard]] const ProjectionSubspace& subspace() const { return e_; }
  [[nodiscard]] int state_dim() const { return plant_.n + controller_.m; }

  /// (e, u) = H xi.
  [[nodiscard]] Vector output(const Vector& xi) const { return h_ * xi; }
  [[nodiscard]] bool contains(const Vector& xi) const { return sector_.contains(output(xi)); }
  /// Unprojected field (f_p(x, z_1, w), f_c(z, G_p x)).
  [[nodiscard]] Vector unprojected(const Vector& xi, double w) const;

 private:
  Plant plant_;
  Controller controller_;
  Sector sector_;
  Matrix h_;
  ProjectionSubspace e_;
};

/// Assembles H and E; throws ZeroOutputRow when G_p = 0 and DegenerateSector when k1 >= k2.
ClosedLoopSystem build_closed_loop(Plant plant, Controller controller, double k1, double k2);
ClosedLoopSystem build_closed_loop(Plant plant, Controller controller, Sector sector);

struct RhsEvaluation {
  Vector value;        // projected field
  Vector unprojected;  // f(xi, w)
  double e = 0.0;
  double u = 0.0;
  double edot = 0.0;
  double fc1 = 0.0;
  double vstar = 0.0;
  Mode mode = Mode::interior;
  Branch branch = Branch::none;
  double correction_norm = 0.0;
};

/// Projected closed-loop field via the planar reduction: only the z_1 rate is replaced.
RhsEvaluation closed_loop_rhs(const ClosedLoopSystem& sys, const Vector& xi, double w);

struct HigsPreset {
  Controller controller;
  Sector sector;
};

/// Integrator controller z' = omega_h e kept in the sector [0, k_h].
HigsPreset higs_preset(double k_h, double omega_h);

struct GrowthReport {
  double m_prime_observed = 0.0;  // max |Pi| / (1 + |xi|)
  double c_observed = 0.0;        // max |Pi| / (max(1,|k1|,|k2|) M (1 + |xi|))
  double c_limit = 0.0;
  int samples = 0;
  std::vector<Vector> violations;              // samples with ratio above c_limit
  std::vector<Vector> precondition_failures;   // samples with |f| > M (1 + |xi|)
  [[nodiscard]] bool precondition_holds() const { return precondition_failures.empty(); }
};

/// Samples states of the closed-loop set in a ball of radius 1e3 (including boundary and
/// corner states) and checks the linear-growth bound on the projected field with w = 0.
/// c_limit defaults to max(1, |k1|, |k2|) + 1e-6.
GrowthReport growth_check(const ClosedLoopSystem& sys, double m_bound, int samples, std::uint64_t seed = 1,
                          std::optional<double> c_limit = std::nullopt);

}  // namespace epds
