#include "epds/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace epds {

namespace {

constexpr int kMaxSweeps = 400000;

struct Resolved {
  double halfwidth;
  int points;
};

Resolved resolve(const OracleConfig& cfg, int ne, const Vector& v) {
  if (ne < 1 || ne > 3) {
    throw Error(ErrorCode::InvalidArgument, "oracle: n_E must be between 1 and 3");
  }
  static constexpr int kDefaultPoints[] = {0, 2001, 201, 51};
  Resolved r{cfg.eta_box_halfwidth.value_or(10.0 * (1.0 + v.norm())),
             cfg.grid_points_per_dim.value_or(kDefaultPoints[ne])};
  if (r.points < 3 || cfg.refine_iters < 1 || !(r.halfwidth > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "oracle: need >= 3 grid points, >= 1 refine pass, box > 0");
  }
  return r;
}

/// The branch in eta coordinates: slack(eta) = av + ae * eta.
struct EtaRegion {
  Vector av;
  Matrix ae;

  [[nodiscard]] bool contains(const Vector& eta) const {
    if (av.size() == 0) {
      return true;
    }
    return (av + ae * eta).minCoeff() >= -kConeTol;
  }
};

struct GridHit {
  Vector eta;
  double cost;
};

std::optional<GridHit> grid_search(const EtaRegion& region, const Matrix& gram, double halfwidth,
                                   int points) {
  const int ne = static_cast<int>(gram.rows());
  const double step = 2.0 * halfwidth / (points - 1);
  std::vector<int> idx(static_cast<std::size_t>(ne), 0);
  Vector eta(ne);
  std::optional<GridHit> best;
  while (true) {
    for (int j = 0; j < ne; ++j) {
      eta(j) = -halfwidth + step * idx[static_cast<std::size_t>(j)];
    }
    if (region.contains(eta)) {
      const double cost = eta.dot(gram * eta);
      if (!best || cost < best->cost) {
        best = GridHit{eta, cost};
      }
    }
    int j = 0;
    while (j < ne && ++idx[static_cast<std::size_t>(j)] == points) {
      idx[static_cast<std::size_t>(j)] = 0;
      ++j;
    }
    if (j == ne) {
      break;
    }
  }
  return best;
}

/// Dykstra's algorithm for the point of {y : d_i' y >= c_i} closest to the origin,
/// where y = L' eta and E'E = L L'.
Vector dykstra(const EtaRegion& region, const Matrix& gram) {
  const int ne = static_cast<int>(gram.rows());
  const Eigen::LLT<Matrix> llt(gram);
  const Matrix lt = llt.matrixU();  // L'
  // d_i' y = (ae_i L^{-T}) y ; rows of D solve D L' = ae.
  const Matrix d = lt.transpose().triangularView<Eigen::Lower>().solve(region.ae.transpose()).transpose();
  const Vector c = -region.av;

  std::vector<int> live;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    if (d.row(i).squaredNorm() > 0.0) {
      live.push_back(static_cast<int>(i));
    }
  }
  // On an empty intersection the correction terms grow by roughly the gap every sweep
  // while x cycles; a feasible instance keeps them near its multipliers.
  double scale = 1.0;
  for (int i : live) {
    scale = std::max(scale, std::abs(c(i)) / d.row(i).norm());
  }
  const double divergence = 1e4 * scale;
  Vector x = Vector::Zero(ne);
  std::vector<Vector> incr(live.size(), Vector::Zero(ne));
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    const Vector start = x;
    double moved = 0.0;  // largest change of a correction term this sweep
    for (std::size_t k = 0; k < live.size(); ++k) {
      const auto row = d.row(live[k]);
      const Vector y = x + incr[k];
      const double gap = c(live[k]) - row.dot(y);
      Vector next = y;
      if (gap > 0.0) {
        next += (gap / row.squaredNorm()) * row.transpose();
      }
      const Vector updated = y - next;
      moved = std::max(moved, (updated - incr[k]).norm());
      incr[k] = updated;
      x = next;
    }
    if (std::any_of(incr.begin(), incr.end(), [&](const Vector& q) { return q.norm() > divergence; })) {
      break;
    }
    // x alone can return to its start of sweep while the correction terms still move.
    const double tol = 1e-15 * (1.0 + x.norm());
    if ((x - start).norm() <= tol && moved <= tol) {
      break;
    }
  }
  return lt.triangularView<Eigen::Upper>().solve(x);
}

std::optional<Vector> refine(const EtaRegion& region, const Matrix& gram, const std::optional<GridHit>& hit,
                             int iters) {
  const Vector target = dykstra(region, gram);
  if (region.contains(target)) {
    return target;
  }
  if (!hit) {
    return std::nullopt;
  }
  // Feasible points on [grid point, target] form an interval starting at the grid point.
  const Vector& start = hit->eta;
  double lo = 0.0;
  double hi = 1.0;
  const Vector dir = target - start;
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (region.contains(start + mid * dir)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return Vector(start + lo * dir);
}

}  // namespace

double oracle_grid_spacing(const ProjectionSubspace& e, const Vector& v, const OracleConfig& cfg) {
  const Resolved r = resolve(cfg, e.size(), v);
  return 2.0 * r.halfwidth / (r.points - 1);
}

Vector oracle_project(const TangentCone& cone, const ProjectionSubspace& e, const Vector& v,
                      const OracleConfig& cfg) {
  if (cone.dim() != e.ambient_dim() || v.size() != cone.dim()) {
    throw Error(ErrorCode::InvalidArgument, "oracle_project: dimension mismatch");
  }
  Resolved r = resolve(cfg, e.size(), v);
  const Matrix gram = e.basis().transpose() * e.basis();

  std::vector<EtaRegion> regions;
  for (const auto& b : cone.branches()) {
    regions.push_back(EtaRegion{b.rows() * v, b.rows() * e.basis()});
  }

  // The grid certifies feasibility independently of Dykstra and anchors the final
  // bisection; thin feasible sets can slip through the grid, so a Dykstra point that is
  // feasible on its own is accepted as well.
  std::vector<std::optional<GridHit>> hits(regions.size());
  bool any = false;
  for (int attempt = 0; attempt < 2 && !any; ++attempt) {
    for (std::size_t i = 0; i < regions.size(); ++i) {
      hits[i] = grid_search(regions[i], gram, r.halfwidth, r.points);
      any = any || hits[i].has_value();
    }
    r.halfwidth *= 2.0;
  }

  std::optional<Vector> best_eta;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const std::optional<Vector> eta = refine(regions[i], gram, hits[i], cfg.refine_iters);
    if (!eta) {
      continue;
    }
    const double cost = eta->dot(gram * *eta);
    if (cost < best_cost) {
      best_cost = cost;
      best_eta = eta;
    }
  }
  if (!best_eta) {
    throw Error(ErrorCode::NoFeasiblePoint, "oracle_project: no feasible point found");
  }
  return v + e.basis() * *best_eta;
}

// ---------------------------------------------------------------------------
// Sequential tangent-cone test

namespace {

constexpr int kFirstExponent = 4;
constexpr int kLastExponent = 24;
constexpr int kTailStart = 20;

/// Moves p onto the set with minimum-norm Gauss-Newton steps on the violated constraints.
Vector correct_onto(const ConstraintSet& set, const Vector& p) {
  Vector y = p;
  for (int it = 0; it < 200; ++it) {
    std::vector<int> violated;
    const double tol = 1e-15 * (1.0 + y.norm());
    for (int i = 0; i < set.size(); ++i) {
      if (set.constraint(i).value(y) < -tol) {
        violated.push_back(i);
      }
    }
    if (violated.empty()) {
      break;
    }
    const Matrix jac = set.gradient_rows(y, violated);
    Vector r(static_cast<Eigen::Index>(violated.size()));
    for (std::size_t k = 0; k < violated.size(); ++k) {
      r(static_cast<Eigen::Index>(k)) = -set.constraint(violated[k]).value(y);
    }
    const Vector step = jac.completeOrthogonalDecomposition().solve(r);
    if (!step.allFinite() || step.norm() == 0.0) {
      break;
    }
    y += step;
  }
  return y;
}

template <typename Nearest>
bool quotients_converge(const Vector& x, const Vector& v, Nearest&& nearest) {
  double tail = 0.0;
  for (int j = kFirstExponent; j <= kLastExponent; ++j) {
    const double tau = std::ldexp(1.0, -j);
    const Vector y = nearest(Vector(x + tau * v));
    const double dist = ((y - x) / tau - v).norm();
    if (j >= kTailStart) {
      tail = std::max(tail, dist);
    }
  }
  return tail <= 1e-4 * std::max(1.0, v.norm());
}

}  // namespace

bool oracle_tangent_membership(const ConstraintSet& set, const Vector& x, const Vector& v) {
  if (!set.contains(x)) {
    throw Error(ErrorCode::NotInSet, "oracle_tangent_membership: point is not in the set");
  }
  return quotients_converge(x, v, [&](const Vector& p) { return correct_onto(set, p); });
}

Vector nearest_sector_point(const Sector& sec, const Vector& p) {
  Vector r1(2);
  r1 << 1.0, sec.k1();
  Vector r2(2);
  r2 << 1.0, sec.k2();
  r1.normalize();
  r2.normalize();
  auto onto_cone = [&](const Vector& q) -> Vector {
    if (q(1) - sec.k1() * q(0) >= 0.0 && sec.k2() * q(0) - q(1) >= 0.0) {
      return q;
    }
    Vector best = Vector::Zero(2);
    for (const Vector* r : {&r1, &r2}) {
      const Vector cand = std::max(0.0, q.dot(*r)) * *r;
      if ((cand - q).norm() < (best - q).norm()) {
        best = cand;
      }
    }
    return best;
  };
  const Vector a = onto_cone(p);
  const Vector b = -onto_cone(Vector(-p));
  return (a - p).norm() <= (b - p).norm() ? a : b;
}

bool oracle_tangent_membership(const Sector& sec, const Vector& s, const Vector& v) {
  if (!sec.contains(s)) {
    throw Error(ErrorCode::NotInSet, "oracle_tangent_membership: point is not in the sector");
  }
  return quotients_converge(s, v, [&](const Vector& p) { return nearest_sector_point(sec, p); });
}

}  // namespace epds
