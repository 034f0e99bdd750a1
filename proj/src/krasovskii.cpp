#include "epds/krasovskii.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace epds {

namespace {

std::string subset_label(const std::vector<int>& subset) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < subset.size(); ++i) {
    os << (i ? "," : "") << subset[i];
  }
  os << '}';
  return os.str();
}

std::vector<std::vector<int>> all_subsets(const std::vector<int>& items) {
  std::vector<std::vector<int>> out;
  const std::size_t count = std::size_t{1} << items.size();
  for (std::size_t mask = 0; mask < count; ++mask) {
    std::vector<int> s;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (mask & (std::size_t{1} << i)) {
        s.push_back(items[i]);
      }
    }
    out.push_back(std::move(s));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.size() < b.size(); });
  return out;
}

bool lex_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

void collect_vertices(KrasovskiiHull& hull) {
  std::vector<std::pair<Vector, std::vector<std::string>>> merged;
  for (const auto& g : hull.generators) {
    auto it = std::find_if(merged.begin(), merged.end(), [&](const auto& m) {
      return (m.first - g.w).template lpNorm<Eigen::Infinity>() <= kDedupTol;
    });
    if (it == merged.end()) {
      merged.emplace_back(g.w, std::vector<std::string>{g.label});
    } else {
      it->second.push_back(g.label);
    }
  }
  std::sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) { return lex_less(a.first, b.first); });
  hull.vertices.clear();
  hull.labels.clear();
  for (auto& [v, labels] : merged) {
    hull.vertices.push_back(v);
    hull.labels.push_back(std::move(labels));
  }
}

}  // namespace

KrasovskiiHull krasovskii_vertices(const ConstraintSet& set, const ProjectionSubspace& e, const Vector& x,
                                   const Vector& f_at_x) {
  const CqReport cq = check_cq(set, x);
  if (!cq.satisfied) {
    throw Error(ErrorCode::CqViolated, "krasovskii_vertices: constraint qualification fails");
  }
  const ActiveSet active = active_set(set, x);
  KrasovskiiHull hull;
  hull.point = x;
  hull.field = f_at_x;
  for (const auto& subset : all_subsets(active.indices)) {
    const PolyhedralCone relaxed(set.dim(), set.gradient_rows(x, subset));
    const ProjectionResult r = project_partial(relaxed, e, f_at_x);
    hull.generators.push_back(HullGenerator{subset_label(subset), subset, r.w, r.correction_norm});
  }
  collect_vertices(hull);
  return hull;
}

KrasovskiiHull sector_krasovskii_vertices(const Sector& sec, const Vector& s, const Vector& w) {
  if (!sec.contains(s)) {
    throw Error(ErrorCode::NotInSet, "sector_krasovskii_vertices: point is not in the sector");
  }
  static const ProjectionSubspace vertical = ProjectionSubspace::trailing_axes(2, 1);
  KrasovskiiHull hull;
  hull.point = s;
  hull.field = w;

  auto add = [&](const std::string& label, const PolyhedralCone& cone, std::vector<int> subset = {}) {
    if (!feasible(cone, vertical, w)) {
      return;
    }
    const ProjectionResult r = project_partial(cone, vertical, w);
    hull.generators.push_back(HullGenerator{label, std::move(subset), r.w, r.correction_norm});
  };
  auto line = [&](double a, double b) {
    Matrix row(1, 2);
    row << a, b;
    return PolyhedralCone(2, row);
  };

  if (sec.is_corner(s)) {
    const double k1 = sec.k1();
    const double k2 = sec.k2();
    add("R2", PolyhedralCone::full(2));
    add("K:k2-line", line(k2, -1.0));        // v_u <= k2 v_e
    add("K:k1-line", line(-k1, 1.0));        // v_u >= k1 v_e
    add("-K:k2-line", line(-k2, 1.0));       // v_u >= k2 v_e
    add("-K:k1-line", line(k1, -1.0));       // v_u <= k1 v_e
    add("K", sec.branch_cone(false));
    add("-K", sec.branch_cone(true));
    const ProjectionResult u = sector_project(sec, s, w);
    hull.generators.push_back(HullGenerator{"K|-K", {}, u.w, u.correction_norm});
  } else {
    const bool minus = !sec.in_k(s);
    const ConstraintSet branch = sec.branch_set(minus);
    const ActiveSet active = active_set(branch, s);
    for (const auto& subset : all_subsets(active.indices)) {
      add((minus ? "-K" : "K") + subset_label(subset), PolyhedralCone(2, branch.gradient_rows(s, subset)), subset);
    }
  }
  collect_vertices(hull);
  return hull;
}

VerificationReport verify_equality(const KrasovskiiHull& hull, const TangentCone& cone, const Vector& pi,
                                   double simplex_resolution) {
  if (!(simplex_resolution > 0.0) || simplex_resolution > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "verify_equality: resolution must lie in (0, 1]");
  }
  if (hull.vertices.empty()) {
    throw Error(ErrorCode::InvalidArgument, "verify_equality: empty hull");
  }
  VerificationReport report;
  report.point = hull.point;
  report.field = hull.field;
  report.vertices = hull.vertices;
  report.resolution = simplex_resolution;

  const int steps = static_cast<int>(std::lround(1.0 / simplex_resolution));
  const int nv = static_cast<int>(hull.vertices.size());
  const double combos = std::exp(std::lgamma(steps + nv) - std::lgamma(steps + 1) - std::lgamma(nv));
  if (combos > 2e8) {
    throw Error(ErrorCode::InvalidArgument, "verify_equality: simplex grid too large for this hull");
  }

  std::map<std::vector<long long>, Vector> witnesses;
  const double inv = 1.0 / steps;
  // Depth-first walk over integer weights summing to `steps`.
  auto visit = [&](auto&& self, int vertex, int remaining, const Vector& acc) -> void {
    if (vertex == nv - 1) {
      const Vector c = acc + (remaining * inv) * hull.vertices[static_cast<std::size_t>(vertex)];
      ++report.combinations_checked;
      if (!cone.contains(c)) {
        return;
      }
      ++report.combinations_in_cone;
      if ((c - pi).norm() > kWitnessDistance) {
        std::vector<long long> key(static_cast<std::size_t>(c.size()));
        for (Eigen::Index i = 0; i < c.size(); ++i) {
          key[static_cast<std::size_t>(i)] = std::llround(c(i) * 1e9);
        }
        witnesses.emplace(std::move(key), c);
      }
      return;
    }
    for (int k = 0; k <= remaining; ++k) {
      self(self, vertex + 1, remaining - k, acc + (k * inv) * hull.vertices[static_cast<std::size_t>(vertex)]);
    }
  };
  visit(visit, 0, steps, Vector::Zero(pi.size()));

  for (auto& [key, c] : witnesses) {
    report.witnesses.push_back(c);
  }
  report.holds = report.witnesses.empty();
  return report;
}

}  // namespace epds
