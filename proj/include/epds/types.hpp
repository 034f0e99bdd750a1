#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace epds {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Active-set tolerance, applied as kActiveTol * (1 + |x|).
inline constexpr double kActiveTol = 1e-9;
/// Set-membership tolerance, applied as kMembershipTol * (1 + |x|).
inline constexpr double kMembershipTol = 1e-9;
/// Absolute tolerance for cone membership (A v >= -kConeTol).
inline constexpr double kConeTol = 1e-10;
/// Relative singular-value cutoff used for every rank decision.
inline constexpr double kRankTol = 1e-10;

inline double scaled_tolerance(double base, const Vector& x) { return base * (1.0 + x.norm()); }

enum class ErrorCode {
  NotInSet,
  CqViolated,
  RankDeficient,
  Infeasible,
  DegenerateKKT,
  BranchContradiction,
  NoFeasiblePoint,
  ZeroOutputRow,
  DegenerateSector,
  InvalidArgument,
  InitialStateOutsideSet,
  StateExploded,
  Extrapolation,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Number of singular values above kRankTol * sigma_max. Zero for empty or all-zero matrices.
int numerical_rank(const Matrix& m);

}  // namespace epds
