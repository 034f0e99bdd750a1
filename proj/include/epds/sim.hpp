#pragma once

#include "epds/pbc.hpp"

#include <optional>
#include <string>
#include <vector>

namespace epds {

/// One analytic piece of an input signal, evaluated in local time tau = t - start.
struct InputSegment {
  enum class Kind { constant, ramp, sinusoid, polynomial };

  double start = 0.0;
  Kind kind = Kind::constant;
  double value = 0.0;      // constant value; ramp and sinusoid offset
  double slope = 0.0;      // ramp
  double amplitude = 0.0;  // sinusoid: offset + amplitude * sin(frequency * tau + phase)
  double frequency = 0.0;
  double phase = 0.0;
  std::vector<double> coefficients;  // polynomial, lowest degree first

  [[nodiscard]] double eval_local(double tau) const;

  static InputSegment constant(double start, double value);
  static InputSegment ramp(double start, double offset, double slope);
  static InputSegment sinusoid(double start, double offset, double amplitude, double frequency, double phase);
  static InputSegment polynomial(double start, std::vector<double> coefficients);
};

const char* to_string(InputSegment::Kind kind);

/// Piecewise-continuous signal: segment k covers [start_k, start_{k+1}), the last one
/// runs to `end` (or forever). The first segment starts at 0.
class InputSignal {
 public:
  InputSignal() : InputSignal(std::vector<InputSegment>{InputSegment::constant(0.0, 0.0)}) {}
  explicit InputSignal(std::vector<InputSegment> segments, std::optional<double> end = std::nullopt);

  /// Right-continuous evaluation. Throws InvalidArgument for t < 0 and Extrapolation past `end`.
  [[nodiscard]] double eval(double t) const;
  /// Segment starts after 0.
  [[nodiscard]] std::vector<double> breakpoints() const;
  [[nodiscard]] const std::vector<InputSegment>& segments() const { return segments_; }
  [[nodiscard]] const std::optional<double>& end() const { return end_; }

 private:
  std::vector<InputSegment> segments_;
  std::optional<double> end_;
};

double eval_input(const InputSignal& sig, double t);

struct TraceRow {
  double t = 0.0;
  Vector xi;  // after drift correction
  double e = 0.0;
  double u = 0.0;
  double edot = 0.0;   // rates evaluated at (t, xi) and used for the step out of this row
  double vstar = 0.0;
  Mode mode = Mode::interior;
  double correction_norm = 0.0;
  double sector_residual = 0.0;  // (u - k1 e)(u - k2 e) of the Euler update, before correction
  bool drift_corrected = false;
};

struct Trace {
  std::vector<TraceRow> rows;

  [[nodiscard]] int steps() const { return rows.empty() ? 0 : static_cast<int>(rows.size()) - 1; }
  [[nodiscard]] double max_sector_residual() const;
  [[nodiscard]] int drift_corrections() const;
};

enum class Scheme { euler, midpoint };

struct IntegrateOptions {
  double blowup_bound = 1e12;
  Scheme scheme = Scheme::euler;
};

/// Replaces z_1 by its clamp into [min(k1 e, k2 e), max(k1 e, k2 e)] when H xi is outside the sector.
struct DriftResult {
  Vector xi;
  bool corrected = false;
};

DriftResult drift_correct(const ClosedLoopSystem& sys, const Vector& xi);

/// Fixed-step integration of the projected closed loop. Steps are shortened to land exactly
/// on every input breakpoint and on T. Throws InitialStateOutsideSet and StateExploded.
Trace integrate(const ClosedLoopSystem& sys, const Vector& xi0, const InputSignal& input, double horizon,
                double step, const IntegrateOptions& opts = {});

/// The same recurrence on chi = (xi, t) with field (Pi, 1); time is never projected.
/// Rows are reported in the same layout as `integrate`.
Trace integrate_embedded(const ClosedLoopSystem& sys, const Vector& xi0, const InputSignal& input,
                         double horizon, double step, const IntegrateOptions& opts = {});

struct ConvergenceEntry {
  double h = 0.0;
  int steps = 0;
  double max_sector_residual = 0.0;
  Vector terminal_state;
  std::optional<double> terminal_delta;  // vs. the previous h
  std::optional<std::string> error;      // e.g. StateExploded for this h
};

struct ConvergenceReport {
  std::vector<ConvergenceEntry> entries;
  /// log(r_i / r_{i+1}) / log(h_i / h_{i+1}) for successive finite, positive residuals.
  std::vector<std::optional<double>> observed_order;
};

/// Reruns `integrate` for each h (strictly decreasing).
ConvergenceReport convergence_study(const ClosedLoopSystem& sys, const Vector& xi0, const InputSignal& input,
                                    double horizon, const std::vector<double>& h_list,
                                    const IntegrateOptions& opts = {});

}  // namespace epds
