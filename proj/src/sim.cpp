#include "epds/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace epds {

// ---------------------------------------------------------------------------
// Inputs

double InputSegment::eval_local(double tau) const {
  switch (kind) {
    case Kind::constant:
      return value;
    case Kind::ramp:
      return value + slope * tau;
    case Kind::sinusoid:
      return value + amplitude * std::sin(frequency * tau + phase);
    case Kind::polynomial: {
      double acc = 0.0;
      for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) {
        acc = acc * tau + *it;
      }
      return acc;
    }
  }
  return 0.0;
}

InputSegment InputSegment::constant(double start, double value) {
  InputSegment s;
  s.start = start;
  s.value = value;
  return s;
}

InputSegment InputSegment::ramp(double start, double offset, double slope) {
  InputSegment s;
  s.start = start;
  s.kind = Kind::ramp;
  s.value = offset;
  s.slope = slope;
  return s;
}

InputSegment InputSegment::sinusoid(double start, double offset, double amplitude, double frequency,
                                    double phase) {
  InputSegment s;
  s.start = start;
  s.kind = Kind::sinusoid;
  s.value = offset;
  s.amplitude = amplitude;
  s.frequency = frequency;
  s.phase = phase;
  return s;
}

InputSegment InputSegment::polynomial(double start, std::vector<double> coefficients) {
  InputSegment s;
  s.start = start;
  s.kind = Kind::polynomial;
  s.coefficients = std::move(coefficients);
  return s;
}

const char* to_string(InputSegment::Kind kind) {
  switch (kind) {
    case InputSegment::Kind::constant:
      return "constant";
    case InputSegment::Kind::ramp:
      return "ramp";
    case InputSegment::Kind::sinusoid:
      return "sinusoid";
    case InputSegment::Kind::polynomial:
      return "polynomial";
  }
  return "?";
}

InputSignal::InputSignal(std::vector<InputSegment> segments, std::optional<double> end)
    : segments_(std::move(segments)), end_(end) {
  if (segments_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "input: at least one segment is required");
  }
  if (segments_.front().start != 0.0) {
    throw Error(ErrorCode::InvalidArgument, "input: the first segment must start at t = 0");
  }
  for (std::size_t i = 1; i < segments_.size(); ++i) {
    if (!(segments_[i].start > segments_[i - 1].start) || !std::isfinite(segments_[i].start)) {
      throw Error(ErrorCode::InvalidArgument, "input: segment starts must be finite and strictly increasing");
    }
  }
  if (end_ && !(*end_ > segments_.back().start)) {
    throw Error(ErrorCode::InvalidArgument, "input: end must lie after the last segment start");
  }
}

double InputSignal::eval(double t) const {
  if (!(t >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "input: evaluation time must be >= 0");
  }
  if (end_ && t >= *end_) {
    std::ostringstream os;
    os << "input: t=" << t << " is beyond the last segment (end " << *end_ << ")";
    throw Error(ErrorCode::Extrapolation, os.str());
  }
  // Last segment with start <= t; right-continuous at every start.
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                             [](double v, const InputSegment& s) { return v < s.start; });
  const InputSegment& seg = *std::prev(it);
  return seg.eval_local(t - seg.start);
}

std::vector<double> InputSignal::breakpoints() const {
  std::vector<double> out;
  for (std::size_t i = 1; i < segments_.size(); ++i) {
    out.push_back(segments_[i].start);
  }
  return out;
}

double eval_input(const InputSignal& sig, double t) { return sig.eval(t); }

// ---------------------------------------------------------------------------
// Traces

double Trace::max_sector_residual() const {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    worst = std::max(worst, r.sector_residual);
  }
  return worst;
}

int Trace::drift_corrections() const {
  return static_cast<int>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.drift_corrected; }));
}

DriftResult drift_correct(const ClosedLoopSystem& sys, const Vector& xi) {
  const Vector s = sys.output(xi);
  if (sys.sector().contains(s)) {
    return DriftResult{xi, false};
  }
  const double a = sys.sector().k1() * s(0);
  const double b = sys.sector().k2() * s(0);
  DriftResult r{xi, true};
  r.xi(sys.plant().n) = std::clamp(s(1), std::min(a, b), std::max(a, b));
  return r;
}

namespace {

/// State representation shared by the direct and the time-embedded recurrences.
/// Direct: the state is xi and time is carried alongside. Embedded: the state is
/// chi = (xi, t) and the field has a constant 1 in its last slot.
struct DirectForm {
  const ClosedLoopSystem& sys;

  [[nodiscard]] Vector make(const Vector& xi, double) const { return xi; }
  [[nodiscard]] Vector xi(const Vector& state) const { return state; }
  [[nodiscard]] double time(const Vector&, double t) const { return t; }
  [[nodiscard]] Vector field(const RhsEvaluation& r) const { return r.value; }
  [[nodiscard]] Vector with_xi(const Vector&, const Vector& xi, double) const { return xi; }
  [[nodiscard]] double advance_time(const Vector&, double t, double dt) const { return t + dt * 1.0; }
};

struct EmbeddedForm {
  const ClosedLoopSystem& sys;

  [[nodiscard]] Vector make(const Vector& xi, double t) const {
    Vector chi(xi.size() + 1);
    chi << xi, t;
    return chi;
  }
  [[nodiscard]] Vector xi(const Vector& chi) const { return chi.head(chi.size() - 1); }
  [[nodiscard]] double time(const Vector& chi, double) const { return chi(chi.size() - 1); }
  [[nodiscard]] Vector field(const RhsEvaluation& r) const {
    Vector f(r.value.size() + 1);
    f << r.value, 1.0;
    return f;
  }
  [[nodiscard]] Vector with_xi(const Vector& chi, const Vector& xi, double t) const {
    Vector out = chi;
    out.head(xi.size()) = xi;
    out(out.size() - 1) = t;
    return out;
  }
  [[nodiscard]] double advance_time(const Vector& chi, double, double) const { return chi(chi.size() - 1); }
};

void check_arguments(const ClosedLoopSystem& sys, const Vector& xi0, const InputSignal& input, double horizon,
                     double step, const IntegrateOptions& opts) {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw Error(ErrorCode::InvalidArgument, "integrate: step must be positive and finite");
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw Error(ErrorCode::InvalidArgument, "integrate: horizon must be positive and finite");
  }
  if (!(opts.blowup_bound > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "integrate: blowup bound must be positive");
  }
  if (xi0.size() != sys.state_dim() || !xi0.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "integrate: initial state has the wrong dimension or is not finite");
  }
  if (input.end() && *input.end() <= horizon) {
    throw Error(ErrorCode::Extrapolation, "integrate: input signal ends before the horizon");
  }
  if (!sys.contains(xi0)) {
    throw Error(ErrorCode::InitialStateOutsideSet, "integrate: initial (e, u) is outside the sector");
  }
}

void fill_location(const ClosedLoopSystem& sys, TraceRow& row) {
  const Vector s = sys.output(row.xi);
  row.e = s(0);
  row.u = s(1);
  row.mode = classify(sys.sector(), s);
}

void fill_rates(const RhsEvaluation& r, TraceRow& row) {
  row.edot = r.edot;
  row.vstar = r.vstar;
  row.correction_norm = r.correction_norm;
}

template <typename Form>
Trace run(const Form& form, const Vector& xi0, const InputSignal& input, double horizon, double step,
          const IntegrateOptions& opts) {
  const ClosedLoopSystem& sys = form.sys;
  check_arguments(sys, xi0, input, horizon, step, opts);

  // Targets the step sequence must hit exactly: breakpoints inside (0, T), then T.
  std::vector<double> stops;
  for (double b : input.breakpoints()) {
    if (b < horizon) {
      stops.push_back(b);
    }
  }
  stops.push_back(horizon);
  const double snap = 1e-6 * step;

  Trace trace;
  double t = 0.0;
  Vector state = form.make(xi0, t);
  {
    TraceRow row;
    row.t = 0.0;
    row.xi = xi0;
    row.sector_residual = sys.sector().residual(sys.output(xi0));
    fill_location(sys, row);
    trace.rows.push_back(std::move(row));
  }

  std::size_t next_stop = 0;
  while (true) {
    const double now = form.time(state, t);
    const Vector xi = form.xi(state);
    const RhsEvaluation r = closed_loop_rhs(sys, xi, input.eval(now));
    fill_rates(r, trace.rows.back());
    if (next_stop == stops.size()) {
      break;
    }

    double dt = step;
    bool land = false;
    const double target = stops[next_stop];
    if (now + step >= target - snap) {
      dt = target - now;
      land = true;
    }

    Vector raw;
    if (opts.scheme == Scheme::euler) {
      raw = state + dt * form.field(r);
    } else {
      Vector mid = state + (0.5 * dt) * form.field(r);
      const double t_mid = form.advance_time(mid, now, 0.5 * dt);
      mid = form.with_xi(mid, drift_correct(sys, form.xi(mid)).xi, t_mid);
      const RhsEvaluation rm = closed_loop_rhs(sys, form.xi(mid), input.eval(t_mid));
      raw = state + dt * form.field(rm);
    }
    t = land ? target : form.advance_time(raw, now, dt);
    if (land) {
      ++next_stop;
    }

    const Vector raw_xi = form.xi(raw);
    TraceRow row;
    row.t = t;
    row.sector_residual = sys.sector().residual(sys.output(raw_xi));
    const DriftResult fixed = drift_correct(sys, raw_xi);
    row.xi = fixed.xi;
    row.drift_corrected = fixed.corrected;
    if (!row.xi.allFinite() || row.xi.norm() > opts.blowup_bound) {
      std::ostringstream os;
      os << "integrate: |xi| exceeded " << opts.blowup_bound << " at t=" << t;
      throw Error(ErrorCode::StateExploded, os.str());
    }
    fill_location(sys, row);
    state = form.with_xi(raw, row.xi, t);
    trace.rows.push_back(std::move(row));
  }
  return trace;
}

}  // namespace

Trace integrate(const ClosedLoopSystem& sys, const Vector& xi0, const InputSignal& input, double horizon,
                double step, const IntegrateOptions& opts) {
  return run(DirectForm{sys}, xi0, input, horizon, step, opts);
}

Trace integrate_embedded(const ClosedLoopSystem& sys, const Vector& xi0, const InputSignal& input,
                         double horizon, double step, const IntegrateOptions& opts) {
  return run(EmbeddedForm{sys}, xi0, input, horizon, step, opts);
}

ConvergenceReport convergence_study(const ClosedLoopSystem& sys, const Vector& xi0, const InputSignal& input,
                                    double horizon, const std::vector<double>& h_list,
                                    const IntegrateOptions& opts) {
  if (h_list.empty()) {
    throw Error(ErrorCode::InvalidArgument, "convergence_study: empty step list");
  }
  for (std::size_t i = 1; i < h_list.size(); ++i) {
    if (!(h_list[i] < h_list[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "convergence_study: steps must be strictly decreasing");
    }
  }
  ConvergenceReport report;
  for (double h : h_list) {
    ConvergenceEntry entry;
    entry.h = h;
    try {
      const Trace trace = integrate(sys, xi0, input, horizon, h, opts);
      entry.steps = trace.steps();
      entry.max_sector_residual = std::max(0.0, trace.max_sector_residual());
      entry.terminal_state = trace.rows.back().xi;
      if (!report.entries.empty() && report.entries.back().terminal_state.size() > 0) {
        entry.terminal_delta = (entry.terminal_state - report.entries.back().terminal_state).norm();
      }
    } catch (const Error& err) {
      if (err.code() != ErrorCode::StateExploded) {
        throw;
      }
      entry.error = std::string(to_string(err.code())) + ": " + err.what();
    }
    report.entries.push_back(std::move(entry));
  }
  for (std::size_t i = 1; i < report.entries.size(); ++i) {
    const auto& a = report.entries[i - 1];
    const auto& b = report.entries[i];
    if (!a.error && !b.error && a.max_sector_residual > 0.0 && b.max_sector_residual > 0.0) {
      report.observed_order.push_back(std::log(a.max_sector_residual / b.max_sector_residual) /
                                      std::log(a.h / b.h));
    } else {
      report.observed_order.push_back(std::nullopt);
    }
  }
  return report;
}

}  // namespace epds
