#pragma once

#include "epds/pbc.hpp"
#include "epds/sim.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace epds {

/// Validation failure pinned to a JSON field path ("plant.Gp", "input.segments[1].start")
/// and, for syntax errors, to a line.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string field, const std::string& message, int line = 0)
      : std::runtime_error(message), field_(std::move(field)), line_(line) {}

  [[nodiscard]] const std::string& field() const { return field_; }
  [[nodiscard]] int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

struct PlantSpec {
  std::string model;  // linear | double_integrator | mass_spring_damper | quadratic
  // linear: x' = A x + B u + Bw w + c
  std::optional<Matrix> a;
  std::optional<Vector> b;
  std::optional<Vector> bw;
  std::optional<Vector> c;
  // mass_spring_damper: m x1'' = -k x1 - d x1' + u + w
  std::optional<double> mass;
  std::optional<double> stiffness;
  std::optional<double> damping;
  // quadratic (scalar): x' = coefficient x^2 + gain u + w
  std::optional<double> coefficient;
  std::optional<double> gain;
  std::optional<Vector> gp;  // required for linear, defaults to [-1, 0] / [1] otherwise
};

struct ControllerSpec {
  std::string model;  // higs | linear | integrator
  std::optional<double> k_h;
  std::optional<double> omega_h;
  // linear: z' = A z + B e + c
  std::optional<Matrix> a;
  std::optional<Vector> b;
  std::optional<Vector> c;
  // integrator: z' = gain e
  std::optional<double> gain;
};

struct SectorSpec {
  double k1 = 0.0;
  double k2 = 0.0;
};

struct InputSpec {
  std::vector<InputSegment> segments;
  std::optional<double> end;
};

struct Scenario {
  std::string name;
  PlantSpec plant;
  ControllerSpec controller;
  std::optional<SectorSpec> sector;
  Vector initial_state;
  std::optional<InputSpec> input;
  double horizon = 0.0;
  std::optional<double> step;
  std::optional<std::uint64_t> seed;
  std::optional<double> blowup_bound;
  std::optional<std::string> scheme;  // euler | midpoint
};

inline constexpr double kDefaultStep = 1e-3;

/// Parses and validates. Throws ScenarioError.
Scenario scenario_from_json(const nlohmann::json& j);
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);
nlohmann::json scenario_to_json(const Scenario& s);

/// Builds the closed loop; validation errors are reported against scenario fields.
ClosedLoopSystem build_system(const Scenario& s);
InputSignal build_input(const Scenario& s);
IntegrateOptions build_options(const Scenario& s);

}  // namespace epds
