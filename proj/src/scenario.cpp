#include "epds/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace epds {

using nlohmann::json;

namespace {

std::string join(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

std::string index(const std::string& parent, std::size_t i) { return parent + "[" + std::to_string(i) + "]"; }

/// Object accessor that tracks the field path and rejects unknown keys.
class Obj {
 public:
  Obj(const json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw ScenarioError(path_.empty() ? "$" : path_, "expected an object");
    }
    for (const auto& [key, _] : j_.items()) {
      if (!allowed.count(key)) {
        throw ScenarioError(join(path_, key), "unknown field");
      }
    }
  }

  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }
  [[nodiscard]] std::string field(const std::string& key) const { return join(path_, key); }

  [[nodiscard]] const json& at(const std::string& key) const {
    if (!j_.contains(key)) {
      throw ScenarioError(field(key), "missing required field");
    }
    return j_.at(key);
  }

  [[nodiscard]] double number(const std::string& key) const { return as_number(at(key), field(key)); }
  [[nodiscard]] std::optional<double> opt_number(const std::string& key) const {
    return has(key) ? std::optional<double>(number(key)) : std::nullopt;
  }
  [[nodiscard]] std::string string(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) {
      throw ScenarioError(field(key), "expected a string");
    }
    return v.get<std::string>();
  }
  [[nodiscard]] Vector vector(const std::string& key) const { return as_vector(at(key), field(key)); }
  [[nodiscard]] std::optional<Vector> opt_vector(const std::string& key) const {
    return has(key) ? std::optional<Vector>(vector(key)) : std::nullopt;
  }
  [[nodiscard]] Matrix matrix(const std::string& key) const { return as_matrix(at(key), field(key)); }
  [[nodiscard]] std::optional<Matrix> opt_matrix(const std::string& key) const {
    return has(key) ? std::optional<Matrix>(matrix(key)) : std::nullopt;
  }

  static double as_number(const json& v, const std::string& field) {
    if (!v.is_number()) {
      throw ScenarioError(field, "expected a number");
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
      throw ScenarioError(field, "expected a finite number");
    }
    return d;
  }

  static Vector as_vector(const json& v, const std::string& field) {
    if (!v.is_array() || v.empty()) {
      throw ScenarioError(field, "expected a non-empty array of numbers");
    }
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      out(static_cast<Eigen::Index>(i)) = as_number(v[i], index(field, i));
    }
    return out;
  }

  static Matrix as_matrix(const json& v, const std::string& field) {
    if (!v.is_array() || v.empty()) {
      throw ScenarioError(field, "expected a non-empty array of rows");
    }
    std::size_t cols = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Vector row = as_vector(v[i], index(field, i));
      if (i == 0) {
        cols = static_cast<std::size_t>(row.size());
      } else if (static_cast<std::size_t>(row.size()) != cols) {
        throw ScenarioError(index(field, i), "rows must all have the same length");
      }
    }
    Matrix out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.row(static_cast<Eigen::Index>(i)) = as_vector(v[i], index(field, i)).transpose();
    }
    return out;
  }

 private:
  const json& j_;
  std::string path_;
};

void require_size(const Vector& v, Eigen::Index size, const std::string& field) {
  if (v.size() != size) {
    throw ScenarioError(field, "expected " + std::to_string(size) + " entries, got " + std::to_string(v.size()));
  }
}

void require_positive(const std::optional<double>& v, const std::string& field) {
  if (v && !(*v > 0.0)) {
    throw ScenarioError(field, "must be positive");
  }
}

PlantSpec parse_plant(const json& j) {
  const Obj o(j, "plant", {"model", "A", "B", "Bw", "c", "Gp", "mass", "stiffness", "damping", "coefficient", "gain"});
  PlantSpec p;
  p.model = o.string("model");
  std::set<std::string> allowed;
  if (p.model == "linear") {
    allowed = {"model", "A", "B", "Bw", "c", "Gp"};
  } else if (p.model == "double_integrator") {
    allowed = {"model", "Gp"};
  } else if (p.model == "mass_spring_damper") {
    allowed = {"model", "Gp", "mass", "stiffness", "damping"};
  } else if (p.model == "quadratic") {
    allowed = {"model", "Gp", "coefficient", "gain"};
  } else {
    throw ScenarioError("plant.model", "unknown plant model '" + p.model + "'");
  }
  const Obj checked(j, "plant", allowed);

  p.gp = checked.opt_vector("Gp");
  if (p.model == "linear") {
    p.a = checked.matrix("A");
    const Eigen::Index n = p.a->rows();
    if (p.a->cols() != n) {
      throw ScenarioError("plant.A", "must be square");
    }
    p.b = checked.vector("B");
    require_size(*p.b, n, "plant.B");
    p.bw = checked.opt_vector("Bw");
    if (p.bw) {
      require_size(*p.bw, n, "plant.Bw");
    }
    p.c = checked.opt_vector("c");
    if (p.c) {
      require_size(*p.c, n, "plant.c");
    }
    if (!p.gp) {
      throw ScenarioError("plant.Gp", "missing required field");
    }
    require_size(*p.gp, n, "plant.Gp");
  } else if (p.model == "mass_spring_damper") {
    p.mass = checked.number("mass");
    p.stiffness = checked.number("stiffness");
    p.damping = checked.number("damping");
    require_positive(p.mass, "plant.mass");
  } else if (p.model == "quadratic") {
    p.coefficient = checked.number("coefficient");
    p.gain = checked.opt_number("gain");
  }
  if (p.gp && p.model != "linear") {
    require_size(*p.gp, p.model == "quadratic" ? 1 : 2, "plant.Gp");
  }
  if (p.gp && p.gp->isZero(0.0)) {
    throw ScenarioError("plant.Gp", "output row must be nonzero");
  }
  return p;
}

ControllerSpec parse_controller(const json& j) {
  const Obj o(j, "controller", {"model", "k_h", "omega_h", "A", "B", "c", "gain"});
  ControllerSpec c;
  c.model = o.string("model");
  std::set<std::string> allowed;
  if (c.model == "higs") {
    allowed = {"model", "k_h", "omega_h"};
  } else if (c.model == "linear") {
    allowed = {"model", "A", "B", "c"};
  } else if (c.model == "integrator") {
    allowed = {"model", "gain"};
  } else {
    throw ScenarioError("controller.model", "unknown controller model '" + c.model + "'");
  }
  const Obj checked(j, "controller", allowed);
  if (c.model == "higs") {
    c.k_h = checked.number("k_h");
    c.omega_h = checked.number("omega_h");
    require_positive(c.k_h, "controller.k_h");
    require_positive(c.omega_h, "controller.omega_h");
  } else if (c.model == "linear") {
    c.a = checked.matrix("A");
    const Eigen::Index m = c.a->rows();
    if (c.a->cols() != m) {
      throw ScenarioError("controller.A", "must be square");
    }
    c.b = checked.vector("B");
    require_size(*c.b, m, "controller.B");
    c.c = checked.opt_vector("c");
    if (c.c) {
      require_size(*c.c, m, "controller.c");
    }
  } else {
    c.gain = checked.number("gain");
  }
  return c;
}

InputSegment parse_segment(const json& j, const std::string& path) {
  const Obj o(j, path, {"start", "kind", "value", "slope", "offset", "amplitude", "frequency", "phase", "coefficients"});
  const double start = o.number("start");
  const std::string kind = o.string("kind");
  if (kind == "constant") {
    const Obj c(j, path, {"start", "kind", "value"});
    return InputSegment::constant(start, c.number("value"));
  }
  if (kind == "ramp") {
    const Obj c(j, path, {"start", "kind", "offset", "slope"});
    return InputSegment::ramp(start, c.number("offset"), c.number("slope"));
  }
  if (kind == "sinusoid") {
    const Obj c(j, path, {"start", "kind", "offset", "amplitude", "frequency", "phase"});
    return InputSegment::sinusoid(start, c.number("offset"), c.number("amplitude"), c.number("frequency"),
                                  c.number("phase"));
  }
  if (kind == "polynomial") {
    const Obj c(j, path, {"start", "kind", "coefficients"});
    const Vector coeffs = c.vector("coefficients");
    return InputSegment::polynomial(start, std::vector<double>(coeffs.data(), coeffs.data() + coeffs.size()));
  }
  throw ScenarioError(join(path, "kind"), "unknown segment kind '" + kind + "'");
}

InputSpec parse_input(const json& j) {
  const Obj o(j, "input", {"segments", "end"});
  InputSpec in;
  const json& segs = o.at("segments");
  if (!segs.is_array() || segs.empty()) {
    throw ScenarioError("input.segments", "expected a non-empty array");
  }
  for (std::size_t i = 0; i < segs.size(); ++i) {
    in.segments.push_back(parse_segment(segs[i], index("input.segments", i)));
  }
  in.end = o.opt_number("end");
  if (in.segments.front().start != 0.0) {
    throw ScenarioError("input.segments[0].start", "the first segment must start at 0");
  }
  for (std::size_t i = 1; i < in.segments.size(); ++i) {
    if (!(in.segments[i].start > in.segments[i - 1].start)) {
      throw ScenarioError(index("input.segments", i) + ".start", "segment starts must be strictly increasing");
    }
  }
  if (in.end && !(*in.end > in.segments.back().start)) {
    throw ScenarioError("input.end", "must lie after the last segment start");
  }
  return in;
}

int line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    a.push_back(v(i));
  }
  return a;
}

json to_json(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    a.push_back(to_json(Vector(m.row(i).transpose())));
  }
  return a;
}

json segment_json(const InputSegment& s) {
  json j;
  j["start"] = s.start;
  j["kind"] = to_string(s.kind);
  switch (s.kind) {
    case InputSegment::Kind::constant:
      j["value"] = s.value;
      break;
    case InputSegment::Kind::ramp:
      j["offset"] = s.value;
      j["slope"] = s.slope;
      break;
    case InputSegment::Kind::sinusoid:
      j["offset"] = s.value;
      j["amplitude"] = s.amplitude;
      j["frequency"] = s.frequency;
      j["phase"] = s.phase;
      break;
    case InputSegment::Kind::polynomial:
      j["coefficients"] = s.coefficients;
      break;
  }
  return j;
}

Vector default_gp(const PlantSpec& p) {
  if (p.gp) {
    return *p.gp;
  }
  if (p.model == "quadratic") {
    return Vector::Ones(1);
  }
  Vector g(2);
  g << -1.0, 0.0;
  return g;
}

Plant make_plant(const PlantSpec& p) {
  Plant plant;
  const Vector gp = default_gp(p);
  plant.n = static_cast<int>(gp.size());
  plant.g_p = gp.transpose();
  if (p.model == "linear") {
    const Matrix a = *p.a;
    const Vector b = *p.b;
    const Vector bw = p.bw.value_or(Vector::Zero(a.rows()));
    const Vector c = p.c.value_or(Vector::Zero(a.rows()));
    plant.f_p = [a, b, bw, c](const Vector& x, double u, double w) -> Vector { return a * x + b * u + bw * w + c; };
  } else if (p.model == "double_integrator") {
    plant.f_p = [](const Vector& x, double u, double w) -> Vector {
      Vector out(2);
      out << x(1), u + w;
      return out;
    };
  } else if (p.model == "mass_spring_damper") {
    const double m = *p.mass;
    const double k = *p.stiffness;
    const double d = *p.damping;
    plant.f_p = [m, k, d](const Vector& x, double u, double w) -> Vector {
      Vector out(2);
      out << x(1), (-k * x(0) - d * x(1) + u + w) / m;
      return out;
    };
  } else {
    const double a = *p.coefficient;
    const double g = p.gain.value_or(0.0);
    plant.f_p = [a, g](const Vector& x, double u, double w) -> Vector {
      Vector out(1);
      out << a * x(0) * x(0) + g * u + w;
      return out;
    };
  }
  return plant;
}

Controller make_controller(const ControllerSpec& c) {
  if (c.model == "higs") {
    return higs_preset(*c.k_h, *c.omega_h).controller;
  }
  Controller ctrl;
  if (c.model == "linear") {
    const Matrix a = *c.a;
    const Vector b = *c.b;
    const Vector off = c.c.value_or(Vector::Zero(a.rows()));
    ctrl.m = static_cast<int>(a.rows());
    ctrl.f_c = [a, b, off](const Vector& z, double e) -> Vector { return a * z + b * e + off; };
  } else {
    const double g = *c.gain;
    ctrl.m = 1;
    ctrl.f_c = [g](const Vector&, double e) -> Vector {
      Vector out(1);
      out << g * e;
      return out;
    };
  }
  return ctrl;
}

Sector make_sector(const Scenario& s) {
  try {
    if (s.controller.model == "higs") {
      return higs_preset(*s.controller.k_h, *s.controller.omega_h).sector;
    }
    return Sector(s.sector->k1, s.sector->k2);
  } catch (const Error& e) {
    throw ScenarioError("sector", e.what());
  }
}

}  // namespace

Scenario scenario_from_json(const json& j) {
  const Obj o(j, "", {"name", "plant", "controller", "sector", "initial_state", "input", "horizon", "step", "seed",
                      "blowup_bound", "scheme"});
  Scenario s;
  s.name = o.string("name");
  s.plant = parse_plant(o.at("plant"));
  s.controller = parse_controller(o.at("controller"));
  if (o.has("sector")) {
    const Obj sec(o.at("sector"), "sector", {"k1", "k2"});
    s.sector = SectorSpec{sec.number("k1"), sec.number("k2")};
    if (!(s.sector->k1 < s.sector->k2)) {
      throw ScenarioError("sector", "requires k1 < k2");
    }
    if (s.controller.model == "higs" && (s.sector->k1 != 0.0 || s.sector->k2 != *s.controller.k_h)) {
      throw ScenarioError("sector", "a HIGS controller fixes the sector to (0, k_h)");
    }
  } else if (s.controller.model != "higs") {
    throw ScenarioError("sector", "missing required field");
  }
  s.initial_state = o.vector("initial_state");
  if (o.has("input")) {
    s.input = parse_input(o.at("input"));
  }
  s.horizon = o.number("horizon");
  if (!(s.horizon > 0.0)) {
    throw ScenarioError("horizon", "must be positive");
  }
  s.step = o.opt_number("step");
  require_positive(s.step, "step");
  if (o.has("seed")) {
    const json& seed = o.at("seed");
    if (!seed.is_number_unsigned()) {
      throw ScenarioError("seed", "expected a nonnegative integer");
    }
    s.seed = seed.get<std::uint64_t>();
  }
  s.blowup_bound = o.opt_number("blowup_bound");
  require_positive(s.blowup_bound, "blowup_bound");
  if (o.has("scheme")) {
    s.scheme = o.string("scheme");
    if (*s.scheme != "euler" && *s.scheme != "midpoint") {
      throw ScenarioError("scheme", "expected 'euler' or 'midpoint'");
    }
  }
  if (s.input && s.input->end && !(*s.input->end > s.horizon)) {
    throw ScenarioError("input.end", "the input must be defined on [0, horizon]");
  }

  // Cross-field checks that need the assembled system.
  const ClosedLoopSystem sys = build_system(s);
  if (s.initial_state.size() != sys.state_dim()) {
    throw ScenarioError("initial_state", "expected " + std::to_string(sys.state_dim()) + " entries (plant + controller)");
  }
  if (!sys.contains(s.initial_state)) {
    throw ScenarioError("initial_state", "(e, u) = H xi0 is outside the sector");
  }
  return s;
}

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError("$", std::string("invalid JSON: ") + e.what(), line_of(text, e.byte));
  }
  return scenario_from_json(j);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ScenarioError("$", "cannot open scenario file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  json p;
  p["model"] = s.plant.model;
  if (s.plant.a) p["A"] = to_json(*s.plant.a);
  if (s.plant.b) p["B"] = to_json(*s.plant.b);
  if (s.plant.bw) p["Bw"] = to_json(*s.plant.bw);
  if (s.plant.c) p["c"] = to_json(*s.plant.c);
  if (s.plant.gp) p["Gp"] = to_json(*s.plant.gp);
  if (s.plant.mass) p["mass"] = *s.plant.mass;
  if (s.plant.stiffness) p["stiffness"] = *s.plant.stiffness;
  if (s.plant.damping) p["damping"] = *s.plant.damping;
  if (s.plant.coefficient) p["coefficient"] = *s.plant.coefficient;
  if (s.plant.gain) p["gain"] = *s.plant.gain;
  j["plant"] = p;

  json c;
  c["model"] = s.controller.model;
  if (s.controller.k_h) c["k_h"] = *s.controller.k_h;
  if (s.controller.omega_h) c["omega_h"] = *s.controller.omega_h;
  if (s.controller.a) c["A"] = to_json(*s.controller.a);
  if (s.controller.b) c["B"] = to_json(*s.controller.b);
  if (s.controller.c) c["c"] = to_json(*s.controller.c);
  if (s.controller.gain) c["gain"] = *s.controller.gain;
  j["controller"] = c;

  if (s.sector) {
    j["sector"] = {{"k1", s.sector->k1}, {"k2", s.sector->k2}};
  }
  j["initial_state"] = to_json(s.initial_state);
  if (s.input) {
    json in;
    in["segments"] = json::array();
    for (const auto& seg : s.input->segments) {
      in["segments"].push_back(segment_json(seg));
    }
    if (s.input->end) in["end"] = *s.input->end;
    j["input"] = in;
  }
  j["horizon"] = s.horizon;
  if (s.step) j["step"] = *s.step;
  if (s.seed) j["seed"] = *s.seed;
  if (s.blowup_bound) j["blowup_bound"] = *s.blowup_bound;
  if (s.scheme) j["scheme"] = *s.scheme;
  return j;
}

ClosedLoopSystem build_system(const Scenario& s) {
  Plant plant = make_plant(s.plant);
  Controller ctrl;
  try {
    ctrl = make_controller(s.controller);
  } catch (const Error& e) {
    throw ScenarioError("controller", e.what());
  }
  const Sector sector = make_sector(s);
  try {
    return build_closed_loop(std::move(plant), std::move(ctrl), sector);
  } catch (const Error& e) {
    throw ScenarioError(e.code() == ErrorCode::ZeroOutputRow ? "plant.Gp" : "plant", e.what());
  }
}

InputSignal build_input(const Scenario& s) {
  if (!s.input) {
    return InputSignal();
  }
  return InputSignal(s.input->segments, s.input->end);
}

IntegrateOptions build_options(const Scenario& s) {
  IntegrateOptions opts;
  if (s.blowup_bound) {
    opts.blowup_bound = *s.blowup_bound;
  }
  if (s.scheme && *s.scheme == "midpoint") {
    opts.scheme = Scheme::midpoint;
  }
  return opts;
}

}  // namespace epds
