#include "kp/config.hpp"

#include "kp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <sstream>
#include <utility>

namespace kp {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError("config error at " + path + ": " + msg);
}

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

void reject_unknown(const json& j, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* k) { return it.key() == k; }))
      fail(path, "unknown field '" + it.key() + "'");
  }
}

double get_number(const json& j, const std::string& path, const char* key,
                  double def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(path + "." + key, "expected a finite number");
  return x;
}

long get_integer(const json& j, const std::string& path, const char* key,
                 long def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
  return v.get<long>();
}

std::string get_string(const json& j, const std::string& path, const char* key,
                       std::string def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

std::vector<double> get_number_array(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const json& e = v.at(i);
    if (!e.is_number())
      fail(path + "[" + std::to_string(i) + "]", "expected a number");
    const double x = e.get<double>();
    if (!std::isfinite(x))
      fail(path + "[" + std::to_string(i) + "]", "expected a finite number");
    out.push_back(x);
  }
  return out;
}

std::vector<std::complex<double>> get_complex_array(const json& v,
                                                    const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of [re, im] pairs");
  std::vector<std::complex<double>> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string epath = path + "[" + std::to_string(i) + "]";
    const json& e = v.at(i);
    if (!e.is_array() || e.size() != 2 || !e.at(0).is_number() ||
        !e.at(1).is_number())
      fail(epath, "expected an [re, im] pair");
    const double re = e.at(0).get<double>();
    const double im = e.at(1).get<double>();
    if (!std::isfinite(re) || !std::isfinite(im))
      fail(epath, "expected finite components");
    out.emplace_back(re, im);
  }
  return out;
}

json complex_array_to_json(const std::vector<std::complex<double>>& z) {
  json out = json::array();
  for (const auto& c : z) out.push_back(json::array({c.real(), c.imag()}));
  return out;
}

LatticeSpec parse_lattice(const json& j, const std::string& path) {
  LatticeSpec spec;
  expect_object(j, path);
  spec.type = get_string(j, path, "type", spec.type);
  if (spec.type == "torus") {
    reject_unknown(j, path, {"type", "dim", "max_index"});
    spec.dim = static_cast<int>(get_integer(j, path, "dim", spec.dim));
    spec.max_index =
        static_cast<int>(get_integer(j, path, "max_index", spec.max_index));
  } else if (spec.type == "custom") {
    reject_unknown(j, path, {"type", "dim", "modes"});
    spec.dim = static_cast<int>(get_integer(j, path, "dim", spec.dim));
    if (!j.contains("modes")) fail(path, "custom lattice requires 'modes'");
    const json& modes = j.at("modes");
    if (!modes.is_array() || modes.empty())
      fail(path + ".modes", "expected a non-empty array");
    for (std::size_t i = 0; i < modes.size(); ++i) {
      const std::string mpath = path + ".modes[" + std::to_string(i) + "]";
      const json& m = modes.at(i);
      expect_object(m, mpath);
      reject_unknown(m, mpath, {"xi", "weight"});
      CustomModeSpec cm;
      if (!m.contains("xi")) fail(mpath, "missing 'xi'");
      cm.xi = get_number_array(m.at("xi"), mpath + ".xi");
      cm.weight = get_number(m, mpath, "weight", 1.0);
      if (!(cm.weight > 0)) fail(mpath + ".weight", "must be positive");
      spec.modes.push_back(std::move(cm));
    }
  } else {
    fail(path + ".type", "expected 'torus' or 'custom'");
  }
  return spec;
}

json lattice_to_json(const LatticeSpec& spec) {
  json j;
  j["type"] = spec.type;
  j["dim"] = spec.dim;
  if (spec.type == "torus") {
    j["max_index"] = spec.max_index;
  } else {
    json modes = json::array();
    for (const auto& m : spec.modes)
      modes.push_back(json{{"xi", m.xi}, {"weight", m.weight}});
    j["modes"] = std::move(modes);
  }
  return j;
}

ParamSpec parse_params(const json& j, const std::string& path) {
  ParamSpec p;
  expect_object(j, path);
  reject_unknown(j, path, {"a", "b", "q_tol"});
  p.a = get_number(j, path, "a", p.a);
  p.b = get_number(j, path, "b", p.b);
  p.q_tol = get_number(j, path, "q_tol", p.q_tol);
  if (p.a == 0 && p.b == 0) fail(path, "a and b must not both be zero");
  if (p.q_tol < 0) fail(path + ".q_tol", "must be >= 0");
  return p;
}

InitialSpec parse_initial(const json& j, const std::string& path) {
  InitialSpec spec;
  expect_object(j, path);
  spec.type = get_string(j, path, "type", spec.type);
  if (spec.type == "single_mode") {
    reject_unknown(j, path, {"type", "amplitude", "frequency", "phase"});
    spec.amplitude = get_number(j, path, "amplitude", spec.amplitude);
    if (j.contains("frequency"))
      spec.frequency = get_number_array(j.at("frequency"), path + ".frequency");
    spec.phase = get_number(j, path, "phase", spec.phase);
    if (spec.frequency.empty()) fail(path + ".frequency", "must be non-empty");
  } else if (spec.type == "gaussian_decay") {
    reject_unknown(j, path, {"type", "amplitude", "width"});
    spec.amplitude = get_number(j, path, "amplitude", spec.amplitude);
    spec.width = get_number(j, path, "width", spec.width);
    if (!(spec.width > 0)) fail(path + ".width", "must be positive");
  } else if (spec.type == "random_small") {
    reject_unknown(j, path, {"type", "target_I1", "seed"});
    spec.target_I1 = get_number(j, path, "target_I1", spec.target_I1);
    spec.seed = get_integer(j, path, "seed", spec.seed);
    if (!(spec.target_I1 > 0)) fail(path + ".target_I1", "must be positive");
    if (spec.seed < -1) fail(path + ".seed", "must be >= 0 (or -1 to inherit)");
  } else if (spec.type == "explicit") {
    reject_unknown(j, path, {"type", "w", "v"});
    if (!j.contains("w") || !j.contains("v"))
      fail(path, "explicit initial data requires 'w' and 'v'");
    spec.w = get_complex_array(j.at("w"), path + ".w");
    spec.v = get_complex_array(j.at("v"), path + ".v");
    if (spec.w.empty() || spec.w.size() != spec.v.size())
      fail(path, "'w' and 'v' must be non-empty and the same length");
  } else {
    fail(path + ".type",
         "expected 'single_mode', 'gaussian_decay', 'random_small' or "
         "'explicit'");
  }
  return spec;
}

json initial_to_json(const InitialSpec& spec) {
  json j;
  j["type"] = spec.type;
  if (spec.type == "single_mode") {
    j["amplitude"] = spec.amplitude;
    j["frequency"] = spec.frequency;
    j["phase"] = spec.phase;
  } else if (spec.type == "gaussian_decay") {
    j["amplitude"] = spec.amplitude;
    j["width"] = spec.width;
  } else if (spec.type == "random_small") {
    j["target_I1"] = spec.target_I1;
    j["seed"] = spec.seed;
  } else {
    j["w"] = complex_array_to_json(spec.w);
    j["v"] = complex_array_to_json(spec.v);
  }
  return j;
}

IntegratorSpec parse_integrator(const json& j, const std::string& path) {
  IntegratorSpec spec;
  expect_object(j, path);
  reject_unknown(j, path,
                 {"method", "h", "rtol", "atol", "h_min", "h_max"});
  spec.method = get_string(j, path, "method", spec.method);
  if (spec.method != "rk4" && spec.method != "verlet" &&
      spec.method != "adaptive45")
    fail(path + ".method", "expected 'rk4', 'verlet' or 'adaptive45'");
  spec.h = get_number(j, path, "h", spec.h);
  spec.rtol = get_number(j, path, "rtol", spec.rtol);
  spec.atol = get_number(j, path, "atol", spec.atol);
  spec.h_min = get_number(j, path, "h_min", spec.h_min);
  spec.h_max = get_number(j, path, "h_max", spec.h_max);
  if (!(spec.h > 0)) fail(path + ".h", "must be positive");
  if (!(spec.rtol > 0)) fail(path + ".rtol", "must be positive");
  if (!(spec.atol > 0)) fail(path + ".atol", "must be positive");
  if (!(spec.h_min > 0)) fail(path + ".h_min", "must be positive");
  if (!(spec.h_max >= spec.h_min)) fail(path + ".h_max", "must be >= h_min");
  return spec;
}

json integrator_to_json(const IntegratorSpec& spec) {
  return json{{"method", spec.method}, {"h", spec.h},
              {"rtol", spec.rtol},     {"atol", spec.atol},
              {"h_min", spec.h_min},   {"h_max", spec.h_max}};
}

TimeSpec parse_time(const json& j, const std::string& path) {
  TimeSpec spec;
  expect_object(j, path);
  reject_unknown(j, path, {"t_end", "sample_every"});
  spec.t_end = get_number(j, path, "t_end", spec.t_end);
  spec.sample_every = get_number(j, path, "sample_every", spec.sample_every);
  if (!(spec.t_end > 0)) fail(path + ".t_end", "must be positive");
  if (!(spec.sample_every > 0)) fail(path + ".sample_every", "must be positive");
  return spec;
}

InvariantSpec parse_invariant(const json& j, const std::string& path) {
  InvariantSpec spec;
  expect_object(j, path);
  reject_unknown(j, path, {"C0", "C1"});
  spec.C0 = get_number(j, path, "C0", spec.C0);
  spec.C1 = get_number(j, path, "C1", spec.C1);
  return spec;
}

ToleranceSpec parse_tolerances(const json& j, const std::string& path) {
  ToleranceSpec spec;
  expect_object(j, path);
  reject_unknown(j, path, {"drift_rel", "identity", "slack"});
  spec.drift_rel = get_number(j, path, "drift_rel", spec.drift_rel);
  spec.identity = get_number(j, path, "identity", spec.identity);
  spec.slack = get_number(j, path, "slack", spec.slack);
  if (!(spec.drift_rel > 0)) fail(path + ".drift_rel", "must be positive");
  if (!(spec.identity > 0)) fail(path + ".identity", "must be positive");
  if (!(spec.slack > 0)) fail(path + ".slack", "must be positive");
  return spec;
}

std::vector<std::string> parse_checks(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of check names");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const json& e = v.at(i);
    if (!e.is_string())
      fail(path + "[" + std::to_string(i) + "]", "expected a string");
    const std::string name = e.get<std::string>();
    const auto& known = known_checks();
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      std::string allowed;
      for (const auto& k : known) allowed += (allowed.empty() ? "" : ", ") + k;
      fail(path + "[" + std::to_string(i) + "]",
           "unknown check '" + name + "' (known: " + allowed + ")");
    }
    if (std::find(out.begin(), out.end(), name) == out.end())
      out.push_back(name);
  }
  return out;
}

ProfileSpec parse_profile(const json& j, const std::string& path) {
  ProfileSpec spec;
  expect_object(j, path);
  spec.type = get_string(j, path, "type", spec.type);
  if (spec.type == "constant") {
    reject_unknown(j, path, {"type", "value"});
    spec.value = get_number(j, path, "value", spec.value);
  } else if (spec.type == "affine") {
    reject_unknown(j, path, {"type", "value", "slope"});
    spec.value = get_number(j, path, "value", spec.value);
    spec.slope = get_number(j, path, "slope", spec.slope);
  } else if (spec.type == "trig") {
    reject_unknown(j, path, {"type", "value", "amp", "omega", "phase"});
    spec.value = get_number(j, path, "value", spec.value);
    spec.amp = get_number(j, path, "amp", spec.amp);
    spec.omega = get_number(j, path, "omega", spec.omega);
    spec.phase = get_number(j, path, "phase", spec.phase);
  } else if (spec.type == "polynomial") {
    reject_unknown(j, path, {"type", "coeffs"});
    if (!j.contains("coeffs")) fail(path, "polynomial requires 'coeffs'");
    spec.coeffs = get_number_array(j.at("coeffs"), path + ".coeffs");
    if (spec.coeffs.empty()) fail(path + ".coeffs", "must be non-empty");
  } else {
    fail(path + ".type",
         "expected 'constant', 'affine', 'trig' or 'polynomial'");
  }
  return spec;
}

json profile_to_json(const ProfileSpec& spec) {
  json j;
  j["type"] = spec.type;
  if (spec.type == "constant") {
    j["value"] = spec.value;
  } else if (spec.type == "affine") {
    j["value"] = spec.value;
    j["slope"] = spec.slope;
  } else if (spec.type == "trig") {
    j["value"] = spec.value;
    j["amp"] = spec.amp;
    j["omega"] = spec.omega;
    j["phase"] = spec.phase;
  } else {
    j["coeffs"] = spec.coeffs;
  }
  return j;
}

} // namespace

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names = {
      "drift", "lemma1", "sandwich2", "sandwich3", "theorem4", "audit_q"};
  return names;
}

bool ExperimentConfig::check_enabled(const std::string& name) const {
  return std::find(checks.begin(), checks.end(), name) != checks.end();
}

std::vector<ProfileSpec> default_profile_battery() {
  std::vector<ProfileSpec> out;
  ProfileSpec c;
  c.type = "constant";
  c.value = 2.0;
  out.push_back(c);
  ProfileSpec aff;
  aff.type = "affine";
  aff.value = 2.0;
  aff.slope = 1.0;
  out.push_back(aff);
  ProfileSpec tr;
  tr.type = "trig";
  tr.value = 2.0;
  tr.amp = 1.0;
  tr.omega = 1.0;
  tr.phase = 0.0;
  out.push_back(tr);
  ProfileSpec poly;
  poly.type = "polynomial";
  poly.coeffs = {1.0, 0.0, 0.1};
  out.push_back(poly);
  return out;
}

ExperimentConfig experiment_config_from_json(const json& j) {
  const std::string root = "$";
  ExperimentConfig cfg;
  expect_object(j, root);
  reject_unknown(j, root,
                 {"lattice", "params", "initial", "integrator", "time",
                  "invariant", "checks", "tolerances", "seed", "out"});
  if (j.contains("lattice")) cfg.lattice = parse_lattice(j.at("lattice"), "$.lattice");
  if (j.contains("params")) cfg.params = parse_params(j.at("params"), "$.params");
  if (j.contains("initial")) cfg.initial = parse_initial(j.at("initial"), "$.initial");
  if (j.contains("integrator"))
    cfg.integrator = parse_integrator(j.at("integrator"), "$.integrator");
  if (j.contains("time")) cfg.time = parse_time(j.at("time"), "$.time");
  if (j.contains("invariant"))
    cfg.invariant = parse_invariant(j.at("invariant"), "$.invariant");
  if (j.contains("checks")) cfg.checks = parse_checks(j.at("checks"), "$.checks");
  if (j.contains("tolerances"))
    cfg.tolerances = parse_tolerances(j.at("tolerances"), "$.tolerances");
  cfg.seed = get_integer(j, root, "seed", cfg.seed);
  if (cfg.seed < 0) fail("$.seed", "must be >= 0");
  cfg.out = get_string(j, root, "out", cfg.out);
  if (cfg.out.empty()) fail("$.out", "must be non-empty");
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["lattice"] = lattice_to_json(cfg.lattice);
  j["params"] =
      json{{"a", cfg.params.a}, {"b", cfg.params.b}, {"q_tol", cfg.params.q_tol}};
  j["initial"] = initial_to_json(cfg.initial);
  j["integrator"] = integrator_to_json(cfg.integrator);
  j["time"] =
      json{{"t_end", cfg.time.t_end}, {"sample_every", cfg.time.sample_every}};
  j["invariant"] = json{{"C0", cfg.invariant.C0}, {"C1", cfg.invariant.C1}};
  j["checks"] = cfg.checks;
  j["tolerances"] = json{{"drift_rel", cfg.tolerances.drift_rel},
                         {"identity", cfg.tolerances.identity},
                         {"slack", cfg.tolerances.slack}};
  j["seed"] = cfg.seed;
  j["out"] = cfg.out;
  return j;
}

SweepConfig sweep_config_from_json(const json& j) {
  SweepConfig cfg;
  expect_object(j, "$");
  reject_unknown(j, "$", {"base", "axes", "workers"});
  if (j.contains("base"))
    cfg.base = experiment_config_from_json(j.at("base"));
  if (j.contains("axes")) {
    const json& axes = j.at("axes");
    expect_object(axes, "$.axes");
    reject_unknown(axes, "$.axes", {"a", "b", "amplitude", "h", "rtol"});
    if (axes.contains("a")) cfg.a = get_number_array(axes.at("a"), "$.axes.a");
    if (axes.contains("b")) cfg.b = get_number_array(axes.at("b"), "$.axes.b");
    if (axes.contains("amplitude"))
      cfg.amplitude = get_number_array(axes.at("amplitude"), "$.axes.amplitude");
    if (axes.contains("h")) cfg.h = get_number_array(axes.at("h"), "$.axes.h");
    if (axes.contains("rtol"))
      cfg.rtol = get_number_array(axes.at("rtol"), "$.axes.rtol");
  }
  cfg.workers = static_cast<int>(get_integer(j, "$", "workers", cfg.workers));
  if (cfg.workers < 1) fail("$.workers", "must be >= 1");
  if (!cfg.amplitude.empty() && cfg.base.initial.type != "single_mode" &&
      cfg.base.initial.type != "gaussian_decay")
    fail("$.axes.amplitude",
         "requires an initial profile with an amplitude (single_mode or "
         "gaussian_decay)");
  for (double x : cfg.h)
    if (!(x > 0)) fail("$.axes.h", "entries must be positive");
  for (double x : cfg.rtol)
    if (!(x > 0)) fail("$.axes.rtol", "entries must be positive");
  return cfg;
}

json to_json(const SweepConfig& cfg) {
  json axes = json::object();
  if (!cfg.a.empty()) axes["a"] = cfg.a;
  if (!cfg.b.empty()) axes["b"] = cfg.b;
  if (!cfg.amplitude.empty()) axes["amplitude"] = cfg.amplitude;
  if (!cfg.h.empty()) axes["h"] = cfg.h;
  if (!cfg.rtol.empty()) axes["rtol"] = cfg.rtol;
  return json{{"base", to_json(cfg.base)},
              {"axes", std::move(axes)},
              {"workers", cfg.workers}};
}

QuadformConfig quadform_config_from_json(const json& j) {
  QuadformConfig cfg;
  expect_object(j, "$");
  reject_unknown(j, "$",
                 {"profiles", "span", "time_samples", "xi", "pairs",
                  "checkpoints", "delta", "ode_rtol", "residual_tol",
                  "der27_tol", "out"});
  if (j.contains("profiles")) {
    const json& ps = j.at("profiles");
    if (!ps.is_array() || ps.empty())
      fail("$.profiles", "expected a non-empty array");
    for (std::size_t i = 0; i < ps.size(); ++i)
      cfg.profiles.push_back(
          parse_profile(ps.at(i), "$.profiles[" + std::to_string(i) + "]"));
  } else {
    cfg.profiles = default_profile_battery();
  }
  if (j.contains("span")) {
    const auto span = get_number_array(j.at("span"), "$.span");
    if (span.size() != 2) fail("$.span", "expected [start, end]");
    cfg.span_start = span[0];
    cfg.span_end = span[1];
  }
  if (!(cfg.span_end > cfg.span_start)) fail("$.span", "end must exceed start");
  cfg.time_samples =
      static_cast<int>(get_integer(j, "$", "time_samples", cfg.time_samples));
  if (cfg.time_samples < 2) fail("$.time_samples", "must be >= 2");
  if (j.contains("xi")) cfg.xi = get_number_array(j.at("xi"), "$.xi");
  if (cfg.xi.empty()) fail("$.xi", "must be non-empty");
  for (double x : cfg.xi)
    if (!(x > 0)) fail("$.xi", "entries must be positive");
  if (j.contains("pairs")) {
    const json& ps = j.at("pairs");
    if (!ps.is_array() || ps.empty())
      fail("$.pairs", "expected a non-empty array of [C0, C1] pairs");
    cfg.pairs.clear();
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const auto pr =
          get_number_array(ps.at(i), "$.pairs[" + std::to_string(i) + "]");
      if (pr.size() != 2)
        fail("$.pairs[" + std::to_string(i) + "]", "expected [C0, C1]");
      cfg.pairs.emplace_back(pr[0], pr[1]);
    }
  }
  cfg.checkpoints =
      static_cast<int>(get_integer(j, "$", "checkpoints", cfg.checkpoints));
  if (cfg.checkpoints < 2) fail("$.checkpoints", "must be >= 2");
  cfg.delta = get_number(j, "$", "delta", cfg.delta);
  if (!(cfg.delta > 0)) fail("$.delta", "must be positive");
  cfg.ode_rtol = get_number(j, "$", "ode_rtol", cfg.ode_rtol);
  if (!(cfg.ode_rtol > 0)) fail("$.ode_rtol", "must be positive");
  cfg.residual_tol = get_number(j, "$", "residual_tol", cfg.residual_tol);
  if (!(cfg.residual_tol > 0)) fail("$.residual_tol", "must be positive");
  cfg.der27_tol = get_number(j, "$", "der27_tol", cfg.der27_tol);
  if (!(cfg.der27_tol > 0)) fail("$.der27_tol", "must be positive");
  cfg.out = get_string(j, "$", "out", cfg.out);
  return cfg;
}

json to_json(const QuadformConfig& cfg) {
  json profiles = json::array();
  for (const auto& p : cfg.profiles) profiles.push_back(profile_to_json(p));
  json pairs = json::array();
  for (const auto& [c0, c1] : cfg.pairs) pairs.push_back(json::array({c0, c1}));
  return json{{"profiles", std::move(profiles)},
              {"span", json::array({cfg.span_start, cfg.span_end})},
              {"time_samples", cfg.time_samples},
              {"xi", cfg.xi},
              {"pairs", std::move(pairs)},
              {"checkpoints", cfg.checkpoints},
              {"delta", cfg.delta},
              {"ode_rtol", cfg.ode_rtol},
              {"residual_tol", cfg.residual_tol},
              {"der27_tol", cfg.der27_tol},
              {"out", cfg.out}};
}

json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // e.what() already carries "parse error at line L, column C"
    throw ConfigError(std::string("config error: ") + e.what());
  }
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  return experiment_config_from_json(parse_json_text(text));
}

SweepConfig parse_sweep_config(const std::string& text) {
  return sweep_config_from_json(parse_json_text(text));
}

QuadformConfig parse_quadform_config(const std::string& text) {
  return quadform_config_from_json(parse_json_text(text));
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("config error: override '" + assignment +
                      "' is not of the form key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);

  // value: JSON literal when it parses, comma list as an array, else string
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    if (raw.find(',') != std::string::npos) {
      value = json::array();
      std::istringstream ss(raw);
      std::string piece;
      while (std::getline(ss, piece, ',')) {
        try {
          value.push_back(json::parse(piece));
        } catch (const json::parse_error&) {
          value.push_back(piece);
        }
      }
    } else {
      value = raw;
    }
  }

  json* node = &j;
  std::istringstream ss(path);
  std::string key;
  std::vector<std::string> keys;
  while (std::getline(ss, key, '.')) {
    if (key.empty())
      throw ConfigError("config error: override path '" + path +
                        "' has an empty segment");
    keys.push_back(key);
  }
  if (keys.empty())
    throw ConfigError("config error: override '" + assignment +
                      "' has no key path");
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    if (!node->is_object())
      throw ConfigError("config error: override path '" + path +
                        "' descends into a non-object");
    node = &(*node)[keys[i]];
    if (node->is_null()) *node = json::object();
  }
  if (!node->is_object())
    throw ConfigError("config error: override path '" + path +
                      "' descends into a non-object");
  (*node)[keys.back()] = std::move(value);
}

ModeLattice<double> build_lattice(const LatticeSpec& spec) {
  try {
    if (spec.type == "torus") return make_torus_lattice(spec.dim, spec.max_index);
    std::vector<Mode<double>> modes;
    modes.reserve(spec.modes.size());
    for (const auto& m : spec.modes) {
      Mode<double> mode;
      mode.xi = Eigen::Map<const Eigen::VectorXd>(
          m.xi.data(), static_cast<Eigen::Index>(m.xi.size()));
      mode.weight = m.weight;
      modes.push_back(std::move(mode));
    }
    return make_custom_lattice(spec.dim, std::move(modes));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config error at $.lattice: ") + e.what());
  }
}

} // namespace kp
