#ifndef KP_CONFIG_HPP
#define KP_CONFIG_HPP

#include "kp/dynamics.hpp"
#include "kp/lattice.hpp"

#include <json.hpp>

#include <complex>
#include <string>
#include <vector>

namespace kp {

/// Lattice selection: the periodic integer lattice or an explicit mode list.
struct CustomModeSpec {
  std::vector<double> xi;
  double weight = 1.0;
  friend bool operator==(const CustomModeSpec&, const CustomModeSpec&) = default;
};

struct LatticeSpec {
  std::string type = "torus";  // "torus" | "custom"
  int dim = 1;
  int max_index = 3;
  std::vector<CustomModeSpec> modes;  // custom only
  friend bool operator==(const LatticeSpec&, const LatticeSpec&) = default;
};

/// Initial data selection.  Only the fields of the active type are
/// serialized; the others keep their defaults.
struct InitialSpec {
  std::string type = "single_mode";
  // single_mode
  double amplitude = 0.3;
  std::vector<double> frequency = {1.0};
  double phase = 0.0;
  // gaussian_decay (shares amplitude)
  double width = 2.0;
  // random_small
  double target_I1 = 0.25;
  long seed = -1;  // -1: use the experiment seed
  // explicit
  std::vector<std::complex<double>> w;
  std::vector<std::complex<double>> v;
  friend bool operator==(const InitialSpec&, const InitialSpec&) = default;
};

struct IntegratorSpec {
  std::string method = "adaptive45";  // "rk4" | "verlet" | "adaptive45"
  double h = 0.01;
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_min = 1e-12;
  double h_max = 1.0;
  friend bool operator==(const IntegratorSpec&, const IntegratorSpec&) = default;
};

struct TimeSpec {
  double t_end = 10.0;
  double sample_every = 0.1;
  friend bool operator==(const TimeSpec&, const TimeSpec&) = default;
};

struct ParamSpec {
  double a = 0.5;
  double b = 1.0;
  double q_tol = 0.0;
  friend bool operator==(const ParamSpec&, const ParamSpec&) = default;
};

struct InvariantSpec {
  double C0 = 0.7;
  double C1 = -0.3;
  friend bool operator==(const InvariantSpec&, const InvariantSpec&) = default;
};

struct ToleranceSpec {
  double drift_rel = 1e-8;
  double identity = 1e-12;
  double slack = 1e-10;
  friend bool operator==(const ToleranceSpec&, const ToleranceSpec&) = default;
};

/// The names accepted in "checks", in report order.
const std::vector<std::string>& known_checks();

struct ExperimentConfig {
  LatticeSpec lattice;
  ParamSpec params;
  InitialSpec initial;
  IntegratorSpec integrator;
  TimeSpec time;
  InvariantSpec invariant;
  std::vector<std::string> checks = known_checks();
  ToleranceSpec tolerances;
  long seed = 12345;
  std::string out = "./out";

  bool check_enabled(const std::string& name) const;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) =
      default;
};

/// Sweep: Cartesian grid over a fixed axis order, lexicographic enumeration.
struct SweepConfig {
  ExperimentConfig base;
  // axis order is fixed: a, b, amplitude, h, rtol; empty axis = not swept
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> amplitude;
  std::vector<double> h;
  std::vector<double> rtol;
  int workers = 1;
  friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

/// One analytic coefficient profile for the quadratic-form verifier.
struct ProfileSpec {
  std::string type = "constant";  // constant | affine | trig | polynomial
  double value = 2.0;             // constant level / affine intercept / trig offset
  double slope = 1.0;             // affine
  double amp = 1.0, omega = 1.0, phase = 0.0;  // trig
  std::vector<double> coeffs;     // polynomial
  friend bool operator==(const ProfileSpec&, const ProfileSpec&) = default;
};

struct QuadformConfig {
  std::vector<ProfileSpec> profiles;  // default battery if empty in the file
  double span_start = 0.0;
  double span_end = 5.0;
  int time_samples = 100;
  std::vector<double> xi = {1.0, 2.0, 5.0};
  std::vector<std::pair<double, double>> pairs = {
      {1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}, {-2.0, 3.0}};
  int checkpoints = 100;
  double delta = 1e-3;
  double ode_rtol = 1e-12;
  double residual_tol = 1e-12;
  double der27_tol = 1e-6;
  std::string out = "./out";
  friend bool operator==(const QuadformConfig&, const QuadformConfig&) = default;
};

std::vector<ProfileSpec> default_profile_battery();

/// Parse/serialize.  Parsing applies defaults for absent fields, rejects
/// unknown fields, and reports errors as "$.path: message" (with a line
/// number for syntax errors).  Serialization of a parsed config re-parses
/// to an equal value.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);

SweepConfig parse_sweep_config(const std::string& text);
SweepConfig sweep_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SweepConfig& cfg);

QuadformConfig parse_quadform_config(const std::string& text);
QuadformConfig quadform_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const QuadformConfig& cfg);

/// Parses text to JSON with line/column syntax diagnostics.
nlohmann::json parse_json_text(const std::string& text);

/// Applies one "dotted.path=value" override; value is parsed as JSON when
/// possible and treated as a string otherwise.
void apply_override(nlohmann::json& j, const std::string& assignment);

/// Realize the configured lattice (throws ConfigError on bad specs).
ModeLattice<double> build_lattice(const LatticeSpec& spec);

} // namespace kp

#endif // KP_CONFIG_HPP
