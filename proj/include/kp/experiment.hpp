#ifndef KP_EXPERIMENT_HPP
#define KP_EXPERIMENT_HPP

#include "kp/config.hpp"
#include "kp/integrators.hpp"
#include "kp/verify.hpp"

#include <string>
#include <vector>

namespace kp {

/// One report line: a check name, its PASS / FAIL / N/A verdict, and a
/// one-line numeric summary.
struct CheckVerdict {
  std::string name;
  std::string verdict;
  std::string detail;
  bool failed() const { return verdict == "FAIL"; }
};

/// A completed run: the resolved configuration, the sampled path, and the
/// verdicts of every enabled check.
struct ExperimentOutcome {
  ExperimentConfig config;
  long initial_seed = 0;  // seed that generated the initial data
  Trajectoryd trajectory;
  std::vector<MomentSampled> samples;
  std::string status = "ok";  // "ok" | "degenerate"
  std::vector<CheckVerdict> verdicts;
  bool checks_passed = true;
  // worst relative drifts, for the sweep table (NaN when unavailable)
  double drift_I1 = 0, drift_I2 = 0, drift_I3 = 0, drift_Q = 0;

  /// 0 clean, 3 degenerate coefficient, 4 failed verdict.
  int exit_code() const;
};

/// Initial data from the configured profile.  The experiment seed feeds
/// random_small when the profile does not pin its own.
SpectralStated build_initial_state(const InitialSpec& spec,
                                   const ModeLatticed& lattice,
                                   const Paramsd& params, long experiment_seed);

StepControld build_control(const IntegratorSpec& spec);

/// Run the configured experiment in memory: integrate, sample, check.
ExperimentOutcome execute(const ExperimentConfig& cfg);

/// Fill verdicts / drifts / checks_passed from config + samples.  Used both
/// after a run and when re-deriving verdicts from a written series.
void evaluate_checks(ExperimentOutcome& out);

const std::string& timeseries_header();
std::string render_csv(const ExperimentOutcome& out);
std::string render_report(const ExperimentOutcome& out);
nlohmann::json render_manifest(const ExperimentOutcome& out);

/// Rebuild moment samples from a written series ('#' lines are skipped;
/// the header must match timeseries_header() exactly).
std::vector<MomentSampled> parse_timeseries_csv(const std::string& text,
                                                const Paramsd& params);

/// Run and write timeseries.csv, report.txt, manifest.json under cfg.out.
/// Returns the outcome exit code; *report_text receives the rendered report
/// when non-null.
int run_experiment(const ExperimentConfig& cfg,
                   std::string* report_text = nullptr);

/// Grid sweep over the configured axes; writes sweep.csv and
/// sweep_manifest.json under base.out.  Row order follows the grid
/// enumeration (axes in the fixed order a, b, amplitude, h, rtol, last
/// axis fastest) regardless of worker scheduling.
int run_sweep(const SweepConfig& cfg, std::string* table_text = nullptr);

/// Coefficient-identity battery over profiles, frequencies and weight
/// pairs; writes quadform.csv under cfg.out.
int run_quadform(const QuadformConfig& cfg, std::string* table_text = nullptr);

/// Re-derive verdicts from dir/timeseries.csv + dir/manifest.json.
int run_report(const std::string& dir, std::string* report_text = nullptr);

} // namespace kp

#endif // KP_EXPERIMENT_HPP
