#include "kp/experiment.hpp"

#include "kp/quadform.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <thread>
#include <utility>

namespace kp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt_e(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

std::string fmt_g(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string sanitize_cell(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  return s;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!os) throw std::runtime_error("cannot write " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("config error: cannot read " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

Paramsd make_params(const ParamSpec& p) { return Paramsd(p.a, p.b, p.q_tol); }

template <typename F>
double maybe(F&& f) {
  try {
    return f();
  } catch (const std::exception&) {
    return kNaN;
  }
}

AnalyticProfile<double> build_profile(const ProfileSpec& p) {
  if (p.type == "constant") return AnalyticProfile<double>::constant(p.value);
  if (p.type == "affine")
    return AnalyticProfile<double>::affine(p.value, p.slope);
  if (p.type == "trig")
    return AnalyticProfile<double>::trig(p.value, p.amp, p.omega, p.phase);
  return AnalyticProfile<double>::polynomial(p.coeffs);
}

} // namespace

int ExperimentOutcome::exit_code() const {
  if (status == "degenerate") return 3;
  return checks_passed ? 0 : 4;
}

StepControld build_control(const IntegratorSpec& spec) {
  StepControld control;
  control.method = spec.method == "rk4"      ? Method::rk4
                   : spec.method == "verlet" ? Method::verlet
                                             : Method::adaptive45;
  control.h = spec.h;
  control.rtol = spec.rtol;
  control.atol = spec.atol;
  control.h_min = spec.h_min;
  control.h_max = spec.h_max;
  return control;
}

SpectralStated build_initial_state(const InitialSpec& spec,
                                   const ModeLatticed& lattice,
                                   const Paramsd& params,
                                   long experiment_seed) {
  const Eigen::Index n = lattice.size();
  ComplexArrayd w = ComplexArrayd::Zero(n);
  ComplexArrayd v = ComplexArrayd::Zero(n);

  if (spec.type == "single_mode") {
    if (static_cast<int>(spec.frequency.size()) != lattice.dim())
      throw ConfigError("config error at $.initial.frequency: expected " +
                        std::to_string(lattice.dim()) + " components");
    Eigen::Index hit = -1;
    for (Eigen::Index k = 0; k < n && hit < 0; ++k) {
      const auto& xi = lattice.mode(k).xi;
      bool match = true;
      for (int d = 0; d < lattice.dim(); ++d)
        match = match && xi[d] == spec.frequency[static_cast<std::size_t>(d)];
      if (match) hit = k;
    }
    if (hit < 0)
      throw ConfigError(
          "config error at $.initial.frequency: no lattice mode at this "
          "frequency");
    w[hit] = std::polar(spec.amplitude, spec.phase);
  } else if (spec.type == "gaussian_decay") {
    // spectral profile amplitude * exp(-|xi|^2 / (2 width^2)), at rest
    const double denom = 2 * spec.width * spec.width;
    for (Eigen::Index k = 0; k < n; ++k)
      w[k] = spec.amplitude * std::exp(-lattice.xi_sq()[k] / denom);
  } else if (spec.type == "random_small") {
    if (!(params.b > 0))
      throw ConfigError(
          "config error at $.initial: random_small requires b > 0");
    const long seed = spec.seed >= 0 ? spec.seed : experiment_seed;
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
    std::normal_distribution<double> gauss(0.0, 1.0);
    // draw order is part of the determinism contract: per mode,
    // w.re, w.im, v.re, v.im
    for (Eigen::Index k = 0; k < n; ++k) {
      const double wr = gauss(rng), wi = gauss(rng);
      const double vr = gauss(rng), vi = gauss(rng);
      w[k] = {wr, wi};
      v[k] = {vr, vi};
    }
    // scale the draw so the energy hits the target exactly: with x the
    // squared scale, S = s(base), V = |v(base)|^2,
    //   I1(x) = x V + x S / (b (a x S + b))
    // clears to A x^2 + B x + C = 0 with
    //   A = a b S V,  B = b^2 V + S - target a b S,  C = -target b^2.
    const double S = (lattice.weighted_xi_pow(1) * w.abs2()).sum();
    const double V = (lattice.weights() * v.abs2()).sum();
    const double target = spec.target_I1;
    const double A = params.a * params.b * S * V;
    const double B =
        params.b * params.b * V + S - target * params.a * params.b * S;
    const double C = -target * params.b * params.b;
    std::vector<double> candidates;
    if (A == 0) {
      if (B != 0) candidates.push_back(-C / B);
    } else {
      const double disc = B * B - 4 * A * C;
      if (disc >= 0) {
        const double sq = std::sqrt(disc);
        const double qd = -(B + std::copysign(sq, B)) / 2;
        if (qd != 0) {
          candidates.push_back(qd / A);
          candidates.push_back(C / qd);
        }
      }
    }
    std::optional<double> x_best;
    for (double x : candidates) {
      if (!(x > 0) || !std::isfinite(x)) continue;
      const double q = params.a * x * S + params.b;
      if (!(q > params.q_floor())) continue;
      const double check = x * V + x * S / (params.b * q);
      if (std::abs(check - target) > 1e-9 * std::max(1.0, target)) continue;
      if (!x_best || x < *x_best) x_best = x;
    }
    if (!x_best)
      throw ConfigError(
          "config error at $.initial.target_I1: unreachable for these "
          "parameters");
    const double gamma = std::sqrt(*x_best);
    w *= gamma;
    v *= gamma;
  } else {  // explicit
    if (static_cast<Eigen::Index>(spec.w.size()) != n)
      throw ConfigError("config error at $.initial.w: expected " +
                        std::to_string(n) + " entries for this lattice");
    for (Eigen::Index k = 0; k < n; ++k) {
      w[k] = spec.w[static_cast<std::size_t>(k)];
      v[k] = spec.v[static_cast<std::size_t>(k)];
    }
  }
  return make_state(lattice, std::move(w), std::move(v));
}

void evaluate_checks(ExperimentOutcome& out) {
  const ExperimentConfig& cfg = out.config;
  const Paramsd params = make_params(cfg.params);
  const InvariantParamsd inv{cfg.invariant.C0, cfg.invariant.C1};
  const double slack = cfg.tolerances.slack;
  const auto& samples = out.samples;

  out.verdicts.clear();
  out.checks_passed = true;
  out.drift_I1 = out.drift_I2 = out.drift_I3 = out.drift_Q = kNaN;

  std::array<std::optional<DriftReportd>, 4> drifts;
  if (!samples.empty()) {
    auto guarded = [&](auto&& f) -> std::optional<DriftReportd> {
      try {
        return f();
      } catch (const std::exception&) {
        return std::nullopt;
      }
    };
    drifts[0] = guarded([&] { return drift_I1(samples, params); });
    drifts[1] = guarded([&] { return drift_I2(samples, params); });
    drifts[2] = guarded([&] { return drift_I3(samples, params); });
    drifts[3] = guarded([&] { return drift_Q(samples, params, inv); });
    if (drifts[0]) out.drift_I1 = drifts[0]->max_rel;
    if (drifts[1]) out.drift_I2 = drifts[1]->max_rel;
    if (drifts[2]) out.drift_I3 = drifts[2]->max_rel;
    if (drifts[3]) out.drift_Q = drifts[3]->max_rel;
  }

  auto push = [&](const std::string& name, std::string verdict,
                  std::string detail) {
    if (verdict == "FAIL") out.checks_passed = false;
    out.verdicts.push_back({name, std::move(verdict), std::move(detail)});
  };

  char buf[256];
  for (const std::string& name : known_checks()) {
    if (!cfg.check_enabled(name)) continue;
    if (samples.empty()) {
      push(name, "N/A", "no samples");
      continue;
    }
    if (name == "drift") {
      if (!drifts[0] || !drifts[1] || !drifts[2] || !drifts[3]) {
        push(name, "N/A", "functional undefined along the path");
        continue;
      }
      const double worst = std::max({out.drift_I1, out.drift_I2, out.drift_I3,
                                     out.drift_Q});
      std::snprintf(buf, sizeof buf,
                    "max rel drift I1=%.3e I2=%.3e I3=%.3e Q=%.3e (tol %.1e)",
                    out.drift_I1, out.drift_I2, out.drift_I3, out.drift_Q,
                    cfg.tolerances.drift_rel);
      push(name, worst <= cfg.tolerances.drift_rel ? "PASS" : "FAIL", buf);
    } else if (name == "lemma1") {
      const auto rep = check_lemma1(samples, params, slack);
      if (!rep.applicable) {
        push(name, "N/A", rep.reason);
        continue;
      }
      std::snprintf(buf, sizeof buf,
                    "I1(0)=%.6g vs threshold %.6g; q in [%.6g, %.6g]; "
                    "max |a|*lambda=%.6g",
                    rep.energy0, rep.threshold, rep.q_min, rep.q_max,
                    rep.max_a_lambda);
      push(name, rep.holds ? "PASS" : "FAIL", buf);
    } else if (name == "sandwich2" || name == "sandwich3") {
      const auto rep = name == "sandwich2"
                           ? check_sandwich_I2(samples, params, slack)
                           : check_sandwich_I3(samples, params, slack);
      if (rep.checked == 0) {
        push(name, "N/A", "every sample gated out");
        continue;
      }
      std::snprintf(buf, sizeof buf,
                    "checked=%d skipped=%d worst_slack=%.3e", rep.checked,
                    rep.skipped, rep.worst_slack);
      push(name, rep.holds ? "PASS" : "FAIL", buf);
    } else if (name == "theorem4") {
      const auto rep = check_theorem4(samples, params, slack);
      if (!rep.applicable) {
        push(name, "N/A", rep.reason);
        continue;
      }
      std::snprintf(buf, sizeof buf,
                    "max value/bound=%.6g; peaks |u_tt|^2=%.3e "
                    "|grad u_tt|^2=%.3e |u_ttt|^2=%.3e",
                    rep.max_ratio, rep.max_utt_sq, rep.max_grad_utt_sq,
                    rep.max_uttt_sq);
      push(name, rep.holds ? "PASS" : "FAIL", buf);
    } else if (name == "audit_q") {
      const auto rep = audit_Q_identities(samples, params);
      const bool pass = rep.max_err_I2 <= cfg.tolerances.identity &&
                        rep.max_err_I3 <= cfg.tolerances.identity;
      std::snprintf(buf, sizeof buf,
                    "Q(0,1) vs I2 relerr=%.3e; Q(1,0) vs I3 relerr=%.3e "
                    "(tol %.1e)",
                    rep.max_err_I2, rep.max_err_I3, cfg.tolerances.identity);
      push(name, pass ? "PASS" : "FAIL", buf);
    }
  }
}

ExperimentOutcome execute(const ExperimentConfig& cfg) {
  ExperimentOutcome out;
  out.config = cfg;
  const ModeLatticed lattice = build_lattice(cfg.lattice);
  const Paramsd params = make_params(cfg.params);
  out.initial_seed =
      (cfg.initial.type == "random_small" && cfg.initial.seed >= 0)
          ? cfg.initial.seed
          : cfg.seed;
  const SpectralStated x0 =
      build_initial_state(cfg.initial, lattice, params, cfg.seed);
  const StepControld control = build_control(cfg.integrator);
  out.trajectory =
      integrate(x0, lattice, params, control, cfg.time.t_end,
                cfg.time.sample_every);
  out.status = out.trajectory.degenerate ? "degenerate" : "ok";
  for (std::size_t i = 0; i < out.trajectory.states.size(); ++i) {
    try {
      out.samples.push_back(
          {out.trajectory.times[i],
           compute_moments(out.trajectory.states[i], lattice, params)});
    } catch (const DegenerateQError&) {
      break;
    }
  }
  evaluate_checks(out);
  return out;
}

const std::string& timeseries_header() {
  static const std::string header =
      "t,I1,I2,I3,lambda,Q,q,s,s_prime,s_second,norm_v0,norm_v1,norm_v2,"
      "norm_w1,norm_w2,norm_w3,cross4";
  return header;
}

std::string render_csv(const ExperimentOutcome& out) {
  const Paramsd params = make_params(out.config.params);
  const InvariantParamsd inv{out.config.invariant.C0, out.config.invariant.C1};
  std::string text = timeseries_header();
  text += '\n';
  for (const auto& s : out.samples) {
    const auto& m = s.m;
    const double values[17] = {
        s.t,
        maybe([&] { return eval_I1(m, params); }),
        maybe([&] { return eval_I2(m, params); }),
        maybe([&] { return eval_I3(m, params); }),
        maybe([&] { return eval_lambda(m); }),
        maybe([&] { return eval_Q(m, params, inv); }),
        m.q,
        m.s,
        m.s1,
        m.s2,
        m.norm_v[0],
        m.norm_v[1],
        m.norm_v[2],
        m.norm_w[1],
        m.norm_w[2],
        m.norm_w[3],
        m.cross4};
    for (int i = 0; i < 17; ++i) {
      if (i) text += ',';
      text += fmt_e(values[i]);
    }
    text += '\n';
  }
  if (out.trajectory.degenerate) {
    for (const auto& e : out.trajectory.events) {
      if (e.kind == TrajectoryEventd::Kind::q_crossing) {
        text += "# q_crossing t=" + fmt_e(e.t) + " q=" + fmt_e(e.value) + "\n";
        break;
      }
    }
  }
  return text;
}

std::vector<MomentSampled> parse_timeseries_csv(const std::string& text,
                                                const Paramsd& params) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != timeseries_header())
    throw ConfigError("config error: unexpected series header");
  std::vector<MomentSampled> samples;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::array<double, 17> c{};
    std::size_t pos = 0;
    for (int i = 0; i < 17; ++i) {
      const std::size_t next = line.find(',', pos);
      const bool last = i == 16;
      if (last != (next == std::string::npos))
        throw ConfigError("config error: series line " +
                          std::to_string(lineno) + ": expected 17 fields");
      const std::string field =
          line.substr(pos, last ? std::string::npos : next - pos);
      try {
        std::size_t used = 0;
        c[static_cast<std::size_t>(i)] = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw ConfigError("config error: series line " +
                          std::to_string(lineno) + ", field " +
                          std::to_string(i + 1) + ": not a number");
      }
      pos = next + 1;
    }
    MomentSampled s;
    s.t = c[0];
    s.m.q = c[6];
    s.m.s = c[7];
    s.m.s1 = c[8];
    s.m.s2 = c[9];
    s.m.norm_v = {c[10], c[11], c[12]};
    s.m.norm_w = {0.0, c[13], c[14], c[15]};
    s.m.cross4 = c[16];
    s.m.q1 = params.a * s.m.s1;
    s.m.q2 = params.a * s.m.s2;
    if (s.m.q != 0) s.m.lambda = s.m.q * s.m.norm_v[0] + s.m.norm_w[1] / s.m.q;
    samples.push_back(std::move(s));
  }
  return samples;
}

std::string render_report(const ExperimentOutcome& out) {
  const ExperimentConfig& cfg = out.config;
  const ModeLatticed lattice = build_lattice(cfg.lattice);
  std::ostringstream os;
  os << "verification report\n";
  os << "lattice: " << lattice.label() << ", " << lattice.size() << " modes\n";
  os << "params: a=" << fmt_g(cfg.params.a) << " b=" << fmt_g(cfg.params.b)
     << " q_tol=" << fmt_g(cfg.params.q_tol) << "\n";
  os << "invariant weights: C0=" << fmt_g(cfg.invariant.C0)
     << " C1=" << fmt_g(cfg.invariant.C1) << "\n";
  os << "integrator: " << cfg.integrator.method;
  if (cfg.integrator.method == "adaptive45")
    os << " (rtol=" << fmt_g(cfg.integrator.rtol)
       << ", atol=" << fmt_g(cfg.integrator.atol) << ")";
  else
    os << " (h=" << fmt_g(cfg.integrator.h) << ")";
  os << "\n";
  if (out.samples.empty()) {
    os << "samples: 0\n";
  } else {
    os << "samples: " << out.samples.size() << " over t in ["
       << fmt_g(out.samples.front().t) << ", " << fmt_g(out.samples.back().t)
       << "]\n";
  }
  os << "initial seed: " << out.initial_seed << "\n";
  os << "status: " << out.status << "\n\n";
  for (const auto& v : out.verdicts)
    os << std::left << std::setw(10) << v.name << std::setw(5) << v.verdict
       << "  " << v.detail << "\n";
  os << "\noverall: "
     << (out.status == "degenerate" ? "DEGENERATE"
                                    : (out.checks_passed ? "PASS" : "FAIL"))
     << "\n";
  return os.str();
}

nlohmann::json render_manifest(const ExperimentOutcome& out) {
  nlohmann::json run;
  run["status"] = out.status;
  run["initial_seed"] = out.initial_seed;
  run["samples"] = out.samples.size();
  run["accepted_steps"] = out.trajectory.stats.accepted;
  run["rejected_steps"] = out.trajectory.stats.rejected;
  for (const auto& e : out.trajectory.events) {
    if (e.kind == TrajectoryEventd::Kind::q_crossing) {
      run["event"] = nlohmann::json{{"t", e.t}, {"q", e.value}};
      break;
    }
  }
  return nlohmann::json{{"config", to_json(out.config)}, {"run", run}};
}

int run_experiment(const ExperimentConfig& cfg, std::string* report_text) {
  namespace fs = std::filesystem;
  const ExperimentOutcome out = execute(cfg);
  fs::create_directories(cfg.out);
  write_file(fs::path(cfg.out) / "timeseries.csv", render_csv(out));
  const std::string report = render_report(out);
  write_file(fs::path(cfg.out) / "report.txt", report);
  write_file(fs::path(cfg.out) / "manifest.json",
             render_manifest(out).dump(2) + "\n");
  if (report_text) *report_text = report;
  return out.exit_code();
}

int run_sweep(const SweepConfig& cfg, std::string* table_text) {
  namespace fs = std::filesystem;
  const bool has_amp = cfg.base.initial.type == "single_mode" ||
                       cfg.base.initial.type == "gaussian_decay";
  auto axis = [](const std::vector<double>& values, double base) {
    return values.empty() ? std::vector<double>{base} : values;
  };
  const auto as = axis(cfg.a, cfg.base.params.a);
  const auto bs = axis(cfg.b, cfg.base.params.b);
  const auto amps =
      axis(cfg.amplitude, has_amp ? cfg.base.initial.amplitude : kNaN);
  const auto hs = axis(cfg.h, cfg.base.integrator.h);
  const auto rtols = axis(cfg.rtol, cfg.base.integrator.rtol);

  struct GridPoint {
    double a, b, amplitude, h, rtol;
  };
  std::vector<GridPoint> grid;
  for (double a : as)
    for (double b : bs)
      for (double amp : amps)
        for (double h : hs)
          for (double rtol : rtols) grid.push_back({a, b, amp, h, rtol});

  std::vector<std::string> rows(grid.size());
  std::vector<int> codes(grid.size(), 0);
  std::atomic<std::size_t> cursor{0};

  auto work = [&]() {
    for (std::size_t i = cursor.fetch_add(1); i < grid.size();
         i = cursor.fetch_add(1)) {
      const GridPoint& g = grid[i];
      ExperimentConfig c = cfg.base;
      c.params.a = g.a;
      c.params.b = g.b;
      if (!std::isnan(g.amplitude)) c.initial.amplitude = g.amplitude;
      c.integrator.h = g.h;
      c.integrator.rtol = g.rtol;

      std::string status = "error";
      std::string detail;
      double d1 = kNaN, d2 = kNaN, d3 = kNaN, dq = kNaN;
      std::vector<std::string> cells;
      try {
        const ExperimentOutcome o = execute(c);
        status = o.status;
        d1 = o.drift_I1;
        d2 = o.drift_I2;
        d3 = o.drift_I3;
        dq = o.drift_Q;
        for (const std::string& name : known_checks()) {
          std::string cell = "off";
          for (const auto& v : o.verdicts) {
            if (v.name == name) {
              cell = v.verdict == "PASS"   ? "pass"
                     : v.verdict == "FAIL" ? "fail"
                                           : "n/a";
              break;
            }
          }
          cells.push_back(std::move(cell));
        }
        codes[i] = o.exit_code();
      } catch (const std::exception& e) {
        detail = sanitize_cell(e.what());
        cells.assign(known_checks().size(), "n/a");
        codes[i] = 4;
      }

      std::string row = std::to_string(i);
      for (double x : {g.a, g.b, g.amplitude, g.h, g.rtol})
        row += "," + fmt_e(x);
      row += "," + status;
      for (double x : {d1, d2, d3, dq}) row += "," + fmt_e(x);
      for (const auto& cell : cells) row += "," + cell;
      row += "," + detail;
      rows[i] = std::move(row);
    }
  };

  const std::size_t nworkers = std::min<std::size_t>(
      static_cast<std::size_t>(cfg.workers), std::max<std::size_t>(grid.size(), 1));
  if (nworkers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nworkers);
    for (std::size_t k = 0; k < nworkers; ++k) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  std::string table =
      "index,a,b,amplitude,h,rtol,status,drift_I1,drift_I2,drift_I3,drift_Q";
  for (const std::string& name : known_checks()) table += "," + name;
  table += ",detail\n";
  for (const auto& row : rows) {
    table += row;
    table += '\n';
  }

  fs::create_directories(cfg.base.out);
  write_file(fs::path(cfg.base.out) / "sweep.csv", table);
  write_file(fs::path(cfg.base.out) / "sweep_manifest.json",
             nlohmann::json{{"config", to_json(cfg)}}.dump(2) + "\n");
  if (table_text) *table_text = table;

  int exit = 0;
  for (int code : codes)
    if (code == 3) exit = 3;
  if (exit == 0)
    for (int code : codes)
      if (code != 0) exit = 4;
  return exit;
}

int run_quadform(const QuadformConfig& cfg, std::string* table_text) {
  namespace fs = std::filesystem;
  std::string table =
      "profile,xi,C0,C1,max_coeff_residual,splitting_residual,der27_rel_err,"
      "verdict,detail\n";
  bool all_pass = true;
  for (const auto& pspec : cfg.profiles) {
    const AnalyticProfile<double> profile = build_profile(pspec);
    const bool usable =
        profile.nonvanishing_on(cfg.span_start, cfg.span_end);
    for (double xi : cfg.xi) {
      for (const auto& [C0, C1] : cfg.pairs) {
        table += profile.label() + "," + fmt_g(xi) + "," + fmt_g(C0) + "," +
                 fmt_g(C1) + ",";
        if (!usable) {
          table += "nan,nan,nan,error,profile vanishes on the span\n";
          all_pass = false;
          continue;
        }
        const InvariantParams<double> inv{C0, C1};
        try {
          double res_max = 0, split_max = 0;
          for (int i = 0; i < cfg.time_samples; ++i) {
            const double t =
                cfg.span_start + (cfg.span_end - cfg.span_start) * i /
                                     (cfg.time_samples - 1);
            for (double r : coefficient_residuals(profile, t, inv))
              res_max = std::max(res_max, std::abs(r));
            split_max = std::max(
                split_max, std::abs(splitting_identity_residual(profile, t, inv)));
          }
          const auto rep =
              verify_der27(profile, xi * xi, inv, cfg.span_start, cfg.span_end,
                           cfg.checkpoints, cfg.delta, cfg.ode_rtol);
          const bool pass = res_max <= cfg.residual_tol &&
                            split_max <= cfg.residual_tol &&
                            rep.max_rel_err <= cfg.der27_tol;
          char buf[96];
          std::snprintf(buf, sizeof buf, "%.3e,%.3e,%.3e,%s,\n", res_max,
                        split_max, rep.max_rel_err, pass ? "pass" : "fail");
          table += buf;
          all_pass = all_pass && pass;
        } catch (const std::exception& e) {
          table += "nan,nan,nan,error," + sanitize_cell(e.what()) + "\n";
          all_pass = false;
        }
      }
    }
  }
  fs::create_directories(cfg.out);
  write_file(fs::path(cfg.out) / "quadform.csv", table);
  if (table_text) *table_text = table;
  return all_pass ? 0 : 4;
}

int run_report(const std::string& dir, std::string* report_text) {
  namespace fs = std::filesystem;
  const nlohmann::json manifest =
      parse_json_text(read_file(fs::path(dir) / "manifest.json"));
  if (!manifest.contains("config"))
    throw ConfigError("config error: manifest has no 'config'");
  ExperimentOutcome out;
  out.config = experiment_config_from_json(manifest.at("config"));
  out.initial_seed = out.config.seed;
  if (manifest.contains("run")) {
    const nlohmann::json& run = manifest.at("run");
    if (run.contains("status") && run.at("status").is_string())
      out.status = run.at("status").get<std::string>();
    if (run.contains("initial_seed") && run.at("initial_seed").is_number_integer())
      out.initial_seed = run.at("initial_seed").get<long>();
  }
  const Paramsd params = make_params(out.config.params);
  out.samples =
      parse_timeseries_csv(read_file(fs::path(dir) / "timeseries.csv"), params);
  evaluate_checks(out);
  const std::string report = render_report(out);
  if (report_text) *report_text = report;
  return out.exit_code();
}

} // namespace kp
