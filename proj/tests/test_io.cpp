#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kp/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

using namespace kp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path("io_scratch") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig tiny_config(const std::string& out) {
  ExperimentConfig cfg;
  cfg.lattice.max_index = 2;
  cfg.time.t_end = 1.0;
  cfg.time.sample_every = 0.25;
  cfg.out = out;
  return cfg;
}

} // namespace

TEST_CASE("empty config resolves to the documented defaults") {
  const ExperimentConfig cfg = parse_experiment_config("{}");
  CHECK(cfg == ExperimentConfig{});
  CHECK(cfg.lattice.type == "torus");
  CHECK(cfg.lattice.dim == 1);
  CHECK(cfg.lattice.max_index == 3);
  CHECK(cfg.params.a == 0.5);
  CHECK(cfg.params.b == 1.0);
  CHECK(cfg.initial.type == "single_mode");
  CHECK(cfg.initial.amplitude == 0.3);
  CHECK(cfg.integrator.method == "adaptive45");
  CHECK(cfg.integrator.rtol == 1e-10);
  CHECK(cfg.integrator.atol == 1e-12);
  CHECK(cfg.time.t_end == 10.0);
  CHECK(cfg.time.sample_every == 0.1);
  CHECK(cfg.invariant.C0 == 0.7);
  CHECK(cfg.invariant.C1 == -0.3);
  CHECK(cfg.checks == known_checks());
  CHECK(cfg.seed == 12345);
  CHECK(cfg.out == "./out");
}

TEST_CASE("serialized config re-parses to an equal value") {
  ExperimentConfig cfg;
  cfg.lattice.type = "custom";
  cfg.lattice.dim = 2;
  cfg.lattice.modes = {{{1.0, 0.0}, 1.0}, {{0.0, 1.0}, 0.5}};
  cfg.params = {-0.25, 2.0, 1e-10};
  cfg.initial.type = "explicit";
  cfg.initial.w = {{0.1, 0.2}, {0.3, -0.4}};
  cfg.initial.v = {{0.0, 0.0}, {0.05, 0.0}};
  cfg.integrator.method = "verlet";
  cfg.integrator.h = 0.015625;
  cfg.checks = {"drift", "audit_q"};
  cfg.seed = 777;
  cfg.out = "elsewhere";
  const ExperimentConfig back =
      experiment_config_from_json(to_json(cfg));
  CHECK(back == cfg);

  ExperimentConfig rnd;
  rnd.initial.type = "random_small";
  rnd.initial.target_I1 = 0.125;
  rnd.initial.seed = 99;
  CHECK(experiment_config_from_json(to_json(rnd)) == rnd);

  ExperimentConfig gd;
  gd.initial.type = "gaussian_decay";
  gd.initial.amplitude = 0.07;
  gd.initial.width = 1.5;
  CHECK(experiment_config_from_json(to_json(gd)) == gd);
}

TEST_CASE("parse errors name the offending field") {
  CHECK_THROWS_WITH_AS(parse_experiment_config(R"({"params":{"alpha":1}})"),
                       doctest::Contains("$.params"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_experiment_config(R"({"params":{"a":"x"}})"),
                       doctest::Contains("$.params.a"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_experiment_config(R"({"checks":["drip"]})"),
                       doctest::Contains("unknown check"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_experiment_config(R"({"integrator":{"method":"euler"}})"),
      doctest::Contains("$.integrator.method"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_experiment_config(R"({"params":{"a":0,"b":0}})"),
                       doctest::Contains("both"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_experiment_config("{\n  \"seed\": oops\n}"),
                       doctest::Contains("line 2"), ConfigError);
}

TEST_CASE("duplicate check names collapse, order follows the known list") {
  const ExperimentConfig cfg = parse_experiment_config(
      R"({"checks":["audit_q","drift","audit_q"]})");
  CHECK(cfg.checks == std::vector<std::string>{"audit_q", "drift"});
  CHECK(cfg.check_enabled("drift"));
  CHECK(!cfg.check_enabled("lemma1"));
}

TEST_CASE("dotted-path overrides parse values as JSON with a comma-list "
          "fallback") {
  nlohmann::json j = nlohmann::json::object();
  apply_override(j, "params.a=0.75");
  apply_override(j, "initial.type=gaussian_decay");
  apply_override(j, "checks=[\"drift\",\"audit_q\"]");
  apply_override(j, "lattice.max_index=2");
  ExperimentConfig cfg = experiment_config_from_json(j);
  CHECK(cfg.params.a == 0.75);
  CHECK(cfg.initial.type == "gaussian_decay");
  CHECK(cfg.checks == std::vector<std::string>{"drift", "audit_q"});
  CHECK(cfg.lattice.max_index == 2);

  nlohmann::json k = nlohmann::json::object();
  apply_override(k, "checks=drift,lemma1");
  CHECK(experiment_config_from_json(k).checks ==
        std::vector<std::string>{"drift", "lemma1"});

  CHECK_THROWS_AS(apply_override(j, "no_equals"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "=5"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "params.a.b=1"), ConfigError);
}

TEST_CASE("initial data profiles realize as specified") {
  const ModeLatticed lattice = make_torus_lattice(1, 2);
  const Paramsd params(0.5, 1.0);

  SUBCASE("single mode puts the amplitude at the named frequency") {
    InitialSpec spec;
    spec.type = "single_mode";
    spec.amplitude = 0.25;
    spec.frequency = {-2.0};
    spec.phase = 0.5;
    const auto st = build_initial_state(spec, lattice, params, 1);
    for (Eigen::Index k = 0; k < lattice.size(); ++k) {
      if (lattice.mode(k).xi[0] == -2.0) {
        CHECK(st.w[k] == std::polar(0.25, 0.5));
      } else {
        CHECK(st.w[k] == std::complex<double>(0.0, 0.0));
      }
      CHECK(st.v[k] == std::complex<double>(0.0, 0.0));
    }
    spec.frequency = {7.0};
    CHECK_THROWS_AS(build_initial_state(spec, lattice, params, 1), ConfigError);
    spec.frequency = {1.0, 0.0};
    CHECK_THROWS_AS(build_initial_state(spec, lattice, params, 1), ConfigError);
  }

  SUBCASE("gaussian decay profile follows amplitude*exp(-|xi|^2/(2 width^2))") {
    InitialSpec spec;
    spec.type = "gaussian_decay";
    spec.amplitude = 0.1;
    spec.width = 1.5;
    const auto st = build_initial_state(spec, lattice, params, 1);
    for (Eigen::Index k = 0; k < lattice.size(); ++k) {
      const double expected =
          0.1 * std::exp(-lattice.xi_sq()[k] / (2 * 1.5 * 1.5));
      CHECK(st.w[k].real() == doctest::Approx(expected).epsilon(1e-15));
      CHECK(st.w[k].imag() == 0.0);
      CHECK(st.v[k] == std::complex<double>(0.0, 0.0));
    }
  }

  SUBCASE("random_small lands exactly on the requested energy") {
    InitialSpec spec;
    spec.type = "random_small";
    spec.target_I1 = 0.2;
    spec.seed = 42;
    for (double a : {0.5, -0.5, 0.0}) {
      const Paramsd p(a, 1.0);
      const auto st = build_initial_state(spec, lattice, p, 1);
      const auto m = compute_moments(st, lattice, p);
      CHECK(eval_I1(m, p) == doctest::Approx(0.2).epsilon(1e-9));
      CHECK(m.q > 0);
    }
  }

  SUBCASE("random_small is seed deterministic and inherits the experiment "
          "seed when unpinned") {
    InitialSpec spec;
    spec.type = "random_small";
    spec.target_I1 = 0.2;
    spec.seed = 42;
    const auto s1 = build_initial_state(spec, lattice, params, 7);
    const auto s2 = build_initial_state(spec, lattice, params, 8);
    CHECK((s1.w == s2.w).all());  // pinned seed ignores the experiment seed
    spec.seed = -1;
    const auto s3 = build_initial_state(spec, lattice, params, 42);
    CHECK((s1.w == s3.w).all());
    CHECK((s1.v == s3.v).all());
    const auto s4 = build_initial_state(spec, lattice, params, 43);
    CHECK(!(s3.w == s4.w).all());
  }

  SUBCASE("random_small requires b > 0") {
    InitialSpec spec;
    spec.type = "random_small";
    const Paramsd p(1.0, -1.0);
    CHECK_THROWS_AS(build_initial_state(spec, lattice, p, 1), ConfigError);
  }

  SUBCASE("explicit data is copied and length checked") {
    InitialSpec spec;
    spec.type = "explicit";
    spec.w.assign(static_cast<std::size_t>(lattice.size()), {0.1, 0.0});
    spec.v.assign(static_cast<std::size_t>(lattice.size()), {0.0, 0.2});
    const auto st = build_initial_state(spec, lattice, params, 1);
    CHECK(st.w[3] == std::complex<double>(0.1, 0.0));
    CHECK(st.v[0] == std::complex<double>(0.0, 0.2));
    spec.w.pop_back();
    spec.v.pop_back();
    CHECK_THROWS_AS(build_initial_state(spec, lattice, params, 1), ConfigError);
  }
}

TEST_CASE("series header and cell format are pinned") {
  CHECK(timeseries_header() ==
        "t,I1,I2,I3,lambda,Q,q,s,s_prime,s_second,norm_v0,norm_v1,norm_v2,"
        "norm_w1,norm_w2,norm_w3,cross4");
  const ExperimentOutcome out = execute(tiny_config("unused"));
  const std::string csv = render_csv(out);
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  CHECK(line == timeseries_header());
  std::getline(is, line);
  // every cell carries 17 significant digits
  const std::regex cell("-?\\d\\.\\d{16}e[+-]\\d{2,3}");
  std::size_t cells = 0;
  for (std::sregex_iterator it(line.begin(), line.end(), cell), end;
       it != end; ++it)
    ++cells;
  CHECK(cells == 17);
}

TEST_CASE("written series round-trips the moments bitwise") {
  const ExperimentConfig cfg = tiny_config("unused");
  const ExperimentOutcome out = execute(cfg);
  REQUIRE(out.samples.size() == 5);
  const Paramsd params(cfg.params.a, cfg.params.b, cfg.params.q_tol);
  const auto parsed = parse_timeseries_csv(render_csv(out), params);
  REQUIRE(parsed.size() == out.samples.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    const auto& a = out.samples[i].m;
    const auto& b = parsed[i].m;
    CHECK(parsed[i].t == out.samples[i].t);
    CHECK(a.q == b.q);
    CHECK(a.s == b.s);
    CHECK(a.s1 == b.s1);
    CHECK(a.s2 == b.s2);
    CHECK(a.q1 == b.q1);
    CHECK(a.q2 == b.q2);
    CHECK(a.lambda == b.lambda);
    CHECK(a.cross4 == b.cross4);
    for (int p = 0; p < 3; ++p)
      CHECK(a.norm_v[static_cast<std::size_t>(p)] ==
            b.norm_v[static_cast<std::size_t>(p)]);
    for (int p = 1; p < 4; ++p)
      CHECK(a.norm_w[static_cast<std::size_t>(p)] ==
            b.norm_w[static_cast<std::size_t>(p)]);
  }
}

TEST_CASE("series parser rejects malformed input with a line number") {
  const Paramsd params(0.5, 1.0);
  CHECK_THROWS_WITH_AS(parse_timeseries_csv("a,b,c\n", params),
                       doctest::Contains("header"), ConfigError);
  const std::string good = render_csv(execute(tiny_config("unused")));
  CHECK_THROWS_WITH_AS(
      parse_timeseries_csv(good + "1,2,3\n", params),
      doctest::Contains("expected 17 fields"), ConfigError);
  std::string bad = good;
  bad.replace(bad.find("\n0.") + 1, 2, "xx");
  CHECK_THROWS_WITH_AS(parse_timeseries_csv(bad, params),
                       doctest::Contains("line 2"), ConfigError);
}

TEST_CASE("verdicts follow the enabled check list") {
  ExperimentConfig cfg = tiny_config("unused");
  ExperimentOutcome out = execute(cfg);
  REQUIRE(out.verdicts.size() == 6);
  for (std::size_t i = 0; i < out.verdicts.size(); ++i) {
    CHECK(out.verdicts[i].name == known_checks()[i]);
    CHECK(out.verdicts[i].verdict == "PASS");
  }
  CHECK(out.checks_passed);
  CHECK(out.exit_code() == 0);

  cfg.checks = {"drift", "audit_q"};
  out = execute(cfg);
  REQUIRE(out.verdicts.size() == 2);
  CHECK(out.verdicts[0].name == "drift");
  CHECK(out.verdicts[1].name == "audit_q");

  // a = 0 makes the smallness checks inapplicable, not failing
  cfg = tiny_config("unused");
  cfg.params.a = 0.0;
  out = execute(cfg);
  for (const auto& v : out.verdicts) {
    if (v.name == "lemma1" || v.name == "theorem4") {
      CHECK(v.verdict == "N/A");
    } else {
      CHECK(v.verdict == "PASS");
    }
  }
  CHECK(out.checks_passed);
}

TEST_CASE("run_experiment writes the three artifacts and reruns "
          "byte-identically") {
  const fs::path dir = fresh_dir("rerun");
  ExperimentConfig cfg = tiny_config(dir.string());
  CHECK(run_experiment(cfg) == 0);
  CHECK(fs::exists(dir / "timeseries.csv"));
  CHECK(fs::exists(dir / "report.txt"));
  CHECK(fs::exists(dir / "manifest.json"));
  const std::string first = slurp(dir / "timeseries.csv");
  const std::string report1 = slurp(dir / "report.txt");
  CHECK(run_experiment(cfg) == 0);
  CHECK(slurp(dir / "timeseries.csv") == first);
  CHECK(slurp(dir / "report.txt") == report1);

  // six verdict lines in the report for the default check set
  std::size_t verdict_lines = 0;
  std::istringstream is(report1);
  std::string line;
  while (std::getline(is, line))
    if (line.find("PASS") != std::string::npos &&
        line.rfind("overall", 0) != 0)
      ++verdict_lines;
  CHECK(verdict_lines == 6);
}

TEST_CASE("manifest echoes the resolved config exactly") {
  const fs::path dir = fresh_dir("manifest");
  ExperimentConfig cfg = tiny_config(dir.string());
  cfg.initial.type = "random_small";
  cfg.initial.target_I1 = 0.01;
  cfg.initial.seed = -1;
  cfg.seed = 31337;
  REQUIRE(run_experiment(cfg) == 0);
  const nlohmann::json manifest = parse_json_text(slurp(dir / "manifest.json"));
  REQUIRE(manifest.contains("config"));
  CHECK(experiment_config_from_json(manifest.at("config")) == cfg);
  CHECK(manifest.at("run").at("status") == "ok");
  CHECK(manifest.at("run").at("initial_seed") == 31337);
}

TEST_CASE("report mode re-derives identical verdicts from the artifacts") {
  const fs::path dir = fresh_dir("rederive");
  ExperimentConfig cfg = tiny_config(dir.string());
  REQUIRE(run_experiment(cfg) == 0);
  std::string text;
  CHECK(run_report(dir.string(), &text) == 0);
  for (const std::string& name : known_checks())
    CHECK(text.find(name) != std::string::npos);
  CHECK(text.find("FAIL") == std::string::npos);
  CHECK_THROWS_AS(run_report((dir / "missing").string(), nullptr), ConfigError);
}

TEST_CASE("degenerate run keeps the partial series, flags the event, exits 3") {
  const fs::path dir = fresh_dir("degen");
  ExperimentConfig cfg;
  cfg.lattice.type = "custom";
  cfg.lattice.dim = 1;
  cfg.lattice.modes = {{{1.0}, 1.0}};
  cfg.params = {1.0, -1.0, 0.0};
  cfg.initial.type = "explicit";
  cfg.initial.w = {{std::sqrt(2.0), 0.0}};
  cfg.initial.v = {{-0.5, 0.0}};
  cfg.time.t_end = 3.0;
  cfg.time.sample_every = 0.25;
  cfg.out = dir.string();
  CHECK(run_experiment(cfg) == 3);
  const std::string csv = slurp(dir / "timeseries.csv");
  CHECK(csv.find("# q_crossing t=") != std::string::npos);
  const nlohmann::json manifest = parse_json_text(slurp(dir / "manifest.json"));
  CHECK(manifest.at("run").at("status") == "degenerate");
  CHECK(manifest.at("run").contains("event"));
  // the retained rows parse and stop before the crossing
  const auto samples = parse_timeseries_csv(csv, Paramsd(1.0, -1.0));
  CHECK(samples.size() >= 2);
  CHECK(samples.back().t <
        manifest.at("run").at("event").at("t").get<double>());
}

TEST_CASE("sweep enumerates the grid lexicographically and in fixed axis "
          "order") {
  const fs::path dir = fresh_dir("sweep_order");
  SweepConfig cfg;
  cfg.base = tiny_config(dir.string());
  cfg.a = {0.25, 0.5};
  cfg.h = {0.1, 0.05};
  cfg.workers = 1;
  CHECK(run_sweep(cfg) == 0);
  const std::string table = slurp(dir / "sweep.csv");
  std::istringstream is(table);
  std::string line;
  std::getline(is, line);
  CHECK(line.rfind("index,a,b,amplitude,h,rtol,status,", 0) == 0);
  std::vector<std::pair<double, double>> seen;
  while (std::getline(is, line)) {
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');  // index
    std::getline(row, cell, ',');
    const double a = std::stod(cell);
    std::getline(row, cell, ',');  // b
    std::getline(row, cell, ',');  // amplitude
    std::getline(row, cell, ',');
    const double h = std::stod(cell);
    seen.emplace_back(a, h);
  }
  const std::vector<std::pair<double, double>> expect = {
      {0.25, 0.1}, {0.25, 0.05}, {0.5, 0.1}, {0.5, 0.05}};
  CHECK(seen == expect);
}

TEST_CASE("sweep output is identical for 1 and 4 workers, and per-point "
          "failures stay per-row") {
  const fs::path d1 = fresh_dir("sweep_w1");
  const fs::path d4 = fresh_dir("sweep_w4");
  SweepConfig cfg;
  cfg.base = tiny_config(d1.string());
  cfg.base.initial.type = "random_small";
  cfg.base.initial.target_I1 = 0.05;
  cfg.a = {0.5, -0.5};
  cfg.b = {1.0, 0.0};  // b = 0 cannot seed random_small: error row
  cfg.workers = 1;
  const int code1 = run_sweep(cfg);
  cfg.base.out = d4.string();
  cfg.workers = 4;
  const int code4 = run_sweep(cfg);
  CHECK(code1 == 4);
  CHECK(code4 == 4);
  const std::string t1 = slurp(d1 / "sweep.csv");
  const std::string t4 = slurp(d4 / "sweep.csv");
  CHECK(t1 == t4);
  // two of the four rows fail at setup, the others complete
  CHECK(std::count(t1.begin(), t1.end(), '\n') == 5);
  std::size_t errors = 0, oks = 0;
  std::istringstream is(t1);
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line.find(",error,") != std::string::npos) ++errors;
    if (line.find(",ok,") != std::string::npos) ++oks;
  }
  CHECK(errors == 2);
  CHECK(oks == 2);
}

TEST_CASE("quadform battery passes on the default profiles and flags "
          "vanishing spans per row") {
  const fs::path dir = fresh_dir("quadform");
  QuadformConfig cfg = parse_quadform_config("{}");
  cfg.out = dir.string();
  cfg.xi = {1.0};
  cfg.checkpoints = 25;
  std::string table;
  CHECK(run_quadform(cfg, &table) == 0);
  CHECK(table.find("fail") == std::string::npos);
  CHECK(table.find("error") == std::string::npos);
  // 4 profiles x 1 xi x 4 pairs = 16 rows + header
  CHECK(std::count(table.begin(), table.end(), '\n') == 17);

  ProfileSpec through_zero;
  through_zero.type = "affine";
  through_zero.value = 0.0;
  through_zero.slope = 1.0;
  cfg.profiles = {through_zero};
  CHECK(run_quadform(cfg, &table) == 4);
  std::istringstream is(table);
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line))
    CHECK(line.find("error,profile vanishes on the span") != std::string::npos);
}

TEST_CASE("sweep config validation rejects amplitude axes without an "
          "amplitude profile") {
  CHECK_THROWS_WITH_AS(
      parse_sweep_config(
          R"({"base":{"initial":{"type":"random_small"}},
              "axes":{"amplitude":[0.1]}})"),
      doctest::Contains("$.axes.amplitude"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_sweep_config(R"({"workers":0})"),
                       doctest::Contains("$.workers"), ConfigError);
  const SweepConfig cfg = parse_sweep_config(
      R"({"axes":{"amplitude":[0.1,0.2]},"workers":2})");
  CHECK(cfg.amplitude == std::vector<double>{0.1, 0.2});
  CHECK(sweep_config_from_json(to_json(cfg)) == cfg);
}
