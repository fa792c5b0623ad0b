#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kp/functionals.hpp"
#include "kp/lattice.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>

using namespace kp;
using Cplx = std::complex<double>;

namespace {

SpectralStated random_state(const ModeLatticed& lat, std::mt19937& rng,
                            double scale) {
  std::normal_distribution<double> g(0.0, scale);
  ComplexArrayd w(lat.size()), v(lat.size());
  for (Eigen::Index k = 0; k < lat.size(); ++k) {
    w[k] = Cplx(g(rng), g(rng));
    v[k] = Cplx(g(rng), g(rng));
  }
  return make_state(lat, std::move(w), std::move(v));
}

double rel_diff(double x, double y) {
  return std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-14});
}

} // namespace

TEST_CASE("single unit mode, a = b = 1: I2, I3, lambda by hand") {
  auto lat = make_line_lattice<double>({1.0});
  Paramsd p(1.0, 1.0);
  auto st = make_state<double>(lat, ComplexArrayd::Constant(1, Cplx(1, 0)),
                               ComplexArrayd::Zero(1));
  auto m = compute_moments(st, lat, p);
  CHECK(eval_I2(m, p) == doctest::Approx(0.5));
  // q*nv2 + nw3/q - 0 + 0 - (1/16)*(0 + q^2 s2^2) = 1/2 - 4*(1/4)/16
  CHECK(eval_I3(m, p) == doctest::Approx(7.0 / 16.0));
  CHECK(eval_lambda(m) == doctest::Approx(0.5));
}

TEST_CASE("energy of a still quarter-amplitude mode") {
  auto lat = make_line_lattice<double>({1.0});
  Paramsd p(1.0, 1.0);
  auto st = make_state<double>(lat, ComplexArrayd::Constant(1, Cplx(0.3, 0)),
                               ComplexArrayd::Zero(1));
  auto m = compute_moments(st, lat, p);
  // s = 0.09, q = 1.09, I1 = 0 + s/(b q)
  CHECK(eval_I1(m, p) == doctest::Approx(0.09 / 1.09).epsilon(1e-14));
}

TEST_CASE("I1 domain restrictions") {
  auto lat = make_line_lattice<double>({1.0});
  auto st = make_state<double>(lat, ComplexArrayd::Constant(1, Cplx(2, 0)),
                               ComplexArrayd::Zero(1));
  Paramsd b0(1.0, 0.0);
  auto m0 = compute_moments(st, lat, b0);
  CHECK_THROWS_AS(eval_I1(m0, b0), UnsupportedCaseError);

  // s = 4, a = -1, b = 1: q = -3 < 0
  Paramsd neg(-1.0, 1.0);
  auto mneg = compute_moments(st, lat, neg);
  CHECK(mneg.q == doctest::Approx(-3.0));
  CHECK_THROWS_AS(eval_I1(mneg, neg), std::domain_error);
  CHECK_THROWS_AS(eval_lambda(mneg), std::domain_error);
  // I2 and I3 only need q != 0
  CHECK(std::isfinite(eval_I2(mneg, neg)));
  CHECK(std::isfinite(eval_I3(mneg, neg)));
}

TEST_CASE("Q reduces to I2 at (0,1) and to I3 at (1,0)") {
  auto lat = make_torus_lattice(1, 2);
  std::mt19937 rng(1234);
  std::uniform_real_distribution<double> ua(-1.5, 1.5), ub(0.5, 2.0);
  int tried = 0;
  for (int it = 0; it < 200; ++it) {
    Paramsd p(ua(rng), ub(rng));
    auto st = random_state(lat, rng, 0.4);
    if (std::abs(compute_q(st, lat, p)) < 0.1) continue;
    ++tried;
    auto m = compute_moments(st, lat, p);
    CHECK(rel_diff(eval_Q(m, p, {0.0, 1.0}), eval_I2(m, p)) < 1e-12);
    CHECK(rel_diff(eval_Q(m, p, {1.0, 0.0}), eval_I3(m, p)) < 1e-12);
  }
  CHECK(tried > 100);
}

TEST_CASE("Q is linear in (C0, C1)") {
  auto lat = make_torus_lattice(1, 2);
  std::mt19937 rng(99);
  Paramsd p(0.8, 1.1);
  for (int it = 0; it < 50; ++it) {
    auto st = random_state(lat, rng, 0.3);
    auto m = compute_moments(st, lat, p);
    const double qa = eval_Q(m, p, {0.7, -0.2});
    const double qb = eval_Q(m, p, {-1.3, 0.9});
    const double qsum = eval_Q(m, p, {0.7 - 1.3, -0.2 + 0.9});
    CHECK(rel_diff(qa + qb, qsum) < 1e-12);
    const double qscaled = eval_Q(m, p, {3.0 * 0.7, 3.0 * -0.2});
    CHECK(rel_diff(3.0 * qa, qscaled) < 1e-12);
  }
}

TEST_CASE("I1 is positive for positive parameters") {
  auto lat = make_torus_lattice(1, 2);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> ua(0.1, 2.0), ub(0.1, 2.0);
  for (int it = 0; it < 100; ++it) {
    Paramsd p(ua(rng), ub(rng));
    auto st = random_state(lat, rng, 0.5);
    auto m = compute_moments(st, lat, p);
    CHECK(eval_I1(m, p) >= 0.0);
  }
}

TEST_CASE("snapshot terms sum to the functionals") {
  auto lat = make_torus_lattice(1, 2);
  std::mt19937 rng(17);
  Paramsd p(0.5, 1.0);
  InvariantParamsd inv{0.7, -0.3};
  auto st = random_state(lat, rng, 0.3);
  auto m = compute_moments(st, lat, p);
  auto snap = make_snapshot(m, p, inv, st.t);
  CHECK(rel_diff(snap.i2_terms.kinetic + snap.i2_terms.potential +
                     snap.i2_terms.s1_correction,
                 snap.I2) < 1e-13);
  CHECK(rel_diff(snap.i3_terms.kinetic + snap.i3_terms.potential +
                     snap.i3_terms.cross + snap.i3_terms.d2_coupling +
                     snap.i3_terms.s_correction,
                 snap.I3) < 1e-13);
  CHECK(rel_diff(snap.q_terms.top + snap.q_terms.cross + snap.q_terms.gamma +
                     snap.q_terms.mid + snap.q_terms.s_corr0 +
                     snap.q_terms.s_corr1,
                 snap.Q) < 1e-13);
  CHECK(snap.I1 == doctest::Approx(eval_I1(m, p)));
  CHECK(snap.lambda == doctest::Approx(eval_lambda(m)));
}
