#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kp/quadform.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace kp;

namespace {

std::vector<AnalyticProfile<double>> battery() {
  return {AnalyticProfile<double>::constant(2.0),
          AnalyticProfile<double>::affine(2.0, 1.0),
          AnalyticProfile<double>::trig(2.0, 1.0, 1.0),
          AnalyticProfile<double>::polynomial({1.0, 0.0, 0.1})};
}

std::vector<InvariantParams<double>> pairs() {
  return {{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}, {-2.0, 3.0}};
}

} // namespace

TEST_CASE("profile derivatives are exact") {
  auto poly = AnalyticProfile<double>::polynomial({1.0, 0.0, 0.1});
  CHECK(poly.eval(3.0, 0) == doctest::Approx(1.9));
  CHECK(poly.eval(3.0, 1) == doctest::Approx(0.6));
  CHECK(poly.eval(3.0, 2) == doctest::Approx(0.2));
  CHECK(poly.eval(3.0, 3) == doctest::Approx(0.0));
  CHECK(poly.eval(3.0, 4) == doctest::Approx(0.0));

  auto tr = AnalyticProfile<double>::trig(2.0, 0.5, 3.0, 0.2);
  const double th = 3.0 * 0.7 + 0.2;
  CHECK(tr.eval(0.7, 0) == doctest::Approx(2.0 + 0.5 * std::sin(th)));
  CHECK(tr.eval(0.7, 1) == doctest::Approx(0.5 * 3.0 * std::cos(th)));
  CHECK(tr.eval(0.7, 2) == doctest::Approx(-0.5 * 9.0 * std::sin(th)));
  CHECK(tr.eval(0.7, 3) == doctest::Approx(-0.5 * 27.0 * std::cos(th)));
  CHECK(tr.eval(0.7, 4) == doctest::Approx(0.5 * 81.0 * std::sin(th)));

  CHECK(AnalyticProfile<double>::constant(4.0).eval(100.0, 0) == 4.0);
  CHECK(AnalyticProfile<double>::constant(4.0).eval(100.0, 1) == 0.0);
  CHECK_THROWS_AS(poly.eval(0.0, 5), std::invalid_argument);
}

TEST_CASE("nonvanishing detection") {
  auto up = AnalyticProfile<double>::affine(2.0, 1.0);
  CHECK(up.nonvanishing_on(0.0, 5.0));
  auto crossing = AnalyticProfile<double>::affine(1.0, -1.0);
  CHECK_FALSE(crossing.nonvanishing_on(0.0, 5.0));
  auto dip = AnalyticProfile<double>::trig(0.5, 1.0, 1.0);
  CHECK_FALSE(dip.nonvanishing_on(0.0, 7.0));
  CHECK(dip.nonvanishing_on(0.0, 0.1));
}

TEST_CASE("coefficients of the identity profile at t = 1, (1, 0)") {
  auto ramp = AnalyticProfile<double>::affine(0.0, 1.0);
  auto c = coefficients(ramp, 1.0, {1.0, 0.0});
  CHECK(c.alpha0 == doctest::Approx(1.0));
  CHECK(c.beta0 == doctest::Approx(-1.0));
  CHECK(c.gamma0 == doctest::Approx(0.0));
  CHECK(c.alpha1 == doctest::Approx(1.0 / 8.0));
  CHECK(c.beta1 == doctest::Approx(-1.0 / 8.0));
}

TEST_CASE("pure C1 slice reduces to the undifferentiated weights") {
  // with C0 = 0: alpha1 = C1 q, beta1 = -C1 q', everything else 0
  auto tr = AnalyticProfile<double>::trig(2.0, 1.0, 1.0);
  auto c = coefficients(tr, 0.9, {0.0, 2.5});
  CHECK(c.alpha0 == 0.0);
  CHECK(c.beta0 == 0.0);
  CHECK(c.gamma0 == 0.0);
  CHECK(c.alpha1 == doctest::Approx(2.5 * tr.eval(0.9)));
  CHECK(c.beta1 == doctest::Approx(-2.5 * tr.eval(0.9, 1)));
  CHECK(c.beta1_prime == doctest::Approx(-2.5 * tr.eval(0.9, 2)));
}

TEST_CASE("coefficient relations vanish along every profile") {
  for (const auto& prof : battery()) {
    for (const auto& inv : pairs()) {
      for (int i = 0; i < 100; ++i) {
        const double t = 5.0 * i / 99.0;
        auto r = coefficient_residuals(prof, t, inv);
        for (double rv : r) CHECK(std::abs(rv) < 1e-12);
        CHECK(std::abs(splitting_identity_residual(prof, t, inv)) < 1e-12);
      }
    }
  }
}

TEST_CASE("form derivative matches its closed-form source along each profile") {
  for (const auto& prof : battery()) {
    for (double xi : {1.0, 2.0, 5.0}) {
      for (const auto& inv : pairs()) {
        auto rep = verify_der27(prof, xi * xi, inv, 0.0, 5.0, 100, 1e-3);
        INFO(prof.label(), " xi=", xi, " C0=", inv.C0, " C1=", inv.C1,
             " rel=", rep.max_rel_err);
        CHECK(rep.max_rel_err < 1e-6);
      }
    }
  }
}

TEST_CASE("verify rejects unusable spans") {
  auto crossing = AnalyticProfile<double>::affine(1.0, -1.0);
  CHECK_THROWS_AS(verify_der27(crossing, 1.0, {1.0, 0.0}, 0.0, 5.0),
                  std::domain_error);
  auto ok = AnalyticProfile<double>::constant(2.0);
  CHECK_THROWS_AS(verify_der27(ok, 1.0, {1.0, 0.0}, 0.0, 0.004),
                  std::invalid_argument);
  CHECK_THROWS_AS(verify_der27(ok, 1.0, {1.0, 0.0}, 0.0, 5.0, 1),
                  std::invalid_argument);
}
