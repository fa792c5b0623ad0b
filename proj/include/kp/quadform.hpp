#ifndef KP_QUADFORM_HPP
#define KP_QUADFORM_HPP

#include "kp/errors.hpp"
#include "kp/functionals.hpp"
#include "kp/integrators.hpp"
#include "kp/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace kp {

/// Scalar time profile q(t) with exact derivatives through fourth order.
/// Used to probe the coefficient algebra along prescribed coefficient
/// histories, independent of any actual solution flow.
template <typename Scalar>
class AnalyticProfile {
public:
  static AnalyticProfile constant(Scalar c) {
    AnalyticProfile p;
    p.kind_ = Kind::polynomial;
    p.coeffs_ = {c};
    p.label_ = "constant";
    return p;
  }

  static AnalyticProfile affine(Scalar c, Scalar slope) {
    AnalyticProfile p;
    p.kind_ = Kind::polynomial;
    p.coeffs_ = {c, slope};
    p.label_ = "affine";
    return p;
  }

  /// q(t) = sum_k coeffs[k] * t^k.
  static AnalyticProfile polynomial(std::vector<Scalar> coeffs) {
    if (coeffs.empty())
      throw std::invalid_argument("profile: empty coefficient list");
    AnalyticProfile p;
    p.kind_ = Kind::polynomial;
    p.coeffs_ = std::move(coeffs);
    p.label_ = "polynomial";
    return p;
  }

  /// q(t) = c + amp * sin(omega t + phase).
  static AnalyticProfile trig(Scalar c, Scalar amp, Scalar omega,
                              Scalar phase = Scalar(0)) {
    AnalyticProfile p;
    p.kind_ = Kind::trig;
    p.coeffs_ = {c, amp, omega, phase};
    p.label_ = "trig";
    return p;
  }

  const std::string& label() const { return label_; }

  /// d^k q / dt^k, k in 0..4.
  Scalar eval(Scalar t, int derivative = 0) const {
    if (derivative < 0 || derivative > 4)
      throw std::invalid_argument("profile: derivative order out of range");
    using std::cos;
    using std::sin;
    if (kind_ == Kind::trig) {
      const Scalar c = coeffs_[0], amp = coeffs_[1], om = coeffs_[2],
                   ph = coeffs_[3];
      const Scalar arg = om * t + ph;
      Scalar factor = Scalar(1);
      for (int j = 0; j < derivative; ++j) factor *= om;
      switch (derivative % 4) {
        case 0: return (derivative == 0 ? c : Scalar(0)) + amp * factor * sin(arg);
        case 1: return amp * factor * cos(arg);
        case 2: return -amp * factor * sin(arg);
        default: return -amp * factor * cos(arg);
      }
    }
    // polynomial: differentiate the monomial basis term by term
    Scalar acc = Scalar(0);
    Scalar tp = Scalar(1);
    for (std::size_t k = std::size_t(derivative); k < coeffs_.size(); ++k) {
      Scalar fall = Scalar(1);
      for (int j = 0; j < derivative; ++j) fall *= Scalar(k - std::size_t(j));
      acc += coeffs_[k] * fall * tp;
      tp *= t;
    }
    return acc;
  }

  /// True when q keeps one sign and stays away from zero on [t0, t1],
  /// judged on a dense sample.
  bool nonvanishing_on(Scalar t0, Scalar t1, int samples = 1000,
                       Scalar floor = Scalar(1e-10)) const {
    using std::abs;
    if (samples < 2) throw std::invalid_argument("profile: samples < 2");
    const Scalar q0 = eval(t0);
    for (int i = 0; i < samples; ++i) {
      const Scalar t = t0 + (t1 - t0) * Scalar(i) / Scalar(samples - 1);
      const Scalar q = eval(t);
      if (abs(q) <= floor) return false;
      if ((q > Scalar(0)) != (q0 > Scalar(0))) return false;
    }
    return true;
  }

private:
  enum class Kind { polynomial, trig };
  AnalyticProfile() = default;

  Kind kind_ = Kind::polynomial;
  std::vector<Scalar> coeffs_;
  std::string label_;
};

/// Coefficients of the weighted quadratic form attached to one profile and
/// one member (C0, C1) of the invariant family:
///   alpha0 = C0 q                beta0 = -C0 q'
///   gamma0 = -(C0/2) q^2 q''
///   alpha1 = (C0/4) q (q'^2/2 + q q'') + C1 q
///   beta1  = -(C0/4) (q'^3/2 - q q' q'' - q^2 q''') - C1 q'
/// beta1_prime is the exact time derivative of beta1; it is the only source
/// term left in d/dt of the form.
template <typename Scalar>
struct CoefficientSet {
  Scalar alpha0 = 0, beta0 = 0, gamma0 = 0;
  Scalar alpha1 = 0, beta1 = 0;
  Scalar beta1_prime = 0;
};

template <typename Scalar>
CoefficientSet<Scalar> coefficients(const AnalyticProfile<Scalar>& profile,
                                    Scalar t,
                                    const InvariantParams<Scalar>& inv) {
  const Scalar q = profile.eval(t, 0);
  const Scalar q1 = profile.eval(t, 1);
  const Scalar q2 = profile.eval(t, 2);
  const Scalar q3 = profile.eval(t, 3);
  const Scalar q4 = profile.eval(t, 4);
  CoefficientSet<Scalar> c;
  c.alpha0 = inv.C0 * q;
  c.beta0 = -inv.C0 * q1;
  c.gamma0 = -inv.C0 / Scalar(2) * q * q * q2;
  c.alpha1 =
      inv.C0 / Scalar(4) * q * (q1 * q1 / Scalar(2) + q * q2) + inv.C1 * q;
  c.beta1 = -inv.C0 / Scalar(4) *
                (q1 * q1 * q1 / Scalar(2) - q * q1 * q2 - q * q * q3) -
            inv.C1 * q1;
  c.beta1_prime = -inv.C0 / Scalar(4) *
                      (q1 * q1 * q2 / Scalar(2) - q * q2 * q2 -
                       Scalar(3) * q * q1 * q3 - q * q * q4) -
                  inv.C1 * q2;
  return c;
}

/// The five closed-under-differentiation relations the coefficients satisfy;
/// each entry vanishes identically in exact arithmetic.
///   [0] (alpha0/q^2)' - beta0/q^2
///   [1] alpha0' + beta0
///   [2] beta0' - 2 gamma0/q^2
///   [3] (alpha1/q^2)' - beta1/q^2
///   [4] alpha1' + beta1 + gamma0'
template <typename Scalar>
std::array<Scalar, 5> coefficient_residuals(
    const AnalyticProfile<Scalar>& profile, Scalar t,
    const InvariantParams<Scalar>& inv) {
  const Scalar q = profile.eval(t, 0);
  const Scalar q1 = profile.eval(t, 1);
  const Scalar q2 = profile.eval(t, 2);
  const Scalar q3 = profile.eval(t, 3);
  if (q == Scalar(0))
    throw std::domain_error("coefficient_residuals: q vanishes at t");
  const CoefficientSet<Scalar> c = coefficients(profile, t, inv);

  const Scalar alpha0_p = inv.C0 * q1;
  const Scalar beta0_p = -inv.C0 * q2;
  const Scalar gamma0_p =
      -inv.C0 / Scalar(2) * (Scalar(2) * q * q1 * q2 + q * q * q3);
  const Scalar alpha1_p =
      inv.C0 / Scalar(4) *
          (q1 * q1 * q1 / Scalar(2) + Scalar(3) * q * q1 * q2 + q * q * q3) +
      inv.C1 * q1;

  const Scalar q_sq = q * q;
  std::array<Scalar, 5> r{};
  r[0] = (alpha0_p * q_sq - Scalar(2) * q * q1 * c.alpha0) / (q_sq * q_sq) -
         c.beta0 / q_sq;
  r[1] = alpha0_p + c.beta0;
  r[2] = beta0_p - Scalar(2) * c.gamma0 / q_sq;
  r[3] = (alpha1_p * q_sq - Scalar(2) * q * q1 * c.alpha1) / (q_sq * q_sq) -
         c.beta1 / q_sq;
  r[4] = alpha1_p + c.beta1 + gamma0_p;
  return r;
}

/// Residual of the companion identity (alpha1/q)' = -(1/2) gamma0'/q.
template <typename Scalar>
Scalar splitting_identity_residual(const AnalyticProfile<Scalar>& profile,
                                   Scalar t,
                                   const InvariantParams<Scalar>& inv) {
  const Scalar q = profile.eval(t, 0);
  const Scalar q1 = profile.eval(t, 1);
  const Scalar q2 = profile.eval(t, 2);
  const Scalar q3 = profile.eval(t, 3);
  if (q == Scalar(0))
    throw std::domain_error("splitting_identity_residual: q vanishes at t");
  // (alpha1/q)' with alpha1/q = (C0/4)(q'^2/2 + q q'') + C1
  const Scalar lhs =
      inv.C0 / Scalar(4) * (Scalar(2) * q1 * q2 + q * q3);
  const Scalar gamma0_p =
      -inv.C0 / Scalar(2) * (Scalar(2) * q * q1 * q2 + q * q * q3);
  return lhs + gamma0_p / (Scalar(2) * q);
}

/// Weighted quadratic form of one mode:
///   E = sum_i alpha_i |xi|^(4-2i) (|v|^2 + |xi|^2 |w|^2 / q^2)
///     + sum_i beta_i  |xi|^(4-2i) Re(conj(w) v)
///     + gamma0 |xi|^2 |v|^2.
template <typename Scalar>
Scalar quadform_E(const CoefficientSet<Scalar>& c, Scalar q, Scalar xi_sq,
                  std::complex<Scalar> w, std::complex<Scalar> v) {
  if (q == Scalar(0)) throw std::domain_error("quadform_E: q vanishes");
  const Scalar w2 = std::norm(w);
  const Scalar v2 = std::norm(v);
  const Scalar wv = (std::conj(w) * v).real();
  const Scalar xi4 = xi_sq * xi_sq;
  const Scalar energy0 = v2 + xi_sq * w2 / (q * q);
  return c.alpha0 * xi4 * energy0 + c.alpha1 * xi_sq * energy0 +
         c.beta0 * xi4 * wv + c.beta1 * xi_sq * wv + c.gamma0 * xi_sq * v2;
}

/// Outcome of checking dE/dt = beta1' |xi|^2 Re(conj(w) v) along one mode
/// driven by the profile.  The relative error is normalized by the larger
/// of the source-term scale and the form scale, so profiles with a silent
/// source (constant q) are still checked meaningfully.
template <typename Scalar>
struct Der27Report {
  Scalar max_abs_err = 0;
  Scalar scale = 1;
  Scalar max_rel_err = 0;
  int checkpoints = 0;
};

/// Integrates w'' = -|xi|^2 w / q(t)^2 with (w, v)(t0) = (1, 0), evaluates
/// the form on a five-point stencil around uniform checkpoints, and compares
/// the fourth-order finite difference of E with the closed-form source.
template <typename Scalar>
Der27Report<Scalar> verify_der27(const AnalyticProfile<Scalar>& profile,
                                 Scalar xi_sq,
                                 const InvariantParams<Scalar>& inv, Scalar t0,
                                 Scalar t1, int checkpoints = 100,
                                 Scalar delta = Scalar(1e-3),
                                 Scalar rtol = Scalar(1e-12)) {
  using std::abs;
  if (!(delta > Scalar(0)) || !(t1 > t0 + Scalar(5) * delta))
    throw std::invalid_argument("verify_der27: span too short for the stencil");
  if (checkpoints < 2)
    throw std::invalid_argument("verify_der27: need at least two checkpoints");
  if (!profile.nonvanishing_on(t0, t1))
    throw std::domain_error("verify_der27: profile vanishes on the span");

  auto rhs = [&profile, xi_sq](Scalar t, const ComplexArray<Scalar>& y,
                               ComplexArray<Scalar>& dy) {
    const Scalar q = profile.eval(t, 0);
    if (abs(q) <= Scalar(1e-14)) {
      std::ostringstream os;
      os << "profile q vanished at t=" << double(t);
      throw DegenerateQError(double(t), double(q), os.str());
    }
    dy[0] = y[1];
    dy[1] = -xi_sq * y[0] / (q * q);
  };

  // stencil times, grouped by checkpoint, sorted globally
  const Scalar lo = t0 + Scalar(2) * delta;
  const Scalar hi = t1 - Scalar(2) * delta;
  struct Slot {
    Scalar t;
    int cp;
    int node;
  };
  std::vector<Slot> slots;
  slots.reserve(std::size_t(checkpoints) * 5);
  for (int j = 0; j < checkpoints; ++j) {
    const Scalar tau =
        lo + (hi - lo) * Scalar(j) / Scalar(checkpoints - 1);
    for (int node = 0; node < 5; ++node)
      slots.push_back({tau + Scalar(node - 2) * delta, j, node});
  }
  std::sort(slots.begin(), slots.end(),
            [](const Slot& a, const Slot& b) { return a.t < b.t; });

  StepControl<Scalar> ctl;
  ctl.rtol = rtol;
  ctl.atol = rtol * Scalar(1e-2);
  ctl.h = delta;
  detail::Dopri45<Scalar, decltype(rhs)> core(rhs, 2, ctl);
  core.reset();
  ComplexArray<Scalar> y(2);
  y[0] = std::complex<Scalar>(1, 0);
  y[1] = std::complex<Scalar>(0, 0);
  Scalar t = t0;
  StepStats<Scalar> stats;

  std::vector<std::array<Scalar, 5>> E(static_cast<std::size_t>(checkpoints));
  std::vector<Scalar> source(static_cast<std::size_t>(checkpoints));
  auto noop = [](Scalar, const ComplexArray<Scalar>&, Scalar,
                 const ComplexArray<Scalar>&) {};
  Scalar e_scale = Scalar(0);
  for (const Slot& slot : slots) {
    core.advance_to(t, y, slot.t, stats, nullptr, noop);
    const CoefficientSet<Scalar> c = coefficients(profile, slot.t, inv);
    const Scalar q = profile.eval(slot.t, 0);
    const Scalar e = quadform_E(c, q, xi_sq, y[0], y[1]);
    E[std::size_t(slot.cp)][std::size_t(slot.node)] = e;
    e_scale = std::max(e_scale, abs(e));
    if (slot.node == 2)
      source[std::size_t(slot.cp)] =
          c.beta1_prime * xi_sq * (std::conj(y[0]) * y[1]).real();
  }

  Der27Report<Scalar> report;
  report.checkpoints = checkpoints;
  Scalar source_scale = Scalar(0);
  for (int j = 0; j < checkpoints; ++j)
    source_scale = std::max(source_scale, abs(source[std::size_t(j)]));
  report.scale = std::max({source_scale, e_scale, Scalar(1e-30)});
  for (int j = 0; j < checkpoints; ++j) {
    const auto& e = E[std::size_t(j)];
    const Scalar fd =
        (-e[4] + Scalar(8) * e[3] - Scalar(8) * e[1] + e[0]) /
        (Scalar(12) * delta);
    report.max_abs_err =
        std::max(report.max_abs_err, abs(fd - source[std::size_t(j)]));
  }
  report.max_rel_err = report.max_abs_err / report.scale;
  return report;
}

} // namespace kp

#endif // KP_QUADFORM_HPP
