#ifndef KP_DYNAMICS_HPP
#define KP_DYNAMICS_HPP

#include "kp/errors.hpp"
#include "kp/lattice.hpp"
#include "kp/types.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace kp {

/// Equation parameters: propagation speed 1/(a*s + b)^2 with s = |grad u|^2.
template <typename Scalar>
struct Params {
  Scalar a = Scalar(0);
  Scalar b = Scalar(1);
  /// Degeneracy guard on q = a*s + b; 0 selects the default
  /// 1e-12 * max(1, |b|).
  Scalar q_tol = Scalar(0);

  Params() = default;
  Params(Scalar a_, Scalar b_, Scalar q_tol_ = Scalar(0))
      : a(a_), b(b_), q_tol(q_tol_) {
    if (a == Scalar(0) && b == Scalar(0))
      throw std::invalid_argument("Params: a and b must not both be zero");
  }

  Scalar q_floor() const {
    using std::abs;
    return q_tol > Scalar(0) ? q_tol
                             : Scalar(1e-12) * std::max(Scalar(1), abs(b));
  }
};

/// Full dynamical state: Fourier coefficients w of u and v of u_t, plus time.
template <typename Scalar>
struct SpectralState {
  Scalar t = Scalar(0);
  ComplexArray<Scalar> w;
  ComplexArray<Scalar> v;

  bool is_finite() const {
    return w.isFinite().all() && v.isFinite().all() && std::isfinite(double(t));
  }
};

template <typename Scalar>
SpectralState<Scalar> make_state(const ModeLattice<Scalar>& lattice,
                                 ComplexArray<Scalar> w, ComplexArray<Scalar> v,
                                 Scalar t = Scalar(0)) {
  if (w.size() != lattice.size() || v.size() != lattice.size())
    throw std::invalid_argument("make_state: array length != lattice size");
  SpectralState<Scalar> st{t, std::move(w), std::move(v)};
  if (!st.is_finite())
    throw std::invalid_argument("make_state: non-finite entries");
  return st;
}

template <typename Scalar>
SpectralState<Scalar> make_zero_state(const ModeLattice<Scalar>& lattice,
                                      Scalar t = Scalar(0)) {
  return SpectralState<Scalar>{t, ComplexArray<Scalar>::Zero(lattice.size()),
                               ComplexArray<Scalar>::Zero(lattice.size())};
}

/// Every scalar reduction of the state.  All fields are pure functions of
/// the instantaneous (w, v); the second derivative s2 uses the closed form
/// that already substitutes the equation, so conservation checks do not
/// depend on step history.
///
///   s   = sum w*|xi|^2*|w|^2          (|grad u|^2)
///   s1  = 2 sum w*|xi|^2*Re(conj(w) v)
///   s2  = 2*norm_v[1] - (2/q^2)*norm_w[2]
///   q   = a*s + b,  q1 = a*s1,  q2 = a*s2
///   lambda = q*norm_v[0] + norm_w[1]/q
template <typename Scalar>
struct SpectralMoments {
  Scalar s = 0, s1 = 0, s2 = 0;
  Scalar q = 0, q1 = 0, q2 = 0;
  Scalar lambda = 0;
  std::array<Scalar, 4> norm_w{};  // ||xi|^m w|^2, m = 0..3
  std::array<Scalar, 3> norm_v{};  // ||xi|^m v|^2, m = 0..2
  Scalar cross4 = 0;               // sum w*|xi|^4*Re(conj(w) v)
};

/// s alone (no degeneracy requirement).
template <typename Scalar>
Scalar compute_s(const SpectralState<Scalar>& state,
                 const ModeLattice<Scalar>& lattice) {
  return (lattice.weighted_xi_pow(1) * state.w.abs2()).sum();
}

/// q = a*s + b alone (no degeneracy requirement); used by the sign-crossing
/// predicate, which must evaluate q without throwing.
template <typename Scalar>
Scalar compute_q(const SpectralState<Scalar>& state,
                 const ModeLattice<Scalar>& lattice,
                 const Params<Scalar>& params) {
  return params.a * compute_s(state, lattice) + params.b;
}

template <typename Scalar>
SpectralMoments<Scalar> compute_moments(const SpectralState<Scalar>& state,
                                        const ModeLattice<Scalar>& lattice,
                                        const Params<Scalar>& params) {
  using std::abs;
  SpectralMoments<Scalar> m;
  const RealArray<Scalar> w_abs2 = state.w.abs2();
  const RealArray<Scalar> v_abs2 = state.v.abs2();
  const RealArray<Scalar> wv_re = (state.w.conjugate() * state.v).real();
  for (int p = 0; p < 4; ++p)
    m.norm_w[static_cast<std::size_t>(p)] =
        (lattice.weighted_xi_pow(p) * w_abs2).sum();
  for (int p = 0; p < 3; ++p)
    m.norm_v[static_cast<std::size_t>(p)] =
        (lattice.weighted_xi_pow(p) * v_abs2).sum();
  m.cross4 = (lattice.weighted_xi_pow(2) * wv_re).sum();
  m.s = m.norm_w[1];
  m.s1 = Scalar(2) * (lattice.weighted_xi_pow(1) * wv_re).sum();
  m.q = params.a * m.s + params.b;
  m.q1 = params.a * m.s1;
  if (abs(m.q) <= params.q_floor()) {
    std::ostringstream os;
    os << "degenerate coefficient q=" << double(m.q) << " at t="
       << double(state.t);
    throw DegenerateQError(double(state.t), double(m.q), os.str());
  }
  m.s2 = Scalar(2) * m.norm_v[1] - Scalar(2) / (m.q * m.q) * m.norm_w[2];
  m.q2 = params.a * m.s2;
  m.lambda = m.q * m.norm_v[0] + m.norm_w[1] / m.q;
  return m;
}

/// Time derivative of the state: dw/dt = v, dv/dt = -|xi|^2 w / q^2 with the
/// single shared q.  The |xi| = 0 mode evolves freely (w_tt = 0).
template <typename Scalar>
void rhs_into(const SpectralState<Scalar>& state,
              const ModeLattice<Scalar>& lattice, const Params<Scalar>& params,
              ComplexArray<Scalar>& dw, ComplexArray<Scalar>& dv) {
  using std::abs;
  const Scalar q = compute_q(state, lattice, params);
  if (abs(q) <= params.q_floor()) {
    std::ostringstream os;
    os << "degenerate coefficient q=" << double(q) << " at t="
       << double(state.t);
    throw DegenerateQError(double(state.t), double(q), os.str());
  }
  dw = state.v;
  dv = -(lattice.xi_sq() * state.w) / (q * q);
}

template <typename Scalar>
SpectralState<Scalar> rhs(const SpectralState<Scalar>& state,
                          const ModeLattice<Scalar>& lattice,
                          const Params<Scalar>& params) {
  SpectralState<Scalar> d;
  d.t = Scalar(1);
  rhs_into(state, lattice, params, d.w, d.v);
  return d;
}

/// Estimated time at which q = a*s + b crosses zero between two states,
/// found by bisection on the cubic Hermite interpolant of (w, v).  Empty if
/// no crossing (and |q| stays above the guard) across the step.
template <typename Scalar>
std::optional<Scalar> q_sign_event(const SpectralState<Scalar>& before,
                                   const SpectralState<Scalar>& after,
                                   const ModeLattice<Scalar>& lattice,
                                   const Params<Scalar>& params) {
  using std::abs;
  const Scalar q0 = compute_q(before, lattice, params);
  const Scalar q1 = compute_q(after, lattice, params);
  const Scalar tol = params.q_floor();
  const bool crossed = (q0 > Scalar(0)) != (q1 > Scalar(0));
  if (!crossed && abs(q0) > tol && abs(q1) > tol) return std::nullopt;
  if (abs(q0) <= tol) return before.t;
  if (!crossed) return after.t;  // only |q1| under the guard

  const Scalar h = after.t - before.t;
  auto q_at = [&](Scalar theta) {
    // cubic Hermite in theta = (t - t0)/h using endpoint values and slopes
    const Scalar h00 = (Scalar(1) + Scalar(2) * theta) * (Scalar(1) - theta) *
                       (Scalar(1) - theta);
    const Scalar h10 = theta * (Scalar(1) - theta) * (Scalar(1) - theta);
    const Scalar h01 = theta * theta * (Scalar(3) - Scalar(2) * theta);
    const Scalar h11 = theta * theta * (theta - Scalar(1));
    ComplexArray<Scalar> w = h00 * before.w + (h10 * h) * before.v +
                             h01 * after.w + (h11 * h) * after.v;
    const Scalar s = (lattice.weighted_xi_pow(1) * w.abs2()).sum();
    return params.a * s + params.b;
  };

  Scalar lo = Scalar(0), hi = Scalar(1);
  Scalar q_lo = q0;
  for (int it = 0; it < 64; ++it) {
    const Scalar mid = (lo + hi) / Scalar(2);
    const Scalar q_mid = q_at(mid);
    if ((q_lo > Scalar(0)) != (q_mid > Scalar(0))) {
      hi = mid;
    } else {
      lo = mid;
      q_lo = q_mid;
    }
  }
  return before.t + (lo + hi) / Scalar(2) * h;
}

using Paramsd = Params<double>;
using SpectralStated = SpectralState<double>;
using SpectralMomentsd = SpectralMoments<double>;

} // namespace kp

#endif // KP_DYNAMICS_HPP
