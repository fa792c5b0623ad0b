#ifndef KP_FUNCTIONALS_HPP
#define KP_FUNCTIONALS_HPP

#include "kp/dynamics.hpp"
#include "kp/errors.hpp"

#include <stdexcept>

namespace kp {

/// Weights (C0, C1) selecting one member of the conserved family Q.
/// (0,1) reproduces the second-order functional, (1,0) the third-order one.
template <typename Scalar>
struct InvariantParams {
  Scalar C0 = Scalar(0);
  Scalar C1 = Scalar(1);
};

/// First-order functional (the energy), in the closed form
///   I1 = |u_t|^2 + s/(b*q),
/// which integrates ds/(a*s+b)^2 from 0 to s.  Defined for b != 0; the b = 0
/// case has a divergent integral and is rejected.
template <typename Scalar>
Scalar eval_I1(const SpectralMoments<Scalar>& m, const Params<Scalar>& params) {
  if (params.b == Scalar(0))
    throw UnsupportedCaseError(
        "I1: b = 0 is degenerate (u == 0 is not a solution)");
  if (!(m.q > Scalar(0)))
    throw std::domain_error("I1 requires q > 0");
  return m.norm_v[0] + m.s / (params.b * m.q);
}

/// Second-order functional
///   I2 = q*|grad u_t|^2 + |lap u|^2/q - (a/4)*s1^2.
template <typename Scalar>
Scalar eval_I2(const SpectralMoments<Scalar>& m, const Params<Scalar>& params) {
  if (m.q == Scalar(0)) throw std::domain_error("I2 requires q != 0");
  return m.q * m.norm_v[1] + m.norm_w[2] / m.q -
         params.a / Scalar(4) * m.s1 * m.s1;
}

/// Third-order functional
///   I3 = q*|lap u_t|^2 + |grad lap u|^2/q - q1*cross4
///        + (q1^2/8)*(q*|grad u_t|^2 + |lap u|^2/q)
///        - (a/16)*(a^2*s1^4/4 + q^2*s2^2).
template <typename Scalar>
Scalar eval_I3(const SpectralMoments<Scalar>& m, const Params<Scalar>& params) {
  if (m.q == Scalar(0)) throw std::domain_error("I3 requires q != 0");
  const Scalar d2 = m.q * m.norm_v[1] + m.norm_w[2] / m.q;
  const Scalar s1_sq = m.s1 * m.s1;
  return m.q * m.norm_v[2] + m.norm_w[3] / m.q - m.q1 * m.cross4 +
         m.q1 * m.q1 / Scalar(8) * d2 -
         params.a / Scalar(16) *
             (params.a * params.a * s1_sq * s1_sq / Scalar(4) +
              m.q * m.q * m.s2 * m.s2);
}

/// Low-order weighted energy lambda = q*|u_t|^2 + |grad u|^2/q, the
/// smallness gate in the sandwich estimates.
template <typename Scalar>
Scalar eval_lambda(const SpectralMoments<Scalar>& m) {
  if (!(m.q > Scalar(0))) throw std::domain_error("lambda requires q > 0");
  return m.q * m.norm_v[0] + m.norm_w[1] / m.q;
}

/// General invariant of the two-parameter family, evaluated from its own
/// expression (not as a combination of I2 and I3, so the equivalence stays
/// testable):
///
///   Q = C0*( q*nv2 + nw3/q ) - C0*q1*cross4 - (C0/2)*q^2*q2*nv1
///       + [ (C0/4)*q*(q1^2/2 + q*q2) + C1*q ] * ( nv1 + nw2/q^2 )
///       - (C0*a/16)*( a^2*s1^4/4 - q^2*s2^2 )
///       - (C1*a/4)*s1^2.
///
/// Note the minus sign on q^2*s2^2 here versus the plus sign inside I3;
/// the two expressions agree through the closed form of s2.
template <typename Scalar>
Scalar eval_Q(const SpectralMoments<Scalar>& m, const Params<Scalar>& params,
              const InvariantParams<Scalar>& inv) {
  if (m.q == Scalar(0)) throw std::domain_error("Q requires q != 0");
  const Scalar a = params.a;
  const Scalar q = m.q, q1 = m.q1, q2 = m.q2;
  const Scalar s1_sq = m.s1 * m.s1;
  const Scalar top = inv.C0 * (q * m.norm_v[2] + m.norm_w[3] / q);
  const Scalar cross = -inv.C0 * q1 * m.cross4;
  const Scalar gamma = -inv.C0 / Scalar(2) * q * q * q2 * m.norm_v[1];
  const Scalar alpha1 =
      inv.C0 / Scalar(4) * q * (q1 * q1 / Scalar(2) + q * q2) + inv.C1 * q;
  const Scalar mid = alpha1 * (m.norm_v[1] + m.norm_w[2] / (q * q));
  const Scalar s_corr0 =
      -inv.C0 * a / Scalar(16) *
      (a * a * s1_sq * s1_sq / Scalar(4) - q * q * m.s2 * m.s2);
  const Scalar s_corr1 = -inv.C1 * a / Scalar(4) * s1_sq;
  return top + cross + gamma + mid + s_corr0 + s_corr1;
}

/// All functionals at one instant, with the summands of I2, I3 and Q
/// broken out for diagnostics.
template <typename Scalar>
struct FunctionalSnapshot {
  Scalar t = 0;
  Scalar I1 = 0, I2 = 0, I3 = 0;
  Scalar lambda = 0;
  Scalar Q = 0;

  struct {
    Scalar kinetic = 0, potential = 0, s1_correction = 0;
  } i2_terms;
  struct {
    Scalar kinetic = 0, potential = 0, cross = 0, d2_coupling = 0,
           s_correction = 0;
  } i3_terms;
  struct {
    Scalar top = 0, cross = 0, gamma = 0, mid = 0, s_corr0 = 0, s_corr1 = 0;
  } q_terms;
};

template <typename Scalar>
FunctionalSnapshot<Scalar> make_snapshot(const SpectralMoments<Scalar>& m,
                                         const Params<Scalar>& params,
                                         const InvariantParams<Scalar>& inv,
                                         Scalar t) {
  FunctionalSnapshot<Scalar> snap;
  snap.t = t;
  snap.I1 = eval_I1(m, params);
  snap.I2 = eval_I2(m, params);
  snap.I3 = eval_I3(m, params);
  snap.lambda = eval_lambda(m);
  snap.Q = eval_Q(m, params, inv);

  const Scalar a = params.a;
  const Scalar q = m.q, q1 = m.q1, q2 = m.q2;
  const Scalar s1_sq = m.s1 * m.s1;
  snap.i2_terms.kinetic = q * m.norm_v[1];
  snap.i2_terms.potential = m.norm_w[2] / q;
  snap.i2_terms.s1_correction = -a / Scalar(4) * s1_sq;
  const Scalar d2 = snap.i2_terms.kinetic + snap.i2_terms.potential;
  snap.i3_terms.kinetic = q * m.norm_v[2];
  snap.i3_terms.potential = m.norm_w[3] / q;
  snap.i3_terms.cross = -q1 * m.cross4;
  snap.i3_terms.d2_coupling = q1 * q1 / Scalar(8) * d2;
  snap.i3_terms.s_correction =
      -a / Scalar(16) *
      (a * a * s1_sq * s1_sq / Scalar(4) + q * q * m.s2 * m.s2);
  snap.q_terms.top = inv.C0 * (q * m.norm_v[2] + m.norm_w[3] / q);
  snap.q_terms.cross = -inv.C0 * q1 * m.cross4;
  snap.q_terms.gamma = -inv.C0 / Scalar(2) * q * q * q2 * m.norm_v[1];
  snap.q_terms.mid =
      (inv.C0 / Scalar(4) * q * (q1 * q1 / Scalar(2) + q * q2) + inv.C1 * q) *
      (m.norm_v[1] + m.norm_w[2] / (q * q));
  snap.q_terms.s_corr0 =
      -inv.C0 * a / Scalar(16) *
      (a * a * s1_sq * s1_sq / Scalar(4) - q * q * m.s2 * m.s2);
  snap.q_terms.s_corr1 = -inv.C1 * a / Scalar(4) * s1_sq;
  return snap;
}

using InvariantParamsd = InvariantParams<double>;
using FunctionalSnapshotd = FunctionalSnapshot<double>;

} // namespace kp

#endif // KP_FUNCTIONALS_HPP
