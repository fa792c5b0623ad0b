#ifndef KP_VERIFY_HPP
#define KP_VERIFY_HPP

#include "kp/dynamics.hpp"
#include "kp/functionals.hpp"
#include "kp/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace kp {

/// One sampled instant reduced to its scalar moments.  Every check below
/// consumes these, so verdicts can be recomputed from written-out series
/// without rerunning the flow.
template <typename Scalar>
struct MomentSample {
  Scalar t = 0;
  SpectralMoments<Scalar> m;
};

template <typename Scalar>
std::vector<MomentSample<Scalar>> sample_moments(
    const Trajectory<Scalar>& traj, const ModeLattice<Scalar>& lattice,
    const Params<Scalar>& params) {
  std::vector<MomentSample<Scalar>> out;
  out.reserve(traj.states.size());
  for (std::size_t i = 0; i < traj.states.size(); ++i)
    out.push_back(
        {traj.times[i], compute_moments(traj.states[i], lattice, params)});
  return out;
}

/// Worst deviation of a conserved quantity from its initial value.
template <typename Scalar>
struct DriftReport {
  Scalar reference = 0;
  Scalar max_abs = 0;
  Scalar max_rel = 0;  // max_abs / max(|reference|, 1e-14)
  Scalar t_worst = 0;
};

template <typename Scalar, typename F>
DriftReport<Scalar> drift(const std::vector<MomentSample<Scalar>>& samples,
                          F&& functional) {
  using std::abs;
  DriftReport<Scalar> rep;
  if (samples.empty()) return rep;
  rep.reference = functional(samples.front().m);
  rep.t_worst = samples.front().t;
  for (const auto& s : samples) {
    const Scalar d = abs(functional(s.m) - rep.reference);
    if (d > rep.max_abs) {
      rep.max_abs = d;
      rep.t_worst = s.t;
    }
  }
  rep.max_rel = rep.max_abs / std::max(abs(rep.reference), Scalar(1e-14));
  return rep;
}

template <typename Scalar>
DriftReport<Scalar> drift_I1(const std::vector<MomentSample<Scalar>>& samples,
                             const Params<Scalar>& params) {
  return drift(samples,
               [&](const SpectralMoments<Scalar>& m) { return eval_I1(m, params); });
}

template <typename Scalar>
DriftReport<Scalar> drift_I2(const std::vector<MomentSample<Scalar>>& samples,
                             const Params<Scalar>& params) {
  return drift(samples,
               [&](const SpectralMoments<Scalar>& m) { return eval_I2(m, params); });
}

template <typename Scalar>
DriftReport<Scalar> drift_I3(const std::vector<MomentSample<Scalar>>& samples,
                             const Params<Scalar>& params) {
  return drift(samples,
               [&](const SpectralMoments<Scalar>& m) { return eval_I3(m, params); });
}

template <typename Scalar>
DriftReport<Scalar> drift_Q(const std::vector<MomentSample<Scalar>>& samples,
                            const Params<Scalar>& params,
                            const InvariantParams<Scalar>& inv) {
  return drift(samples, [&](const SpectralMoments<Scalar>& m) {
    return eval_Q(m, params, inv);
  });
}

/// Smallness conclusion: if the energy starts below 1/(6|ab|), the
/// coefficient q stays within [b/2, 3b/2] and |a| lambda stays below 1/2.
/// Requires a != 0 and b > 0; the hypothesis is gated on the first sample.
template <typename Scalar>
struct Lemma1Report {
  bool applicable = false;
  std::string reason;
  bool holds = false;
  Scalar energy0 = 0;
  Scalar threshold = 0;
  Scalar q_min = 0, q_max = 0;
  Scalar max_a_lambda = 0;
};

template <typename Scalar>
Lemma1Report<Scalar> check_lemma1(
    const std::vector<MomentSample<Scalar>>& samples,
    const Params<Scalar>& params, Scalar slack = Scalar(1e-10)) {
  using std::abs;
  Lemma1Report<Scalar> rep;
  if (samples.empty()) {
    rep.reason = "no samples";
    return rep;
  }
  if (params.a == Scalar(0) || !(params.b > Scalar(0))) {
    rep.reason = "requires a != 0 and b > 0";
    return rep;
  }
  rep.threshold = Scalar(1) / (Scalar(6) * abs(params.a * params.b));
  rep.energy0 = eval_I1(samples.front().m, params);
  if (rep.energy0 > rep.threshold) {
    rep.reason = "initial energy above 1/(6|ab|)";
    return rep;
  }
  rep.applicable = true;
  rep.holds = true;
  rep.q_min = std::numeric_limits<Scalar>::infinity();
  rep.q_max = -std::numeric_limits<Scalar>::infinity();
  for (const auto& s : samples) {
    rep.q_min = std::min(rep.q_min, s.m.q);
    rep.q_max = std::max(rep.q_max, s.m.q);
    rep.max_a_lambda =
        std::max(rep.max_a_lambda, abs(params.a) * eval_lambda(s.m));
  }
  const Scalar lo = params.b / Scalar(2) * (Scalar(1) - slack);
  const Scalar hi = Scalar(3) * params.b / Scalar(2) * (Scalar(1) + slack);
  if (rep.q_min < lo || rep.q_max > hi) rep.holds = false;
  if (rep.max_a_lambda > Scalar(0.5) * (Scalar(1) + slack)) rep.holds = false;
  return rep;
}

/// Two-sided comparison between a corrected functional I and its bare
/// quadratic part D, valid per sample under a smallness gate on
/// |a|*lambda:  (2/3) I <= D <= 2 I.
template <typename Scalar>
struct SandwichReport {
  bool holds = true;
  int checked = 0;
  int skipped = 0;
  /// min over checked samples of min(D - (2/3)I, 2I - D), scaled.
  Scalar worst_slack = std::numeric_limits<Scalar>::infinity();
};

namespace detail {

template <typename Scalar, typename FnI, typename FnD>
SandwichReport<Scalar> check_sandwich(
    const std::vector<MomentSample<Scalar>>& samples,
    const Params<Scalar>& params, Scalar gate, FnI&& eval_i, FnD&& eval_d,
    Scalar slack) {
  using std::abs;
  SandwichReport<Scalar> rep;
  for (const auto& s : samples) {
    if (!(s.m.q > Scalar(0)) ||
        abs(params.a) * eval_lambda(s.m) > gate) {
      ++rep.skipped;
      continue;
    }
    ++rep.checked;
    const Scalar I = eval_i(s.m);
    const Scalar D = eval_d(s.m);
    const Scalar scale = std::max({abs(I), abs(D), Scalar(1e-14)});
    const Scalar lo = D - Scalar(2) / Scalar(3) * I;
    const Scalar hi = Scalar(2) * I - D;
    rep.worst_slack = std::min(rep.worst_slack, std::min(lo, hi) / scale);
    if (lo < -slack * scale || hi < -slack * scale) rep.holds = false;
  }
  return rep;
}

} // namespace detail

template <typename Scalar>
SandwichReport<Scalar> check_sandwich_I2(
    const std::vector<MomentSample<Scalar>>& samples,
    const Params<Scalar>& params, Scalar slack = Scalar(1e-10)) {
  return detail::check_sandwich(
      samples, params, Scalar(2),
      [&](const SpectralMoments<Scalar>& m) { return eval_I2(m, params); },
      [](const SpectralMoments<Scalar>& m) {
        return m.q * m.norm_v[1] + m.norm_w[2] / m.q;
      },
      slack);
}

template <typename Scalar>
SandwichReport<Scalar> check_sandwich_I3(
    const std::vector<MomentSample<Scalar>>& samples,
    const Params<Scalar>& params, Scalar slack = Scalar(1e-10)) {
  return detail::check_sandwich(
      samples, params, Scalar(0.5),
      [&](const SpectralMoments<Scalar>& m) { return eval_I3(m, params); },
      [](const SpectralMoments<Scalar>& m) {
        return m.q * m.norm_v[2] + m.norm_w[3] / m.q;
      },
      slack);
}

/// Sign-dependent pointwise bounds tying the second functional to the state:
///   a > 0, b > 0:  b * |grad u_t|^2 <= I2
///   a < 0, q > 0:  s1^2 <= 4 I2 / |a|
template <typename Scalar>
struct CaseBoundReport {
  bool applicable = false;
  char which = '-';  // 'i' or 'l' (lower case L for the a < 0 case (ii))
  std::string reason;
  bool holds = true;
  int checked = 0;
  int skipped = 0;
  Scalar worst_slack = std::numeric_limits<Scalar>::infinity();
};

template <typename Scalar>
CaseBoundReport<Scalar> check_case_bounds(
    const std::vector<MomentSample<Scalar>>& samples,
    const Params<Scalar>& params, Scalar slack = Scalar(1e-10)) {
  using std::abs;
  CaseBoundReport<Scalar> rep;
  if (params.a == Scalar(0)) {
    rep.reason = "requires a != 0";
    return rep;
  }
  if (params.a > Scalar(0) && !(params.b > Scalar(0))) {
    rep.reason = "a > 0 case requires b > 0";
    return rep;
  }
  rep.applicable = true;
  rep.which = params.a > Scalar(0) ? 'i' : 'l';
  for (const auto& s : samples) {
    if (!(s.m.q > Scalar(0))) {
      ++rep.skipped;
      continue;
    }
    ++rep.checked;
    const Scalar I2 = eval_I2(s.m, params);
    Scalar lhs, rhs;
    if (params.a > Scalar(0)) {
      lhs = params.b * s.m.norm_v[1];
      rhs = I2;
    } else {
      lhs = s.m.s1 * s.m.s1;
      rhs = Scalar(4) * I2 / abs(params.a);
    }
    const Scalar scale = std::max({abs(lhs), abs(rhs), Scalar(1e-14)});
    rep.worst_slack = std::min(rep.worst_slack, (rhs - lhs) / scale);
    if (lhs > rhs + slack * scale) rep.holds = false;
  }
  return rep;
}

/// A-priori bounds on the state in terms of the initial functional values,
/// under the smallness hypothesis, plus the derived norms of the second and
/// third time derivative of the solution (reported, not bounded):
///   |u_t|^2        <= I1(0)        |grad u|^2 / q^2    <= 2 I1(0)
///   |grad u_t|^2   <= 4 I2(0)/b    |lap u|^2 / q^2     <= 4 I2(0)/b
///   |lap u_t|^2    <= 4 I3(0)/b    |grad lap u|^2 / q^2 <= 4 I3(0)/b
template <typename Scalar>
struct Theorem4Report {
  bool applicable = false;
  std::string reason;
  bool holds = false;
  /// max over samples and bounds of value / bound.
  Scalar max_ratio = 0;
  /// peaks of |u_tt|^2, |grad u_tt|^2, |u_ttt|^2 along the run.
  Scalar max_utt_sq = 0;
  Scalar max_grad_utt_sq = 0;
  Scalar max_uttt_sq = 0;
};

template <typename Scalar>
Theorem4Report<Scalar> check_theorem4(
    const std::vector<MomentSample<Scalar>>& samples,
    const Params<Scalar>& params, Scalar slack = Scalar(1e-10)) {
  using std::abs;
  Theorem4Report<Scalar> rep;
  if (samples.empty()) {
    rep.reason = "no samples";
    return rep;
  }
  if (params.a == Scalar(0) || !(params.b > Scalar(0))) {
    rep.reason = "requires a != 0 and b > 0";
    return rep;
  }
  const Scalar threshold = Scalar(1) / (Scalar(6) * abs(params.a * params.b));
  const Scalar I1_0 = eval_I1(samples.front().m, params);
  if (I1_0 > threshold) {
    rep.reason = "initial energy above 1/(6|ab|)";
    return rep;
  }
  rep.applicable = true;
  rep.holds = true;
  const Scalar I2_0 = eval_I2(samples.front().m, params);
  const Scalar I3_0 = eval_I3(samples.front().m, params);
  const Scalar bounds[6] = {I1_0,
                            Scalar(2) * I1_0,
                            Scalar(4) * I2_0 / params.b,
                            Scalar(4) * I2_0 / params.b,
                            Scalar(4) * I3_0 / params.b,
                            Scalar(4) * I3_0 / params.b};
  for (const auto& s : samples) {
    const Scalar q_sq = s.m.q * s.m.q;
    const Scalar values[6] = {s.m.norm_v[0], s.m.norm_w[1] / q_sq,
                              s.m.norm_v[1], s.m.norm_w[2] / q_sq,
                              s.m.norm_v[2], s.m.norm_w[3] / q_sq};
    for (int j = 0; j < 6; ++j) {
      rep.max_ratio =
          std::max(rep.max_ratio, values[j] / std::max(bounds[j], Scalar(1e-14)));
      if (values[j] > bounds[j] * (Scalar(1) + slack) + Scalar(1e-14))
        rep.holds = false;
    }
    // second and third time derivative through the equation itself
    const Scalar q4 = q_sq * q_sq;
    rep.max_utt_sq = std::max(rep.max_utt_sq, s.m.norm_w[2] / q4);
    rep.max_grad_utt_sq = std::max(rep.max_grad_utt_sq, s.m.norm_w[3] / q4);
    const Scalar uttt = s.m.norm_v[2] / q4 -
                        Scalar(4) * s.m.q1 * s.m.cross4 / (q4 * s.m.q) +
                        Scalar(4) * s.m.q1 * s.m.q1 * s.m.norm_w[2] /
                            (q4 * q_sq);
    rep.max_uttt_sq = std::max(rep.max_uttt_sq, uttt);
  }
  return rep;
}

/// Pointwise consistency of the family with its two generators, evaluated
/// on every sample: Q(0,1) against I2 and Q(1,0) against I3.
template <typename Scalar>
struct QIdentityReport {
  Scalar max_err_I2 = 0;
  Scalar max_err_I3 = 0;
};

template <typename Scalar>
QIdentityReport<Scalar> audit_Q_identities(
    const std::vector<MomentSample<Scalar>>& samples,
    const Params<Scalar>& params) {
  using std::abs;
  auto rel = [](Scalar x, Scalar y) {
    return abs(x - y) / std::max({abs(x), abs(y), Scalar(1e-14)});
  };
  QIdentityReport<Scalar> rep;
  for (const auto& s : samples) {
    rep.max_err_I2 = std::max(
        rep.max_err_I2,
        rel(eval_Q(s.m, params, {Scalar(0), Scalar(1)}), eval_I2(s.m, params)));
    rep.max_err_I3 = std::max(
        rep.max_err_I3,
        rel(eval_Q(s.m, params, {Scalar(1), Scalar(0)}), eval_I3(s.m, params)));
  }
  return rep;
}

using MomentSampled = MomentSample<double>;
using DriftReportd = DriftReport<double>;
using Lemma1Reportd = Lemma1Report<double>;
using SandwichReportd = SandwichReport<double>;
using CaseBoundReportd = CaseBoundReport<double>;
using Theorem4Reportd = Theorem4Report<double>;
using QIdentityReportd = QIdentityReport<double>;

} // namespace kp

#endif // KP_VERIFY_HPP
