#ifndef KP_INTEGRATORS_HPP
#define KP_INTEGRATORS_HPP

#include "kp/dynamics.hpp"
#include "kp/errors.hpp"
#include "kp/lattice.hpp"
#include "kp/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

namespace kp {

enum class Method { rk4, verlet, adaptive45 };

template <typename Scalar>
struct StepControl {
  Method method = Method::adaptive45;
  Scalar h = Scalar(0.01);       // fixed step (rk4/verlet), initial step (adaptive)
  Scalar rtol = Scalar(1e-10);
  Scalar atol = Scalar(1e-12);
  Scalar h_min = Scalar(1e-12);
  Scalar h_max = Scalar(1);
};

template <typename Scalar>
struct TrajectoryEvent {
  enum class Kind { q_crossing, step_rejected };
  Kind kind;
  Scalar t;
  Scalar value;  // q estimate at a crossing, error norm at a rejection
};

template <typename Scalar>
struct StepStats {
  long accepted = 0;
  long rejected = 0;
  Scalar max_accepted_err = Scalar(0);  // normalized; <= 1 for every accepted step
};

/// Sampled solution path.  Times are strictly increasing; a q-crossing
/// truncates the path and is recorded in events.
template <typename Scalar>
struct Trajectory {
  std::vector<Scalar> times;
  std::vector<SpectralState<Scalar>> states;
  std::vector<TrajectoryEvent<Scalar>> events;
  StepStats<Scalar> stats;
  bool degenerate = false;

  std::optional<Scalar> crossing_time() const {
    for (const auto& e : events)
      if (e.kind == TrajectoryEvent<Scalar>::Kind::q_crossing) return e.t;
    return std::nullopt;
  }
};

namespace detail {

/// Zero of q along the cubic Hermite interpolant between two states, by
/// bisection in the step interval.
template <typename Scalar>
Scalar q_crossing_bisect(const ModeLattice<Scalar>& lattice,
                         const Params<Scalar>& params, Scalar t0,
                         const ComplexArray<Scalar>& w0,
                         const ComplexArray<Scalar>& v0, Scalar t1,
                         const ComplexArray<Scalar>& w1,
                         const ComplexArray<Scalar>& v1) {
  const Scalar h = t1 - t0;
  auto q_at = [&](Scalar theta) {
    const Scalar u = Scalar(1) - theta;
    const Scalar h00 = (Scalar(1) + Scalar(2) * theta) * u * u;
    const Scalar h10 = theta * u * u;
    const Scalar h01 = theta * theta * (Scalar(3) - Scalar(2) * theta);
    const Scalar h11 = theta * theta * (theta - Scalar(1));
    ComplexArray<Scalar> w =
        h00 * w0 + (h10 * h) * v0 + h01 * w1 + (h11 * h) * v1;
    return params.a * (lattice.weighted_xi_pow(1) * w.abs2()).sum() + params.b;
  };
  Scalar lo = Scalar(0), hi = Scalar(1);
  Scalar q_lo = q_at(lo);
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
  return t0 + (lo + hi) / Scalar(2) * h;
}

/// Throws if q changed sign (or fell under the guard) across an accepted step.
template <typename Scalar>
void check_crossing(const ModeLattice<Scalar>& lattice,
                    const Params<Scalar>& params, Scalar t0,
                    const ComplexArray<Scalar>& w0,
                    const ComplexArray<Scalar>& v0, Scalar t1,
                    const ComplexArray<Scalar>& w1,
                    const ComplexArray<Scalar>& v1) {
  const Scalar q0 =
      params.a * (lattice.weighted_xi_pow(1) * w0.abs2()).sum() + params.b;
  const Scalar q1 =
      params.a * (lattice.weighted_xi_pow(1) * w1.abs2()).sum() + params.b;
  const Scalar tol = params.q_floor();
  using std::abs;
  if ((q0 > Scalar(0)) == (q1 > Scalar(0)) && abs(q1) > tol) return;
  Scalar t_cross = t1;
  if ((q0 > Scalar(0)) != (q1 > Scalar(0)))
    t_cross = q_crossing_bisect(lattice, params, t0, w0, v0, t1, w1, v1);
  std::ostringstream os;
  os << "q crossed zero near t=" << double(t_cross);
  throw DegenerateQError(double(t_cross), double(q1), os.str());
}

/// Dormand-Prince 5(4) embedded pair on a complex state array, FSAL, with a
/// PI step controller (safety 0.9, growth clamp [0.2, 5]).  The rhs functor
/// has signature rhs(t, y, dy).
template <typename Scalar, typename Rhs>
class Dopri45 {
public:
  Dopri45(Rhs rhs, Eigen::Index n, const StepControl<Scalar>& ctl)
      : rhs_(std::move(rhs)), rtol_(ctl.rtol), atol_(ctl.atol),
        h_min_(ctl.h_min), h_max_(ctl.h_max) {
    h_desired_ = std::clamp(ctl.h, h_min_, h_max_);
    for (auto* a : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &ytmp_, &ycand_,
                    &yerr_, &yprev_})
      a->resize(n);
  }

  void reset() { fsal_valid_ = false; err_prev_ = Scalar(1); }

  /// Advances (t, y) to exactly t_target.  after_step(t0, y0, t1, y1) runs
  /// once per accepted step and may throw to abort.
  template <typename AfterStep>
  void advance_to(Scalar& t, ComplexArray<Scalar>& y, Scalar t_target,
                  StepStats<Scalar>& stats,
                  std::vector<TrajectoryEvent<Scalar>>* events,
                  AfterStep&& after_step) {
    using std::pow;
    while (t < t_target) {
      const Scalar remaining = t_target - t;
      bool clamped = h_desired_ > remaining;
      Scalar h = clamped ? remaining : h_desired_;
      for (;;) {
        const Scalar err = attempt(t, y, h);
        if (err <= Scalar(1)) {
          ++stats.accepted;
          stats.max_accepted_err = std::max(stats.max_accepted_err, err);
          if (!clamped) {
            Scalar fac = Scalar(0.9) *
                         pow(std::max(err, Scalar(1e-12)), -alpha_) *
                         pow(err_prev_, beta_);
            fac = std::clamp(fac, Scalar(0.2), Scalar(5));
            h_desired_ = std::clamp(h * fac, h_min_, h_max_);
          }
          err_prev_ = std::max(err, Scalar(1e-4));
          const Scalar t_new = clamped ? t_target : t + h;
          yprev_.swap(y);
          y = ycand_;
          after_step(t, yprev_, t_new, y);
          t = t_new;
          k1_.swap(k7_);  // FSAL
          break;
        }
        ++stats.rejected;
        if (events)
          events->push_back({TrajectoryEvent<Scalar>::Kind::step_rejected, t,
                             err});
        // a non-finite estimate (overflowed stages) forces the hardest shrink
        const Scalar fac =
            std::isfinite(double(err))
                ? std::clamp(Scalar(0.9) * pow(err, Scalar(-0.2)), Scalar(0.2),
                             Scalar(1))
                : Scalar(0.2);
        h *= fac;
        clamped = false;
        h_desired_ = h;
        if (h < h_min_)
          throw StepUnderflowError(double(t), double(h),
                                   "adaptive step underflow: h < h_min");
      }
    }
  }

private:
  Scalar attempt(Scalar t, const ComplexArray<Scalar>& y, Scalar h) {
    if (!fsal_valid_) {
      rhs_(t, y, k1_);
      fsal_valid_ = true;
    }
    ytmp_ = y + h * (Scalar(1. / 5) * k1_);
    rhs_(t + h * Scalar(1. / 5), ytmp_, k2_);
    ytmp_ = y + h * (Scalar(3. / 40) * k1_ + Scalar(9. / 40) * k2_);
    rhs_(t + h * Scalar(3. / 10), ytmp_, k3_);
    ytmp_ = y + h * (Scalar(44. / 45) * k1_ - Scalar(56. / 15) * k2_ +
                     Scalar(32. / 9) * k3_);
    rhs_(t + h * Scalar(4. / 5), ytmp_, k4_);
    ytmp_ = y + h * (Scalar(19372. / 6561) * k1_ - Scalar(25360. / 2187) * k2_ +
                     Scalar(64448. / 6561) * k3_ - Scalar(212. / 729) * k4_);
    rhs_(t + h * Scalar(8. / 9), ytmp_, k5_);
    ytmp_ = y + h * (Scalar(9017. / 3168) * k1_ - Scalar(355. / 33) * k2_ +
                     Scalar(46732. / 5247) * k3_ + Scalar(49. / 176) * k4_ -
                     Scalar(5103. / 18656) * k5_);
    rhs_(t + h, ytmp_, k6_);
    ycand_ = y + h * (Scalar(35. / 384) * k1_ + Scalar(500. / 1113) * k3_ +
                      Scalar(125. / 192) * k4_ - Scalar(2187. / 6784) * k5_ +
                      Scalar(11. / 84) * k6_);
    rhs_(t + h, ycand_, k7_);
    yerr_ = h * (Scalar(71. / 57600) * k1_ - Scalar(71. / 16695) * k3_ +
                 Scalar(71. / 1920) * k4_ - Scalar(17253. / 339200) * k5_ +
                 Scalar(22. / 525) * k6_ - Scalar(1. / 40) * k7_);
    return error_norm(y, ycand_);
  }

  Scalar error_norm(const ComplexArray<Scalar>& y0,
                    const ComplexArray<Scalar>& y1) const {
    using std::sqrt;
    const RealArray<Scalar> sc_re =
        atol_ + rtol_ * y0.real().abs().max(y1.real().abs());
    const RealArray<Scalar> sc_im =
        atol_ + rtol_ * y0.imag().abs().max(y1.imag().abs());
    const Scalar sum = (yerr_.real() / sc_re).square().sum() +
                       (yerr_.imag() / sc_im).square().sum();
    return sqrt(sum / Scalar(2 * yerr_.size()));
  }

  static constexpr Scalar alpha_ = Scalar(0.17);  // 0.2 - 0.75*beta
  static constexpr Scalar beta_ = Scalar(0.04);

  Rhs rhs_;
  Scalar rtol_, atol_, h_min_, h_max_;
  Scalar h_desired_;
  Scalar err_prev_ = Scalar(1);
  bool fsal_valid_ = false;
  ComplexArray<Scalar> k1_, k2_, k3_, k4_, k5_, k6_, k7_, ytmp_, ycand_, yerr_,
      yprev_;
};

/// Classic RK4 step with preallocated stages.
template <typename Scalar, typename Rhs>
class Rk4 {
public:
  Rk4(Rhs rhs, Eigen::Index n) : rhs_(std::move(rhs)) {
    for (auto* a : {&k1_, &k2_, &k3_, &k4_, &ytmp_}) a->resize(n);
  }

  void step(Scalar t, ComplexArray<Scalar>& y, Scalar h) {
    rhs_(t, y, k1_);
    ytmp_ = y + (h / Scalar(2)) * k1_;
    rhs_(t + h / Scalar(2), ytmp_, k2_);
    ytmp_ = y + (h / Scalar(2)) * k2_;
    rhs_(t + h / Scalar(2), ytmp_, k3_);
    ytmp_ = y + h * k3_;
    rhs_(t + h, ytmp_, k4_);
    y += (h / Scalar(6)) * (k1_ + Scalar(2) * k2_ + Scalar(2) * k3_ + k4_);
  }

private:
  Rhs rhs_;
  ComplexArray<Scalar> k1_, k2_, k3_, k4_, ytmp_;
};

/// Right-hand side of the mode system on the stacked array y = [w; v].
template <typename Scalar>
struct SpectralRhs {
  const ModeLattice<Scalar>* lattice;
  Params<Scalar> params;

  void operator()(Scalar t, const ComplexArray<Scalar>& y,
                  ComplexArray<Scalar>& dy) const {
    using std::abs;
    const Eigen::Index n = lattice->size();
    const auto w = y.head(n);
    const auto v = y.tail(n);
    const Scalar q =
        params.a * (lattice->weighted_xi_pow(1) * w.abs2()).sum() + params.b;
    if (abs(q) <= params.q_floor()) {
      std::ostringstream os;
      os << "degenerate coefficient q=" << double(q) << " at stage t="
         << double(t);
      throw DegenerateQError(double(t), double(q), os.str());
    }
    dy.head(n) = v;
    dy.tail(n) = -(lattice->xi_sq() * w) / (q * q);
  }
};

template <typename Scalar>
ComplexArray<Scalar> stack_state(const SpectralState<Scalar>& st) {
  ComplexArray<Scalar> y(2 * st.w.size());
  y.head(st.w.size()) = st.w;
  y.tail(st.v.size()) = st.v;
  return y;
}

template <typename Scalar>
SpectralState<Scalar> unstack_state(Scalar t, const ComplexArray<Scalar>& y) {
  const Eigen::Index n = y.size() / 2;
  SpectralState<Scalar> st;
  st.t = t;
  st.w = y.head(n);
  st.v = y.tail(n);
  return st;
}

} // namespace detail

/// One velocity-Verlet step (kick-drift-kick).  The force -|xi|^2 w / q^2
/// depends on positions only; q is recomputed from positions at each force
/// evaluation.  h may be negative, and the map is its own inverse under
/// h -> -h up to roundoff.
template <typename Scalar>
SpectralState<Scalar> verlet_step(const SpectralState<Scalar>& state,
                                  const ModeLattice<Scalar>& lattice,
                                  const Params<Scalar>& params, Scalar h) {
  using std::abs;
  auto force = [&](const ComplexArray<Scalar>& w, Scalar t,
                   ComplexArray<Scalar>& f) {
    const Scalar q =
        params.a * (lattice.weighted_xi_pow(1) * w.abs2()).sum() + params.b;
    if (abs(q) <= params.q_floor()) {
      std::ostringstream os;
      os << "degenerate coefficient q=" << double(q) << " at t=" << double(t);
      throw DegenerateQError(double(t), double(q), os.str());
    }
    f = -(lattice.xi_sq() * w) / (q * q);
  };
  ComplexArray<Scalar> f(state.w.size());
  SpectralState<Scalar> next;
  force(state.w, state.t, f);
  ComplexArray<Scalar> v_half = state.v + (h / Scalar(2)) * f;
  next.w = state.w + h * v_half;
  next.t = state.t + h;
  force(next.w, next.t, f);
  next.v = v_half + (h / Scalar(2)) * f;
  return next;
}

/// Single step of the configured method from the given state.  Fixed-step
/// methods advance by control.h; the adaptive method advances by the first
/// accepted step starting from control.h.  Throws DegenerateQError if q
/// degenerates at any internal stage or changes sign across the step.
template <typename Scalar>
SpectralState<Scalar> step(const SpectralState<Scalar>& state,
                           const ModeLattice<Scalar>& lattice,
                           const Params<Scalar>& params,
                           const StepControl<Scalar>& control) {
  SpectralState<Scalar> next;
  switch (control.method) {
    case Method::verlet:
      next = verlet_step(state, lattice, params, control.h);
      break;
    case Method::rk4: {
      detail::SpectralRhs<Scalar> rhs{&lattice, params};
      detail::Rk4<Scalar, detail::SpectralRhs<Scalar>> core(rhs,
                                                            2 * lattice.size());
      ComplexArray<Scalar> y = detail::stack_state(state);
      core.step(state.t, y, control.h);
      next = detail::unstack_state(state.t + control.h, y);
      break;
    }
    case Method::adaptive45: {
      detail::SpectralRhs<Scalar> rhs{&lattice, params};
      detail::Dopri45<Scalar, detail::SpectralRhs<Scalar>> core(
          rhs, 2 * lattice.size(), control);
      ComplexArray<Scalar> y = detail::stack_state(state);
      Scalar t = state.t;
      StepStats<Scalar> stats;
      // one accepted step: advance toward a far target and stop after the
      // first accept
      struct Done {};
      Scalar t_reached = t;
      try {
        core.advance_to(t, y, t + control.h_max * Scalar(2), stats, nullptr,
                        [&](Scalar, const ComplexArray<Scalar>&, Scalar t1,
                            const ComplexArray<Scalar>&) {
                          t_reached = t1;
                          throw Done{};
                        });
      } catch (const Done&) {
      }
      next = detail::unstack_state(t_reached, y);
      break;
    }
  }
  if (!next.is_finite())
    throw std::runtime_error("step produced a non-finite state");
  detail::check_crossing(lattice, params, state.t, state.w, state.v, next.t,
                         next.w, next.v);
  return next;
}

namespace detail {

template <typename Scalar>
std::vector<Scalar> sample_times(Scalar t0, Scalar t_end, Scalar sample_every) {
  if (!(sample_every > Scalar(0)))
    throw std::invalid_argument("integrate: sample_every must be positive");
  using std::abs;
  std::vector<Scalar> times{t0};
  const Scalar span = t_end - t0;
  const Scalar tiny = std::numeric_limits<Scalar>::epsilon() *
                      std::max(Scalar(1), abs(t_end)) * Scalar(8);
  const long k_max = static_cast<long>(std::floor(double(span / sample_every) +
                                                  1e-9));
  for (long k = 1; k <= k_max; ++k) {
    const Scalar tk = t0 + Scalar(k) * sample_every;
    if (tk > t_end + tiny) break;
    times.push_back(std::min(tk, t_end));
  }
  if (t_end - times.back() > tiny) times.push_back(t_end);
  return times;
}

} // namespace detail

/// Integrates to t_end, sampling at multiples of sample_every plus the final
/// time.  A q sign change halts the integration at the crossing: the partial
/// trajectory is returned with a q_crossing event and degenerate = true.
template <typename Scalar>
Trajectory<Scalar> integrate(const SpectralState<Scalar>& state,
                             const ModeLattice<Scalar>& lattice,
                             const Params<Scalar>& params,
                             const StepControl<Scalar>& control, Scalar t_end,
                             Scalar sample_every) {
  if (t_end < state.t)
    throw std::invalid_argument("integrate: t_end < initial time");
  if (!state.is_finite())
    throw std::invalid_argument("integrate: non-finite initial state");

  Trajectory<Scalar> traj;
  traj.times.push_back(state.t);
  traj.states.push_back(state);
  if (t_end == state.t) return traj;

  const std::vector<Scalar> targets =
      detail::sample_times(state.t, t_end, sample_every);

  try {
    if (control.method == Method::adaptive45) {
      detail::SpectralRhs<Scalar> rhs{&lattice, params};
      detail::Dopri45<Scalar, detail::SpectralRhs<Scalar>> core(
          rhs, 2 * lattice.size(), control);
      core.reset();
      ComplexArray<Scalar> y = detail::stack_state(state);
      Scalar t = state.t;
      auto after_step = [&](Scalar t0, const ComplexArray<Scalar>& y0,
                            Scalar t1, const ComplexArray<Scalar>& y1) {
        const Eigen::Index n = lattice.size();
        if (!y1.isFinite().all())
          throw std::runtime_error("integrate: non-finite state after step");
        detail::check_crossing<Scalar>(lattice, params, t0, y0.head(n).eval(),
                                       y0.tail(n).eval(), t1, y1.head(n).eval(),
                                       y1.tail(n).eval());
      };
      const Scalar q_start = compute_q(state, lattice, params);
      for (std::size_t i = 1; i < targets.size(); ++i) {
        try {
          core.advance_to(t, y, targets[i], traj.stats, &traj.events,
                          after_step);
        } catch (const StepUnderflowError&) {
          // the controller stalls before any stage touches the q guard;
          // a collapse of q relative to its starting value marks the halt
          // as a crossing, otherwise the underflow is a genuine failure
          using std::abs;
          const SpectralState<Scalar> stall = detail::unstack_state(t, y);
          const Scalar q_now = compute_q(stall, lattice, params);
          if (!(abs(q_now) <= Scalar(0.05) * abs(q_start))) throw;
          const Scalar s1 =
              Scalar(2) * (lattice.weighted_xi_pow(1) *
                           (stall.w.conjugate() * stall.v).real())
                              .sum();
          const Scalar q1 = params.a * s1;
          Scalar t_star = stall.t;
          if (q1 != Scalar(0) && -q_now / q1 > Scalar(0))
            t_star = stall.t - q_now / q1;
          std::ostringstream os;
          os << "step controller stalled with q=" << double(q_now)
             << " near t=" << double(t_star);
          throw DegenerateQError(double(t_star), double(q_now), os.str());
        }
        traj.times.push_back(t);
        traj.states.push_back(detail::unstack_state(t, y));
      }
    } else {
      SpectralState<Scalar> cur = state;
      const Scalar h = control.h;
      if (!(h > Scalar(0)))
        throw std::invalid_argument("integrate: h must be positive");
      detail::SpectralRhs<Scalar> rhs{&lattice, params};
      detail::Rk4<Scalar, detail::SpectralRhs<Scalar>> rk4_core(
          rhs, 2 * lattice.size());
      ComplexArray<Scalar> y(2 * lattice.size());
      for (std::size_t i = 1; i < targets.size(); ++i) {
        const Scalar target = targets[i];
        while (cur.t < target) {
          const Scalar remaining = target - cur.t;
          const Scalar h_eff =
              (remaining <= h * (Scalar(1) + Scalar(1e-9))) ? remaining : h;
          SpectralState<Scalar> next;
          if (control.method == Method::verlet) {
            next = verlet_step(cur, lattice, params, h_eff);
          } else {
            y = detail::stack_state(cur);
            rk4_core.step(cur.t, y, h_eff);
            next = detail::unstack_state(cur.t + h_eff, y);
          }
          if (remaining == h_eff) next.t = target;
          if (!next.is_finite())
            throw std::runtime_error("integrate: non-finite state after step");
          detail::check_crossing(lattice, params, cur.t, cur.w, cur.v, next.t,
                                 next.w, next.v);
          cur = std::move(next);
          ++traj.stats.accepted;
        }
        traj.times.push_back(cur.t);
        traj.states.push_back(cur);
      }
    }
  } catch (const DegenerateQError& e) {
    traj.events.push_back({TrajectoryEvent<Scalar>::Kind::q_crossing,
                           Scalar(e.t()), Scalar(e.q())});
    traj.degenerate = true;
  }
  return traj;
}

using StepControld = StepControl<double>;
using TrajectoryEventd = TrajectoryEvent<double>;
using StepStatsd = StepStats<double>;
using Trajectoryd = Trajectory<double>;

} // namespace kp

#endif // KP_INTEGRATORS_HPP
