#pragma once

#include <Eigen/Dense>

#include "icguard/model.hpp"
#include "icguard/smo.hpp"
#include "icguard/types.hpp"
#include "icguard/vehicle.hpp"

namespace icguard {

// Pair (e^{A t}, integral_0^t e^{A s} ds) for the 2x2 hidden block. Exact
// scalar closed form when A is diagonal (the flagship configuration);
// otherwise both blocks are read off one augmented matrix exponential, which
// also handles singular and defective A.
struct Semigroup2 {
  Eigen::Matrix2d state;
  Eigen::Matrix2d integral;
};
Semigroup2 hidden_semigroup(const Eigen::Matrix2d& a, double t);

// Analytic healthy-run envelopes:
//  - hidden error:   |e1(t)| <= e1_upper(t), where
//      e1_upper(t) = e^{A11 t} b0 + (integral_0^t e^{A11 s} ds) gbar,
//      gbar = |A12| zbar + |E1| etabar,
//    i.e. the envelope itself solves e' = A11 e + gbar from b0.
//  - measured error: |e2| <= zbar once sliding is reached.
//  - measured-error rate while off the surface: within
//      [rate_lower(t), rate_upper(t)],
//      rate_upper = |A21| e1_upper + |A22 - A22s| zbar + |E2| etabar
//                   + |A22s| zbar + M
//      rate_lower = M - (those same terms), clamped at zero.
class HealthyBounds {
 public:
  HealthyBounds(const CanonicalModel& model, const ObserverGains& gains,
                const Eigen::Vector2d& e1_init_bound);

  Eigen::Vector2d e1_upper(double t) const;
  Eigen::Vector2d e1_lower(double t) const { return -e1_upper(t); }
  Vec4 e2_tilde() const { return zeta_bound_; }

  Vec4 rate_upper(double t) const;
  Vec4 rate_lower(double t, bool* clamped = nullptr) const;

  // Same rate band computed from an externally tracked envelope value, for
  // per-step incremental use.
  Vec4 rate_upper_from(const Eigen::Vector2d& e1_up) const;
  Vec4 rate_lower_from(const Eigen::Vector2d& e1_up,
                       bool* clamped = nullptr) const;

  // t -> infinity. The inert hidden blend integrates noise forever, so its
  // envelope entries may be +inf; exact zeros in |A21| keep that out of
  // every measured-block quantity.
  Eigen::Vector2d e1_limit() const;
  Eigen::Vector2d e1_envelope_sup() const;  // global bound over all t >= 0
  Vec4 rate_upper_limit() const;
  // Unclamped settled lower rate (may be <= 0 for weak switching gains).
  Vec4 rate_lower_limit_raw() const;

  const Eigen::Matrix2d& a11() const { return a11_; }
  const Eigen::Vector2d& gbar() const { return gbar_; }
  const Eigen::Vector2d& e1_init() const { return b0_; }
  const Vec4& switching_gain() const { return m_; }

 private:
  Eigen::Matrix2d a11_;
  Eigen::Vector2d gbar_;
  Eigen::Vector2d b0_;
  Eigen::Matrix<double, 4, 2> abs_a21_;
  Eigen::Vector4d base_;  // |A22 - A22s| zbar + |E2| etabar + |A22s| zbar
  Vec4 m_;
  Vec4 zeta_bound_;
  bool inert_;
};

// Exact fixed-step recursion for the hidden envelope:
// value <- e^{A11 dt} value + (integral_0^dt e^{A11 s} ds) gbar.
class E1EnvelopeStepper {
 public:
  E1EnvelopeStepper(const HealthyBounds& bounds, double dt);
  void advance();
  const Eigen::Vector2d& value() const { return cur_; }

 private:
  Eigen::Matrix2d decay_;
  Eigen::Vector2d drive_;
  Eigen::Vector2d cur_;
};

// Settled quantities feeding the EOI threshold: the global hidden-error
// envelope, the settled rate band width above the switching gain, and the
// worst-case re-convergence horizon of the measured error.
struct AsymptoticLimits {
  Eigen::Vector2d e1_tilde;
  Vec4 u_bar;   // settled rate_upper - M
  Vec4 t_star;  // 2 zbar / settled rate_lower
};

// Throws ConfigError when the settled lower rate is not strictly positive
// (raise the switching gain) or a measured-block limit is unbounded.
AsymptoticLimits asymptotic_limits(const HealthyBounds& bounds);

// Per-channel EOI alarm threshold:
//   thr = e^{-K t_star} u_bar + (1 - e^{-K t_star}) M.
Vec4 eoi_threshold(const AsymptoticLimits& limits, const ObserverGains& gains);

// Hidden-error response to the injected input corruption:
//   r_delta(t) = integral_0^t e^{A11 (t-s)} F1 du(s) ds,
//   r(t)       = A21 r_delta(t) + F2 du(t).
// The incremental tracker treats du as sampled-and-held over each step
// (matching the communication channel) and advances with the exact
// piecewise-constant solution, so discontinuous injections are handled
// without quadrature error at the jump.
class AttackConvolution {
 public:
  AttackConvolution(const CanonicalModel& model, double step);
  void advance(double du_held);
  const Eigen::Vector2d& r_delta() const { return r_; }
  Eigen::Vector4d r(double du_now) const;

 private:
  Eigen::Matrix2d decay_;
  Eigen::Vector2d phi_f1_;
  Eigen::Matrix<double, 4, 2> a21_;
  Eigen::Vector4d f2_;
  Eigen::Vector2d r_ = Eigen::Vector2d::Zero();
};

struct AttackResponseSample {
  Eigen::Vector2d r_delta;
  Eigen::Vector4d r;
};

// One-shot evaluation of the response at time t with the given hold step.
AttackResponseSample attack_response(const CanonicalModel& model,
                                     const AttackSignal& attack, double t,
                                     double step);

}  // namespace icguard
