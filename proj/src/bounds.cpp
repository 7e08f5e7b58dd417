#include "icguard/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <unsupported/Eigen/MatrixFunctions>

#include "icguard/errors.hpp"

namespace icguard {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// expm1-based phi(lambda, t) = integral_0^t e^{lambda s} ds.
double phi_scalar(double lambda, double t) {
  if (lambda == 0.0) return t;
  return std::expm1(lambda * t) / lambda;
}

// |A21| v with the convention 0 * inf = 0: an exactly-zero coupling weight
// must not pick up an unbounded hidden channel.
Eigen::Vector4d abs_a21_times(const Eigen::Matrix<double, 4, 2>& abs_a21,
                              const Eigen::Vector2d& v) {
  Eigen::Vector4d out = Eigen::Vector4d::Zero();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double w = abs_a21(i, j);
      if (w != 0.0) out(i) += w * v(j);
    }
  }
  return out;
}

bool is_diagonal(const Eigen::Matrix2d& a) {
  return a(0, 1) == 0.0 && a(1, 0) == 0.0;
}

}  // namespace

Semigroup2 hidden_semigroup(const Eigen::Matrix2d& a, double t) {
  Semigroup2 out;
  if (is_diagonal(a)) {
    out.state = Eigen::Matrix2d::Zero();
    out.integral = Eigen::Matrix2d::Zero();
    for (int i = 0; i < 2; ++i) {
      out.state(i, i) = std::exp(a(i, i) * t);
      out.integral(i, i) = phi_scalar(a(i, i), t);
    }
    return out;
  }
  // Augmented exponential: exp([[A, I], [0, 0]] t) = [[e^{At}, Phi(t)], [0, I]].
  Eigen::Matrix4d aug = Eigen::Matrix4d::Zero();
  aug.topLeftCorner<2, 2>() = a * t;
  aug.topRightCorner<2, 2>() = Eigen::Matrix2d::Identity() * t;
  const Eigen::Matrix4d e = aug.exp();
  out.state = e.topLeftCorner<2, 2>();
  out.integral = e.topRightCorner<2, 2>();
  return out;
}

HealthyBounds::HealthyBounds(const CanonicalModel& model,
                             const ObserverGains& gains,
                             const Eigen::Vector2d& e1_init_bound)
    : a11_(model.A11), b0_(e1_init_bound), m_(gains.m_diag),
      zeta_bound_(model.zeta_bound), inert_(model.has_inert_blend) {
  const Eigen::Vector4d zbar(zeta_bound_[0], zeta_bound_[1], zeta_bound_[2],
                             zeta_bound_[3]);
  gbar_ = model.A12.cwiseAbs() * zbar +
          model.E1.cwiseAbs() * model.eta_bound;
  abs_a21_ = model.A21.cwiseAbs();
  const Eigen::Matrix4d a22_ns = model.A22 - gains.A22s;
  base_ = a22_ns.cwiseAbs() * zbar +
          model.E2.cwiseAbs() * model.eta_bound +
          gains.A22s.cwiseAbs() * zbar;
  if (b0_.minCoeff() < 0.0) {
    throw ConfigError("hidden-error initial bound must be non-negative");
  }
}

Eigen::Vector2d HealthyBounds::e1_upper(double t) const {
  const Semigroup2 sg = hidden_semigroup(a11_, t);
  return sg.state * b0_ + sg.integral * gbar_;
}

Vec4 HealthyBounds::rate_upper_from(const Eigen::Vector2d& e1_up) const {
  const Eigen::Vector4d coupling = abs_a21_times(abs_a21_, e1_up);
  Vec4 out;
  for (int i = 0; i < 4; ++i) out[i] = coupling(i) + base_(i) + m_[i];
  return out;
}

Vec4 HealthyBounds::rate_lower_from(const Eigen::Vector2d& e1_up,
                                    bool* clamped) const {
  const Eigen::Vector4d coupling = abs_a21_times(abs_a21_, e1_up);
  Vec4 out;
  bool hit = false;
  for (int i = 0; i < 4; ++i) {
    out[i] = m_[i] - coupling(i) - base_(i);
    if (out[i] < 0.0) {
      out[i] = 0.0;
      hit = true;
    }
  }
  if (clamped != nullptr) *clamped = hit;
  return out;
}

Vec4 HealthyBounds::rate_upper(double t) const {
  return rate_upper_from(e1_upper(t));
}

Vec4 HealthyBounds::rate_lower(double t, bool* clamped) const {
  return rate_lower_from(e1_upper(t), clamped);
}

Eigen::Vector2d HealthyBounds::e1_limit() const {
  if (!inert_) {
    // All eigenvalues strictly in the left half plane (checked during the
    // coordinate change), so -A11^{-1} gbar is the settled envelope.
    return -a11_.inverse() * gbar_;
  }
  // Column 0 of A11 is exactly zero: coordinate 1 is autonomous and stable,
  // coordinate 0 integrates whatever drives it.
  Eigen::Vector2d lim;
  lim(1) = -gbar_(1) / a11_(1, 1);
  const double drive0 = gbar_(0) + std::abs(a11_(0, 1)) * lim(1);
  lim(0) = (drive0 == 0.0) ? b0_(0) : kInf;
  return lim;
}

Eigen::Vector2d HealthyBounds::e1_envelope_sup() const {
  const Eigen::Vector2d lim = e1_limit();
  Eigen::Vector2d sup;
  if (is_diagonal(a11_)) {
    // Decoupled scalar channels evolve monotonically between start and limit.
    for (int i = 0; i < 2; ++i) sup(i) = std::max(b0_(i), lim(i));
    return sup;
  }
  // Coupled stable block: sample the closed form densely out to many slow
  // time constants and keep the running maximum together with the limit.
  const Eigen::VectorXcd ev = a11_.eigenvalues();
  double slowest = kInf;
  for (int i = 0; i < 2; ++i) {
    const double re = ev(i).real();
    if (re < 0.0) slowest = std::min(slowest, -re);
  }
  const double horizon = std::isfinite(slowest) ? 40.0 / slowest : 100.0;
  for (int i = 0; i < 2; ++i) sup(i) = std::max(b0_(i), lim(i));
  for (int k = 1; k <= 512; ++k) {
    const Eigen::Vector2d v = e1_upper(horizon * k / 512.0);
    for (int i = 0; i < 2; ++i) sup(i) = std::max(sup(i), v(i));
  }
  return sup;
}

Vec4 HealthyBounds::rate_upper_limit() const {
  return rate_upper_from(e1_limit());
}

Vec4 HealthyBounds::rate_lower_limit_raw() const {
  const Eigen::Vector4d coupling = abs_a21_times(abs_a21_, e1_limit());
  Vec4 out;
  for (int i = 0; i < 4; ++i) out[i] = m_[i] - coupling(i) - base_(i);
  return out;
}

E1EnvelopeStepper::E1EnvelopeStepper(const HealthyBounds& bounds, double dt)
    : cur_(bounds.e1_init()) {
  const Semigroup2 sg = hidden_semigroup(bounds.a11(), dt);
  decay_ = sg.state;
  drive_ = sg.integral * bounds.gbar();
}

void E1EnvelopeStepper::advance() { cur_ = decay_ * cur_ + drive_; }

AsymptoticLimits asymptotic_limits(const HealthyBounds& bounds) {
  AsymptoticLimits out;
  out.e1_tilde = bounds.e1_envelope_sup();
  const Vec4 up = bounds.rate_upper_limit();
  const Vec4 lo = bounds.rate_lower_limit_raw();
  const Vec4& m = bounds.switching_gain();
  const Vec4 zbar = bounds.e2_tilde();
  for (int i = 0; i < 4; ++i) {
    if (!std::isfinite(up[i])) {
      throw ConfigError(
          "settled measured-error rate bound is unbounded on channel " +
          std::to_string(i + 1) +
          "; the hidden dynamics feed an undamped blend into the outputs");
    }
    if (lo[i] <= 0.0) {
      throw ConfigError(
          "settled lower rate limit is not positive on channel " +
          std::to_string(i + 1) +
          "; raise the switching gain above the settled disturbance level");
    }
    out.u_bar[i] = up[i] - m[i];
    out.t_star[i] = 2.0 * zbar[i] / lo[i];
  }
  return out;
}

Vec4 eoi_threshold(const AsymptoticLimits& limits, const ObserverGains& gains) {
  Vec4 thr;
  for (int i = 0; i < 4; ++i) {
    const double decay = std::exp(-gains.k_diag[i] * limits.t_star[i]);
    thr[i] = decay * limits.u_bar[i] + (1.0 - decay) * gains.m_diag[i];
  }
  return thr;
}

AttackConvolution::AttackConvolution(const CanonicalModel& model, double step)
    : a21_(model.A21), f2_(model.F2) {
  const Semigroup2 sg = hidden_semigroup(model.A11, step);
  decay_ = sg.state;
  phi_f1_ = sg.integral * model.F1;
}

void AttackConvolution::advance(double du_held) {
  r_ = decay_ * r_ + phi_f1_ * du_held;
}

Eigen::Vector4d AttackConvolution::r(double du_now) const {
  return a21_ * r_ + f2_ * du_now;
}

AttackResponseSample attack_response(const CanonicalModel& model,
                                     const AttackSignal& attack, double t,
                                     double step) {
  AttackConvolution conv(model, step);
  const int full = static_cast<int>(std::floor(t / step + 1e-9));
  for (int k = 0; k < full; ++k) conv.advance(attack.value_at(k * step));
  Eigen::Vector2d rd = conv.r_delta();
  const double rem = t - full * step;
  if (rem > 1e-12) {
    const Semigroup2 sg = hidden_semigroup(model.A11, rem);
    rd = sg.state * rd + sg.integral * (model.F1 * attack.value_at(full * step));
  }
  AttackResponseSample out;
  out.r_delta = rd;
  out.r = model.A21 * rd + model.F2 * attack.value_at(t);
  return out;
}

}  // namespace icguard
