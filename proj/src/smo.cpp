#include "icguard/smo.hpp"

#include <cmath>

namespace icguard {

namespace {

// Row sums of |A21| against a vector that may hold +inf entries: exact zeros
// in |A21| suppress the corresponding entries instead of producing NaN.
Eigen::Vector4d abs_a21_times(const Eigen::Matrix<double, 4, 2>& a21,
                              const Eigen::Vector2d& v) {
  Eigen::Vector4d out = Eigen::Vector4d::Zero();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 2; ++c) {
      const double coeff = std::abs(a21(r, c));
      if (coeff != 0.0) {
        out(r) += coeff * v(c);
      }
    }
  }
  return out;
}

double sgn(double x) { return (x > 0.0) ? 1.0 : ((x < 0.0) ? -1.0 : 0.0); }

}  // namespace

GainCheck validate_switching_gain(const CanonicalModel& model,
                                  const ObserverGains& gains,
                                  const Eigen::Vector2d& e1_tilde) {
  const Eigen::Vector4d zeta =
      Eigen::Map<const Eigen::Vector4d>(model.zeta_bound.data());
  Eigen::Vector4d rhs = abs_a21_times(model.A21, e1_tilde);
  rhs += model.A22.cwiseAbs() * zeta;
  rhs += model.E2.cwiseAbs() * model.eta_bound;
  rhs += model.F2.cwiseAbs() * model.delta_bound;

  GainCheck out;
  out.pass = true;
  for (int i = 0; i < kNumOutputs; ++i) {
    out.rhs[i] = rhs(i);
    out.margin[i] = gains.m_diag[i] - rhs(i);
    if (!(gains.m_diag[i] > rhs(i))) {
      out.pass = false;
    }
  }
  return out;
}

ObserverDerivative observer_derivative(const ObserverState& obs, const Vec4& y,
                                       const Eigen::Vector2d& u,
                                       const CanonicalModel& model,
                                       const ObserverGains& gains) {
  ObserverDerivative out;
  Eigen::Vector4d ey;
  for (int i = 0; i < kNumOutputs; ++i) {
    ey(i) = obs.x2(i) + model.c_offset[i] - y[i];
    out.ey[i] = ey(i);
    out.nu[i] = -gains.m_diag[i] * sgn(ey(i));
  }
  const Eigen::Vector4d nu = Eigen::Map<const Eigen::Vector4d>(out.nu.data());
  out.dx1 = model.A11 * obs.x1 + model.A12 * obs.x2 + model.B1 * u -
            model.A12 * ey;
  out.dx2 = model.A21 * obs.x1 + model.A22 * obs.x2 + model.B2 * u -
            (model.A22 - gains.A22s) * ey + nu;
  return out;
}

Vec4 eoi_filter_step(const Vec4& nu_fil, const Vec4& nu, const Vec4& k_diag,
                     double dt) {
  Vec4 out;
  for (int i = 0; i < kNumOutputs; ++i) {
    out[i] = nu[i] + (nu_fil[i] - nu[i]) * std::exp(-k_diag[i] * dt);
  }
  return out;
}

AttackEstimate estimate_attack(const Vec4& nu_fil,
                               const CanonicalModel& model) {
  const MatchingRank match = check_matching_rank(model);
  AttackEstimate out;
  if (!match.full_column_rank) {
    return out;
  }
  const Eigen::Vector4d g = match.matched_direction;
  const double gg = g.squaredNorm();
  const Eigen::Vector4d nf = Eigen::Map<const Eigen::Vector4d>(nu_fil.data());
  out.delta_u_hat = g.dot(nf) / gg;

  // pinv(A11) |E1| reuses the same thresholded inversion as the matched
  // direction itself.
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(
      model.A11, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  Eigen::Matrix2d sigma_inv = Eigen::Matrix2d::Zero();
  for (int i = 0; i < kNumHidden; ++i) {
    if (sv(i) > 1e-9 * std::max(sv(0), 1.0)) {
      sigma_inv(i, i) = 1.0 / sv(i);
    }
  }
  const Eigen::Matrix2d a11_pinv =
      svd.matrixV() * sigma_inv * svd.matrixU().transpose();
  const Eigen::Vector4d w =
      model.A21 * a11_pinv * model.E1.cwiseAbs() + model.E2.cwiseAbs();
  out.accuracy_bound = std::abs(g.dot(w) / gg) * model.eta_bound;
  out.available = true;
  return out;
}

}  // namespace icguard
