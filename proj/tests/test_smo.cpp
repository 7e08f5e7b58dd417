#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "icguard/model.hpp"
#include "icguard/smo.hpp"

using namespace icguard;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

UncertainModel flagship_uncertain() {
  return assemble_uncertain(VehicleParams{0.11, 4.0}, VehicleParams{0.10, 4.0},
                            0.9, 1.0, 10.0, Vec4{0.15, 0.3, 0.03, 0.15});
}

}  // namespace

TEST_CASE("observer error obeys the designed error dynamics") {
  const UncertainModel m = flagship_uncertain();
  const CanonicalModel c = canonical_transform(m);
  const ObserverGains gains;

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::Matrix<double, 6, 1> x;
    for (int i = 0; i < 6; ++i) x(i) = unif(rng);
    ObserverState obs;
    obs.x1 << unif(rng), unif(rng);
    obs.x2 << unif(rng), unif(rng), unif(rng), unif(rng);
    const Eigen::Vector2d u{unif(rng), unif(rng)};
    const double eta = 0.4 * unif(rng);
    const double du = unif(rng);
    Vec4 zeta;
    for (int i = 0; i < 4; ++i) zeta[i] = 0.05 * unif(rng);

    // Measurement produced by the true state.
    Vec4 y;
    const Eigen::Vector4d cx = m.coupled.C * x;
    for (int i = 0; i < 4; ++i) y[i] = cx(i) + c.c_offset[i] + zeta[i];

    const ObserverDerivative od = observer_derivative(obs, y, u, c, gains);

    // True transformed dynamics driven by the same input, mismatch and
    // injected corruption.
    const Eigen::Matrix<double, 6, 1> z = c.T * x;
    const Eigen::Vector2d z1 = z.head<2>();
    const Eigen::Vector4d z2 = z.tail<4>();
    const Eigen::Vector2d z1dot =
        c.A11 * z1 + c.A12 * z2 + c.B1 * u + c.E1 * eta + c.F1 * du;
    const Eigen::Vector4d z2dot =
        c.A21 * z1 + c.A22 * z2 + c.B2 * u + c.E2 * eta + c.F2 * du;

    const Eigen::Vector2d e1 = obs.x1 - z1;
    const Eigen::Vector4d e2 = obs.x2 - z2;
    Eigen::Vector4d zv, nuv;
    for (int i = 0; i < 4; ++i) {
      zv(i) = zeta[i];
      nuv(i) = od.nu[i];
      // The innovation is the measured-block error shifted by the noise.
      CHECK(std::abs(od.ey[i] - (e2(i) - zeta[i])) < 1e-12);
    }

    // Hidden error: e1' = A11 e1 + A12 zeta - E1 eta - F1 du.
    const Eigen::Vector2d e1dot_expect =
        c.A11 * e1 + c.A12 * zv - c.E1 * eta - c.F1 * du;
    CHECK((od.dx1 - z1dot - e1dot_expect).norm() < 1e-9);

    // Measured error: e2' = A21 e1 + A22s e2 + (A22 - A22s) zeta
    //                       - E2 eta - F2 du + nu.
    const Eigen::Vector4d e2dot_expect =
        c.A21 * e1 + gains.A22s * e2 + (c.A22 - gains.A22s) * zv -
        c.E2 * eta - c.F2 * du + nuv;
    CHECK((od.dx2 - z2dot - e2dot_expect).norm() < 1e-9);
  }
}

TEST_CASE("switching injection direction and magnitude") {
  const CanonicalModel c = canonical_transform(flagship_uncertain());
  ObserverState obs;
  obs.x2 << 1.0, -1.0, 0.0, 1e-300;
  obs.x1.setZero();
  // y chosen so e_y = (0.2, -0.1, 0, 1e-300): nu = -M sgn(e_y).
  Vec4 y;
  y[0] = obs.x2(0) + c.c_offset[0] - 0.2;
  y[1] = obs.x2(1) + c.c_offset[1] + 0.1;
  y[2] = obs.x2(2) + c.c_offset[2];
  y[3] = obs.x2(3) + c.c_offset[3] - 1e-300;

  const ObserverDerivative od =
      observer_derivative(obs, y, Eigen::Vector2d::Zero(), c, ObserverGains{});
  CHECK(od.nu[0] == -0.5);
  CHECK(od.nu[1] == 11.5);
  CHECK(od.nu[2] == 0.0);  // exact zero innovation gives no push
  CHECK(od.nu[3] == -2.0);
}

TEST_CASE("switching gain margins for the flagship setup") {
  const CanonicalModel c = canonical_transform(flagship_uncertain());
  const GainCheck gc = validate_switching_gain(
      c, ObserverGains{}, Eigen::Vector2d{kInf, 1.0});
  CHECK(gc.pass);
  const Vec4 rhs_expect{0.3, 1.15, 0.15, 1.5};
  const Vec4 margin_expect{0.2, 10.35, 0.05, 0.5};
  for (int i = 0; i < 4; ++i) {
    CHECK(gc.rhs[i] == doctest::Approx(rhs_expect[i]).epsilon(1e-12));
    CHECK(gc.margin[i] == doctest::Approx(margin_expect[i]).epsilon(1e-12));
  }

  ObserverGains weak;
  weak.m_diag = {0.25, 11.5, 0.2, 2.0};
  const GainCheck bad =
      validate_switching_gain(c, weak, Eigen::Vector2d{kInf, 1.0});
  CHECK_FALSE(bad.pass);
  CHECK(bad.margin[0] < 0.0);
}

TEST_CASE("filtered injection follows the exact hold update") {
  const Vec4 k_diag{1.0, 2.0, 0.5, 1.0};

  // Fixed point: matching filter state stays put.
  const Vec4 nu{0.3, -0.8, 0.1, 0.0};
  const Vec4 same = eoi_filter_step(nu, nu, k_diag, 0.01);
  for (int i = 0; i < 4; ++i) CHECK(same[i] == nu[i]);

  // Pure decay toward a new target.
  Vec4 fil{1.0, 1.0, 1.0, 1.0};
  const Vec4 zero{0.0, 0.0, 0.0, 0.0};
  const Vec4 decayed = eoi_filter_step(fil, zero, k_diag, 0.5);
  CHECK(decayed[0] == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
  CHECK(decayed[1] == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(decayed[2] == doctest::Approx(std::exp(-0.25)).epsilon(1e-14));

  // Under any switching pattern the filter stays within the injection range.
  std::mt19937_64 rng(3);
  Vec4 state{0.0, 0.0, 0.0, 0.0};
  for (int k = 0; k < 2000; ++k) {
    const double sign = (rng() & 1) ? 1.0 : -1.0;
    const Vec4 inj{0.5 * sign, 11.5 * sign, 0.2 * sign, 2.0 * sign};
    state = eoi_filter_step(state, inj, k_diag, 1e-3);
  }
  CHECK(std::abs(state[0]) <= 0.5);
  CHECK(std::abs(state[1]) <= 11.5);
  CHECK(std::abs(state[2]) <= 0.2);
  CHECK(std::abs(state[3]) <= 2.0);
}

TEST_CASE("injection readout recovers a settled constant corruption") {
  const CanonicalModel c = canonical_transform(flagship_uncertain());

  const AttackEstimate none = estimate_attack(Vec4{0.0, 0.0, 0.0, 0.0}, c);
  CHECK(none.available);
  CHECK(none.delta_u_hat == 0.0);
  CHECK(none.accuracy_bound == doctest::Approx(1.0).epsilon(1e-12));

  // The settled filter output of a constant corruption sits on the matched
  // direction (0, 1, 0, 0) scaled by its size.
  const AttackEstimate three = estimate_attack(Vec4{0.0, 3.0, 0.0, 0.0}, c);
  CHECK(three.delta_u_hat == doctest::Approx(3.0).epsilon(1e-12));

  // Off-direction components are projected out by the least-squares readout.
  const AttackEstimate noisy = estimate_attack(Vec4{0.2, 3.0, -0.1, 0.4}, c);
  CHECK(noisy.delta_u_hat == doctest::Approx(3.0).epsilon(1e-12));

  // Without a matched direction there is nothing to read out.
  CanonicalModel blind = c;
  blind.F1.setZero();
  blind.F2.setZero();
  const AttackEstimate na = estimate_attack(Vec4{0.0, 3.0, 0.0, 0.0}, blind);
  CHECK_FALSE(na.available);
}
