#include <cmath>
#include <cstdint>

#include "doctest.h"

#include "icguard/errors.hpp"
#include "icguard/vehicle.hpp"

using namespace icguard;

TEST_CASE("car model derivative chains position, speed, and lag") {
  const VehicleParams p{0.1, 4.0};
  VehicleState d = car_derivative({0.0, 8.0, 0.0}, 0.0, p);
  CHECK(d.p == 8.0);
  CHECK(d.v == 0.0);
  CHECK(d.a == 0.0);
  d = car_derivative({0.0, 0.0, 1.0}, 0.0, p);
  CHECK(d.p == 0.0);
  CHECK(d.v == 1.0);
  CHECK(d.a == doctest::Approx(-10.0).epsilon(1e-15));
  d = car_derivative({0.0, 10.0, 0.5}, 1.0, p);
  CHECK(d.p == 10.0);
  CHECK(d.v == 0.5);
  CHECK(d.a == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("car model rejects non-finite commands") {
  const VehicleParams p{0.1, 4.0};
  CHECK_THROWS_AS(car_derivative({0.0, 0.0, 0.0},
                                 std::numeric_limits<double>::quiet_NaN(), p),
                  SimulationError);
}

TEST_CASE("gap regulation pushes toward the headway-scheduled spacing") {
  const CaccGains g{};  // h=0.7 r=1.5 kp=0.2 kd=0.7
  const double L = 4.0;

  // One metre closer than desired, matched speeds, no accel: pure
  // proportional action -kp/h.
  const VehicleState follower{0.0, 8.0, 0.0};
  const VehicleState leader{10.1, 8.0, 0.0};  // gap 6.1, desired 7.1
  const double udot = cacc_control(follower, leader, 0.0, 0.0, g, L);
  CHECK(udot == doctest::Approx(-0.2 / 0.7).epsilon(1e-12));

  // At the desired gap with matched speeds the command is stationary.
  const VehicleState leader_eq{11.1, 8.0, 0.0};  // gap 7.1 = 1.5 + 0.7*8
  CHECK(cacc_control(follower, leader_eq, 0.0, 0.0, g, L) ==
        doctest::Approx(0.0).epsilon(1e-15));

  // Too close means braking, too far means accelerating.
  const VehicleState leader_near{9.0, 8.0, 0.0};
  CHECK(cacc_control(follower, leader_near, 0.0, 0.0, g, L) < 0.0);
  const VehicleState leader_far{14.0, 8.0, 0.0};
  CHECK(cacc_control(follower, leader_far, 0.0, 0.0, g, L) > 0.0);

  // The received leader input feeds through positively.
  CHECK(cacc_control(follower, leader_eq, 0.0, 2.0, g, L) ==
        doctest::Approx(2.0 / 0.7).epsilon(1e-12));
}

TEST_CASE("injected corruption follows step and hold tables") {
  AttackSignal none;
  CHECK(apply_attack(1.5, none, 3.0) == 1.5);

  AttackSignal step;
  step.kind = AttackSignal::Kind::kStep;
  step.onset = 0.5;
  step.magnitude = 2.0;
  CHECK(apply_attack(0.0, step, 0.4) == 0.0);
  CHECK(apply_attack(0.0, step, 0.5) == 2.0);  // closed at the onset
  CHECK(apply_attack(1.0, step, 3.0) == 3.0);

  AttackSignal table;
  table.kind = AttackSignal::Kind::kPiecewise;
  table.samples = {{0.5, 2.0}, {1.5, 0.0}, {2.0, -1.0}};
  CHECK(table.value_at(0.3) == 0.0);
  CHECK(table.value_at(0.5) == 2.0);
  CHECK(table.value_at(1.0) == 2.0);
  CHECK(table.value_at(1.5) == 0.0);
  CHECK(table.value_at(5.0) == -1.0);  // last value held
}

TEST_CASE("measurement is relative position, relative speed, speed, accel") {
  const VehicleState follower{-10.0, 10.0, 0.0};
  const VehicleState leader{0.0, 8.0, 0.0};
  const Vec4 clean{};
  Vec4 y = measure(follower, leader, 4.0, clean);
  CHECK(y[0] == -14.0);
  CHECK(y[1] == 2.0);
  CHECK(y[2] == 10.0);
  CHECK(y[3] == 0.0);
  const Vec4 shift{0.15, 0.3, 0.03, 0.15};
  y = measure(follower, leader, 4.0, shift);
  CHECK(y[0] == doctest::Approx(-13.85).epsilon(1e-15));
  CHECK(y[1] == doctest::Approx(2.3).epsilon(1e-15));
  CHECK(y[2] == doctest::Approx(10.03).epsilon(1e-15));
  CHECK(y[3] == 0.15);
}

TEST_CASE("crash happens only when both cars occupy the crossing box") {
  const double L = 4.0;
  CHECK(crash_predicate(-4.0, -2.0, L));    // follower front at the box edge
  CHECK(crash_predicate(-1.0, -0.5, L));
  CHECK_FALSE(crash_predicate(-4.01, -2.0, L));  // follower not arrived
  CHECK_FALSE(crash_predicate(-1.0, 0.0, L));    // leader rear cleared
  CHECK_FALSE(crash_predicate(-1.0, -4.0, L));   // leader not entered
  CHECK_FALSE(crash_predicate(-10.0, -10.0, L));
}

TEST_CASE("noise draws stay inside the box and average to zero") {
  NoiseSpec spec;  // uniform, default bounds
  NoiseSampler sampler(spec, 7);
  const int n = 100000;
  Vec4 mean{};
  for (int i = 0; i < n; ++i) {
    const Vec4 z = sampler.draw();
    for (int c = 0; c < 4; ++c) {
      REQUIRE(std::abs(z[c]) <= spec.bound[c]);
      mean[c] += z[c] / n;
    }
  }
  for (int c = 0; c < 4; ++c) {
    // Uniform on [-b, b]: sigma of the sample mean is b/sqrt(3n).
    const double tol = 4.0 * spec.bound[c] / std::sqrt(3.0 * n);
    CHECK(std::abs(mean[c]) < tol);
  }

  NoiseSpec gspec;
  gspec.distribution = NoiseSpec::Dist::kTruncatedGaussian;
  NoiseSampler gs(gspec, 7);
  Vec4 gmean{};
  for (int i = 0; i < n; ++i) {
    const Vec4 z = gs.draw();
    for (int c = 0; c < 4; ++c) {
      REQUIRE(std::abs(z[c]) <= gspec.bound[c]);
      gmean[c] += z[c] / n;
    }
  }
  for (int c = 0; c < 4; ++c) {
    const double tol = 5.0 * (gspec.bound[c] / 3.0) / std::sqrt(double(n));
    CHECK(std::abs(gmean[c]) < tol);
  }
}

TEST_CASE("noise sequences are reproducible per seed") {
  NoiseSpec spec;
  NoiseSampler a(spec, 123), b(spec, 123), c(spec, 124);
  bool all_equal = true;
  bool any_differs = false;
  for (int i = 0; i < 1000; ++i) {
    const Vec4 za = a.draw();
    const Vec4 zb = b.draw();
    const Vec4 zc = c.draw();
    for (int ch = 0; ch < 4; ++ch) {
      all_equal = all_equal && (za[ch] == zb[ch]);
      any_differs = any_differs || (za[ch] != zc[ch]);
    }
  }
  CHECK(all_equal);
  CHECK(any_differs);
}
