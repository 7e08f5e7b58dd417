#include "icguard/vehicle.hpp"

#include <algorithm>
#include <cmath>

#include "icguard/errors.hpp"
#include "icguard/kernels.hpp"

namespace icguard {

double AttackSignal::value_at(double t) const {
  switch (kind) {
    case Kind::kNone:
      return 0.0;
    case Kind::kStep:
      return (t >= onset) ? magnitude : 0.0;
    case Kind::kPiecewise: {
      double value = 0.0;
      for (const auto& [time, v] : samples) {
        if (t >= time) {
          value = v;
        } else {
          break;
        }
      }
      return value;
    }
  }
  return 0.0;
}

VehicleState car_derivative(const VehicleState& state, double u,
                            const VehicleParams& params) {
  if (!std::isfinite(u) || !std::isfinite(state.p) ||
      !std::isfinite(state.v) || !std::isfinite(state.a)) {
    throw SimulationError("car_derivative: non-finite state or input");
  }
  return {state.v, state.a, (u - state.a) / params.tau};
}

double cacc_control(const VehicleState& follower, const VehicleState& leader,
                    double u_prev, double received_leader_input,
                    const CaccGains& gains, double leader_length) {
  const double gap = leader.p - follower.p - leader_length;
  const double eps1 = (gains.r_standstill + gains.h * follower.v) - gap;
  const double eps1_dot = (follower.v - leader.v) + gains.h * follower.a;
  return -(u_prev + gains.kp * eps1 + gains.kd * eps1_dot -
           received_leader_input) /
         gains.h;
}

double apply_attack(double u_leader, const AttackSignal& attack, double t) {
  return u_leader + attack.value_at(t);
}

Vec4 measure(const VehicleState& follower, const VehicleState& leader,
             double length, const Vec4& noise) {
  return {follower.p - leader.p - length + noise[0],
          follower.v - leader.v + noise[1], follower.v + noise[2],
          follower.a + noise[3]};
}

bool crash_predicate(double p_follower, double p_leader, double length) {
  return p_follower >= -length && p_leader > -length && p_leader < 0.0;
}

NoiseSampler::NoiseSampler(const NoiseSpec& spec, std::uint64_t seed)
    : spec_(spec), rng_(seed) {}

double NoiseSampler::uniform01() {
  // 53 random mantissa bits -> [0, 1). Fixed mapping for reproducibility
  // across standard libraries.
  return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

double NoiseSampler::truncated_unit_norm() {
  // Polar Box-Muller, one variate per acceptance, re-drawn until it lies
  // within +/- 3 so the scaled output respects the hard noise bound.
  for (;;) {
    const double u = 2.0 * uniform01() - 1.0;
    const double v = 2.0 * uniform01() - 1.0;
    const double s = u * u + v * v;
    if (s <= 0.0 || s >= 1.0) {
      continue;
    }
    const double g = u * std::sqrt(-2.0 * std::log(s) / s);
    if (std::abs(g) <= 3.0) {
      return g;
    }
  }
}

Vec4 NoiseSampler::draw() {
  Vec4 out;
  if (spec_.distribution == NoiseSpec::Dist::kUniform) {
    Vec4 u01;
    for (int i = 0; i < kNumOutputs; ++i) {
      u01[i] = uniform01();
    }
    kern::active_backend().noise_scale4(u01.data(), spec_.bound.data(),
                                        out.data());
  } else {
    for (int i = 0; i < kNumOutputs; ++i) {
      out[i] = truncated_unit_norm() * (spec_.bound[i] / 3.0);
    }
  }
  return out;
}

}  // namespace icguard
