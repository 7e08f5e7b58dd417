#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "icguard/types.hpp"

namespace icguard {

// Physical constants of one car: first-order engine lag plus geometry.
struct VehicleParams {
  double tau = 0.1;     // engine time constant [s], > 0
  double length = 4.0;  // car length [m], > 0
};

// Longitudinal state. p is the signed distance of the rear bumper to the
// intersection (negative while approaching).
struct VehicleState {
  double p = 0.0;  // [m]
  double v = 0.0;  // [m/s]
  double a = 0.0;  // [m/s^2]
};

// Gap-regulation controller gains (constant-time-headway spacing policy).
struct CaccGains {
  double h = 0.7;             // time headway [s], > 0
  double r_standstill = 1.5;  // standstill distance [m], >= 0
  double kp = 0.2;            // proportional gain [1/s^2], > 0
  double kd = 0.7;            // derivative gain [1/s], > 0
};

// Additive corruption of the communicated leader input. `samples` is a
// zero-order-hold table (value holds from its time until the next entry;
// zero before the first entry, last value held afterwards).
struct AttackSignal {
  enum class Kind { kNone, kStep, kPiecewise };
  Kind kind = Kind::kNone;
  double onset = 0.0;      // [s], step kind only
  double magnitude = 0.0;  // [m/s^2], step kind only
  std::vector<std::pair<double, double>> samples;  // piecewise kind

  double value_at(double t) const;
};

// Bounded measurement-noise model: one independent draw per channel per
// measurement instant, each within +/- bound.
struct NoiseSpec {
  enum class Dist { kUniform, kTruncatedGaussian };
  Vec4 bound = {0.15, 0.3, 0.03, 0.15};  // [m, m/s, m/s, m/s^2], > 0
  Dist distribution = Dist::kUniform;
  std::uint64_t seed = 1;
};

// Right-hand side of the third-order car model: (p', v', a') =
// (v, a, (u - a)/tau). Throws SimulationError on non-finite input.
VehicleState car_derivative(const VehicleState& state, double u,
                            const VehicleParams& params);

// Rate of change of the follower's commanded acceleration under the
// gap-regulation law
//   eps1 = (r + h v_f) - (p_l - p_f - L)      (positive when too close)
//   eps1' = (v_f - v_l) + h a_f
//   u_f'  = -(1/h) (u_f + kp eps1 + kd eps1' - u_received)
// so that eps1 = 0 at the desired gap r + h v_f.
double cacc_control(const VehicleState& follower, const VehicleState& leader,
                    double u_prev, double received_leader_input,
                    const CaccGains& gains, double leader_length);

// Received leader input: u + attack value at time t. The attack magnitude
// cap is enforced at configuration time, not here.
double apply_attack(double u_leader, const AttackSignal& attack, double t);

// Four-channel measurement available to the follower:
//   y = [p_f - p_l - L, v_f - v_l, v_f, a_f] + noise.
Vec4 measure(const VehicleState& follower, const VehicleState& leader,
             double length, const Vec4& noise);

// True when the follower front has entered the intersection box while the
// leader still occupies it: p_f >= -L and -L < p_l < 0.
bool crash_predicate(double p_follower, double p_leader, double length);

// Deterministic bounded-noise source. The mapping from the raw generator to
// doubles is implemented here (not via std distributions) so that identical
// seeds give identical draws on every platform.
class NoiseSampler {
 public:
  NoiseSampler(const NoiseSpec& spec, std::uint64_t seed);

  // One 4-channel draw, elementwise within +/- spec.bound.
  Vec4 draw();

 private:
  double uniform01();            // [0, 1)
  double truncated_unit_norm();  // N(0,1) conditioned on |g| <= 3

  NoiseSpec spec_;
  std::mt19937_64 rng_;
};

}  // namespace icguard
