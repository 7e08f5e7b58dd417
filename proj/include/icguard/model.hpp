#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "icguard/types.hpp"
#include "icguard/vehicle.hpp"

namespace icguard {

// Two-car coupled plant: x = (p_l, v_l, a_l, p_f, v_f, a_f), inputs
// u = (u_l, u_f), measurement y = C x + c_offset + noise.
struct CoupledModel {
  Eigen::Matrix<double, 6, 6> A;
  Eigen::Matrix<double, 6, 2> B;
  Eigen::Matrix<double, 4, 6> C;
  Vec4 c_offset;  // constant measurement offset (car-length term)
};

// Coupled plant rewritten around the nominal leader engine lag
// tau_hat = r_tau * tau_l, with the mismatch pushed into a scalar signal
// eta = (r_tau - 1)(u_l - a_l) acting through E, and the injected input
// corruption acting through F = -E.
struct UncertainModel {
  CoupledModel coupled;            // built with tau_hat in the leader block
  Eigen::Matrix<double, 6, 1> E;   // single entry 1/tau_hat at the a_l row
  Eigen::Matrix<double, 6, 1> F;   // -E
  double eta_bound = 1.0;          // |eta| cap assumed by the observer
  double delta_bound = 10.0;       // |attack| cap assumed by the observer
  Vec4 zeta_bound{};               // per-channel measurement noise cap
  double r_tau = 1.0;
  double tau_leader_nominal = 0.0;
};

// Observer coordinates z = T x with z2 = C x: the measured block is read
// directly off the output and the remaining two coordinates are hidden.
//
// For this plant the hidden block always contains one conserved blend
// (the noise-free dynamics and the output are both invariant under shifting
// the two positions by the same amount), so A11 always carries one exactly-
// zero eigenvalue. The transformation rotates the hidden basis so that this
// blend is the FIRST hidden coordinate; construction then verifies that its
// couplings into everything else vanish to 1e-12 (it is dynamically inert)
// and requires the remaining hidden eigenvalues to be strictly negative.
struct CanonicalModel {
  Eigen::Matrix2d A11;
  Eigen::Matrix<double, 2, 4> A12;
  Eigen::Matrix<double, 4, 2> A21;
  Eigen::Matrix4d A22;
  Eigen::Matrix2d B1;
  Eigen::Matrix<double, 4, 2> B2;
  Eigen::Vector2d E1;
  Eigen::Vector4d E2;
  Eigen::Vector2d F1;
  Eigen::Vector4d F2;
  Vec4 c_offset;
  Eigen::Matrix<double, 6, 6> T;
  Eigen::Matrix<double, 6, 6> T_inv;
  bool has_inert_blend = false;
  // Bounds carried over from the uncertain model for downstream consumers.
  Vec4 zeta_bound{};
  double eta_bound = 0.0;
  double delta_bound = 0.0;
};

// One invariant zero of a (A, F, C) triple. `structural` marks output-
// decoupling zeros: the rank-drop direction uses no input component, so the
// zero reflects an unobservable state blend rather than an input path that
// could mask an attack.
struct ZeroInfo {
  std::complex<double> value;
  bool structural = false;
};

struct ZeroAnalysis {
  std::vector<ZeroInfo> zeros;  // finite zeros of the full system pencil
  std::vector<std::complex<double>> observable_zeros;  // observable subsystem
  int normal_rank = 0;
  bool pencil_degenerate = false;  // pencil never reaches full size rank
};

struct MatchingRank {
  bool full_column_rank = false;
  Eigen::Vector4d matched_direction;  // F2 - A21 pinv(A11) F1
  double sigma_min = 0.0;
  double sigma_max = 0.0;
};

// True coupled matrices from physical parameters (leader lag as given).
CoupledModel assemble_coupled(const VehicleParams& leader,
                              const VehicleParams& follower);

// Nominal-lag model plus uncertainty/attack directions and their bounds.
UncertainModel assemble_uncertain(const VehicleParams& leader,
                                  const VehicleParams& follower, double r_tau,
                                  double eta_bound, double delta_bound,
                                  const Vec4& zeta_bound);

// Observer-form change of coordinates. Throws AssumptionError when the
// hidden error dynamics are not acceptable: a hidden eigenvalue with
// nonnegative real part that is not the verified inert blend, a conserved
// blend that actually couples into the rest of the dynamics, or a
// transformation that fails its round-trip check.
CanonicalModel canonical_transform(const UncertainModel& m);

// Finite invariant zeros of an arbitrary (A, F, C) triple via the system
// pencil [sI - A, -F; C, 0]. Candidates come from two independently
// randomized squarings of the pencil and are kept only if the pencil
// verifiably drops rank there. Never throws; degeneracy is reported in the
// result.
ZeroAnalysis analyze_invariant_zeros(const Eigen::MatrixXd& A,
                                     const Eigen::MatrixXd& F,
                                     const Eigen::MatrixXd& C);

// Zero analysis of the assembled two-car model.
ZeroAnalysis check_invariant_zeros(const UncertainModel& m);

// Throws AssumptionError if any non-structural zero (full pencil) or any
// observable-subsystem zero has nonnegative real part: such a zero gives the
// attack a stable hiding place and detection guarantees are void.
void require_detectable_zeros(const ZeroAnalysis& analysis);

// Column-rank check of the attack's steady output signature
// F2 - A21 pinv(A11) F1 (pinv because the inert blend makes A11 singular;
// the blend carries no attack component, so the pseudoinverse drops it
// exactly).
MatchingRank check_matching_rank(const CanonicalModel& m);

}  // namespace icguard
