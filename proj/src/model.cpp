#include "icguard/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "icguard/errors.hpp"

namespace icguard {

namespace {

constexpr double kRankRelTol = 1e-9;   // sigma > tol * sigma_max counts
constexpr double kStructTol = 1e-12;   // exact-structure snap/verify level

double uniform_pm1(std::mt19937_64& rng) {
  return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
}

Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd M(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      M(r, c) = uniform_pm1(rng);
    }
  }
  return M;
}

int svd_rank(const Eigen::JacobiSVD<Eigen::MatrixXcd>& svd) {
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) {
    return 0;
  }
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > kRankRelTol * sv(0)) {
      ++rank;
    }
  }
  return rank;
}

// System pencil [sI - A, -F; C, 0] evaluated at a complex point.
Eigen::MatrixXcd pencil_at(const Eigen::MatrixXd& A, const Eigen::MatrixXd& F,
                           const Eigen::MatrixXd& C, std::complex<double> s) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(F.cols());
  const int p = static_cast<int>(C.rows());
  Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(n + p, n + m);
  P.topLeftCorner(n, n) =
      s * Eigen::MatrixXcd::Identity(n, n) - A.cast<std::complex<double>>();
  P.topRightCorner(n, m) = -F.cast<std::complex<double>>();
  P.bottomLeftCorner(p, n) = C.cast<std::complex<double>>();
  return P;
}

struct PencilZeros {
  std::vector<ZeroInfo> zeros;
  int normal_rank = 0;
  bool degenerate = false;
};

// Finite rank-drop points of the (possibly nonsquare) system pencil.
// Candidates are generalized eigenvalues of two independently randomized
// left-squarings L * P(s); a candidate counts only if it appears for both
// projections and an SVD of P(z) confirms the rank drop. Squaring can only
// add spurious eigenvalues, never lose true rank-drop points, so the
// verified intersection is the exact finite zero set up to numerics.
PencilZeros pencil_zeros(const Eigen::MatrixXd& A, const Eigen::MatrixXd& F,
                         const Eigen::MatrixXd& C) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(F.cols());
  const int p = static_cast<int>(C.rows());
  const int rows = n + p;
  const int cols = n + m;

  PencilZeros out;

  // P(s) = s * E0 + K0.
  Eigen::MatrixXd E0 = Eigen::MatrixXd::Zero(rows, cols);
  E0.topLeftCorner(n, n).setIdentity();
  Eigen::MatrixXd K0 = Eigen::MatrixXd::Zero(rows, cols);
  K0.topLeftCorner(n, n) = -A;
  K0.topRightCorner(n, m) = -F;
  K0.bottomLeftCorner(p, n) = C;

  // Normal rank from a few generic sample points.
  {
    std::mt19937_64 rng(0x1c6a7du);
    for (int trial = 0; trial < 3; ++trial) {
      const std::complex<double> s(3.0 * uniform_pm1(rng),
                                   3.0 * uniform_pm1(rng));
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pencil_at(A, F, C, s));
      out.normal_rank = std::max(out.normal_rank, svd_rank(svd));
    }
  }
  out.degenerate = out.normal_rank < std::min(rows, cols);

  // Candidate rank-drop points from the two squared pencils.
  std::vector<std::vector<std::complex<double>>> trials(2);
  for (int trial = 0; trial < 2; ++trial) {
    const Eigen::MatrixXd L =
        random_matrix(cols, rows, 0x5eedb00cull + 977u * trial);
    const Eigen::MatrixXd Es = L * E0;
    const Eigen::MatrixXd Ks = L * K0;
    Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges;
    ges.compute(-Ks, Es, /*computeEigenvectors=*/false);
    const auto& alphas = ges.alphas();
    const auto& betas = ges.betas();
    for (int i = 0; i < alphas.size(); ++i) {
      if (std::abs(betas(i)) >
          1e-10 * std::max(1.0, std::abs(alphas(i)))) {
        trials[trial].push_back(alphas(i) / betas(i));
      }
    }
  }

  std::vector<std::complex<double>> candidates;
  candidates.emplace_back(0.0, 0.0);  // cheap to test, easy to miss otherwise
  for (const auto& z1 : trials[0]) {
    for (const auto& z2 : trials[1]) {
      if (std::abs(z1 - z2) <= 1e-6 * std::max(1.0, std::abs(z1))) {
        candidates.push_back(0.5 * (z1 + z2));
        break;
      }
    }
  }

  for (const auto& z : candidates) {
    bool duplicate = false;
    for (const auto& kept : out.zeros) {
      if (std::abs(kept.value - z) <= 1e-6 * std::max(1.0, std::abs(z))) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) {
      continue;
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pencil_at(A, F, C, z),
                                           Eigen::ComputeFullV);
    const int rank = svd_rank(svd);
    if (rank >= out.normal_rank) {
      continue;  // squaring artifact, no actual rank drop
    }
    // Structural iff every rank-deficiency direction has (numerically) no
    // input component.
    bool structural = true;
    for (int k = rank; k < cols; ++k) {
      const Eigen::VectorXcd w = svd.matrixV().col(k);
      if (w.tail(m).norm() > 1e-9 * w.norm()) {
        structural = false;
        break;
      }
    }
    out.zeros.push_back({z, structural});
  }
  std::sort(out.zeros.begin(), out.zeros.end(),
            [](const ZeroInfo& a, const ZeroInfo& b) {
              return a.value.real() != b.value.real()
                         ? a.value.real() < b.value.real()
                         : a.value.imag() < b.value.imag();
            });
  return out;
}

}  // namespace

CoupledModel assemble_coupled(const VehicleParams& leader,
                              const VehicleParams& follower) {
  if (leader.tau <= 0.0 || follower.tau <= 0.0 || leader.length <= 0.0 ||
      follower.length <= 0.0) {
    throw ConfigError("vehicle parameters must be positive");
  }
  CoupledModel m;
  m.A.setZero();
  // Leader chain p' = v, v' = a, a' = (u - a)/tau.
  m.A(0, 1) = 1.0;
  m.A(1, 2) = 1.0;
  m.A(2, 2) = -1.0 / leader.tau;
  m.A(3, 4) = 1.0;
  m.A(4, 5) = 1.0;
  m.A(5, 5) = -1.0 / follower.tau;
  m.B.setZero();
  m.B(2, 0) = 1.0 / leader.tau;
  m.B(5, 1) = 1.0 / follower.tau;
  m.C.setZero();
  m.C(0, 0) = -1.0;
  m.C(0, 3) = 1.0;  // p_f - p_l
  m.C(1, 1) = -1.0;
  m.C(1, 4) = 1.0;  // v_f - v_l
  m.C(2, 4) = 1.0;  // v_f
  m.C(3, 5) = 1.0;  // a_f
  m.c_offset = {-leader.length, 0.0, 0.0, 0.0};
  return m;
}

UncertainModel assemble_uncertain(const VehicleParams& leader,
                                  const VehicleParams& follower, double r_tau,
                                  double eta_bound, double delta_bound,
                                  const Vec4& zeta_bound) {
  if (r_tau <= 0.0) {
    throw ConfigError("lag ratio r_tau must be positive");
  }
  UncertainModel m;
  m.tau_leader_nominal = r_tau * leader.tau;
  VehicleParams nominal_leader = leader;
  nominal_leader.tau = m.tau_leader_nominal;
  m.coupled = assemble_coupled(nominal_leader, follower);
  m.E.setZero();
  m.E(2) = 1.0 / m.tau_leader_nominal;
  m.F = -m.E;
  m.eta_bound = eta_bound;
  m.delta_bound = delta_bound;
  m.zeta_bound = zeta_bound;
  m.r_tau = r_tau;
  return m;
}

CanonicalModel canonical_transform(const UncertainModel& m) {
  const auto& A = m.coupled.A;
  const auto& B = m.coupled.B;
  const auto& C = m.coupled.C;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd_c(C, Eigen::ComputeFullV);
  const auto& sv_c = svd_c.singularValues();
  if (sv_c(kNumOutputs - 1) <= kRankRelTol * sv_c(0)) {
    throw ConfigError("output map is not full row rank");
  }

  // Orthonormal basis of the unmeasured directions.
  Eigen::Matrix<double, 6, 2> nb =
      svd_c.matrixV().rightCols<kNumHidden>();

  // Detect a conserved blend among the unmeasured directions and rotate it
  // into the first hidden coordinate.
  const Eigen::Matrix<double, 6, 2> a_nb = A * nb;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_an(a_nb, Eigen::ComputeFullV);
  const double an_max = svd_an.singularValues()(0);
  const double an_min = svd_an.singularValues()(1);
  const bool inert = an_min <= 1e-10 * std::max(an_max, 1.0);

  Eigen::Matrix<double, 2, 6> N;
  if (inert) {
    const Eigen::Vector2d theta = svd_an.matrixV().col(1);
    const Eigen::Vector2d theta_perp(-theta(1), theta(0));
    N.row(0) = (nb * theta).transpose();
    N.row(1) = (nb * theta_perp).transpose();
  } else {
    N = nb.transpose();
  }
  // Deterministic orientation: first non-negligible entry of each row
  // positive.
  for (int r = 0; r < kNumHidden; ++r) {
    for (int c = 0; c < kNumStates; ++c) {
      if (std::abs(N(r, c)) > 1e-9) {
        if (N(r, c) < 0.0) {
          N.row(r) = -N.row(r);
        }
        break;
      }
    }
  }

  CanonicalModel out;
  out.T.topRows<kNumHidden>() = N;
  out.T.bottomRows<kNumOutputs>() = C;
  out.T_inv = out.T.inverse();
  const double round_trip =
      (out.T * out.T_inv - Eigen::Matrix<double, 6, 6>::Identity())
          .cwiseAbs()
          .maxCoeff();
  if (!(round_trip < kStructTol)) {
    throw ConfigError("coordinate change failed its round-trip check");
  }

  Eigen::Matrix<double, 6, 6> At = out.T * A * out.T_inv;
  Eigen::Matrix<double, 6, 2> Bt = out.T * B;
  Eigen::Matrix<double, 6, 1> Et = out.T * m.E;
  Eigen::Matrix<double, 6, 1> Ft = out.T * m.F;

  // The transformed output map must read the measured block directly.
  Eigen::Matrix<double, 4, 6> ct = C * out.T_inv;
  ct.rightCols<kNumOutputs>() -= Eigen::Matrix4d::Identity();
  if (ct.cwiseAbs().maxCoeff() > kStructTol) {
    throw AssumptionError(
        "transformed output map is not identity on the measured block");
  }

  // Structural verification of the conserved blend: it must not feed back
  // into any dynamics (first column of the transformed A is zero).
  if (inert) {
    const double coupling = At.col(0).cwiseAbs().maxCoeff();
    if (coupling > kStructTol) {
      std::ostringstream msg;
      msg << "conserved blend couples into the dynamics (max |entry| = "
          << coupling << "); hidden error dynamics would not settle";
      throw AssumptionError(msg.str());
    }
    At.col(0).setZero();
  }
  // Snap exact-structure residue so downstream algebra sees clean zeros.
  const auto snap = [](double x) { return std::abs(x) <= kStructTol ? 0.0 : x; };
  At = At.unaryExpr(snap);
  Bt = Bt.unaryExpr(snap);
  Et = Et.unaryExpr(snap);
  Ft = Ft.unaryExpr(snap);

  out.A11 = At.topLeftCorner<2, 2>();
  out.A12 = At.topRightCorner<2, 4>();
  out.A21 = At.bottomLeftCorner<4, 2>();
  out.A22 = At.bottomRightCorner<4, 4>();
  out.B1 = Bt.topRows<2>();
  out.B2 = Bt.bottomRows<4>();
  out.E1 = Et.head<2>();
  out.E2 = Et.tail<4>();
  out.F1 = Ft.head<2>();
  out.F2 = Ft.tail<4>();
  out.c_offset = m.coupled.c_offset;
  out.has_inert_blend = inert;
  out.zeta_bound = m.zeta_bound;
  out.eta_bound = m.eta_bound;
  out.delta_bound = m.delta_bound;

  // Hidden error dynamics must settle: every eigenvalue strictly negative,
  // except the single verified inert blend which sits exactly at zero.
  const Eigen::EigenSolver<Eigen::Matrix2d> eig(out.A11);
  int zero_count = 0;
  for (int i = 0; i < kNumHidden; ++i) {
    const std::complex<double> lambda = eig.eigenvalues()(i);
    if (std::abs(lambda) <= 1e-9) {
      ++zero_count;
    } else if (lambda.real() >= 0.0) {
      std::ostringstream msg;
      msg << "hidden error dynamics unstable: eigenvalue " << lambda.real()
          << (lambda.imag() != 0.0 ? " + i*imag" : "")
          << " has nonnegative real part";
      throw AssumptionError(msg.str());
    }
  }
  if ((inert && zero_count != 1) || (!inert && zero_count != 0)) {
    throw AssumptionError(
        "hidden error dynamics have an eigenvalue at zero that is not the "
        "verified conserved blend");
  }
  return out;
}

ZeroAnalysis analyze_invariant_zeros(const Eigen::MatrixXd& A,
                                     const Eigen::MatrixXd& F,
                                     const Eigen::MatrixXd& C) {
  ZeroAnalysis out;
  const PencilZeros full = pencil_zeros(A, F, C);
  out.zeros = full.zeros;
  out.normal_rank = full.normal_rank;
  out.pencil_degenerate = full.degenerate;

  // Observable-subsystem zeros: restrict to the observable subspace via the
  // observability matrix and rerun the pencil analysis there.
  const int n = static_cast<int>(A.rows());
  const int p = static_cast<int>(C.rows());
  Eigen::MatrixXd obs(n * p, n);
  Eigen::MatrixXd block = C;
  for (int k = 0; k < n; ++k) {
    obs.middleRows(k * p, p) = block;
    block = block * A;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_o(obs, Eigen::ComputeFullV);
  const auto& sv = svd_o.singularValues();
  int r = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > kRankRelTol * sv(0)) {
      ++r;
    }
  }
  if (r == 0) {
    return out;
  }
  const Eigen::MatrixXd Vo = svd_o.matrixV().leftCols(r);
  const PencilZeros reduced =
      pencil_zeros(Vo.transpose() * A * Vo, Vo.transpose() * F, C * Vo);
  for (const auto& z : reduced.zeros) {
    out.observable_zeros.push_back(z.value);
  }
  return out;
}

ZeroAnalysis check_invariant_zeros(const UncertainModel& m) {
  return analyze_invariant_zeros(Eigen::MatrixXd(m.coupled.A),
                                 Eigen::MatrixXd(m.F),
                                 Eigen::MatrixXd(m.coupled.C));
}

void require_detectable_zeros(const ZeroAnalysis& analysis) {
  for (const auto& z : analysis.zeros) {
    if (!z.structural && z.value.real() >= 0.0) {
      std::ostringstream msg;
      msg << "invariant zero at Re = " << z.value.real()
          << " involves the attack input; an attack shaped along it would be "
             "invisible or destabilizing, refusing configuration";
      throw AssumptionError(msg.str());
    }
  }
  for (const auto& z : analysis.observable_zeros) {
    if (z.real() >= 0.0) {
      std::ostringstream msg;
      msg << "observable-subsystem invariant zero at Re = " << z.real()
          << " has nonnegative real part, refusing configuration";
      throw AssumptionError(msg.str());
    }
  }
}

MatchingRank check_matching_rank(const CanonicalModel& m) {
  // pinv(A11): the inert blend contributes a zero singular value that the
  // pseudoinverse drops; it carries no attack component by construction.
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(
      m.A11, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  Eigen::Matrix2d sigma_inv = Eigen::Matrix2d::Zero();
  for (int i = 0; i < kNumHidden; ++i) {
    if (sv(i) > kRankRelTol * std::max(sv(0), 1.0)) {
      sigma_inv(i, i) = 1.0 / sv(i);
    }
  }
  const Eigen::Matrix2d a11_pinv =
      svd.matrixV() * sigma_inv * svd.matrixU().transpose();

  MatchingRank out;
  out.matched_direction = m.F2 - m.A21 * a11_pinv * m.F1;
  out.sigma_max = out.matched_direction.norm();
  out.sigma_min = out.sigma_max;  // single column: one singular value
  const double scale =
      std::max(1.0, m.F2.norm() + (m.A21 * a11_pinv * m.F1).norm());
  out.full_column_rank = out.sigma_max > kRankRelTol * scale;
  return out;
}

}  // namespace icguard
