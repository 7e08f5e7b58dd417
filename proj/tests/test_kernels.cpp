#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"

#include "icguard/kernels.hpp"

using icguard::kern::Backend;
using icguard::kern::compiled_simd_backend;
using icguard::kern::scalar_backend;
using icguard::kern::simd_supported;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

bool same_bits(const double* a, const double* b, int n) {
  return std::memcmp(a, b, sizeof(double) * static_cast<std::size_t>(n)) == 0;
}

}  // namespace

TEST_CASE("switching term follows the strict sign convention") {
  const Backend& k = scalar_backend();
  const double ey[4] = {0.3, -0.2, 0.0, -0.0};
  const double m[4] = {0.5, 11.5, 0.2, 2.0};
  double nu[4];
  k.sign_switch4(ey, m, nu);
  CHECK(nu[0] == -0.5);
  CHECK(nu[1] == 11.5);
  CHECK(nu[2] == 0.0);  // sign of zero is zero
  CHECK(nu[3] == 0.0);  // ... including negative zero
}

TEST_CASE("exponential filter relaxes toward the held input") {
  const Backend& k = scalar_backend();
  const double nu[4] = {1.0, -2.0, 0.0, 4.0};
  const double decay[4] = {0.5, 0.5, 0.25, 1.0};
  double nufil[4] = {0.0, 0.0, 8.0, 1.0};
  k.exp_filter4(nu, decay, nufil);
  CHECK(nufil[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(nufil[1] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(nufil[2] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(nufil[3] == 1.0);  // decay 1 = no motion
  // Fixed point: already at the input.
  double fixed[4] = {1.0, -2.0, 0.0, 4.0};
  k.exp_filter4(nu, decay, fixed);
  for (int i = 0; i < 4; ++i) CHECK(fixed[i] == nu[i]);
}

TEST_CASE("trapezoid accumulation adds the endpoint average") {
  const Backend& k = scalar_backend();
  const double f0[4] = {1.0, 2.0, 3.0, 4.0};
  const double f1[4] = {3.0, 2.0, 1.0, 0.0};
  double acc[4] = {10.0, 0.0, 0.0, -1.0};
  k.trapezoid4(0.005, f0, f1, acc);  // half_dt = dt/2 with dt = 0.01
  CHECK(acc[0] == doctest::Approx(10.0 + 0.005 * 4.0).epsilon(1e-15));
  CHECK(acc[1] == doctest::Approx(0.02).epsilon(1e-15));
  CHECK(acc[2] == doctest::Approx(0.02).epsilon(1e-15));
  CHECK(acc[3] == doctest::Approx(-1.0 + 0.02).epsilon(1e-15));
}

TEST_CASE("interval propagation keys on the held innovation sign") {
  const Backend& k = scalar_backend();
  const double base_up[4] = {0.1, 0.1, 0.1, 0.1};
  const double base_lo[4] = {-0.1, -0.1, -0.1, -0.1};
  const double acc_up[4] = {0.03, 0.03, 0.03, 0.03};
  const double acc_lo[4] = {0.01, 0.01, 0.01, 0.01};
  const double sign[4] = {-1.0, 1.0, 0.0, -1.0};
  double up[4], lo[4];
  k.bound_propagate4(sign, base_up, base_lo, acc_up, acc_lo, up, lo);
  // Negative innovation: interval drifts up by the rate-band integrals.
  CHECK(up[0] == doctest::Approx(0.13).epsilon(1e-15));
  CHECK(lo[0] == doctest::Approx(-0.09).epsilon(1e-15));
  // Positive innovation: drifts down, upper by the lower-rate integral.
  CHECK(up[1] == doctest::Approx(0.09).epsilon(1e-15));
  CHECK(lo[1] == doctest::Approx(-0.13).epsilon(1e-15));
  // Unresolved sign: held.
  CHECK(up[2] == 0.1);
  CHECK(lo[2] == -0.1);
  CHECK(up[3] == up[0]);
  CHECK(lo[3] == lo[0]);
}

TEST_CASE("interval combine clips against the fresh measurement") {
  const Backend& k = scalar_backend();
  const double ey[4] = {0.1, 0.0, 0.4, -0.2};
  const double zbar[4] = {0.15, 0.3, 0.03, 0.15};
  double up[4] = {kInf, kInf, kInf, kInf};
  double lo[4] = {-kInf, -kInf, -kInf, -kInf};
  k.bound_combine4(ey, zbar, up, lo);
  CHECK(up[0] == doctest::Approx(0.15).epsilon(1e-15));
  CHECK(lo[0] == doctest::Approx(-0.05).epsilon(1e-15));
  CHECK(up[1] == 0.3);
  CHECK(lo[1] == -0.3);
  // A large innovation empties the interval (lower above upper).
  CHECK(up[2] == doctest::Approx(0.03).epsilon(1e-15));
  CHECK(lo[2] == doctest::Approx(0.37).epsilon(1e-15));
  CHECK(lo[2] > up[2]);
  // Combining again with the same measurement is idempotent.
  double up2[4], lo2[4];
  std::memcpy(up2, up, sizeof up2);
  std::memcpy(lo2, lo, sizeof lo2);
  k.bound_combine4(ey, zbar, up2, lo2);
  CHECK(same_bits(up2, up, 4));
  CHECK(same_bits(lo2, lo, 4));
}

TEST_CASE("innovation assembly subtracts output and noise") {
  const Backend& k = scalar_backend();
  const double x2[4] = {1.0, 2.0, 3.0, 4.0};
  const double cx[4] = {0.5, 2.0, -1.0, 4.0};
  const double zeta[4] = {0.1, -0.1, 0.0, 0.2};
  double ey[4];
  k.sub3_4(x2, cx, zeta, ey);
  CHECK(ey[0] == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(ey[1] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(ey[2] == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(ey[3] == doctest::Approx(-0.2).epsilon(1e-15));
}

TEST_CASE("noise scaling maps the unit draw onto the bound box") {
  const Backend& k = scalar_backend();
  const double u01[4] = {0.0, 1.0, 0.5, 0.25};
  const double bar[4] = {0.15, 0.3, 0.03, 0.15};
  double out[4];
  k.noise_scale4(u01, bar, out);
  CHECK(out[0] == doctest::Approx(-0.15).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(out[2] == 0.0);
  CHECK(out[3] == doctest::Approx(-0.075).epsilon(1e-15));
}

TEST_CASE("stage and final combines match the textbook formulas") {
  const Backend& k = scalar_backend();
  const int n = 13;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::vector<double> x(n), k1(n), k2(n), k3(n), k4(n), out(n);
  for (int i = 0; i < n; ++i) {
    x[i] = u(rng);
    k1[i] = u(rng);
    k2[i] = u(rng);
    k3[i] = u(rng);
    k4[i] = u(rng);
  }
  k.stage_combine(n, x.data(), 0.5e-3, k1.data(), out.data());
  for (int i = 0; i < n; ++i) {
    CHECK(out[i] == x[i] + 0.5e-3 * k1[i]);
  }
  k.rk4_combine(n, x.data(), 1e-3, k1.data(), k2.data(), k3.data(), k4.data(),
                out.data());
  for (int i = 0; i < n; ++i) {
    const double expect = x[i] + (1e-3 / 6.0) * k1[i] + (1e-3 / 3.0) * k2[i] +
                          (1e-3 / 3.0) * k3[i] + (1e-3 / 6.0) * k4[i];
    CHECK(out[i] == expect);
  }
}

TEST_CASE("vector backend is bit-identical to the scalar reference") {
  const Backend* simd = simd_supported() ? compiled_simd_backend() : nullptr;
  if (simd == nullptr) {
    MESSAGE("no vector backend available on this host; skipping");
    return;
  }
  const Backend& ref = scalar_backend();
  std::mt19937_64 rng(0xc0ffee);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  std::uniform_int_distribution<int> pick(0, 9);
  const double specials[] = {0.0, -0.0, kInf, -kInf, kNan, 1e-308, -1e-308};

  auto fill = [&](double* v, int n) {
    for (int i = 0; i < n; ++i) {
      v[i] = (pick(rng) == 0) ? specials[rng() % 7] : u(rng);
    }
  };

  for (int trial = 0; trial < 4096; ++trial) {
    double a[4], b[4], c[4], out_r[4], out_s[4], io_r[4], io_s[4];
    fill(a, 4);
    fill(b, 4);
    fill(c, 4);
    fill(io_r, 4);
    std::memcpy(io_s, io_r, sizeof io_s);

    ref.sign_switch4(a, b, out_r);
    simd->sign_switch4(a, b, out_s);
    CHECK(same_bits(out_r, out_s, 4));

    ref.exp_filter4(a, b, io_r);
    simd->exp_filter4(a, b, io_s);
    CHECK(same_bits(io_r, io_s, 4));

    std::memcpy(io_s, io_r, sizeof io_s);
    ref.trapezoid4(0.0005, a, b, io_r);
    simd->trapezoid4(0.0005, a, b, io_s);
    CHECK(same_bits(io_r, io_s, 4));

    double sign[4];
    for (int i = 0; i < 4; ++i) {
      sign[i] = static_cast<double>(static_cast<int>(rng() % 3) - 1);
    }
    double up_r[4], lo_r[4], up_s[4], lo_s[4];
    ref.bound_propagate4(sign, a, b, c, io_r, up_r, lo_r);
    simd->bound_propagate4(sign, a, b, c, io_r, up_s, lo_s);
    CHECK(same_bits(up_r, up_s, 4));
    CHECK(same_bits(lo_r, lo_s, 4));

    std::memcpy(up_s, up_r, sizeof up_s);
    std::memcpy(lo_s, lo_r, sizeof lo_s);
    ref.bound_combine4(a, b, up_r, lo_r);
    simd->bound_combine4(a, b, up_s, lo_s);
    CHECK(same_bits(up_r, up_s, 4));
    CHECK(same_bits(lo_r, lo_s, 4));

    ref.sub3_4(a, b, c, out_r);
    simd->sub3_4(a, b, c, out_s);
    CHECK(same_bits(out_r, out_s, 4));

    ref.noise_scale4(a, b, out_r);
    simd->noise_scale4(a, b, out_s);
    CHECK(same_bits(out_r, out_s, 4));

    for (int n : {4, 8, 13}) {
      std::vector<double> x(n), k1(n), k2(n), k3(n), k4(n), o_r(n), o_s(n);
      fill(x.data(), n);
      fill(k1.data(), n);
      fill(k2.data(), n);
      fill(k3.data(), n);
      fill(k4.data(), n);
      ref.stage_combine(n, x.data(), 5e-4, k1.data(), o_r.data());
      simd->stage_combine(n, x.data(), 5e-4, k1.data(), o_s.data());
      CHECK(same_bits(o_r.data(), o_s.data(), n));
      ref.rk4_combine(n, x.data(), 1e-3, k1.data(), k2.data(), k3.data(),
                      k4.data(), o_r.data());
      simd->rk4_combine(n, x.data(), 1e-3, k1.data(), k2.data(), k3.data(),
                        k4.data(), o_s.data());
      CHECK(same_bits(o_r.data(), o_s.data(), n));
    }
  }
}
