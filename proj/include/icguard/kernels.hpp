#pragma once

#include <cstddef>

namespace icguard::kern {

// Elementwise kernels for the per-step hot path: 4-channel detector/observer
// blocks and short integrator state vectors. A scalar reference implementation
// is always available; AVX2 (x86-64) and NEON (aarch64) variants are selected
// at runtime and are bit-identical to the reference by construction — every
// op is a fixed-order chain of IEEE add/sub/mul/min/max per element, no FMA,
// no reassociation (the project builds with -ffp-contract=off), and min/max
// use the asymmetric (a<b)?a:b / (a>b)?a:b semantics of the vector
// instructions in both paths.
struct Backend {
  const char* name;

  // nu = -m * sgn(ey), with sgn(0) = 0.
  void (*sign_switch4)(const double* ey, const double* m, double* nu);

  // One-pole low-pass with precomputed per-channel decay = exp(-k*dt):
  // nufil <- nu + (nufil - nu) * decay.
  void (*exp_filter4)(const double* nu, const double* decay, double* nufil);

  // Trapezoid accumulation: acc += half_dt * (f0 + f1).
  void (*trapezoid4)(double half_dt, const double* f0, const double* f1,
                     double* acc);

  // Interval-bound propagation keyed on the held measurement-error sign:
  //   sign < 0: up = base_up + int_up,  lo = base_lo + int_lo
  //   sign > 0: up = base_up - int_lo,  lo = base_lo - int_up
  //   sign == 0: bounds held at base.
  void (*bound_propagate4)(const double* sign, const double* base_up,
                           const double* base_lo, const double* int_up,
                           const double* int_lo, double* up, double* lo);

  // Measurement-time combine:
  //   up <- min(up, ey + zbar, zbar);  lo <- max(lo, ey - zbar, -zbar).
  void (*bound_combine4)(const double* ey, const double* zbar, double* up,
                         double* lo);

  // ey = x2hat - cx - zeta.
  void (*sub3_4)(const double* x2hat, const double* cx, const double* zeta,
                 double* ey);

  // out = (2u - 1) * bar, u in [0,1).
  void (*noise_scale4)(const double* u01, const double* bar, double* out);

  // out[i] = x[i] + h * k[i], i < n.
  void (*stage_combine)(std::size_t n, const double* x, double h,
                        const double* k, double* out);

  // out[i] = x[i] + (dt/6)*k1[i] + (dt/3)*k2[i] + (dt/3)*k3[i] + (dt/6)*k4[i].
  void (*rk4_combine)(std::size_t n, const double* x, double dt,
                      const double* k1, const double* k2, const double* k3,
                      const double* k4, double* out);
};

// The scalar reference backend (always valid).
const Backend& scalar_backend();

// Best backend supported by the executing CPU. The ICGUARD_SIMD environment
// variable overrides selection: "scalar" forces the reference path, "avx2" /
// "neon" request the corresponding variant (falling back to scalar, with a
// note on stderr, if unsupported).
const Backend& active_backend();

// SIMD variant compiled into this binary, or nullptr. Exposed for the
// equivalence tests; may be unsupported by the executing CPU.
const Backend* compiled_simd_backend();

// True if the executing CPU can run compiled_simd_backend().
bool simd_supported();

}  // namespace icguard::kern
