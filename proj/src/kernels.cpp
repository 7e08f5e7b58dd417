#include "icguard/kernels.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace icguard::kern {

namespace {

// Asymmetric min/max matching the MINPD/MAXPD and FMIN/FMAX-free NEON
// sequences used by the SIMD variants.
inline double vmin(double a, double b) { return (a < b) ? a : b; }
inline double vmax(double a, double b) { return (a > b) ? a : b; }

void s_sign_switch4(const double* ey, const double* m, double* nu) {
  for (int i = 0; i < 4; ++i) {
    nu[i] = (ey[i] > 0.0) ? -m[i] : ((ey[i] < 0.0) ? m[i] : 0.0);
  }
}

void s_exp_filter4(const double* nu, const double* decay, double* nufil) {
  for (int i = 0; i < 4; ++i) {
    nufil[i] = nu[i] + (nufil[i] - nu[i]) * decay[i];
  }
}

void s_trapezoid4(double half_dt, const double* f0, const double* f1,
                  double* acc) {
  for (int i = 0; i < 4; ++i) {
    acc[i] = acc[i] + half_dt * (f0[i] + f1[i]);
  }
}

void s_bound_propagate4(const double* sign, const double* base_up,
                        const double* base_lo, const double* int_up,
                        const double* int_lo, double* up, double* lo) {
  for (int i = 0; i < 4; ++i) {
    if (sign[i] < 0.0) {
      up[i] = base_up[i] + int_up[i];
      lo[i] = base_lo[i] + int_lo[i];
    } else if (sign[i] > 0.0) {
      up[i] = base_up[i] - int_lo[i];
      lo[i] = base_lo[i] - int_up[i];
    } else {
      up[i] = base_up[i];
      lo[i] = base_lo[i];
    }
  }
}

void s_bound_combine4(const double* ey, const double* zbar, double* up,
                      double* lo) {
  for (int i = 0; i < 4; ++i) {
    up[i] = vmin(vmin(up[i], ey[i] + zbar[i]), zbar[i]);
    lo[i] = vmax(vmax(lo[i], ey[i] - zbar[i]), -zbar[i]);
  }
}

void s_sub3_4(const double* x2hat, const double* cx, const double* zeta,
              double* ey) {
  for (int i = 0; i < 4; ++i) {
    ey[i] = x2hat[i] - cx[i] - zeta[i];
  }
}

void s_noise_scale4(const double* u01, const double* bar, double* out) {
  for (int i = 0; i < 4; ++i) {
    out[i] = (2.0 * u01[i] - 1.0) * bar[i];
  }
}

void s_stage_combine(std::size_t n, const double* x, double h, const double* k,
                     double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = x[i] + h * k[i];
  }
}

void s_rk4_combine(std::size_t n, const double* x, double dt, const double* k1,
                   const double* k2, const double* k3, const double* k4,
                   double* out) {
  const double c1 = dt / 6.0;
  const double c2 = dt / 3.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = x[i] + c1 * k1[i] + c2 * k2[i] + c2 * k3[i] + c1 * k4[i];
  }
}

const Backend kScalar = {
    "scalar",        s_sign_switch4, s_exp_filter4, s_trapezoid4,
    s_bound_propagate4, s_bound_combine4, s_sub3_4,  s_noise_scale4,
    s_stage_combine, s_rk4_combine,
};

const Backend* select() {
  const char* force = std::getenv("ICGUARD_SIMD");
  if (force != nullptr && std::strcmp(force, "scalar") == 0) {
    return &kScalar;
  }
  const Backend* simd = compiled_simd_backend();
  if (simd != nullptr && simd_supported()) {
    return simd;
  }
  if (force != nullptr) {
    std::fprintf(stderr,
                 "icguard: requested SIMD backend '%s' unavailable; "
                 "using scalar kernels\n",
                 force);
  }
  return &kScalar;
}

}  // namespace

const Backend& scalar_backend() { return kScalar; }

const Backend& active_backend() {
  static const Backend* chosen = select();
  return *chosen;
}

#if !defined(ICGUARD_HAVE_AVX2) && !defined(ICGUARD_HAVE_NEON)
const Backend* compiled_simd_backend() { return nullptr; }
bool simd_supported() { return false; }
#endif

}  // namespace icguard::kern
