// AVX2 variants of the per-step kernels. Compiled with -mavx2 in this
// translation unit only; runtime dispatch (kernels.cpp) checks CPU support
// before handing these out. Each lane performs exactly the operation chain of
// the scalar reference — adds/subs/muls in the same order, MINPD/MAXPD for the
// (a<b)?a:b selections, and pure bit-blends where the reference copies a value
// through unchanged — so results are bit-identical to the scalar backend.
#include "icguard/kernels.hpp"

#if defined(ICGUARD_HAVE_AVX2)

#include <immintrin.h>

#include <cstdlib>
#include <cstring>

namespace icguard::kern {

namespace {

const __m256d kZero = _mm256_setzero_pd();

__m256d negate(__m256d v) {
  return _mm256_xor_pd(v, _mm256_set1_pd(-0.0));
}

void a_sign_switch4(const double* ey, const double* m, double* nu) {
  const __m256d e = _mm256_loadu_pd(ey);
  const __m256d mm = _mm256_loadu_pd(m);
  const __m256d pos = _mm256_cmp_pd(e, kZero, _CMP_GT_OQ);
  const __m256d neg = _mm256_cmp_pd(e, kZero, _CMP_LT_OQ);
  __m256d out = _mm256_blendv_pd(kZero, negate(mm), pos);
  out = _mm256_blendv_pd(out, mm, neg);
  _mm256_storeu_pd(nu, out);
}

void a_exp_filter4(const double* nu, const double* decay, double* nufil) {
  const __m256d n = _mm256_loadu_pd(nu);
  const __m256d d = _mm256_loadu_pd(decay);
  const __m256d f = _mm256_loadu_pd(nufil);
  const __m256d out =
      _mm256_add_pd(n, _mm256_mul_pd(_mm256_sub_pd(f, n), d));
  _mm256_storeu_pd(nufil, out);
}

void a_trapezoid4(double half_dt, const double* f0, const double* f1,
                  double* acc) {
  const __m256d h = _mm256_set1_pd(half_dt);
  const __m256d s = _mm256_add_pd(_mm256_loadu_pd(f0), _mm256_loadu_pd(f1));
  const __m256d out =
      _mm256_add_pd(_mm256_loadu_pd(acc), _mm256_mul_pd(h, s));
  _mm256_storeu_pd(acc, out);
}

void a_bound_propagate4(const double* sign, const double* base_up,
                        const double* base_lo, const double* int_up,
                        const double* int_lo, double* up, double* lo) {
  const __m256d s = _mm256_loadu_pd(sign);
  const __m256d bu = _mm256_loadu_pd(base_up);
  const __m256d bl = _mm256_loadu_pd(base_lo);
  const __m256d iu = _mm256_loadu_pd(int_up);
  const __m256d il = _mm256_loadu_pd(int_lo);
  const __m256d neg = _mm256_cmp_pd(s, kZero, _CMP_LT_OQ);
  const __m256d pos = _mm256_cmp_pd(s, kZero, _CMP_GT_OQ);
  __m256d u = _mm256_blendv_pd(bu, _mm256_add_pd(bu, iu), neg);
  u = _mm256_blendv_pd(u, _mm256_sub_pd(bu, il), pos);
  __m256d l = _mm256_blendv_pd(bl, _mm256_add_pd(bl, il), neg);
  l = _mm256_blendv_pd(l, _mm256_sub_pd(bl, iu), pos);
  _mm256_storeu_pd(up, u);
  _mm256_storeu_pd(lo, l);
}

void a_bound_combine4(const double* ey, const double* zbar, double* up,
                      double* lo) {
  const __m256d e = _mm256_loadu_pd(ey);
  const __m256d z = _mm256_loadu_pd(zbar);
  __m256d u = _mm256_loadu_pd(up);
  __m256d l = _mm256_loadu_pd(lo);
  u = _mm256_min_pd(_mm256_min_pd(u, _mm256_add_pd(e, z)), z);
  l = _mm256_max_pd(_mm256_max_pd(l, _mm256_sub_pd(e, z)), negate(z));
  _mm256_storeu_pd(up, u);
  _mm256_storeu_pd(lo, l);
}

void a_sub3_4(const double* x2hat, const double* cx, const double* zeta,
              double* ey) {
  const __m256d out = _mm256_sub_pd(
      _mm256_sub_pd(_mm256_loadu_pd(x2hat), _mm256_loadu_pd(cx)),
      _mm256_loadu_pd(zeta));
  _mm256_storeu_pd(ey, out);
}

void a_noise_scale4(const double* u01, const double* bar, double* out) {
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d u = _mm256_loadu_pd(u01);
  const __m256d b = _mm256_loadu_pd(bar);
  const __m256d r =
      _mm256_mul_pd(_mm256_sub_pd(_mm256_mul_pd(two, u), one), b);
  _mm256_storeu_pd(out, r);
}

void a_stage_combine(std::size_t n, const double* x, double h, const double* k,
                     double* out) {
  const __m256d hv = _mm256_set1_pd(h);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_add_pd(
        _mm256_loadu_pd(x + i), _mm256_mul_pd(hv, _mm256_loadu_pd(k + i)));
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < n; ++i) {
    out[i] = x[i] + h * k[i];
  }
}

void a_rk4_combine(std::size_t n, const double* x, double dt, const double* k1,
                   const double* k2, const double* k3, const double* k4,
                   double* out) {
  const double c1 = dt / 6.0;
  const double c2 = dt / 3.0;
  const __m256d c1v = _mm256_set1_pd(c1);
  const __m256d c2v = _mm256_set1_pd(c2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_add_pd(_mm256_loadu_pd(x + i),
                              _mm256_mul_pd(c1v, _mm256_loadu_pd(k1 + i)));
    r = _mm256_add_pd(r, _mm256_mul_pd(c2v, _mm256_loadu_pd(k2 + i)));
    r = _mm256_add_pd(r, _mm256_mul_pd(c2v, _mm256_loadu_pd(k3 + i)));
    r = _mm256_add_pd(r, _mm256_mul_pd(c1v, _mm256_loadu_pd(k4 + i)));
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < n; ++i) {
    out[i] = x[i] + c1 * k1[i] + c2 * k2[i] + c2 * k3[i] + c1 * k4[i];
  }
}

const Backend kAvx2 = {
    "avx2",          a_sign_switch4, a_exp_filter4, a_trapezoid4,
    a_bound_propagate4, a_bound_combine4, a_sub3_4,  a_noise_scale4,
    a_stage_combine, a_rk4_combine,
};

}  // namespace

const Backend* compiled_simd_backend() { return &kAvx2; }

bool simd_supported() {
  const char* force = std::getenv("ICGUARD_SIMD");
  if (force != nullptr && std::strcmp(force, "neon") == 0) {
    return false;
  }
  return __builtin_cpu_supports("avx2") != 0;
}

}  // namespace icguard::kern

#endif  // ICGUARD_HAVE_AVX2
