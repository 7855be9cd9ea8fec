// Compiled with -mavx2 (and without -mfma). Only reached after a runtime
// CPU check in dispatch.cpp.

#include "ofo/kernels.hpp"

#include <immintrin.h>

namespace ofo::kernels::detail {
namespace {

constexpr std::size_t kLanes = 4;

inline __m256d clip4(__m256d x, __m256d lo, __m256d hi) { return _mm256_min_pd(_mm256_max_pd(x, lo), hi); }

void projected_step_avx2(double* u, const double* g, double step, const double* lo, const double* hi,
                         std::size_t n) {
  const __m256d s = _mm256_set1_pd(step);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    __m256d x = _mm256_sub_pd(_mm256_loadu_pd(u + i), _mm256_mul_pd(s, _mm256_loadu_pd(g + i)));
    _mm256_storeu_pd(u + i, clip4(x, _mm256_loadu_pd(lo + i), _mm256_loadu_pd(hi + i)));
  }
  for (; i < n; ++i) u[i] = projected(u[i], g[i], step, lo[i], hi[i]);
}

void projected_step_diff_avx2(double* u, const double* a, const double* b, double step, const double* lo,
                              const double* hi, std::size_t n) {
  const __m256d s = _mm256_set1_pd(step);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    __m256d g = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    __m256d x = _mm256_sub_pd(_mm256_loadu_pd(u + i), _mm256_mul_pd(s, g));
    _mm256_storeu_pd(u + i, clip4(x, _mm256_loadu_pd(lo + i), _mm256_loadu_pd(hi + i)));
  }
  for (; i < n; ++i) u[i] = projected(u[i], a[i] - b[i], step, lo[i], hi[i]);
}

void dual_ascent_avx2(double* lambda, double* mu, const double* v, double v_min, double v_max, double step,
                      double reg, std::size_t n) {
  const __m256d s = _mm256_set1_pd(step);
  const __m256d r = _mm256_set1_pd(reg);
  const __m256d vlo = _mm256_set1_pd(v_min);
  const __m256d vhi = _mm256_set1_pd(v_max);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d vv = _mm256_loadu_pd(v + i);
    const __m256d l = _mm256_loadu_pd(lambda + i);
    const __m256d m = _mm256_loadu_pd(mu + i);
    __m256d dl = _mm256_sub_pd(_mm256_sub_pd(vv, vhi), _mm256_mul_pd(r, l));
    __m256d dm = _mm256_sub_pd(_mm256_sub_pd(vlo, vv), _mm256_mul_pd(r, m));
    _mm256_storeu_pd(lambda + i, _mm256_max_pd(_mm256_add_pd(l, _mm256_mul_pd(s, dl)), zero));
    _mm256_storeu_pd(mu + i, _mm256_max_pd(_mm256_add_pd(m, _mm256_mul_pd(s, dm)), zero));
  }
  for (; i < n; ++i) {
    lambda[i] = dual_upper(lambda[i], v[i], v_max, step, reg);
    mu[i] = dual_lower(mu[i], v[i], v_min, step, reg);
  }
}

void blend_avx2(double* out, const double* a, const double* b, double t, std::size_t n) {
  const __m256d tt = _mm256_set1_pd(t);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d va = _mm256_loadu_pd(a + i);
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(b + i), va);
    _mm256_storeu_pd(out + i, _mm256_add_pd(va, _mm256_mul_pd(tt, d)));
  }
  for (; i < n; ++i) out[i] = detail::blend(a[i], b[i], t);
}

void extrapolate_avx2(double* out, const double* base, const double* probe, double eps, std::size_t n) {
  const __m256d e = _mm256_set1_pd(eps);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d vb = _mm256_loadu_pd(base + i);
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(probe + i), vb);
    _mm256_storeu_pd(out + i, _mm256_add_pd(vb, _mm256_div_pd(d, e)));
  }
  for (; i < n; ++i) out[i] = detail::extrapolate(base[i], probe[i], eps);
}

void accumulate_violation_avx2(double* acc, const double* v, double v_min, double v_max, std::size_t n) {
  const __m256d vlo = _mm256_set1_pd(v_min);
  const __m256d vhi = _mm256_set1_pd(v_max);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d vv = _mm256_loadu_pd(v + i);
    const __m256d over = _mm256_max_pd(_mm256_sub_pd(vv, vhi), zero);
    const __m256d under = _mm256_max_pd(_mm256_sub_pd(vlo, vv), zero);
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), _mm256_add_pd(over, under)));
  }
  for (; i < n; ++i) acc[i] += violation(v[i], v_min, v_max);
}

void gemv_avx2(const double* a, std::size_t n, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = a + i * n;
    __m256d s0 = _mm256_setzero_pd();
    __m256d s1 = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 2 * kLanes <= n; j += 2 * kLanes) {
      s0 = _mm256_add_pd(s0, _mm256_mul_pd(_mm256_loadu_pd(row + j), _mm256_loadu_pd(x + j)));
      s1 = _mm256_add_pd(s1, _mm256_mul_pd(_mm256_loadu_pd(row + j + kLanes), _mm256_loadu_pd(x + j + kLanes)));
    }
    for (; j + kLanes <= n; j += kLanes)
      s0 = _mm256_add_pd(s0, _mm256_mul_pd(_mm256_loadu_pd(row + j), _mm256_loadu_pd(x + j)));
    __m256d s = _mm256_add_pd(s0, s1);
    __m128d h = _mm_add_pd(_mm256_castpd256_pd128(s), _mm256_extractf128_pd(s, 1));
    double acc = _mm_cvtsd_f64(_mm_add_sd(h, _mm_unpackhi_pd(h, h)));
    for (; j < n; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
}

}  // namespace

const Table* avx2_table() {
  static const Table table{projected_step_avx2, projected_step_diff_avx2, dual_ascent_avx2, blend_avx2,
                           extrapolate_avx2,    accumulate_violation_avx2, gemv_avx2};
  return &table;
}

}  // namespace ofo::kernels::detail
