// Compiled with -mavx2 only (no FMA) so that the row/column applications
// reproduce the scalar reference bit for bit.

#include <immintrin.h>

#include <cmath>

#include "kernels_impl.hpp"

namespace thermolab::simd::avx2 {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double hmax(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_max_pd(lo, hi);
  return std::fmax(_mm_cvtsd_f64(m), _mm_cvtsd_f64(_mm_unpackhi_pd(m, m)));
}

inline __m256d abs_pd(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

void apply_rows_binary(std::size_t rows, const double* coef, const double* phi, double* out) {
  const std::size_t stride = rows / 2;
  const double* c0 = coef;
  const double* c1 = coef + rows;
  const double* p0 = phi;
  const double* p1 = phi + stride;
  std::size_t w = 0;
  for (; w + 4 <= rows; w += 4) {
    const std::size_t t = w / 2;
    const __m256d x0 = _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(p0 + t)), 0x50);
    const __m256d x1 = _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(p1 + t)), 0x50);
    __m256d acc = _mm256_mul_pd(_mm256_loadu_pd(c0 + w), x0);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(c1 + w), x1));
    _mm256_storeu_pd(out + w, acc);
  }
  for (; w < rows; ++w) {
    const std::size_t t = w / 2;
    double acc = c0[w] * p0[t];
    acc += c1[w] * p1[t];
    out[w] = acc;
  }
}

void apply_cols_binary(std::size_t rows, const double* coef, const double* mass, double* out) {
  const std::size_t stride = rows / 2;
  for (std::size_t a = 0; a < 2; ++a) {
    const double* c = coef + a * rows;
    double* o = out + a * stride;
    std::size_t j = 0;
    for (; j + 4 <= stride; j += 4) {
      const std::size_t base = 2 * j;
      const __m256d lo = _mm256_mul_pd(_mm256_loadu_pd(mass + base), _mm256_loadu_pd(c + base));
      const __m256d hi =
          _mm256_mul_pd(_mm256_loadu_pd(mass + base + 4), _mm256_loadu_pd(c + base + 4));
      // (lo0+lo1, hi0+hi1, lo2+lo3, hi2+hi3) -> (lo01, lo23, hi01, hi23)
      const __m256d pairs = _mm256_hadd_pd(lo, hi);
      _mm256_storeu_pd(o + j, _mm256_permute4x64_pd(pairs, 0xD8));
    }
    for (; j < stride; ++j) {
      const std::size_t base = 2 * j;
      double acc = mass[base] * c[base];
      acc += mass[base + 1] * c[base + 1];
      o[j] = acc;
    }
  }
}

}  // namespace

void apply_rows(std::size_t k, std::size_t rows, const double* coef, const double* phi,
                double* out) {
  if (k == 2) {
    apply_rows_binary(rows, coef, phi, out);
    return;
  }
  const std::size_t stride = rows / k;
  std::size_t w = 0;
  for (; w + 4 <= rows; w += 4) {
    // tails w/k for four consecutive rows; k >= 3 here so at most two distinct values
    alignas(32) long long tails[4] = {
        static_cast<long long>(w / k), static_cast<long long>((w + 1) / k),
        static_cast<long long>((w + 2) / k), static_cast<long long>((w + 3) / k)};
    __m256i idx = _mm256_load_si256(reinterpret_cast<const __m256i*>(tails));
    __m256d acc = _mm256_mul_pd(_mm256_loadu_pd(coef + w), _mm256_i64gather_pd(phi, idx, 8));
    for (std::size_t a = 1; a < k; ++a) {
      const __m256i shifted =
          _mm256_add_epi64(idx, _mm256_set1_epi64x(static_cast<long long>(a * stride)));
      const __m256d x = _mm256_i64gather_pd(phi, shifted, 8);
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(coef + a * rows + w), x));
    }
    _mm256_storeu_pd(out + w, acc);
  }
  for (; w < rows; ++w) {
    const std::size_t tail = w / k;
    double acc = coef[w] * phi[tail];
    for (std::size_t a = 1; a < k; ++a) acc += coef[a * rows + w] * phi[a * stride + tail];
    out[w] = acc;
  }
}

void apply_cols(std::size_t k, std::size_t rows, const double* coef, const double* mass,
                double* out) {
  if (k == 2) {
    apply_cols_binary(rows, coef, mass, out);
    return;
  }
  const std::size_t stride = rows / k;
  const long long kl = static_cast<long long>(k);
  for (std::size_t a = 0; a < k; ++a) {
    const double* c = coef + a * rows;
    std::size_t j = 0;
    for (; j + 4 <= stride; j += 4) {
      const long long b = static_cast<long long>(j) * kl;
      const __m256i base = _mm256_set_epi64x(b + 3 * kl, b + 2 * kl, b + kl, b);
      __m256d acc = _mm256_mul_pd(_mm256_i64gather_pd(mass, base, 8),
                                  _mm256_i64gather_pd(c, base, 8));
      for (std::size_t r = 1; r < k; ++r) {
        const __m256i idx = _mm256_add_epi64(base, _mm256_set1_epi64x(static_cast<long long>(r)));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_i64gather_pd(mass, idx, 8),
                                               _mm256_i64gather_pd(c, idx, 8)));
      }
      _mm256_storeu_pd(out + a * stride + j, acc);
    }
    for (; j < stride; ++j) {
      const std::size_t base = j * k;
      double acc = mass[base] * c[base];
      for (std::size_t r = 1; r < k; ++r) acc += mass[base + r] * c[base + r];
      out[a * stride + j] = acc;
    }
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    acc1 = _mm256_add_pd(acc1,
                         _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum(const double* a, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(a + i + 4));
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i];
  return acc;
}

double max_abs(const double* a, std::size_t n) {
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) m = _mm256_max_pd(m, abs_pd(_mm256_loadu_pd(a + i)));
  double r = hmax(m);
  for (; i < n; ++i) r = std::fmax(r, std::fabs(a[i]));
  return r;
}

double max_abs_residual(const double* a, const double* b, double s, std::size_t n) {
  const __m256d sv = _mm256_set1_pd(s);
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d =
        _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_mul_pd(sv, _mm256_loadu_pd(b + i)));
    m = _mm256_max_pd(m, abs_pd(d));
  }
  double r = hmax(m);
  for (; i < n; ++i) r = std::fmax(r, std::fabs(a[i] - s * b[i]));
  return r;
}

double l1_residual(const double* a, const double* b, double s, std::size_t n) {
  const __m256d sv = _mm256_set1_pd(s);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d =
        _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_mul_pd(sv, _mm256_loadu_pd(b + i)));
    acc = _mm256_add_pd(acc, abs_pd(d));
  }
  double r = hsum(acc);
  for (; i < n; ++i) r += std::fabs(a[i] - s * b[i]);
  return r;
}

void scale(double* a, double s, std::size_t n) {
  const __m256d sv = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(a + i, _mm256_mul_pd(sv, _mm256_loadu_pd(a + i)));
  for (; i < n; ++i) a[i] *= s;
}

}  // namespace thermolab::simd::avx2
