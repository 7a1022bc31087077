// AVX2/FMA kernels. Compiled with -mavx2 -mfma; only reached after the
// dispatcher has confirmed CPU support. Results match the scalar reference up
// to summation order and FMA contraction.

#include <immintrin.h>

#include <algorithm>
#include <limits>

#include "kernels_internal.hpp"

namespace obstacle::kernels::detail {
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
  return _mm_cvtsd_f64(_mm_max_sd(m, _mm_unpackhi_pd(m, m)));
}

double dot_avx2(const double *x, const double *y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i)
    s += x[i] * y[i];
  return s;
}

void axpy_avx2(double a, const double *x, double *y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i)
    y[i] += a * x[i];
}

void spmv_avx2(long rows, const int *row_ptr, const int *col_idx, const double *values,
               const double *x, double *y) {
  for (long r = 0; r < rows; ++r) {
    int k = row_ptr[r];
    const int end = row_ptr[r + 1];
    __m256d acc = _mm256_setzero_pd();
    for (; k + 4 <= end; k += 4) {
      const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i *>(col_idx + k));
      const __m256d xv = _mm256_i32gather_pd(x, idx, 8);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(values + k), xv, acc);
    }
    double s = hsum(acc);
    for (; k < end; ++k)
      s += values[k] * x[col_idx[k]];
    y[r] = s;
  }
}

void projected_step_upper_avx2(double *w, const double *grad, double step, const double *upper,
                               std::size_t n) {
  const __m256d vs = _mm256_set1_pd(step);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d t = _mm256_fnmadd_pd(vs, _mm256_loadu_pd(grad + i), _mm256_loadu_pd(w + i));
    _mm256_storeu_pd(w + i, _mm256_min_pd(t, _mm256_loadu_pd(upper + i)));
  }
  for (; i < n; ++i)
    w[i] = std::min(w[i] - step * grad[i], upper[i]);
}

void projected_step_nonneg_avx2(double *lambda, const double *grad, double step, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(step);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d t =
        _mm256_fnmadd_pd(vs, _mm256_loadu_pd(grad + i), _mm256_loadu_pd(lambda + i));
    _mm256_storeu_pd(lambda + i, _mm256_max_pd(t, zero));
  }
  for (; i < n; ++i)
    lambda[i] = std::max(lambda[i] - step * grad[i], 0.0);
}

double max_excess_avx2(const double *x, const double *bound, std::size_t n) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  __m256d acc = _mm256_set1_pd(kNegInf);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_max_pd(acc, _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(bound + i)));
  double m = hmax(acc);
  for (; i < n; ++i)
    m = std::max(m, x[i] - bound[i]);
  return m;
}

constexpr KernelTable kAvx2{dot_avx2,
                            axpy_avx2,
                            spmv_avx2,
                            projected_step_upper_avx2,
                            projected_step_nonneg_avx2,
                            max_excess_avx2};

} // namespace

const KernelTable &avx2_table() noexcept { return kAvx2; }

} // namespace obstacle::kernels::detail
