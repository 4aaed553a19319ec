#include <immintrin.h>

#include "puzzlemeasure/kernels/kernels.hpp"

namespace puzzlemeasure::kernels {

namespace {

void escape_tail(const double* re, const double* im, std::size_t n, int degree, double c_re, double c_im, double r2,
                 int max_iter, int* iters, double* z_re, double* z_im) {
  scalar_table().escape(re, im, n, degree, c_re, c_im, r2, max_iter, iters, z_re, z_im);
}

void escape(const double* re, const double* im, std::size_t n, int degree, double c_re, double c_im, double r2,
            int max_iter, int* iters, double* z_re, double* z_im) {
  const __m256d vcr = _mm256_set1_pd(c_re);
  const __m256d vci = _mm256_set1_pd(c_im);
  const __m256d vr2 = _mm256_set1_pd(r2);
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d x = _mm256_loadu_pd(re + i);
    __m256d y = _mm256_loadu_pd(im + i);
    __m256d count = _mm256_setzero_pd();
    for (int k = 0; k < max_iter; ++k) {
      const __m256d m2 = _mm256_add_pd(_mm256_mul_pd(x, x), _mm256_mul_pd(y, y));
      const __m256d live = _mm256_cmp_pd(m2, vr2, _CMP_LE_OQ);
      if (_mm256_movemask_pd(live) == 0) break;
      __m256d px = x;
      __m256d py = y;
      for (int j = 1; j < degree; ++j) {
        const __m256d t = _mm256_sub_pd(_mm256_mul_pd(px, x), _mm256_mul_pd(py, y));
        py = _mm256_add_pd(_mm256_mul_pd(px, y), _mm256_mul_pd(py, x));
        px = t;
      }
      x = _mm256_blendv_pd(x, _mm256_add_pd(px, vcr), live);
      y = _mm256_blendv_pd(y, _mm256_add_pd(py, vci), live);
      count = _mm256_add_pd(count, _mm256_and_pd(live, one));
    }
    alignas(32) double cnt[4];
    _mm256_store_pd(cnt, count);
    for (int q = 0; q < 4; ++q) iters[i + q] = static_cast<int>(cnt[q]);
    _mm256_storeu_pd(z_re + i, x);
    _mm256_storeu_pd(z_im + i, y);
  }
  if (i < n) escape_tail(re + i, im + i, n - i, degree, c_re, c_im, r2, max_iter, iters + i, z_re + i, z_im + i);
}

inline double reduce(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);  // (s0 + s2, s1 + s3)
  return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  alignas(32) double s[4];
  _mm256_store_pd(s, acc);
  for (int k = 0; i < n; ++i, ++k) s[k] += x[i] * y[i];
  return reduce(_mm256_load_pd(s));
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, _mm256_loadu_pd(x + i))));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void xpay(const double* x, double a, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_mul_pd(va, _mm256_loadu_pd(y + i))));
  }
  for (; i < n; ++i) y[i] = x[i] + a * y[i];
}

void stencil5(const double* x, const double* mask, double* y, std::size_t nx, std::size_t ny) {
  for (std::size_t i = 0; i < nx; ++i) {
    y[i] = 0.0;
    y[(ny - 1) * nx + i] = 0.0;
  }
  const __m256d four = _mm256_set1_pd(4.0);
  for (std::size_t j = 1; j + 1 < ny; ++j) {
    const std::size_t row = j * nx;
    y[row] = 0.0;
    y[row + nx - 1] = 0.0;
    std::size_t i = 1;
    for (; i + 4 < nx; i += 4) {
      const std::size_t p = row + i;
      __m256d lap = _mm256_sub_pd(_mm256_mul_pd(four, _mm256_loadu_pd(x + p)), _mm256_loadu_pd(x + p - 1));
      lap = _mm256_sub_pd(lap, _mm256_loadu_pd(x + p + 1));
      lap = _mm256_sub_pd(lap, _mm256_loadu_pd(x + p - nx));
      lap = _mm256_sub_pd(lap, _mm256_loadu_pd(x + p + nx));
      _mm256_storeu_pd(y + p, _mm256_mul_pd(_mm256_loadu_pd(mask + p), lap));
    }
    for (; i + 1 < nx; ++i) {
      const std::size_t p = row + i;
      const double lap = ((4.0 * x[p] - x[p - 1]) - x[p + 1]) - x[p - nx] - x[p + nx];
      y[p] = mask[p] * lap;
    }
  }
}

void csr_spmv(std::size_t rows, const std::uint32_t* row_ptr, const std::uint32_t* col, const double* val,
              const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    __m256d acc = _mm256_setzero_pd();
    std::uint32_t k = row_ptr[r];
    const std::uint32_t end = row_ptr[r + 1];
    for (; k + 4 <= end; k += 4) {
      const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(col + k));
      const __m256d xv = _mm256_i32gather_pd(x, idx, 8);
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(val + k), xv));
    }
    alignas(32) double s[4];
    _mm256_store_pd(s, acc);
    for (int q = 0; k < end; ++k, ++q) s[q] += val[k] * x[col[k]];
    y[r] = reduce(_mm256_load_pd(s));
  }
}

}  // namespace

const Table* avx2_table() {
  static const Table t{Isa::kAvx2, escape, dot, axpy, xpay, stencil5, csr_spmv};
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok ? &t : nullptr;
}

}  // namespace puzzlemeasure::kernels
