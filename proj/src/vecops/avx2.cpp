// Compiled with -mavx2 -mfma; only reached after a cpuid check.
#include "mcid/vecops.hpp"

#include <immintrin.h>

namespace mcid::vecops::detail {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
        acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
        acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double s = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void residual_gemv_avx2(const double* a, std::size_t rows, std::size_t cols, const double* v,
                        const double* offset, double* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double base = offset != nullptr ? offset[r] : 0.0;
        out[r] = base - dot_avx2(a + r * cols, v, cols);
    }
}

// Four rows per pass so each chunk of `out` is loaded and stored once per block.
void gemv_t_avx2(const double* a, std::size_t rows, std::size_t cols, const double* w, double* out) {
    std::size_t r = 0;
    for (; r + 4 <= rows; r += 4) {
        const double* r0 = a + r * cols;
        const double* r1 = r0 + cols;
        const double* r2 = r1 + cols;
        const double* r3 = r2 + cols;
        const __m256d w0 = _mm256_set1_pd(w[r]);
        const __m256d w1 = _mm256_set1_pd(w[r + 1]);
        const __m256d w2 = _mm256_set1_pd(w[r + 2]);
        const __m256d w3 = _mm256_set1_pd(w[r + 3]);
        std::size_t j = 0;
        for (; j + 4 <= cols; j += 4) {
            __m256d acc = _mm256_loadu_pd(out + j);
            acc = _mm256_fmadd_pd(w0, _mm256_loadu_pd(r0 + j), acc);
            acc = _mm256_fmadd_pd(w1, _mm256_loadu_pd(r1 + j), acc);
            acc = _mm256_fmadd_pd(w2, _mm256_loadu_pd(r2 + j), acc);
            acc = _mm256_fmadd_pd(w3, _mm256_loadu_pd(r3 + j), acc);
            _mm256_storeu_pd(out + j, acc);
        }
        for (; j < cols; ++j) {
            out[j] += w[r] * r0[j] + w[r + 1] * r1[j] + w[r + 2] * r2[j] + w[r + 3] * r3[j];
        }
    }
    for (; r < rows; ++r) axpy_avx2(w[r], a + r * cols, out, cols);
}

}  // namespace

const Ops& avx2_ops() {
    static const Ops ops{Isa::avx2, dot_avx2, axpy_avx2, residual_gemv_avx2, gemv_t_avx2};
    return ops;
}

}  // namespace mcid::vecops::detail
