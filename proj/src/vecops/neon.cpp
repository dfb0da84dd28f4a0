// AArch64 only; NEON is part of the base ISA there.
#include "mcid/vecops.hpp"

#include <arm_neon.h>

namespace mcid::vecops::detail {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    float64x2_t acc2 = vdupq_n_f64(0.0);
    float64x2_t acc3 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
        acc2 = vfmaq_f64(acc2, vld1q_f64(a + i + 4), vld1q_f64(b + i + 4));
        acc3 = vfmaq_f64(acc3, vld1q_f64(a + i + 6), vld1q_f64(b + i + 6));
    }
    for (; i + 2 <= n; i += 2) acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    double s = vaddvq_f64(vaddq_f64(vaddq_f64(acc0, acc1), vaddq_f64(acc2, acc3)));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void residual_gemv_neon(const double* a, std::size_t rows, std::size_t cols, const double* v,
                        const double* offset, double* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double base = offset != nullptr ? offset[r] : 0.0;
        out[r] = base - dot_neon(a + r * cols, v, cols);
    }
}

void gemv_t_neon(const double* a, std::size_t rows, std::size_t cols, const double* w, double* out) {
    std::size_t r = 0;
    for (; r + 2 <= rows; r += 2) {
        const double* r0 = a + r * cols;
        const double* r1 = r0 + cols;
        const float64x2_t w0 = vdupq_n_f64(w[r]);
        const float64x2_t w1 = vdupq_n_f64(w[r + 1]);
        std::size_t j = 0;
        for (; j + 2 <= cols; j += 2) {
            float64x2_t acc = vld1q_f64(out + j);
            acc = vfmaq_f64(acc, w0, vld1q_f64(r0 + j));
            acc = vfmaq_f64(acc, w1, vld1q_f64(r1 + j));
            vst1q_f64(out + j, acc);
        }
        for (; j < cols; ++j) out[j] += w[r] * r0[j] + w[r + 1] * r1[j];
    }
    for (; r < rows; ++r) axpy_neon(w[r], a + r * cols, out, cols);
}

}  // namespace

const Ops& neon_ops() {
    static const Ops ops{Isa::neon, dot_neon, axpy_neon, residual_gemv_neon, gemv_t_neon};
    return ops;
}

}  // namespace mcid::vecops::detail
