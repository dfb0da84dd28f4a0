#include "mcid/vecops.hpp"

namespace mcid::vecops::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void residual_gemv_scalar(const double* a, std::size_t rows, std::size_t cols, const double* v,
                          const double* offset, double* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double base = offset != nullptr ? offset[r] : 0.0;
        out[r] = base - dot_scalar(a + r * cols, v, cols);
    }
}

void gemv_t_scalar(const double* a, std::size_t rows, std::size_t cols, const double* w, double* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        if (w[r] == 0.0) continue;
        axpy_scalar(w[r], a + r * cols, out, cols);
    }
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops ops{Isa::scalar, dot_scalar, axpy_scalar, residual_gemv_scalar, gemv_t_scalar};
    return ops;
}

}  // namespace mcid::vecops::detail
