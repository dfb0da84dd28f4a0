#pragma once

// Dense double-precision inner loops used by the risk evaluations.
//
// Every routine has a scalar reference implementation plus optional SIMD
// variants (AVX2+FMA on x86-64, NEON on AArch64). The variant is picked once
// at runtime from the host CPU; MCID_SIMD=scalar|avx2|neon|auto overrides it.
// Matrices are row-major with `cols` doubles per row and no padding.

#include <cstddef>
#include <string_view>
#include <vector>

namespace mcid::vecops {

enum class Isa { scalar, avx2, neon };

struct Ops {
    Isa isa;
    /// sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    /// y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    /// out[i] = offset[i] - A.row(i) . v   (offset may be null, meaning zeros)
    void (*residual_gemv)(const double* a, std::size_t rows, std::size_t cols, const double* v,
                          const double* offset, double* out);
    /// out += A^T w
    void (*gemv_t)(const double* a, std::size_t rows, std::size_t cols, const double* w, double* out);
};

/// Ops for the requested ISA. Throws ArgumentError when that ISA is not usable on this host.
const Ops& ops_for(Isa isa);

/// ISAs compiled into this binary and supported by the running CPU. Always contains scalar.
std::vector<Isa> available_isas();

/// The process-wide selection (host detection, overridable through MCID_SIMD).
const Ops& active();

std::string_view isa_name(Isa isa);

namespace detail {
const Ops& scalar_ops();
#if defined(MCID_HAVE_AVX2)
const Ops& avx2_ops();
#endif
#if defined(MCID_HAVE_NEON)
const Ops& neon_ops();
#endif
}  // namespace detail

}  // namespace mcid::vecops
