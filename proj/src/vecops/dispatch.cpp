#include "mcid/vecops.hpp"

#include <cstdlib>
#include <string>

#include "mcid/errors.hpp"

namespace mcid::vecops {
namespace {

bool host_supports(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return true;
        case Isa::avx2:
#if defined(MCID_HAVE_AVX2)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Isa::neon:
#if defined(MCID_HAVE_NEON)
            return true;
#else
            return false;
#endif
    }
    return false;
}

const Ops& select_from_env() {
    const char* env = std::getenv("MCID_SIMD");
    const std::string choice = env != nullptr ? env : "auto";
    if (choice == "scalar") return ops_for(Isa::scalar);
    if (choice == "avx2") return ops_for(Isa::avx2);
    if (choice == "neon") return ops_for(Isa::neon);
    if (choice != "auto" && !choice.empty()) {
        throw ArgumentError("MCID_SIMD must be one of scalar, avx2, neon, auto; got '" + choice + "'");
    }
    const auto isas = available_isas();
    return ops_for(isas.back());
}

}  // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
        case Isa::neon: return "neon";
    }
    return "unknown";
}

const Ops& ops_for(Isa isa) {
    if (!host_supports(isa)) {
        throw ArgumentError("SIMD variant '" + std::string(isa_name(isa)) + "' is not available on this host");
    }
    switch (isa) {
#if defined(MCID_HAVE_AVX2)
        case Isa::avx2: return detail::avx2_ops();
#endif
#if defined(MCID_HAVE_NEON)
        case Isa::neon: return detail::neon_ops();
#endif
        default: return detail::scalar_ops();
    }
}

std::vector<Isa> available_isas() {
    std::vector<Isa> out{Isa::scalar};
    for (Isa isa : {Isa::avx2, Isa::neon}) {
        if (host_supports(isa)) out.push_back(isa);
    }
    return out;
}

const Ops& active() {
    static const Ops& selected = select_from_env();
    return selected;
}

}  // namespace mcid::vecops
