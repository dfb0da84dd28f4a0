#include "mcid/rng.hpp"

#include <cmath>
#include <numeric>

#include "mcid/errors.hpp"

namespace mcid {

std::uint64_t derive_key(std::uint64_t seed, StreamTag tag, std::initializer_list<std::uint64_t> ids) {
    std::uint64_t k = mix64(seed ^ 0x6D63696400000000ULL);
    k = mix64(k ^ mix64(static_cast<std::uint64_t>(tag)));
    for (std::uint64_t id : ids) k = mix64(k ^ mix64(id + 0x632BE59BD9B4E019ULL));
    return k;
}

double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ArgumentError("inverse_normal_cdf: p must lie in (0, 1)");
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - p_low) {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double Stream::logistic() {
    const double u = uniform01();
    return std::log(u) - std::log1p(-u);
}

std::vector<std::size_t> random_permutation(std::size_t n, Stream& stream) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    stream.shuffle(std::span<std::size_t>(idx));
    return idx;
}

}  // namespace mcid
