#pragma once

// Counter-based random streams.
//
// A stream is identified by a 64-bit key derived by hashing (seed, tag, ids...),
// and its k-th output is splitmix64(key + k * golden). Draws therefore depend
// only on the key path and the position in the stream, never on thread
// scheduling or platform <random> implementations.
//
// Variate methods (fixed so other implementations can reproduce streams):
//   uniform01  ((u >> 11) + 0.5) * 2^-53, strictly inside (0, 1)
//   normal     Acklam's rational inverse normal CDF of one uniform01 (rel. err < 1.2e-9)
//   logistic   log(u) - log1p(-u) of one uniform01
//   below(n)   high 64 bits of the 128-bit product u * n

#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace mcid {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Tags keep unrelated consumers of one seed on disjoint streams.
enum class StreamTag : std::uint64_t {
    theta = 1,
    pool_rows = 2,
    eval_rows = 3,
    split = 4,
    select = 5,
    folds = 6,
    replicate = 7,
    pilot = 8,
    misc = 99,
};

std::uint64_t derive_key(std::uint64_t seed, StreamTag tag, std::initializer_list<std::uint64_t> ids = {});

/// Inverse of the standard normal CDF (Acklam's approximation). p must lie in (0, 1).
double inverse_normal_cdf(double p);

class Stream {
public:
    explicit Stream(std::uint64_t key) noexcept : key_(key) {}
    Stream(std::uint64_t seed, StreamTag tag, std::initializer_list<std::uint64_t> ids = {})
        : key_(derive_key(seed, tag, ids)) {}

    std::uint64_t next_u64() noexcept { return mix64(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

    double uniform01() noexcept { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }
    double normal() { return inverse_normal_cdf(uniform01()); }
    double logistic();
    std::uint64_t below(std::uint64_t n) noexcept {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    template <class T>
    void shuffle(std::span<T> v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::uint64_t key() const noexcept { return key_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Stateless uniform01 draw at position `index` of stream `key`; used for per-row decisions.
inline double uniform_at(std::uint64_t key, std::uint64_t index) noexcept {
    return (static_cast<double>(mix64(key ^ mix64(index + 0x5851F42D4C957F2DULL)) >> 11) + 0.5) * 0x1.0p-53;
}

/// 0..n-1 in a seeded random order.
std::vector<std::size_t> random_permutation(std::size_t n, Stream& stream);

}  // namespace mcid
