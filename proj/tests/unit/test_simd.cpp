#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <random>

#include "../oracles.hpp"
#include "mcid/errors.hpp"
#include "mcid/surrogate_risk.hpp"
#include "mcid/vecops.hpp"

using namespace mcid;
using namespace mcid::vecops;

namespace {

std::vector<double> randv(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> nd;
    std::vector<double> v(n);
    for (auto& x : v) x = nd(rng);
    return v;
}

// Reference results in long double, so each variant is judged against the same exact-ish oracle.
long double dot_ref(const std::vector<double>& a, const std::vector<double>& b) {
    long double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
    return s;
}

long double abs_dot(const std::vector<double>& a, const std::vector<double>& b) {
    long double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(static_cast<long double>(a[i]) * b[i]);
    return s;
}

}  // namespace

TEST_CASE("scalar is always available and listed first") {
    const auto isas = available_isas();
    REQUIRE(!isas.empty());
    CHECK(isas.front() == Isa::scalar);
    CHECK(ops_for(Isa::scalar).isa == Isa::scalar);
    MESSAGE("active variant: " << isa_name(active().isa));
}

TEST_CASE("every variant agrees with the long-double oracle") {
    std::mt19937_64 rng(1);
    for (Isa isa : available_isas()) {
        CAPTURE(isa_name(isa));
        const Ops& ops = ops_for(isa);
        for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 33u, 200u, 1001u}) {
            CAPTURE(n);
            const auto a = randv(rng, n), b = randv(rng, n);
            const double tol = 4.0 * n * 1.2e-16 * static_cast<double>(abs_dot(a, b)) + 1e-300;
            CHECK(std::abs(ops.dot(a.data(), b.data(), n) - static_cast<double>(dot_ref(a, b))) <= tol);

            auto y = b;
            ops.axpy(0.7, a.data(), y.data(), n);
            for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == doctest::Approx(b[i] + 0.7 * a[i]).epsilon(1e-15));

            const std::size_t rows = n % 13 + 1;
            const auto A = randv(rng, rows * n);
            const auto off = randv(rng, rows);
            std::vector<double> out(rows);
            ops.residual_gemv(A.data(), rows, n, b.data(), off.data(), out.data());
            for (std::size_t r = 0; r < rows; ++r) {
                const std::vector<double> row(A.begin() + static_cast<long>(r * n), A.begin() + static_cast<long>((r + 1) * n));
                const double ref = static_cast<double>(off[r] - dot_ref(row, b));
                CHECK(std::abs(out[r] - ref) <= 4.0 * (n + 1) * 1.2e-16 * (std::abs(off[r]) + static_cast<double>(abs_dot(row, b))));
            }
            ops.residual_gemv(A.data(), rows, n, b.data(), nullptr, out.data());
            for (std::size_t r = 0; r < rows; ++r) {
                const std::vector<double> row(A.begin() + static_cast<long>(r * n), A.begin() + static_cast<long>((r + 1) * n));
                CHECK(std::abs(out[r] + static_cast<double>(dot_ref(row, b))) <= 4.0 * (n + 1) * 1.2e-16 * static_cast<double>(abs_dot(row, b)) + 1e-300);
            }

            const auto w = randv(rng, rows);
            std::vector<double> acc = randv(rng, n), acc0 = acc;
            ops.gemv_t(A.data(), rows, n, w.data(), acc.data());
            for (std::size_t j = 0; j < n; ++j) {
                long double s = acc0[j], mag = std::abs(acc0[j]);
                for (std::size_t r = 0; r < rows; ++r) {
                    s += static_cast<long double>(A[r * n + j]) * w[r];
                    mag += std::abs(static_cast<long double>(A[r * n + j]) * w[r]);
                }
                CHECK(std::abs(acc[j] - static_cast<double>(s)) <= 4.0 * (rows + 1) * 1.2e-16 * static_cast<double>(mag));
            }
        }
    }
}

TEST_CASE("variants agree with each other on a full risk gradient") {
    // The process-wide variant is fixed at start-up; compare it against direct scalar arithmetic.
    std::mt19937_64 rng(2);
    const auto b = oracle::random_batch(rng, 777, 37);
    std::vector<double> theta(37);
    for (auto& t : theta) t = 0.1 * std::normal_distribution<double>()(rng);
    const ClassWeights w{1.9, 2.1};
    const auto g = smoothed_risk_gradient(theta, b, 0.5, KernelSpec::gaussian(), w);
    std::vector<double> ref(37, 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) {
        double m = b.x[i];
        for (std::size_t j = 0; j < 37; ++j) m -= theta[j] * b.z(i, j);
        const double u = b.y[i] * m;
        // d/dtheta L(y (x - theta z)) = -K(u/delta)/delta * (-y z)
        const double coef = w(b.y[i]) * KernelSpec::gaussian().density(u / 0.5) / 0.5 * b.y[i];
        for (std::size_t j = 0; j < 37; ++j) ref[j] += coef * b.z(i, j);
    }
    for (std::size_t j = 0; j < 37; ++j) CHECK(g[j] == doctest::Approx(ref[j] * b.scale).epsilon(1e-10));
}

TEST_CASE("unavailable variants are refused") {
#if !defined(MCID_HAVE_NEON)
    CHECK_THROWS_AS(ops_for(Isa::neon), ArgumentError);
#endif
    CHECK(isa_name(Isa::avx2) == "avx2");
}

TEST_CASE("MCID_SIMD selects the variant") {
    const char* env = std::getenv("MCID_SIMD");
    if (env != nullptr && std::string(env) != "auto") CHECK(isa_name(active().isa) == env);
}
