#include "doctest.h"

#include <cmath>
#include <random>

#include "../oracles.hpp"
#include "mcid/errors.hpp"
#include "mcid/surrogate_risk.hpp"

using namespace mcid;

namespace {

LabeledBatch counts_batch(int pos, int total) {
    LabeledBatch b = LabeledBatch::empty_over(1, static_cast<std::size_t>(total));
    const double z[1] = {0.0};
    for (int i = 0; i < total; ++i) b.push_back(0.0, z, i < pos ? 1 : -1, static_cast<std::size_t>(i));
    return b;
}

// Term-by-term sum, with the tail of K integrated by Simpson instead of the closed form.
double brute_risk(const std::vector<double>& theta, const LabeledBatch& b, double delta, const KernelSpec& k,
                  const ClassWeights& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        double m = b.x[i];
        for (std::size_t j = 0; j < b.dim(); ++j) m -= theta[j] * b.z(i, j);
        const double u = b.y[i] * m;
        const double lo = u / delta;
        const double hi = k.bounded() ? 1.0 : 40.0;
        const double tail = lo >= hi ? 0.0 : oracle::simpson_panels([&](double t) { return k.density(t); }, std::max(lo, -hi), hi);
        s += w(b.y[i]) * tail;
    }
    return b.scale * s;
}

}  // namespace

TEST_CASE("class weights from label counts") {
    auto w = class_weights_from(counts_batch(50, 100));
    CHECK(w.w_plus == doctest::Approx(2.0));
    CHECK(w.w_minus == doctest::Approx(2.0));
    w = class_weights_from(counts_batch(100, 100));
    CHECK(w.w_plus == doctest::Approx(1.0 / 0.95));
    CHECK(w.w_minus == doctest::Approx(20.0));
    w = class_weights_from(counts_batch(30, 100));
    CHECK(w.w_plus == doctest::Approx(3.3333).epsilon(1e-4));
    CHECK(w.w_minus == doctest::Approx(1.4286).epsilon(1e-4));
    CHECK_THROWS_AS(class_weights_from(LabeledBatch::empty_over(1, 1)), ArgumentError);
}

TEST_CASE("smoothed risk of a single record at the origin") {
    LabeledBatch b = LabeledBatch::empty_over(3, 1);
    const std::vector<double> z(3, 0.0), theta(3, 0.0);
    b.push_back(0.0, z, 1);
    const ClassWeights w{2.0, 2.0};
    CHECK(smoothed_risk(theta, b, 1.0, KernelSpec::gaussian(), w) == doctest::Approx(1.0));
    CHECK(smoothed_risk(theta, LabeledBatch::empty_over(3, 10), 1.0, KernelSpec::gaussian(), w) == 0.0);
    const auto g = smoothed_risk_gradient(theta, LabeledBatch::empty_over(3, 10), 1.0, KernelSpec::gaussian(), w);
    CHECK(g == std::vector<double>(3, 0.0));
}

TEST_CASE("gradient of a single record equals the finite-difference oracle") {
    LabeledBatch b = LabeledBatch::empty_over(2, 1);
    const std::vector<double> z = {1.0, 0.0};
    b.push_back(0.0, z, 1);
    const ClassWeights w{2.0, 2.0};
    const auto k = KernelSpec::gaussian();
    const std::vector<double> theta0(2, 0.0);
    const auto g = smoothed_risk_gradient(theta0, b, 1.0, k, w);
    const auto fd = oracle::gradient_fd([&](const std::vector<double>& t) { return smoothed_risk(t, b, 1.0, k, w); }, theta0);
    CHECK(g[0] == doctest::Approx(2.0 * 0.398942).epsilon(1e-6));
    CHECK(g[0] == doctest::Approx(fd[0]).epsilon(1e-7));
    CHECK(std::abs(g[1]) < 1e-15);
}

TEST_CASE("smoothed risk equals a brute-force sum") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> nd;
    for (const auto& k : {KernelSpec::gaussian(), KernelSpec::epanechnikov(), KernelSpec::higher_order(3)}) {
        for (int rep = 0; rep < 5; ++rep) {
            const auto b = oracle::random_batch(rng, 5, 4, 0.3, 9);
            std::vector<double> theta(4);
            for (auto& t : theta) t = nd(rng);
            const ClassWeights w{1.7, 2.4};
            CHECK(smoothed_risk(theta, b, 0.8, k, w) == doctest::Approx(brute_risk(theta, b, 0.8, k, w)).epsilon(1e-9));
        }
    }
}

TEST_CASE("smoothed risk gradient matches finite differences across kernels and bandwidths") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> nd;
    for (const auto& k : {KernelSpec::gaussian(), KernelSpec::epanechnikov(), KernelSpec::higher_order(3)}) {
        for (double delta : {0.1, 1.0, 10.0}) {
            for (int rep = 0; rep < 4; ++rep) {
                const auto b = oracle::random_batch(rng, 20, 5);
                std::vector<double> theta(5);
                for (auto& t : theta) t = 0.3 * nd(rng);
                const ClassWeights w{1.5, 3.0};
                const auto g = smoothed_risk_gradient(theta, b, delta, k, w);
                const double h = 1e-6 * std::max(delta, 0.1);
                const auto fd = oracle::gradient_fd(
                    [&](const std::vector<double>& t) { return smoothed_risk(t, b, delta, k, w); }, theta, h);
                double num = 0.0, den = 0.0;
                for (std::size_t j = 0; j < g.size(); ++j) {
                    num += (g[j] - fd[j]) * (g[j] - fd[j]);
                    den += g[j] * g[j];
                }
                CAPTURE(k.name());
                CAPTURE(delta);
                // A bounded kernel with a narrow band can leave every record outside its support.
                if (den == 0.0) CHECK(num == 0.0);
                else CHECK(std::sqrt(num / den) <= 1e-5);
            }
        }
    }
}

TEST_CASE("smoothed risk is bounded by zero and the weighted count") {
    std::mt19937_64 rng(29);
    std::normal_distribution<double> nd;
    for (int rep = 0; rep < 50; ++rep) {
        const auto b = oracle::random_batch(rng, 30, 3, 0.5, 100);
        std::vector<double> theta(3);
        for (auto& t : theta) t = 3.0 * nd(rng);
        const ClassWeights w{1.2, 6.0};
        const double r = smoothed_risk(theta, b, 0.5, KernelSpec::higher_order(3), w);
        double cap = 0.0;
        for (auto y : b.y) cap += w(y);
        // Higher-order kernels are not positive, so only the positive kernels are held to [0, cap].
        const double rg = smoothed_risk(theta, b, 0.5, KernelSpec::gaussian(), w);
        CHECK(rg >= 0.0);
        CHECK(rg <= b.scale * cap + 1e-12);
        CHECK(std::isfinite(r));
    }
}

TEST_CASE("small bandwidth recovers the weighted 0-1 risk") {
    std::mt19937_64 rng(31);
    auto b = oracle::random_batch(rng, 200, 3, 0.2);
    const std::vector<double> theta = {0.1, -0.2, 0.3};
    // Keep records with margin at least 0.1.
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < b.size(); ++i) {
        double m = b.x[i];
        for (std::size_t j = 0; j < 3; ++j) m -= theta[j] * b.z(i, j);
        if (std::abs(m) >= 0.1) keep.push_back(i);
    }
    const auto kb = b.subset(keep, keep.size());
    const ClassWeights w{1.8, 2.2};
    double zero_one = 0.0;
    for (std::size_t i = 0; i < kb.size(); ++i) {
        double m = kb.x[i];
        for (std::size_t j = 0; j < 3; ++j) m -= theta[j] * kb.z(i, j);
        if (kb.y[i] * m < 0) zero_one += w(kb.y[i]);
    }
    zero_one *= kb.scale;
    CHECK(std::abs(smoothed_risk(theta, kb, 1e-4, KernelSpec::gaussian(), w) - zero_one) <= 1e-6);
}

TEST_CASE("logistic loss: value, gradient and convexity") {
    LabeledBatch one = LabeledBatch::empty_over(2, 1);
    const std::vector<double> z0 = {0.0, 0.0};
    one.push_back(0.0, z0, 1);
    LogisticLoss l1(one, ClassWeights{1.0, 1.0});
    CHECK(l1.value(std::vector<double>{0.0, 0.0}) == doctest::Approx(std::log(2.0)));

    std::mt19937_64 rng(37);
    std::normal_distribution<double> nd;
    const auto b = oracle::random_batch(rng, 40, 4);
    const ClassWeights w{1.3, 2.1};
    LogisticLoss loss(b, w);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> theta(4);
        for (auto& t : theta) t = nd(rng);
        std::vector<double> g(4);
        loss.value_and_gradient(theta, g);
        const auto fd = oracle::gradient_fd([&](const std::vector<double>& t) { return loss.value(t); }, theta, 1e-5);
        for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(g[j] - fd[j]) <= 1e-6 * std::max(1.0, std::abs(g[j])));
        const auto [v, g2] = logistic_loss_and_gradient(theta, b, w);
        CHECK(v == doctest::Approx(loss.value(theta)));
    }
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> a(4), c(4), m(4);
        for (std::size_t j = 0; j < 4; ++j) {
            a[j] = 2.0 * nd(rng);
            c[j] = 2.0 * nd(rng);
            m[j] = 0.5 * (a[j] + c[j]);
        }
        CHECK(loss.value(m) <= 0.5 * (loss.value(a) + loss.value(c)) + 1e-12);
    }
}

TEST_CASE("loss spec builds matching oracles") {
    std::mt19937_64 rng(41);
    const auto b = oracle::random_batch(rng, 30, 3);
    LossSpec spec;
    spec.delta = 0.7;
    spec.weights = ClassWeights{1.5, 3.0};
    const std::vector<double> theta = {0.2, 0.1, -0.4};
    auto loss = spec.make(b);
    CHECK(loss->value(theta) == doctest::Approx(smoothed_risk(theta, b, 0.7, spec.kernel, spec.weights)));
    // mean_loss drops the batch scale and averages per record.
    const auto b2 = b.subset(std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19,
                                                       20, 21, 22, 23, 24, 25, 26, 27, 28, 29},
                             30);
    CHECK(spec.mean_loss(theta, b2) == doctest::Approx(smoothed_risk(theta, b2, 0.7, spec.kernel, spec.weights)));
    spec.type = LossType::logistic;
    auto ll = spec.make(b);
    CHECK(ll->value(theta) == doctest::Approx(LogisticLoss(b, spec.weights).value(theta)));
}
