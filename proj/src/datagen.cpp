#include "mcid/datagen.hpp"

#include <cmath>
#include <numeric>

#include "mcid/errors.hpp"
#include "mcid/rng.hpp"

namespace mcid {

ModelSpec ModelSpec::from_name(std::string_view name) {
    ModelSpec m;
    if (name == "logistic") {
        m.kind = ModelKind::logistic;
    } else if (name == "binary_response") {
        m.kind = ModelKind::binary_response;
    } else if (name == "conditional_mean") {
        m.kind = ModelKind::conditional_mean;
    } else {
        throw ConfigError("unknown model '" + std::string(name) +
                          "' (expected logistic, binary_response or conditional_mean)");
    }
    return m;
}

std::string ModelSpec::name() const {
    switch (kind) {
        case ModelKind::logistic: return "logistic";
        case ModelKind::binary_response: return "binary_response";
        case ModelKind::conditional_mean: return "conditional_mean";
    }
    return "?";
}

void ModelSpec::validate() const {
    if (kind == ModelKind::binary_response && !(sigma > 0.0)) throw ArgumentError("model sigma must be positive");
    if (kind == ModelKind::conditional_mean) {
        if (!(mu > 0.0)) throw ArgumentError("model mu must be positive");
        if (!(eps_sd >= 0.0)) throw ArgumentError("model eps_sd must be non-negative");
    }
}

std::vector<double> gen_theta(std::size_t d, std::size_t s, std::uint64_t key) {
    if (d == 0) throw ArgumentError("gen_theta: d must be positive");
    if (s == 0 || s > d) throw ArgumentError("gen_theta: s must lie in [1, d]");
    Stream stream(key);
    // Partial Fisher-Yates: the first s slots become the support.
    std::vector<std::size_t> idx(d);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < s; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(stream.below(d - i));
        std::swap(idx[i], idx[j]);
    }
    std::vector<double> theta(d, 0.0);
    double sq = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
        const double v = stream.uniform(1.0, 2.0);
        theta[idx[i]] = v;
        sq += v * v;
    }
    const double norm = std::sqrt(sq);
    for (double& t : theta) t /= norm;
    return theta;
}

TruthSpec make_truth(ModelSpec model, std::size_t d, std::size_t s, std::uint64_t key) {
    model.validate();
    TruthSpec t;
    t.d = d;
    t.s = s;
    t.theta_star = gen_theta(d, s, key);
    t.model = model;
    return t;
}

void generate_rows(const TruthSpec& truth, std::uint64_t key, std::size_t first, std::size_t count,
                   const std::function<void(double, std::span<const double>, int)>& sink) {
    truth.model.validate();
    const std::size_t d = truth.d;
    if (truth.theta_star.size() != d) throw ArgumentError("truth: theta_star has the wrong dimension");
    std::vector<double> z(d);
    for (std::size_t i = first; i < first + count; ++i) {
        Stream row(mix64(key ^ mix64(i)));
        for (double& v : z) v = row.normal();
        // Plain left-to-right sum: simulated data must not depend on the SIMD variant.
        double lin = 0.0;
        for (std::size_t j = 0; j < d; ++j) lin += truth.theta_star[j] * z[j];
        double x;
        int y;
        switch (truth.model.kind) {
            case ModelKind::logistic: {
                x = row.normal();
                const double eps = row.logistic();
                y = (x - lin + eps) >= 0.0 ? 1 : -1;
                break;
            }
            case ModelKind::binary_response: {
                x = row.normal();
                const double m = x - lin;
                const double sd = truth.model.sigma * std::sqrt(1.0 + 2.0 * m * m);
                const double eps = sd * row.normal();
                y = (m + eps) >= 0.0 ? 1 : -1;
                break;
            }
            case ModelKind::conditional_mean:
            default: {
                y = row.uniform01() < 0.5 ? 1 : -1;
                x = truth.model.mu * y + lin + truth.model.eps_sd * row.normal();
                break;
            }
        }
        sink(x, z, y);
    }
}

namespace {

SimulatedPool simulate_checked(std::size_t n, const TruthSpec& truth, std::uint64_t key, ModelKind expected) {
    if (truth.model.kind != expected) throw ArgumentError("truth spec is for a different model");
    return simulate(n, truth, key);
}

}  // namespace

SimulatedPool simulate(std::size_t n, const TruthSpec& truth, std::uint64_t key) {
    if (n == 0) throw ArgumentError("simulate: n must be positive");
    SimulatedPool out;
    out.pool.x.reserve(n);
    out.pool.z = Matrix(n, truth.d);
    std::vector<std::int8_t> labels;
    labels.reserve(n);
    std::size_t i = 0;
    generate_rows(truth, key, 0, n, [&](double x, std::span<const double> z, int y) {
        out.pool.x.push_back(x);
        std::copy(z.begin(), z.end(), out.pool.z.row(i).begin());
        labels.push_back(static_cast<std::int8_t>(y));
        ++i;
    });
    out.labels = LabelSource::sealed(std::move(labels));
    return out;
}

SimulatedPool gen_logistic(std::size_t n, const TruthSpec& truth, std::uint64_t key) {
    return simulate_checked(n, truth, key, ModelKind::logistic);
}

SimulatedPool gen_binary_response(std::size_t n, const TruthSpec& truth, std::uint64_t key) {
    return simulate_checked(n, truth, key, ModelKind::binary_response);
}

SimulatedPool gen_conditional_mean(std::size_t n, const TruthSpec& truth, std::uint64_t key) {
    return simulate_checked(n, truth, key, ModelKind::conditional_mean);
}

EvalSet gen_eval(const TruthSpec& truth, std::uint64_t key, std::size_t first, std::size_t count) {
    EvalSet out;
    out.pool.x.reserve(count);
    out.pool.z = Matrix(count, truth.d);
    out.y.reserve(count);
    std::size_t i = 0;
    generate_rows(truth, key, first, count, [&](double x, std::span<const double> z, int y) {
        out.pool.x.push_back(x);
        std::copy(z.begin(), z.end(), out.pool.z.row(i).begin());
        out.y.push_back(static_cast<std::int8_t>(y));
        ++i;
    });
    return out;
}

}  // namespace mcid
