#pragma once

// Simulation models with a sparse, unit-norm threshold parameter theta*.
//
//   logistic            X ~ N(0,1), Z ~ N_d(0, I), Y = sign(X - theta*^T Z + eps), eps standard logistic
//   binary_response     as above with eps ~ N(0, sigma^2 (1 + 2 (X - theta*^T Z)^2))
//   conditional_mean    Y uniform on {-1, 1}, Z ~ N_d(0, I), X = mu Y + theta*^T Z + eps, eps ~ N(0, eps_sd^2)
//
// sign(0) is +1. Every row is generated from its own stream keyed by
// (key, row index), in the order z_1..z_d, then X (or Y), then the noise term,
// so rows can be produced in any order or in chunks with identical results.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcid/active_sampling.hpp"
#include "mcid/data.hpp"

namespace mcid {

enum class ModelKind { logistic, binary_response, conditional_mean };

struct ModelSpec {
    ModelKind kind = ModelKind::conditional_mean;
    double sigma = 0.5;   // binary_response noise scale
    double mu = 2.0;      // conditional_mean class separation
    double eps_sd = 0.1;  // conditional_mean noise sd

    static ModelSpec from_name(std::string_view name);
    std::string name() const;
    void validate() const;
};

struct TruthSpec {
    std::size_t d = 0;
    std::size_t s = 0;
    std::vector<double> theta_star;
    ModelSpec model;
};

/// s coordinates chosen uniformly, values U(1, 2), then scaled to unit l2 norm.
std::vector<double> gen_theta(std::size_t d, std::size_t s, std::uint64_t key);

TruthSpec make_truth(ModelSpec model, std::size_t d, std::size_t s, std::uint64_t key);

/// Simulated covariates plus the hidden labels (readable only through a LabelOracle).
struct SimulatedPool {
    UnlabeledPool pool;
    std::shared_ptr<const LabelSource> labels;
};

/// Covariates with visible labels, for evaluation only.
struct EvalSet {
    UnlabeledPool pool;
    std::vector<std::int8_t> y;
};

/// Generates rows [first, first + count) and hands each one to `sink`.
void generate_rows(const TruthSpec& truth, std::uint64_t key, std::size_t first, std::size_t count,
                   const std::function<void(double x, std::span<const double> z, int y)>& sink);

SimulatedPool gen_logistic(std::size_t n, const TruthSpec& truth, std::uint64_t key);
SimulatedPool gen_binary_response(std::size_t n, const TruthSpec& truth, std::uint64_t key);
SimulatedPool gen_conditional_mean(std::size_t n, const TruthSpec& truth, std::uint64_t key);
/// Dispatches on truth.model.kind.
SimulatedPool simulate(std::size_t n, const TruthSpec& truth, std::uint64_t key);

/// Rows [first, first + count) with labels exposed.
EvalSet gen_eval(const TruthSpec& truth, std::uint64_t key, std::size_t first, std::size_t count);

}  // namespace mcid
