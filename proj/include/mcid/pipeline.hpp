#pragma once

// K-step active subsampling, the data-driven two-step variant that picks b by
// cross-validation, and the tuning schedules for the three smoothness regimes.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mcid/active_sampling.hpp"
#include "mcid/kernels.hpp"
#include "mcid/model_selection.hpp"
#include "mcid/prox_solver.hpp"
#include "mcid/surrogate_risk.hpp"

namespace mcid {

/// How lambda is chosen for one fit: cross-validated over a grid below lambda_0, or fixed.
struct LambdaChoice {
    std::optional<double> fixed;
    std::size_t grid_size = 20;
    double grid_ratio = 1000.0;
};

struct FitSettings {
    LossType loss = LossType::smoothed;
    KernelSpec kernel = KernelSpec::gaussian();
    SolverConfig solver;         // eta is per labeled record (see batch_step_size); lambda_tgt/eps_tgt are set per fit
    double eps_rel = 1e-3;       // final precision eps_tgt = eps_rel * lambda_tgt
    int cv_folds = 5;
    bool warm_start = false;     // start iteration k >= 2 from theta_{k-1}
};

struct PipelineConfig {
    int K = 2;
    double budget = 2000.0;
    std::vector<double> budget_split = {0.125, 0.875};
    std::vector<double> delta = {1.0};             // one per iteration, or a single value for all
    std::vector<LambdaChoice> lambda = {LambdaChoice{}};  // one per iteration, or a single entry for all
    std::vector<double> b;                         // b_1..b_{K-1}
    FitSettings fit;
    std::uint64_t seed = 1;
    std::size_t min_batch = 50;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    double delta_at(int k) const;
    const LambdaChoice& lambda_at(int k) const;
};

struct BCandidate {
    double b = 0.0;
    double p_hat = 0.0;
    double c = 0.0;
    std::size_t labels = 0;
    double cv_score = 0.0;
    double lambda_opt = 0.0;
    bool skipped = false;   // too few labels or an empty band; scored +inf
};

struct IterationReport {
    int k = 0;
    std::vector<double> theta;
    std::size_t labels_used = 0;        // records in the labeled batch
    std::size_t batch_rows = 0;         // |D_k|
    double p_hat = 1.0;
    double c = 1.0;
    bool c_clamped = false;
    double expected_labels = 0.0;       // c * p_hat * |D_k|
    double delta = 1.0;
    double lambda = 0.0;
    std::optional<double> b;            // band half-width used to build this iteration's active set
    std::optional<CvResult> cv;
    PathResult path;
    double seconds = 0.0;
};

struct FitReport {
    std::string algorithm;              // "k_step" or "two_step_cv"
    std::vector<IterationReport> iterations;
    std::vector<BCandidate> b_candidates;
    ClassWeights weights;
    std::size_t labels_total = 0;       // labels charged to the oracle
    double budget = 0.0;
    std::vector<std::string> notes;

    const std::vector<double>& theta_hat() const { return iterations.back().theta; }
};

/// Algorithm with K uniform-then-active iterations. K = 1 is passive uniform subsampling over
/// the whole pool; K >= 2 splits the pool into K+1 equal slices D_0..D_K and estimates the band
/// probability on D_0. Errors are rethrown with the iteration attached.
FitReport k_step_fit(const UnlabeledPool& pool, LabelOracle& oracle, const PipelineConfig& cfg);

struct BGrid {
    std::vector<double> values;     // explicit grid
    std::size_t auto_points = 10;   // used when values is empty: quantiles 1/m..1 of normalised margins
};

struct TwoStepConfig {
    double budget = 2000.0;
    std::vector<double> split = {0.125, 0.25, 0.625};   // N1, N_cv, N2 as fractions of the budget
    BGrid b_grid;
    double delta1 = 1.0;
    double delta2 = 1.0;
    LambdaChoice lambda;
    FitSettings fit;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Quantiles 1/m, 2/m, ..., 1 of |x - theta^T z| / sqrt(1 + ||theta||^2) over `rows`.
std::vector<double> auto_b_grid(const UnlabeledPool& pool, std::span<const std::size_t> rows,
                                std::span<const double> theta, std::size_t points);

/// Uniform step on D_1, b chosen by CV on D_cv, final active step on D_2.
FitReport two_step_cv_fit(const UnlabeledPool& pool, LabelOracle& oracle, const TwoStepConfig& cfg);

enum class SmoothnessRegime { fast, intermediate, boundary };  // beta > (1+sqrt 3)/2, 1 < beta <= that, beta = 1

struct ScheduleStep {
    int k = 0;
    double N_k = 0.0;
    double delta = 0.0;
    double lambda = 0.0;
    std::optional<double> b_prev;  // b_{k-1}, absent for k = 1
};

struct TheorySchedule {
    SmoothnessRegime regime = SmoothnessRegime::fast;
    int K = 2;
    std::vector<ScheduleStep> steps;
};

struct TheoryConstants {
    double c1 = 1.0;
    double c2 = 1.0;
    double c3 = 1.0;
};

/// Smallest integer strictly greater than a.
int strict_ceil(double a);

/// Number of iterations for smoothness beta and budget N. Throws ArgumentError when beta < 1.
int theory_iterations(double beta, double N);

/// Throws ArgumentError when beta < 1 or a size is not positive.
TheorySchedule theory_schedule(double beta, double s, double d, double n, double N, TheoryConstants c = {});

/// PipelineConfig running k_step_fit with the schedule's K, equal budget split, deltas, lambdas and b's.
PipelineConfig pipeline_from_schedule(const TheorySchedule& sched, double N, const FitSettings& fit,
                                      std::uint64_t seed);

std::string regime_name(SmoothnessRegime r);

}  // namespace mcid
