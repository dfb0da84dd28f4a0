#pragma once

// Replicated simulation experiments: method comparisons, fixed-b sweeps and
// budget scaling. Each replicate draws a fresh theta*, a fresh pool and a fresh
// evaluation set from its own key; method arms share the pool but each gets
// its own label oracle with budget N.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcid/datagen.hpp"
#include "mcid/pipeline.hpp"

namespace mcid {

enum class Method { passive_pf, twostep_pf, passive_lr, twostep_lr };

std::string method_name(Method m);
Method method_from_name(std::string_view name);
bool is_two_step(Method m);

struct ExperimentConfig {
    ModelSpec model;
    std::size_t n = 20000;
    std::size_t d = 200;
    std::size_t s = 10;
    double budget = 2000.0;
    std::vector<Method> methods = {Method::passive_pf, Method::twostep_pf};
    int reps = 50;
    std::uint64_t seed = 1;
    int workers = 0;                 // 0: hardware concurrency
    std::size_t eval_n = 100000;

    TwoStepConfig two_step;          // budget and seed are overwritten per arm
    FitSettings fit;                 // shared solver settings; loss is set per arm

    std::optional<BGrid> sweep;      // fixed-b two-step runs over this grid
    std::vector<double> sweep_split = {0.125, 0.875};
    std::vector<double> scaling;     // budget grid for rate scaling

    /// Called with every arm's fit report, possibly from several threads at once.
    std::function<void(const FitReport&)> on_fit;

    void validate() const;
};

/// One method arm on one replicate.
struct ReplicateRow {
    std::string model;
    std::string method;
    std::optional<double> b;
    double N = 0.0;
    int rep = 0;
    double l1 = 0.0;
    double l2 = 0.0;
    double linf = 0.0;
    double pred_err = 0.0;
    std::size_t labels = 0;
    double b_hat = 0.0;              // selected b for CV two-step arms, 0 otherwise
    double seconds = 0.0;
    bool failed = false;
    std::string error;
};

struct ReportRow {
    std::string model;
    std::string method;
    std::string metric;              // l1, l2, linf, pred_err
    std::optional<double> b;
    double N = 0.0;
    double mean = 0.0;
    double sd = 0.0;
    int reps = 0;
    bool sd_degenerate = false;      // reps == 1, sd reported as 0
};

struct BenchmarkReport {
    std::vector<ReportRow> rows;
    std::vector<ReplicateRow> replicates;
    int failures = 0;
    double seconds = 0.0;
    std::vector<double> b_grid;      // sweep grid actually used

    const ReportRow* find(std::string_view method, std::string_view metric, std::optional<double> b = std::nullopt,
                          std::optional<double> N = std::nullopt) const;
};

/// Balanced misclassification (e+/n+ + e-/n-)/2 of the rule sign(x - theta^T z), sign(0) = +1.
/// This equals the gamma-weighted error normalised by the mean weight when gamma uses the
/// evaluation set's class frequencies.
struct ErrorTally {
    std::size_t err_plus = 0;
    std::size_t n_plus = 0;
    std::size_t err_minus = 0;
    std::size_t n_minus = 0;

    void add(std::span<const double> theta, const EvalSet& eval);
    double value() const;
};

double prediction_error(std::span<const double> theta, const EvalSet& eval);

/// Mean and sample sd per (model, method, b, N) and metric; failed rows are excluded.
std::vector<ReportRow> aggregate(const std::vector<ReplicateRow>& reps);

BenchmarkReport run_comparison(const ExperimentConfig& cfg);
BenchmarkReport run_b_sweep(const ExperimentConfig& cfg);

struct ScalingSlope {
    std::string method;
    double slope = 0.0;
    double intercept = 0.0;
    std::vector<double> N;
    std::vector<double> mean_l2;
};

struct ScalingResult {
    BenchmarkReport report;
    std::vector<ScalingSlope> slopes;
};

/// Least-squares slope of log(mean l2) on log N per method. Needs at least 3 budgets.
ScalingResult run_rate_scaling(const ExperimentConfig& cfg);

/// Least-squares fit y = a + b x; returns (b, a).
std::pair<double, double> ls_slope(std::span<const double> x, std::span<const double> y);

void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows);
void write_detail_csv(std::ostream& os, const std::vector<ReplicateRow>& rows);
std::vector<ReplicateRow> read_detail_csv(std::istream& is);
void write_slopes_csv(std::ostream& os, const std::vector<ScalingSlope>& slopes);

/// Runs `count` tasks on up to `workers` threads; task(i) must only touch slot i of its output.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& task);

}  // namespace mcid
