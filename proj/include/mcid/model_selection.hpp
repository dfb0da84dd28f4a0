#pragma once

// M-fold cross-validation over a lambda grid with the one-standard-error rule,
// and argmin selection of the active-set half-width b.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mcid/data.hpp"
#include "mcid/prox_solver.hpp"
#include "mcid/surrogate_risk.hpp"

namespace mcid {

struct CvPoint {
    double lambda = 0.0;
    double mean_cv = 0.0;
    std::vector<double> fold_scores;  // one per fold, in fold order
};

struct CvResult {
    double lambda_hat = 0.0;   // largest lambda with mean_cv <= cv_min + se_min
    double lambda_bar = 0.0;   // argmin of mean_cv
    double cv_min = 0.0;
    double se_min = 0.0;       // sd of the fold scores at lambda_bar over sqrt(M)
    double cv_at_hat = 0.0;
    std::vector<CvPoint> cv_curve;  // sorted by decreasing lambda
};

/// Applies the one-SE rule to a stored curve (any order). Throws ArgumentError on an empty curve.
CvResult one_se_rule(std::vector<CvPoint> curve);

/// `count` log-spaced values from lambda_max down to lambda_max / ratio.
std::vector<double> lambda_grid(double lambda_max, std::size_t count = 20, double ratio = 1000.0);

/// Step size for a batch: the configured eta is expressed per labeled record, and the
/// batch risk carries scale = 1/|D_k|, so eta is multiplied by |D_k| / labeled count.
double batch_step_size(double eta, const LabeledBatch& batch);

struct CvOptions {
    int folds = 5;
    double eps_rel = 1e-3;     // per-lambda precision on omega, relative to lambda
    std::uint64_t fold_key = 0;
};

/// Fold of every record: rank of uniform_at(fold_key, source_row), dealt round-robin.
std::vector<int> assign_folds(const LabeledBatch& batch, int folds, std::uint64_t fold_key);

/// Cross-validates `loss` over `grid` on `batch`. Each fold fit walks the grid from the largest
/// lambda with warm starts; held-out folds are scored by the per-record mean loss.
/// Throws ArgumentError when folds < 2, the batch has fewer than 2*folds records or the grid is empty.
CvResult cv_lambda(const LabeledBatch& batch, const LossSpec& loss, std::span<const double> grid,
                   const SolverConfig& solver, const CvOptions& opts);

/// argmin over (b, score) pairs; exact ties go to the smaller b. Throws ArgumentError when empty.
double cv_b(std::span<const std::pair<double, double>> candidates);

}  // namespace mcid
