#include "mcid/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mcid/errors.hpp"
#include "mcid/rng.hpp"

namespace mcid {

CvResult one_se_rule(std::vector<CvPoint> curve) {
    if (curve.empty()) throw ArgumentError("one_se_rule: empty CV curve");
    std::stable_sort(curve.begin(), curve.end(), [](const CvPoint& a, const CvPoint& b) { return a.lambda > b.lambda; });

    std::size_t best = 0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        if (curve[i].mean_cv < curve[best].mean_cv) best = i;
    }
    CvResult out;
    out.lambda_bar = curve[best].lambda;
    out.cv_min = curve[best].mean_cv;

    const auto& scores = curve[best].fold_scores;
    const std::size_t m = scores.size();
    if (m >= 2) {
        const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(m);
        double ss = 0.0;
        for (double s : scores) ss += (s - mean) * (s - mean);
        out.se_min = std::sqrt(ss / static_cast<double>(m - 1)) / std::sqrt(static_cast<double>(m));
    }

    // Curve is sorted by decreasing lambda, so the first point under the bar is the largest lambda.
    for (const auto& p : curve) {
        if (p.mean_cv <= out.cv_min + out.se_min) {
            out.lambda_hat = p.lambda;
            out.cv_at_hat = p.mean_cv;
            break;
        }
    }
    out.cv_curve = std::move(curve);
    return out;
}

std::vector<double> lambda_grid(double lambda_max, std::size_t count, double ratio) {
    if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) throw ArgumentError("lambda_grid: lambda_max must be positive");
    if (count == 0) throw ArgumentError("lambda_grid: count must be positive");
    if (!(ratio >= 1.0)) throw ArgumentError("lambda_grid: ratio must be at least one");
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double f = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        grid[i] = lambda_max * std::pow(ratio, -f);
    }
    return grid;
}

double batch_step_size(double eta, const LabeledBatch& batch) {
    if (batch.empty()) return eta;
    return eta * static_cast<double>(batch.batch_size_total) / static_cast<double>(batch.size());
}

std::vector<int> assign_folds(const LabeledBatch& batch, int folds, std::uint64_t fold_key) {
    if (folds < 2) throw ArgumentError("cross-validation needs at least 2 folds");
    std::vector<std::size_t> order(batch.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> u(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) u[i] = uniform_at(fold_key, batch.source_rows[i]);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return u[a] < u[b] || (u[a] == u[b] && batch.source_rows[a] < batch.source_rows[b]);
    });
    std::vector<int> fold(batch.size());
    for (std::size_t r = 0; r < order.size(); ++r) fold[order[r]] = static_cast<int>(r % static_cast<std::size_t>(folds));
    return fold;
}

CvResult cv_lambda(const LabeledBatch& batch, const LossSpec& loss, std::span<const double> grid,
                   const SolverConfig& solver, const CvOptions& opts) {
    const int m = opts.folds;
    if (m < 2) throw ArgumentError("cross-validation needs at least 2 folds");
    if (grid.empty()) throw ArgumentError("cross-validation grid is empty");
    if (batch.size() < static_cast<std::size_t>(2 * m)) {
        throw ArgumentError("cross-validation needs at least " + std::to_string(2 * m) + " labeled records, got " +
                            std::to_string(batch.size()));
    }
    if (!(opts.eps_rel > 0.0)) throw ArgumentError("cross-validation eps_rel must be positive");

    std::vector<double> lambdas(grid.begin(), grid.end());
    std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
    for (double l : lambdas) {
        if (!(l > 0.0)) throw ArgumentError("cross-validation grid values must be positive");
    }

    const auto fold = assign_folds(batch, m, opts.fold_key);
    std::vector<CvPoint> curve(lambdas.size());
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        curve[i].lambda = lambdas[i];
        curve[i].fold_scores.assign(static_cast<std::size_t>(m), 0.0);
    }

    const double train_total_f = static_cast<double>(batch.batch_size_total) * (m - 1) / m;
    for (int f = 0; f < m; ++f) {
        std::vector<std::size_t> train_rows;
        std::vector<std::size_t> test_rows;
        for (std::size_t i = 0; i < batch.size(); ++i) (fold[i] == f ? test_rows : train_rows).push_back(i);
        const std::size_t train_total =
            std::max(train_rows.size(), static_cast<std::size_t>(std::llround(train_total_f)));
        const LabeledBatch train = batch.subset(train_rows, std::max<std::size_t>(train_total, 1));
        const LabeledBatch test = batch.subset(test_rows, std::max<std::size_t>(test_rows.size(), 1));

        const auto fold_loss = loss.make(train);
        SolverConfig cfg = solver;
        cfg.eta = batch_step_size(solver.eta, train);
        std::vector<double> theta(batch.dim(), 0.0);
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            ProxResult pr = proximal_gradient(*fold_loss, lambdas[i], opts.eps_rel * lambdas[i], theta, cfg, i);
            theta = std::move(pr.theta);
            cfg.eta = pr.final_eta;
            curve[i].fold_scores[static_cast<std::size_t>(f)] = loss.mean_loss(theta, test);
        }
    }
    for (auto& p : curve) {
        p.mean_cv = std::accumulate(p.fold_scores.begin(), p.fold_scores.end(), 0.0) / m;
    }
    return one_se_rule(std::move(curve));
}

double cv_b(std::span<const std::pair<double, double>> candidates) {
    if (candidates.empty()) throw ArgumentError("cv_b: no candidates");
    auto best = candidates[0];
    for (const auto& c : candidates.subspan(1)) {
        if (c.second < best.second || (c.second == best.second && c.first < best.first)) best = c;
    }
    return best.first;
}

}  // namespace mcid
