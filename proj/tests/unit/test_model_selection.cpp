#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "../oracles.hpp"
#include "mcid/errors.hpp"
#include "mcid/model_selection.hpp"

using namespace mcid;

namespace {

// Recomputes the one-SE choice straight from the definition.
double one_se_by_hand(const std::vector<CvPoint>& curve) {
    double mn = INFINITY, lam_bar = 0.0;
    for (const auto& p : curve) {
        if (p.mean_cv < mn || (p.mean_cv == mn && p.lambda > lam_bar)) {
            mn = p.mean_cv;
            lam_bar = p.lambda;
        }
    }
    const CvPoint* at = nullptr;
    for (const auto& p : curve) {
        if (p.lambda == lam_bar) at = &p;
    }
    const auto& s = at->fold_scores;
    const double m = static_cast<double>(s.size());
    double mean = 0.0;
    for (double v : s) mean += v / m;
    double ss = 0.0;
    for (double v : s) ss += (v - mean) * (v - mean);
    const double se = std::sqrt(ss / (m - 1.0)) / std::sqrt(m);
    double best = 0.0;
    for (const auto& p : curve) {
        if (p.mean_cv <= mn + se) best = std::max(best, p.lambda);
    }
    return best;
}

SolverConfig solver() {
    SolverConfig s;
    s.eta = 1.0;
    return s;
}

}  // namespace

TEST_CASE("single-point grid") {
    std::mt19937_64 rng(1);
    const auto b = oracle::random_batch(rng, 100, 4);
    LossSpec loss;
    const std::vector<double> grid = {0.01};
    const auto r = cv_lambda(b, loss, grid, solver(), CvOptions{5, 1e-3, 7});
    CHECK(r.lambda_hat == 0.01);
    CHECK(r.cv_min == r.cv_curve[0].mean_cv);
}

TEST_CASE("flat curve picks the largest lambda") {
    std::vector<CvPoint> curve;
    for (double l : {0.1, 1.0, 0.01}) curve.push_back({l, 0.3, {0.3, 0.3, 0.3}});
    const auto r = one_se_rule(curve);
    CHECK(r.lambda_hat == 1.0);
    CHECK(r.se_min == 0.0);
}

TEST_CASE("one-SE rule on a hand-built curve") {
    std::vector<CvPoint> curve = {
        {1.0, 0.50, {0.5, 0.5, 0.5}},
        {0.5, 0.41, {0.40, 0.41, 0.42}},
        {0.25, 0.40, {0.38, 0.40, 0.42}},
        {0.125, 0.45, {0.45, 0.45, 0.45}},
    };
    const auto r = one_se_rule(curve);
    CHECK(r.lambda_bar == 0.25);
    CHECK(r.se_min == doctest::Approx(std::sqrt(0.0004) / std::sqrt(3.0)));
    CHECK(r.lambda_hat == 0.5);
    CHECK(r.lambda_hat >= r.lambda_bar);
    std::reverse(curve.begin(), curve.end());
    CHECK(one_se_rule(curve).lambda_hat == 0.5);
    CHECK_THROWS_AS(one_se_rule({}), ArgumentError);
}

TEST_CASE("cv_lambda result re-derives from its stored curve") {
    std::mt19937_64 rng(2);
    const auto b = oracle::random_batch(rng, 500, 10, 0.15);
    LossSpec loss;
    loss.weights = class_weights_from(b);
    auto grid = lambda_grid(0.2, 20, 1000.0);
    const auto r = cv_lambda(b, loss, grid, solver(), CvOptions{5, 1e-3, 11});
    CHECK(r.cv_curve.size() == 20);
    for (const auto& p : r.cv_curve) CHECK(p.fold_scores.size() == 5);
    CHECK(r.lambda_hat == one_se_by_hand(r.cv_curve));
    CHECK(r.lambda_hat >= r.lambda_bar);
    // Grid order does not matter.
    std::reverse(grid.begin(), grid.end());
    const auto r2 = cv_lambda(b, loss, grid, solver(), CvOptions{5, 1e-3, 11});
    CHECK(r2.lambda_hat == r.lambda_hat);
}

TEST_CASE("cv_lambda argument checks") {
    std::mt19937_64 rng(3);
    const auto b = oracle::random_batch(rng, 9, 2);
    LossSpec loss;
    const std::vector<double> grid = {0.1};
    CHECK_THROWS_AS(cv_lambda(b, loss, grid, solver(), CvOptions{5, 1e-3, 1}), ArgumentError);
    CHECK_THROWS_AS(cv_lambda(b, loss, grid, solver(), CvOptions{1, 1e-3, 1}), ArgumentError);
    CHECK_THROWS_AS(cv_lambda(b, loss, std::vector<double>{}, solver(), CvOptions{2, 1e-3, 1}), ArgumentError);
}

TEST_CASE("fold assignment depends only on the key and the source row") {
    std::mt19937_64 rng(4);
    const auto b = oracle::random_batch(rng, 103, 2);
    const auto f = assign_folds(b, 5, 99);
    std::vector<int> counts(5, 0);
    for (int v : f) counts[static_cast<std::size_t>(v)]++;
    for (int c : counts) CHECK((c == 20 || c == 21));
    std::vector<std::size_t> perm(b.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = perm.size() - 1 - i;
    const auto shuffled = b.subset(perm, b.batch_size_total);
    const auto g = assign_folds(shuffled, 5, 99);
    for (std::size_t i = 0; i < perm.size(); ++i) CHECK(g[i] == f[perm[i]]);
}

TEST_CASE("lambda grid") {
    const auto g = lambda_grid(2.0, 20, 1000.0);
    CHECK(g.size() == 20);
    CHECK(g.front() == 2.0);
    CHECK(g.back() == doctest::Approx(0.002));
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] / g[i - 1] == doctest::Approx(std::pow(1000.0, -1.0 / 19)));
}

TEST_CASE("cv_b examples") {
    const std::vector<std::pair<double, double>> one = {{0.7, 1.0}};
    CHECK(cv_b(one) == 0.7);
    const std::vector<std::pair<double, double>> inc = {{0.5, 0.1}, {1.0, 0.2}, {2.0, 0.3}};
    CHECK(cv_b(inc) == 0.5);
    const std::vector<std::pair<double, double>> tie = {{1.0, 0.1}, {0.5, 0.1}, {2.0, 0.3}};
    CHECK(cv_b(tie) == 0.5);
    CHECK_THROWS_AS(cv_b(std::vector<std::pair<double, double>>{}), ArgumentError);
}

TEST_CASE("batch step size is per labeled record") {
    auto b = LabeledBatch::empty_over(1, 100);
    const double z[1] = {0.0};
    for (int i = 0; i < 25; ++i) b.push_back(0.0, z, 1);
    CHECK(batch_step_size(1.0, b) == doctest::Approx(4.0));
    CHECK(batch_step_size(1.0, LabeledBatch::empty_over(1, 100)) == 1.0);
}
