#include "doctest.h"

#include <cmath>

#include "mcid/datagen.hpp"
#include "mcid/errors.hpp"
#include "mcid/pipeline.hpp"
#include "mcid/rng.hpp"

using namespace mcid;

namespace {

double l2_err(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return std::sqrt(s);
}

bool same_report(const FitReport& a, const FitReport& b) {
    if (a.iterations.size() != b.iterations.size() || a.labels_total != b.labels_total) return false;
    for (std::size_t i = 0; i < a.iterations.size(); ++i) {
        const auto& x = a.iterations[i];
        const auto& y = b.iterations[i];
        if (x.theta != y.theta || x.labels_used != y.labels_used || x.lambda != y.lambda || x.p_hat != y.p_hat) return false;
        if (x.path.per_stage.size() != y.path.per_stage.size()) return false;
    }
    for (std::size_t i = 0; i < a.b_candidates.size(); ++i) {
        if (a.b_candidates[i].cv_score != b.b_candidates[i].cv_score) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("theory iteration counts") {
    CHECK(theory_iterations(2.0, 2000) == 2);
    CHECK(theory_iterations(1.2, 2000) == 3);
    CHECK(theory_iterations(1.0, 2000) == 2);
    CHECK(strict_ceil(2.0) == 3);
    CHECK(strict_ceil(1.846) == 2);
    CHECK_THROWS_AS(theory_iterations(0.9, 2000), ArgumentError);
    CHECK_THROWS_AS(theory_schedule(0.5, 10, 200, 20000, 2000), ArgumentError);
}

TEST_CASE("theory schedules are positive and delta shrinks with the budget") {
    for (double beta : {1.0, 1.2, 2.0, 3.0}) {
        CAPTURE(beta);
        double prev = INFINITY;
        for (double N : {1e3, 1e4, 1e5}) {
            const auto s = theory_schedule(beta, 10, 200, 1e6, N);
            CHECK(static_cast<int>(s.steps.size()) == s.K);
            for (const auto& st : s.steps) {
                CHECK(st.delta > 0.0);
                CHECK(st.lambda > 0.0);
                CHECK(st.N_k == doctest::Approx(N / s.K));
                CHECK(st.b_prev.has_value() == (st.k >= 2));
            }
            CHECK(s.steps[0].delta < prev);
            prev = s.steps[0].delta;
        }
    }
    CHECK(theory_schedule(2.0, 10, 200, 20000, 2000).regime == SmoothnessRegime::fast);
    CHECK(theory_schedule(1.2, 10, 200, 20000, 2000).regime == SmoothnessRegime::intermediate);
    CHECK(theory_schedule(1.0, 10, 200, 20000, 2000).regime == SmoothnessRegime::boundary);
}

TEST_CASE("schedule becomes a runnable pipeline config") {
    const auto s = theory_schedule(1.2, 10, 200, 20000, 2000);
    const auto pc = pipeline_from_schedule(s, 2000, FitSettings{}, 3);
    CHECK(pc.K == 3);
    CHECK(pc.b.size() == 2);
    CHECK_NOTHROW(pc.validate());
}

TEST_CASE("pipeline config validation names the field") {
    PipelineConfig pc;
    pc.b = {1.0};
    pc.budget_split = {0.5, 0.4};
    CHECK_THROWS_WITH_AS(pc.validate(), doctest::Contains("pipeline.split"), ConfigError);
    pc.budget_split = {0.5, 0.5};
    pc.b = {};
    CHECK_THROWS_WITH_AS(pc.validate(), doctest::Contains("pipeline.b"), ConfigError);
}

TEST_CASE("K = 1 is passive uniform subsampling") {
    const auto truth = make_truth(ModelSpec::from_name("logistic"), 20, 4, 1);
    const auto sim = simulate(4000, truth, 2);
    LabelOracle o(sim.labels, 400);
    PipelineConfig pc;
    pc.K = 1;
    pc.budget = 400;
    pc.budget_split = {1.0};
    const auto r = k_step_fit(sim.pool, o, pc);
    REQUIRE(r.iterations.size() == 1);
    CHECK(r.iterations[0].p_hat == 1.0);
    CHECK(r.iterations[0].batch_rows == 4000);
    CHECK(r.iterations[0].c == doctest::Approx(0.1));
    CHECK(std::abs(static_cast<double>(r.labels_total) - 400.0) <= 3.0 * std::sqrt(400.0));
    CHECK(r.iterations[0].cv.has_value());
}

TEST_CASE("k-step fit is deterministic and keeps batches apart") {
    const auto truth = make_truth(ModelSpec::from_name("logistic"), 20, 4, 3);
    const auto sim = simulate(6000, truth, 4);
    PipelineConfig pc;
    pc.K = 2;
    pc.budget = 600;
    pc.b = {1.0};
    pc.seed = 5;
    LabelOracle o1(sim.labels, 600), o2(sim.labels, 600);
    const auto a = k_step_fit(sim.pool, o1, pc);
    const auto b = k_step_fit(sim.pool, o2, pc);
    CHECK(same_report(a, b));
    // Disjoint batches: every label is charged once, so the sum of batch sizes equals the spend.
    CHECK(a.labels_total == a.iterations[0].labels_used + a.iterations[1].labels_used);
    CHECK(a.iterations[1].b == 1.0);
    CHECK(a.iterations[1].batch_rows == 2000);
}

TEST_CASE("warm start still ends every iteration stationary") {
    const auto truth = make_truth(ModelSpec::from_name("logistic"), 20, 4, 7);
    const auto sim = simulate(6000, truth, 8);
    PipelineConfig pc;
    pc.K = 3;
    pc.budget = 900;
    pc.budget_split = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    pc.b = {1.5, 1.0};
    pc.fit.warm_start = true;
    LabelOracle o(sim.labels, 900);
    const auto r = k_step_fit(sim.pool, o, pc);
    REQUIRE(r.iterations.size() == 3);
    for (const auto& it : r.iterations) {
        CAPTURE(it.k);
        CHECK(it.path.converged);
        CHECK(it.path.per_stage.back().omega <= pc.fit.eps_rel * it.lambda * (1 + 1e-12));
    }
}

TEST_CASE("two-step CV with a single b candidate uses it") {
    const auto truth = make_truth(ModelSpec::from_name("binary_response"), 20, 4, 9);
    const auto sim = simulate(8000, truth, 10);
    TwoStepConfig tc;
    tc.budget = 800;
    tc.b_grid.values = {1.2};
    tc.seed = 11;
    LabelOracle o(sim.labels, 800);
    const auto r = two_step_cv_fit(sim.pool, o, tc);
    REQUIRE(r.iterations.size() == 2);
    CHECK(r.iterations[1].b == 1.2);
    REQUIRE(r.b_candidates.size() == 1);
    CHECK(r.algorithm == "two_step_cv");
}

TEST_CASE("two-step CV spends about N labels") {
    const auto truth = make_truth(ModelSpec::from_name("logistic"), 20, 4, 13);
    const auto sim = simulate(10000, truth, 14);
    const double N = 1000;
    double sum = 0.0;
    const int seeds = 6;
    for (int s = 0; s < seeds; ++s) {
        TwoStepConfig tc;
        tc.budget = N;
        tc.b_grid.auto_points = 5;
        tc.seed = static_cast<std::uint64_t>(100 + s);
        LabelOracle o(sim.labels, N);
        const auto r = two_step_cv_fit(sim.pool, o, tc);
        double expected = 0.0;
        for (const auto& it : r.iterations) expected += it.expected_labels;
        // Steps 1 and 3 target N1 + N2; step 2 spends N_cv on the b candidates.
        CHECK(expected <= N * (0.125 + 0.625) + 1e-9);
        CHECK(std::abs(static_cast<double>(r.labels_total) - N) <= 3.0 * std::sqrt(N));
        CHECK(r.labels_total <= o.ceiling());
        sum += static_cast<double>(r.labels_total);
    }
    CHECK(std::abs(sum / seeds - N) <= 3.0 * std::sqrt(N / seeds));
}

TEST_CASE("auto b grid covers the requested quantiles") {
    const auto truth = make_truth(ModelSpec::from_name("logistic"), 5, 2, 15);
    const auto sim = simulate(5000, truth, 16);
    std::vector<std::size_t> rows(5000);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    const auto g = auto_b_grid(sim.pool, rows, truth.theta_star, 10);
    REQUIRE(g.size() == 10);
    for (std::size_t q = 0; q < g.size(); ++q) {
        const double cover = estimate_inclusion_prob(sim.pool, ActiveSetSpec{truth.theta_star, g[q]});
        CHECK(cover == doctest::Approx((q + 1) / 10.0).epsilon(0.01));
    }
}

TEST_CASE("passive path-following recovers the support on a conditional-mean instance") {
    const auto truth = make_truth(ModelSpec::from_name("conditional_mean"), 50, 5, 17);
    const auto sim = simulate(2000, truth, 18);
    LabelOracle o(sim.labels, 2000);
    PipelineConfig pc;
    pc.K = 1;
    pc.budget = 2000;
    pc.budget_split = {1.0};
    const auto r = k_step_fit(sim.pool, o, pc);
    int hits = 0;
    for (std::size_t j = 0; j < 50; ++j) hits += truth.theta_star[j] != 0.0 && r.theta_hat()[j] != 0.0;
    CHECK(hits >= 4);
}

TEST_CASE("second iteration improves on the first at full benchmark scale") {
    // Conditional mean, n = 20000, d = 200, s = 10, N = 2000, K = 2 with a wide band (b = 2).
    int better = 0;
    const int reps = 50;
    for (int rep = 0; rep < reps; ++rep) {
        const std::uint64_t key = derive_key(2024, StreamTag::replicate, {static_cast<std::uint64_t>(rep)});
        const auto truth = make_truth(ModelSpec::from_name("conditional_mean"), 200, 10, derive_key(key, StreamTag::theta));
        const auto sim = simulate(20000, truth, derive_key(key, StreamTag::pool_rows));
        LabelOracle o(sim.labels, 2000);
        PipelineConfig pc;
        pc.K = 2;
        pc.budget = 2000;
        pc.b = {2.0};
        pc.seed = key;
        const auto r = k_step_fit(sim.pool, o, pc);
        better += l2_err(r.iterations[1].theta, truth.theta_star) < l2_err(r.iterations[0].theta, truth.theta_star);
    }
    MESSAGE("theta_2 better than theta_1 in " << better << " of " << reps);
    CHECK(better >= 45);
}
