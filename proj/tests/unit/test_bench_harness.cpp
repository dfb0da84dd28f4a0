#include "doctest.h"

#include <cmath>
#include <sstream>

#include "mcid/bench_harness.hpp"
#include "mcid/errors.hpp"
#include "mcid/rng.hpp"

using namespace mcid;

namespace {

ExperimentConfig small(const char* model) {
    ExperimentConfig e;
    e.model = ModelSpec::from_name(model);
    e.n = 4000;
    e.d = 20;
    e.s = 4;
    e.budget = 400;
    e.reps = 3;
    e.eval_n = 20000;
    e.seed = 9;
    return e;
}

}  // namespace

TEST_CASE("prediction error at the truth of the conditional mean model") {
    const auto truth = make_truth(ModelSpec::from_name("conditional_mean"), 20, 4, 1);
    const auto ev = gen_eval(truth, 2, 0, 100000);
    CHECK(prediction_error(truth.theta_star, ev) < 1e-3);
}

TEST_CASE("prediction error of theta = 0 on the logistic model matches an independent Monte Carlo") {
    const auto truth = make_truth(ModelSpec::from_name("logistic"), 10, 3, 3);
    const auto ev = gen_eval(truth, 4, 0, 200000);
    const double pe = prediction_error(std::vector<double>(10, 0.0), ev);
    // Independent stream, own balanced-error tally.
    double ep = 0, np = 0, em = 0, nm = 0;
    generate_rows(truth, 5, 0, 1000000, [&](double x, std::span<const double>, int y) {
        const int pred = x >= 0 ? 1 : -1;
        if (y > 0) np += 1, ep += pred != y;
        else nm += 1, em += pred != y;
    });
    const double mc = 0.5 * (ep / np + em / nm);
    const double se = 0.5 * std::sqrt(mc * (1 - mc) * (1 / np + 1 / nm)) + 0.5 * std::sqrt(pe * (1 - pe) * 4 / 200000.0);
    CHECK(std::abs(pe - mc) <= 3.0 * se);
}

TEST_CASE("prediction error is one half when labels are independent of the rule") {
    const auto truth = make_truth(ModelSpec::from_name("logistic"), 10, 3, 6);
    auto ev = gen_eval(truth, 7, 0, 100000);
    for (std::size_t i = 0; i < ev.y.size(); ++i) ev.y[i] = uniform_at(99, i) < 0.5 ? 1 : -1;
    const double pe = prediction_error(truth.theta_star, ev);
    CHECK(std::abs(pe - 0.5) <= 3.0 * 0.5 / std::sqrt(100000.0));
}

TEST_CASE("aggregate: single replicate gets sd 0 with the degenerate flag") {
    ReplicateRow r;
    r.model = "logistic";
    r.method = "passive_pf";
    r.N = 100;
    r.l1 = 1.0;
    r.l2 = 0.5;
    const auto rows = aggregate({r});
    REQUIRE(rows.size() == 4);
    for (const auto& row : rows) {
        CHECK(row.reps == 1);
        CHECK(row.sd == 0.0);
        CHECK(row.sd_degenerate);
    }
}

TEST_CASE("method names round-trip") {
    for (Method m : {Method::passive_pf, Method::twostep_pf, Method::passive_lr, Method::twostep_lr}) {
        CHECK(method_from_name(method_name(m)) == m);
    }
    CHECK(is_two_step(Method::twostep_lr));
    CHECK_FALSE(is_two_step(Method::passive_pf));
    CHECK_THROWS_AS(method_from_name("active_svm"), ConfigError);
}

TEST_CASE("comparison run: schema, replicate counts and budget cap") {
    auto e = small("logistic");
    e.methods = {Method::passive_pf, Method::twostep_pf, Method::passive_lr, Method::twostep_lr};
    const auto rep = run_comparison(e);
    CHECK(rep.failures == 0);
    CHECK(rep.replicates.size() == 12);
    for (const auto& r : rep.replicates) {
        CHECK(static_cast<double>(r.labels) <= 2 * e.budget);
        CHECK(r.l2 >= 0.0);
        CHECK(r.l1 >= r.l2);
        CHECK(r.l2 >= r.linf);
        CHECK((r.pred_err >= 0.0 && r.pred_err <= 1.0));
        if (r.method.rfind("twostep", 0) == 0) CHECK(r.b_hat > 0.0);
    }
    for (const auto& row : rep.rows) {
        CHECK(row.reps == 3);
        CHECK(row.sd >= 0.0);
    }
    std::ostringstream os;
    write_report_csv(os, rep.rows);
    CHECK(os.str().rfind("model,method,metric,b,N,mean,sd,reps\n", 0) == 0);

    // Same config, same numbers.
    const auto again = run_comparison(e);
    for (std::size_t i = 0; i < rep.replicates.size(); ++i) CHECK(again.replicates[i].l2 == rep.replicates[i].l2);
}

TEST_CASE("aggregates regenerate exactly from the detail CSV") {
    const auto rep = run_comparison(small("binary_response"));
    std::stringstream ss;
    write_detail_csv(ss, rep.replicates);
    const auto back = read_detail_csv(ss);
    REQUIRE(back.size() == rep.replicates.size());
    const auto rows = aggregate(back);
    REQUIRE(rows.size() == rep.rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].mean == rep.rows[i].mean);
        CHECK(rows[i].sd == rep.rows[i].sd);
    }
}

TEST_CASE("b sweep: passive rows repeat across b") {
    auto e = small("conditional_mean");
    e.reps = 2;
    e.sweep = BGrid{{}, 4};
    const auto rep = run_b_sweep(e);
    REQUIRE(rep.b_grid.size() == 4);
    const ReportRow* first = rep.find("passive_pf", "l2", rep.b_grid.front());
    REQUIRE(first != nullptr);
    for (double b : rep.b_grid) {
        const ReportRow* p = rep.find("passive_pf", "l2", b);
        REQUIRE(p != nullptr);
        CHECK(p->mean == first->mean);
        CHECK(rep.find("twostep_pf", "l2", b) != nullptr);
    }
    CHECK_THROWS_AS(run_b_sweep(small("logistic")), ConfigError);
}

TEST_CASE("least-squares slope") {
    const std::vector<double> x = {1, 2, 3, 4}, y = {1.5, 1.0, 0.5, 0.0};
    const auto [b, a] = ls_slope(x, y);
    CHECK(b == doctest::Approx(-0.5));
    CHECK(a == doctest::Approx(2.0));
    CHECK_THROWS_AS(ls_slope(std::vector<double>{1, 1}, std::vector<double>{1, 2}), ArgumentError);
}

TEST_CASE("parallel_for runs every task once") {
    std::vector<int> hits(100, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
    for (int h : hits) CHECK(h == 1);
}

TEST_CASE("experiment config validation names the field") {
    auto e = small("logistic");
    e.reps = 0;
    CHECK_THROWS_WITH_AS(e.validate(), doctest::Contains("experiment.reps"), ConfigError);
    e = small("logistic");
    e.d = 0;
    CHECK_THROWS_WITH_AS(e.validate(), doctest::Contains("data.d"), ConfigError);
}
