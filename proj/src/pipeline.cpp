#include "mcid/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "mcid/errors.hpp"
#include "mcid/rng.hpp"

namespace mcid {
namespace {

constexpr double kBetaFast = 1.3660254037844386;  // (1 + sqrt 3) / 2

struct BatchFit {
    std::vector<double> theta;
    double lambda = 0.0;
    std::optional<CvResult> cv;
    PathResult path;
};

// Fits one labeled batch: lambda by CV (or fixed), then path-following to it.
BatchFit fit_batch(const LabeledBatch& batch, const LossSpec& spec, const LambdaChoice& lambda,
                   const FitSettings& fit, std::span<const double> warm, std::uint64_t fold_key) {
    if (batch.empty()) throw SamplingDegenerateError("no labeled records were drawn");
    const auto loss = spec.make(batch);
    BatchFit out;
    if (lambda.fixed) {
        out.lambda = *lambda.fixed;
    } else {
        std::vector<double> grad(batch.dim());
        std::vector<double> zero(batch.dim(), 0.0);
        loss->value_and_gradient(zero, grad);
        const double lambda0 = linf_norm(grad);
        if (!(lambda0 > 0.0)) throw SamplingDegenerateError("loss gradient vanishes at zero; no lambda grid");
        const auto grid = lambda_grid(lambda0, lambda.grid_size, lambda.grid_ratio);
        CvOptions opts;
        opts.folds = fit.cv_folds;
        opts.eps_rel = fit.eps_rel;
        opts.fold_key = fold_key;
        out.cv = cv_lambda(batch, spec, grid, fit.solver, opts);
        out.lambda = out.cv->lambda_hat;
    }
    SolverConfig cfg = fit.solver;
    cfg.eta = batch_step_size(fit.solver.eta, batch);
    cfg.lambda_tgt = out.lambda;
    cfg.eps_tgt = fit.eps_rel * out.lambda;
    out.path = path_following(*loss, cfg, warm);
    out.theta = out.path.theta_hat;
    return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string at_iteration(int k, const std::string& what) {
    return "iteration " + std::to_string(k) + ": " + what;
}

// Runs `body` and re-raises library errors with the iteration attached.
template <class F>
auto annotate(int k, F&& body) {
    try {
        return body();
    } catch (const BudgetError& e) {
        if (e.iteration() >= 0) throw;
        throw BudgetError(at_iteration(k, e.what()), k);
    } catch (const SamplingDegenerateError& e) {
        throw SamplingDegenerateError(at_iteration(k, e.what()));
    } catch (const NumericalError& e) {
        throw NumericalError(at_iteration(k, e.what()), e.stage());
    }
}

void check_fraction_vector(const std::vector<double>& f, const char* name) {
    if (f.empty()) throw ConfigError(std::string(name) + ": must not be empty");
    double sum = 0.0;
    for (double v : f) {
        if (!(v > 0.0)) throw ConfigError(std::string(name) + ": fractions must be positive");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ConfigError(std::string(name) + ": fractions must sum to 1");
}

void check_fit(const FitSettings& fit) {
    if (fit.cv_folds < 2) throw ConfigError("cv.folds: must be at least 2");
    if (!(fit.eps_rel > 0.0)) throw ConfigError("solver.eps_rel: must be positive");
    if (!(fit.solver.eta > 0.0)) throw ConfigError("solver.eta: must be positive");
    if (!(fit.solver.nu > 0.0 && fit.solver.nu < 1.0)) throw ConfigError("solver.nu: must lie in (0, 1)");
    if (fit.solver.stages < 1) throw ConfigError("solver.stages: must be positive");
    if (fit.solver.max_inner_iters < 1) throw ConfigError("solver.max_inner_iters: must be positive");
}

void check_lambda(const LambdaChoice& l) {
    if (l.fixed && !(*l.fixed > 0.0)) throw ConfigError("pipeline.lambda: fixed values must be positive");
    if (l.grid_size == 0) throw ConfigError("cv.grid_size: must be positive");
    if (!(l.grid_ratio >= 1.0)) throw ConfigError("cv.grid_ratio: must be at least 1");
}

LossSpec make_spec(const FitSettings& fit, double delta, const ClassWeights& w) {
    LossSpec spec;
    spec.type = fit.loss;
    spec.delta = delta;
    spec.kernel = fit.kernel;
    spec.weights = w;
    return spec;
}

IterationReport make_iteration(int k, BatchFit&& bf, const LabeledBatch& batch, std::size_t rows, double p_hat,
                               SamplingRate rate, double delta, std::optional<double> b, double secs) {
    IterationReport it;
    it.k = k;
    it.theta = std::move(bf.theta);
    it.labels_used = batch.size();
    it.batch_rows = rows;
    it.p_hat = p_hat;
    it.c = rate.c;
    it.c_clamped = rate.clamped;
    it.expected_labels = rate.c * p_hat * static_cast<double>(rows);
    it.delta = delta;
    it.lambda = bf.lambda;
    it.b = b;
    it.cv = std::move(bf.cv);
    it.path = std::move(bf.path);
    it.seconds = secs;
    return it;
}

std::string clamp_note(int k, double p_hat, std::size_t rows, double budget_k) {
    return at_iteration(k, "sampling rate clamped to 1; expected labels " +
                               std::to_string(p_hat * static_cast<double>(rows)) + " < budget " +
                               std::to_string(budget_k));
}

}  // namespace

void PipelineConfig::validate() const {
    if (K < 1) throw ConfigError("pipeline.k: must be at least 1");
    if (!(budget > 0.0)) throw ConfigError("pipeline.budget: must be positive");
    check_fraction_vector(budget_split, "pipeline.split");
    if (budget_split.size() != static_cast<std::size_t>(K)) {
        throw ConfigError("pipeline.split: needs " + std::to_string(K) + " fractions, one per iteration");
    }
    if (delta.size() != 1 && delta.size() != static_cast<std::size_t>(K)) {
        throw ConfigError("pipeline.delta: give one value or one per iteration");
    }
    for (double v : delta) {
        if (!(v > 0.0)) throw ConfigError("pipeline.delta: must be positive");
    }
    if (lambda.size() != 1 && lambda.size() != static_cast<std::size_t>(K)) {
        throw ConfigError("pipeline.lambda: give one value or one per iteration");
    }
    for (const auto& l : lambda) check_lambda(l);
    if (b.size() != static_cast<std::size_t>(K - 1)) {
        throw ConfigError("pipeline.b: needs " + std::to_string(K - 1) + " values (b_1..b_{K-1})");
    }
    for (double v : b) {
        if (!(v > 0.0)) throw ConfigError("pipeline.b: must be positive");
    }
    check_fit(fit);
}

double PipelineConfig::delta_at(int k) const { return delta.size() == 1 ? delta[0] : delta[static_cast<std::size_t>(k - 1)]; }

const LambdaChoice& PipelineConfig::lambda_at(int k) const {
    return lambda.size() == 1 ? lambda[0] : lambda[static_cast<std::size_t>(k - 1)];
}

FitReport k_step_fit(const UnlabeledPool& pool, LabelOracle& oracle, const PipelineConfig& cfg) {
    cfg.validate();
    pool.validate();
    const std::size_t n = pool.size();
    const auto K = static_cast<std::size_t>(cfg.K);
    if (n < K * cfg.min_batch) {
        throw ArgumentError("pool has " + std::to_string(n) + " rows; need at least " +
                            std::to_string(K * cfg.min_batch) + " for K = " + std::to_string(cfg.K));
    }

    std::vector<std::vector<std::size_t>> slices;
    if (K == 1) {
        slices.emplace_back(n);
        std::iota(slices[0].begin(), slices[0].end(), std::size_t{0});
    } else {
        const std::vector<double> eq(K + 1, 1.0 / static_cast<double>(K + 1));
        slices = split_pool(n, eq, cfg.seed, 0);
    }
    const std::vector<std::size_t> empty;
    const auto& d0 = K == 1 ? empty : slices[0];

    FitReport report;
    report.algorithm = "k_step";
    report.budget = cfg.budget;
    const std::size_t issued0 = oracle.labels_issued();

    for (int k = 1; k <= cfg.K; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto& rows = K == 1 ? slices[0] : slices[static_cast<std::size_t>(k)];
        const double budget_k = cfg.budget * cfg.budget_split[static_cast<std::size_t>(k - 1)];
        annotate(k, [&] {
            std::optional<ActiveSetSpec> spec;
            double p_hat = 1.0;
            std::optional<double> b;
            if (k >= 2) {
                b = cfg.b[static_cast<std::size_t>(k - 2)];
                spec = ActiveSetSpec{report.iterations.back().theta, *b};
                p_hat = estimate_inclusion_prob(pool, d0, *spec);
            }
            const SamplingRate rate = sampling_rate(budget_k, rows.size(), p_hat);
            if (rate.clamped) report.notes.push_back(clamp_note(k, p_hat, rows.size(), budget_k));

            DrawRequest req;
            req.rows = rows;
            req.spec = spec ? &*spec : nullptr;
            req.c = rate.c;
            req.stream_key = derive_key(cfg.seed, StreamTag::select, {static_cast<std::uint64_t>(k)});
            req.iteration = k;
            const LabeledBatch batch = draw_and_label(pool, req, oracle);
            if (k == 1) {
                if (batch.empty()) throw SamplingDegenerateError("no labeled records were drawn");
                report.weights = class_weights_from(batch);
            }
            const LossSpec loss = make_spec(cfg.fit, cfg.delta_at(k), report.weights);
            std::span<const double> warm;
            if (k >= 2 && cfg.fit.warm_start) warm = report.iterations.back().theta;
            BatchFit bf = fit_batch(batch, loss, cfg.lambda_at(k), cfg.fit, warm,
                                    derive_key(cfg.seed, StreamTag::folds, {static_cast<std::uint64_t>(k)}));
            report.iterations.push_back(
                make_iteration(k, std::move(bf), batch, rows.size(), p_hat, rate, cfg.delta_at(k), b, seconds_since(t0)));
            return 0;
        });
    }
    report.labels_total = oracle.labels_issued() - issued0;
    return report;
}

void TwoStepConfig::validate() const {
    if (!(budget > 0.0)) throw ConfigError("pipeline.budget: must be positive");
    check_fraction_vector(split, "pipeline.split");
    if (split.size() != 3) throw ConfigError("pipeline.split: two-step CV needs three fractions (N1, N_cv, N2)");
    if (b_grid.values.empty() && b_grid.auto_points == 0) throw ConfigError("pipeline.b_grid: must not be empty");
    for (double v : b_grid.values) {
        if (!(v > 0.0)) throw ConfigError("pipeline.b_grid: values must be positive");
    }
    if (!(delta1 > 0.0) || !(delta2 > 0.0)) throw ConfigError("pipeline.delta: must be positive");
    check_lambda(lambda);
    check_fit(fit);
}

std::vector<double> auto_b_grid(const UnlabeledPool& pool, std::span<const std::size_t> rows,
                                std::span<const double> theta, std::size_t points) {
    if (rows.empty()) throw ArgumentError("auto_b_grid: no rows");
    if (points == 0) throw ArgumentError("auto_b_grid: points must be positive");
    std::vector<double> m;
    m.reserve(rows.size());
    for (std::size_t r : rows) m.push_back(normalized_margin(pool.x[r], pool.z.row(r), theta));
    std::sort(m.begin(), m.end());
    std::vector<double> grid;
    for (std::size_t j = 1; j <= points; ++j) {
        // Smallest margin covering a fraction j/points of the rows.
        const double q = static_cast<double>(j) / static_cast<double>(points);
        auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(m.size()) - 1e-9));
        idx = std::clamp<std::size_t>(idx, 1, m.size()) - 1;
        grid.push_back(std::max(m[idx], std::numeric_limits<double>::min()));
    }
    return grid;
}

FitReport two_step_cv_fit(const UnlabeledPool& pool, LabelOracle& oracle, const TwoStepConfig& cfg) {
    cfg.validate();
    pool.validate();
    const std::size_t n = pool.size();
    const auto slices = split_pool(n, cfg.split, cfg.seed, 1);
    const auto& d1 = slices[0];
    const auto& dcv = slices[1];
    const auto& d2 = slices[2];
    for (const auto& s : slices) {
        if (s.empty()) throw ArgumentError("pool too small for the two-step split");
    }

    FitReport report;
    report.algorithm = "two_step_cv";
    report.budget = cfg.budget;
    const std::size_t issued0 = oracle.labels_issued();
    const double n1 = cfg.budget * cfg.split[0];
    const double ncv = cfg.budget * cfg.split[1];
    const double n2 = cfg.budget * cfg.split[2];

    // Step 1: uniform sample of D_1 and an initial estimate.
    annotate(1, [&] {
        const auto t0 = std::chrono::steady_clock::now();
        const SamplingRate rate = sampling_rate(n1, d1.size(), 1.0);
        if (rate.clamped) report.notes.push_back(clamp_note(1, 1.0, d1.size(), n1));
        DrawRequest req;
        req.rows = d1;
        req.c = rate.c;
        req.stream_key = derive_key(cfg.seed, StreamTag::select, {1});
        req.iteration = 1;
        const LabeledBatch batch = draw_and_label(pool, req, oracle);
        if (batch.empty()) throw SamplingDegenerateError("no labeled records were drawn");
        report.weights = class_weights_from(batch);
        const LossSpec loss = make_spec(cfg.fit, cfg.delta1, report.weights);
        BatchFit bf = fit_batch(batch, loss, cfg.lambda, cfg.fit, {}, derive_key(cfg.seed, StreamTag::folds, {1}));
        report.iterations.push_back(
            make_iteration(1, std::move(bf), batch, d1.size(), 1.0, rate, cfg.delta1, std::nullopt, seconds_since(t0)));
        return 0;
    });
    const std::vector<double> theta1 = report.iterations[0].theta;

    // Step 2: one CV run per candidate b on its own draw from D_cv.
    const std::vector<double> grid =
        cfg.b_grid.values.empty() ? auto_b_grid(pool, dcv, theta1, cfg.b_grid.auto_points) : cfg.b_grid.values;
    const LossSpec loss2 = make_spec(cfg.fit, cfg.delta2, report.weights);
    annotate(2, [&] {
        const double per_b = ncv / static_cast<double>(grid.size());
        for (std::size_t j = 0; j < grid.size(); ++j) {
            BCandidate cand;
            cand.b = grid[j];
            const ActiveSetSpec spec{theta1, grid[j]};
            cand.p_hat = estimate_inclusion_prob(pool, dcv, spec);
            if (cand.p_hat == 0.0) {
                cand.skipped = true;
                cand.cv_score = std::numeric_limits<double>::infinity();
                report.notes.push_back(at_iteration(2, "b = " + std::to_string(grid[j]) + " has an empty band; skipped"));
                report.b_candidates.push_back(cand);
                continue;
            }
            const SamplingRate rate = sampling_rate(per_b, dcv.size(), cand.p_hat);
            cand.c = rate.c;
            DrawRequest req;
            req.rows = dcv;
            req.spec = &spec;
            req.c = rate.c;
            req.stream_key = derive_key(cfg.seed, StreamTag::select, {2, j});
            req.iteration = 2;
            const LabeledBatch batch = draw_and_label(pool, req, oracle);
            cand.labels = batch.size();
            if (batch.size() < static_cast<std::size_t>(2 * cfg.fit.cv_folds)) {
                cand.skipped = true;
                cand.cv_score = std::numeric_limits<double>::infinity();
                report.notes.push_back(at_iteration(2, "b = " + std::to_string(grid[j]) + " drew " +
                                                           std::to_string(batch.size()) + " labels; skipped"));
                report.b_candidates.push_back(cand);
                continue;
            }
            std::vector<double> grad(batch.dim());
            std::vector<double> zero(batch.dim(), 0.0);
            loss2.make(batch)->value_and_gradient(zero, grad);
            const double lambda0 = linf_norm(grad);
            if (!(lambda0 > 0.0)) {
                cand.skipped = true;
                cand.cv_score = std::numeric_limits<double>::infinity();
                report.b_candidates.push_back(cand);
                continue;
            }
            CvOptions opts;
            opts.folds = cfg.fit.cv_folds;
            opts.eps_rel = cfg.fit.eps_rel;
            opts.fold_key = derive_key(cfg.seed, StreamTag::folds, {2, j});
            const CvResult cv = cv_lambda(batch, loss2, lambda_grid(lambda0, cfg.lambda.grid_size, cfg.lambda.grid_ratio),
                                          cfg.fit.solver, opts);
            cand.cv_score = cv.cv_min;
            cand.lambda_opt = cv.lambda_hat;
            report.b_candidates.push_back(cand);
        }
        return 0;
    });
    std::vector<std::pair<double, double>> scored;
    for (const auto& c : report.b_candidates) {
        if (!c.skipped) scored.emplace_back(c.b, c.cv_score);
    }
    if (scored.empty()) throw SamplingDegenerateError(at_iteration(2, "every candidate b was skipped"));
    const double b_hat = cv_b(scored);

    // Step 3: active sample of D_2 with the selected b and the final estimate.
    annotate(3, [&] {
        const auto t0 = std::chrono::steady_clock::now();
        const ActiveSetSpec spec{theta1, b_hat};
        const double p_hat = estimate_inclusion_prob(pool, d2, spec);
        const SamplingRate rate = sampling_rate(n2, d2.size(), p_hat);
        if (rate.clamped) report.notes.push_back(clamp_note(3, p_hat, d2.size(), n2));
        DrawRequest req;
        req.rows = d2;
        req.spec = &spec;
        req.c = rate.c;
        req.stream_key = derive_key(cfg.seed, StreamTag::select, {3});
        req.iteration = 3;
        const LabeledBatch batch = draw_and_label(pool, req, oracle);
        std::span<const double> warm;
        if (cfg.fit.warm_start) warm = theta1;
        BatchFit bf = fit_batch(batch, loss2, cfg.lambda, cfg.fit, warm, derive_key(cfg.seed, StreamTag::folds, {3}));
        report.iterations.push_back(
            make_iteration(2, std::move(bf), batch, d2.size(), p_hat, rate, cfg.delta2, b_hat, seconds_since(t0)));
        return 0;
    });
    report.labels_total = oracle.labels_issued() - issued0;
    return report;
}

int strict_ceil(double a) { return static_cast<int>(std::floor(a)) + 1; }

int theory_iterations(double beta, double N) {
    if (!(beta >= 1.0)) {
        throw ArgumentError("smoothness beta < 1 is not supported (the active-sampling guarantees need beta >= 1)");
    }
    if (!(N > 1.0)) throw ArgumentError("theory schedule needs a budget N > 1");
    if (beta > kBetaFast) return 2;
    if (beta > 1.0) {
        const double r = beta / (2.0 * beta + 1.0);
        const double arg = 1.0 - (beta + 1.0) / (2.0 * beta * beta);
        const double a = std::log(arg) / std::log(r);
        if (!std::isfinite(a) || a > 1000.0) throw ArgumentError("beta too close to 1: iteration count diverges");
        return strict_ceil(a) + 1;
    }
    return std::max(1, strict_ceil(std::log(std::log(N)) / std::log(3.0)));
}

TheorySchedule theory_schedule(double beta, double s, double d, double n, double N, TheoryConstants c) {
    if (!(s > 0.0) || !(d > 1.0) || !(n > 0.0) || !(N > 0.0)) {
        throw ArgumentError("theory schedule needs s > 0, d > 1, n > 0 and N > 0");
    }
    if (!(c.c1 > 0.0 && c.c2 > 0.0 && c.c3 > 0.0)) throw ArgumentError("theory constants must be positive");
    TheorySchedule out;
    out.K = theory_iterations(beta, N);
    const int K = out.K;
    const double logd = std::log(d);
    const double ratio = s * logd / N;  // s log d / N
    const double n2 = n * n;
    out.steps.resize(static_cast<std::size_t>(K));
    for (int k = 1; k <= K; ++k) out.steps[static_cast<std::size_t>(k - 1)].k = k;
    for (auto& st : out.steps) st.N_k = N / K;

    auto lam = [&](double mult, double b, double delta) { return c.c2 * std::sqrt(mult * N * logd / (n2 * b * delta)); };

    if (beta > kBetaFast || beta > 1.0) {
        out.regime = beta > kBetaFast ? SmoothnessRegime::fast : SmoothnessRegime::intermediate;
        auto& s1 = out.steps[0];
        s1.delta = c.c1 * std::pow(ratio, 1.0 / (2.0 * beta + 1.0));
        s1.lambda = lam(1.0, 1.0, s1.delta);
        const double r = beta / (2.0 * beta + 1.0);
        for (int k = 2; k <= K; ++k) {
            auto& st = out.steps[static_cast<std::size_t>(k - 1)];
            double b;
            if (out.regime == SmoothnessRegime::fast || k == K) {
                b = c.c3 * std::pow(ratio, 1.0 / (2.0 * beta));
                st.delta = c.c1 * std::pow(ratio, 1.0 / (2.0 * beta));
            } else {
                const double e = 1.0 - std::pow(r, k - 1);
                b = c.c3 * std::pow(std::log(1.0 / ratio), (2.0 * beta + 1.0) * e / (2.0 * (beta + 1.0))) *
                    std::pow(ratio, beta / (beta + 1.0) * e);
                st.delta = c.c1 * std::pow(b * ratio, 1.0 / (2.0 * beta + 1.0));
            }
            st.b_prev = b;
            st.lambda = lam(1.0, b, st.delta);
        }
    } else {
        out.regime = SmoothnessRegime::boundary;
        const double kr = K * ratio;  // K s log d / N
        auto& s1 = out.steps[0];
        s1.delta = c.c1 * std::cbrt(kr);
        s1.lambda = lam(K, 1.0, s1.delta);
        for (int k = 2; k <= K; ++k) {
            auto& st = out.steps[static_cast<std::size_t>(k - 1)];
            const double b = c.c3 * std::pow(std::log(1.0 / kr), (3.0 - std::pow(3.0, -(k - 2))) / 4.0) *
                             std::pow(kr, (1.0 - std::pow(3.0, -(k - 1))) / 2.0);
            st.b_prev = b;
            st.delta = c.c1 * std::cbrt(b * kr);
            st.lambda = lam(K, b, st.delta);
        }
    }
    for (const auto& st : out.steps) {
        if (!(st.delta > 0.0) || !(st.lambda > 0.0) || !std::isfinite(st.delta) || !std::isfinite(st.lambda) ||
            (st.b_prev && !(*st.b_prev > 0.0 && std::isfinite(*st.b_prev)))) {
            throw ArgumentError("theory schedule produced a non-positive value; s log d must be small relative to N");
        }
    }
    return out;
}

PipelineConfig pipeline_from_schedule(const TheorySchedule& sched, double N, const FitSettings& fit,
                                      std::uint64_t seed) {
    PipelineConfig cfg;
    cfg.K = sched.K;
    cfg.budget = N;
    cfg.budget_split.assign(static_cast<std::size_t>(sched.K), 1.0 / sched.K);
    // Equal fractions may miss 1 by rounding; put the slack on the last one.
    cfg.budget_split.back() = 1.0 - std::accumulate(cfg.budget_split.begin(), cfg.budget_split.end() - 1, 0.0);
    cfg.delta.clear();
    cfg.lambda.clear();
    cfg.b.clear();
    for (const auto& st : sched.steps) {
        cfg.delta.push_back(st.delta);
        LambdaChoice l;
        l.fixed = st.lambda;
        cfg.lambda.push_back(l);
        if (st.b_prev) cfg.b.push_back(*st.b_prev);
    }
    cfg.fit = fit;
    cfg.seed = seed;
    return cfg;
}

std::string regime_name(SmoothnessRegime r) {
    switch (r) {
        case SmoothnessRegime::fast: return "beta>(1+sqrt3)/2";
        case SmoothnessRegime::intermediate: return "1<beta<=(1+sqrt3)/2";
        case SmoothnessRegime::boundary: return "beta=1";
    }
    return "?";
}

}  // namespace mcid
