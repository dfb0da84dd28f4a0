#include "mcid/bench_harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include "mcid/errors.hpp"
#include "mcid/rng.hpp"
#include "mcid/vecops.hpp"

namespace mcid {
namespace {

constexpr std::size_t kEvalChunk = 10000;

struct Arm {
    Method method;
    std::optional<double> b;   // fixed b (sweep); CV two-step when absent
};

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); }

FitSettings arm_fit(const ExperimentConfig& cfg, Method m) {
    FitSettings f = cfg.fit;
    f.loss = (m == Method::passive_lr || m == Method::twostep_lr) ? LossType::logistic : LossType::smoothed;
    return f;
}

// Fits one arm on the replicate's pool and returns theta-hat; fills labels and b_hat.
std::vector<double> fit_arm(const ExperimentConfig& cfg, const SimulatedPool& sim, const Arm& arm, double N,
                            std::uint64_t arm_seed, ReplicateRow& row) {
    LabelOracle oracle(sim.labels, N);
    if (!is_two_step(arm.method)) {
        PipelineConfig pc;
        pc.K = 1;
        pc.budget = N;
        pc.budget_split = {1.0};
        pc.delta = {cfg.two_step.delta1};
        pc.lambda = {cfg.two_step.lambda};
        pc.b = {};
        pc.fit = arm_fit(cfg, arm.method);
        pc.seed = arm_seed;
        const FitReport rep = k_step_fit(sim.pool, oracle, pc);
        if (cfg.on_fit) cfg.on_fit(rep);
        row.labels = rep.labels_total;
        return rep.theta_hat();
    }
    if (arm.b) {
        PipelineConfig pc;
        pc.K = 2;
        pc.budget = N;
        pc.budget_split = cfg.sweep_split;
        pc.delta = {cfg.two_step.delta1, cfg.two_step.delta2};
        pc.lambda = {cfg.two_step.lambda};
        pc.b = {*arm.b};
        pc.fit = arm_fit(cfg, arm.method);
        pc.seed = arm_seed;
        const FitReport rep = k_step_fit(sim.pool, oracle, pc);
        if (cfg.on_fit) cfg.on_fit(rep);
        row.labels = rep.labels_total;
        row.b_hat = *arm.b;
        return rep.theta_hat();
    }
    TwoStepConfig tc = cfg.two_step;
    tc.budget = N;
    tc.fit = arm_fit(cfg, arm.method);
    tc.seed = arm_seed;
    const FitReport rep = two_step_cv_fit(sim.pool, oracle, tc);
    if (cfg.on_fit) cfg.on_fit(rep);
    row.labels = rep.labels_total;
    row.b_hat = rep.iterations.back().b.value_or(0.0);
    return rep.theta_hat();
}

std::uint64_t replicate_key(const ExperimentConfig& cfg, int rep) {
    return derive_key(cfg.seed, StreamTag::replicate, {static_cast<std::uint64_t>(rep)});
}

std::vector<ReplicateRow> run_replicate(const ExperimentConfig& cfg, int rep, double N, const std::vector<Arm>& arms) {
    const std::uint64_t key = replicate_key(cfg, rep);
    const TruthSpec truth = make_truth(cfg.model, cfg.d, cfg.s, derive_key(key, StreamTag::theta));
    const SimulatedPool sim = simulate(cfg.n, truth, derive_key(key, StreamTag::pool_rows));

    std::vector<ReplicateRow> rows(arms.size());
    std::vector<std::vector<double>> thetas(arms.size());
    for (std::size_t a = 0; a < arms.size(); ++a) {
        auto& row = rows[a];
        row.model = cfg.model.name();
        row.method = method_name(arms[a].method);
        row.b = arms[a].b;
        row.N = N;
        row.rep = rep;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const std::uint64_t arm_seed =
                derive_key(key, StreamTag::select, {static_cast<std::uint64_t>(arms[a].method), a});
            thetas[a] = fit_arm(cfg, sim, arms[a], N, arm_seed, row);
            std::vector<double> diff(cfg.d);
            for (std::size_t j = 0; j < cfg.d; ++j) diff[j] = thetas[a][j] - truth.theta_star[j];
            row.l1 = l1_norm(diff);
            row.l2 = l2_norm(diff);
            row.linf = linf_norm(diff);
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
        }
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    // Evaluation rows are streamed in chunks so the 10^5 x d set never sits in memory at once.
    std::vector<ErrorTally> tallies(arms.size());
    const std::uint64_t eval_key = derive_key(key, StreamTag::eval_rows);
    for (std::size_t first = 0; first < cfg.eval_n; first += kEvalChunk) {
        const EvalSet chunk = gen_eval(truth, eval_key, first, std::min(kEvalChunk, cfg.eval_n - first));
        for (std::size_t a = 0; a < arms.size(); ++a) {
            if (!rows[a].failed) tallies[a].add(thetas[a], chunk);
        }
    }
    for (std::size_t a = 0; a < arms.size(); ++a) {
        if (!rows[a].failed) rows[a].pred_err = tallies[a].value();
    }
    return rows;
}

BenchmarkReport run_replicates(const ExperimentConfig& cfg, double N, const std::vector<Arm>& arms) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::vector<ReplicateRow>> per_rep(static_cast<std::size_t>(cfg.reps));
    parallel_for(per_rep.size(), cfg.workers,
                 [&](std::size_t r) { per_rep[r] = run_replicate(cfg, static_cast<int>(r), N, arms); });
    BenchmarkReport report;
    for (auto& rows : per_rep) {
        for (auto& row : rows) {
            if (row.failed) ++report.failures;
            report.replicates.push_back(std::move(row));
        }
    }
    report.rows = aggregate(report.replicates);
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

std::vector<double> pilot_b_grid(const ExperimentConfig& cfg, const BGrid& grid) {
    if (!grid.values.empty()) return grid.values;
    const std::uint64_t key = derive_key(cfg.seed, StreamTag::pilot);
    const TruthSpec truth = make_truth(cfg.model, cfg.d, cfg.s, derive_key(key, StreamTag::theta));
    const SimulatedPool sim = simulate(cfg.n, truth, derive_key(key, StreamTag::pool_rows));
    ReplicateRow scratch;
    const double n1 = cfg.budget * cfg.sweep_split.front();
    const std::vector<double> theta1 =
        fit_arm(cfg, sim, Arm{Method::passive_pf, std::nullopt}, n1, derive_key(key, StreamTag::select), scratch);
    std::vector<std::size_t> rows(sim.pool.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return auto_b_grid(sim.pool, rows, theta1, grid.auto_points);
}

}  // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::passive_pf: return "passive_pf";
        case Method::twostep_pf: return "twostep_pf";
        case Method::passive_lr: return "passive_lr";
        case Method::twostep_lr: return "twostep_lr";
    }
    return "?";
}

Method method_from_name(std::string_view name) {
    if (name == "passive_pf") return Method::passive_pf;
    if (name == "twostep_pf") return Method::twostep_pf;
    if (name == "passive_lr") return Method::passive_lr;
    if (name == "twostep_lr") return Method::twostep_lr;
    throw ConfigError("unknown method '" + std::string(name) +
                      "' (expected passive_pf, twostep_pf, passive_lr or twostep_lr)");
}

bool is_two_step(Method m) { return m == Method::twostep_pf || m == Method::twostep_lr; }

void ExperimentConfig::validate() const {
    model.validate();
    if (n == 0) throw ConfigError("data.n: must be positive");
    if (d == 0) throw ConfigError("data.d: must be positive");
    if (s == 0 || s > d) throw ConfigError("data.s: must lie in [1, d]");
    if (!(budget > 0.0)) throw ConfigError("pipeline.budget: must be positive");
    if (methods.empty()) throw ConfigError("experiment.methods: must not be empty");
    if (reps < 1) throw ConfigError("experiment.reps: must be at least 1");
    if (workers < 0) throw ConfigError("experiment.workers: must be non-negative");
    if (eval_n == 0) throw ConfigError("experiment.eval_n: must be positive");
    if (sweep && sweep->values.empty() && sweep->auto_points == 0) throw ConfigError("sweep.b_grid: must not be empty");
    if (sweep_split.size() != 2 || !(sweep_split[0] > 0.0) || !(sweep_split[1] > 0.0) ||
        std::abs(sweep_split[0] + sweep_split[1] - 1.0) > 1e-12) {
        throw ConfigError("sweep.split: needs two positive fractions summing to 1");
    }
    for (double v : scaling) {
        if (!(v > 0.0)) throw ConfigError("scaling.budgets: must be positive");
    }
    TwoStepConfig ts = two_step;
    ts.budget = budget;
    ts.fit = fit;
    ts.validate();
}

const ReportRow* BenchmarkReport::find(std::string_view method, std::string_view metric, std::optional<double> b,
                                       std::optional<double> N) const {
    for (const auto& r : rows) {
        if (r.method != method || r.metric != metric) continue;
        if (b && (!r.b || *r.b != *b)) continue;
        if (!b && r.b) continue;
        if (N && r.N != *N) continue;
        return &r;
    }
    return nullptr;
}

void ErrorTally::add(std::span<const double> theta, const EvalSet& eval) {
    const auto& ops = vecops::active();
    if (theta.size() != eval.pool.dim()) throw ArgumentError("prediction_error: dimension mismatch");
    for (std::size_t i = 0; i < eval.y.size(); ++i) {
        const double m = eval.pool.x[i] - ops.dot(theta.data(), eval.pool.z.row(i).data(), theta.size());
        const int pred = m >= 0.0 ? 1 : -1;
        if (eval.y[i] > 0) {
            ++n_plus;
            err_plus += pred != 1;
        } else {
            ++n_minus;
            err_minus += pred != -1;
        }
    }
}

double ErrorTally::value() const {
    // A class absent from the evaluation set contributes nothing; the other class carries full weight.
    if (n_plus == 0 && n_minus == 0) throw ArgumentError("prediction_error: empty evaluation set");
    if (n_plus == 0) return static_cast<double>(err_minus) / static_cast<double>(n_minus);
    if (n_minus == 0) return static_cast<double>(err_plus) / static_cast<double>(n_plus);
    return 0.5 * (static_cast<double>(err_plus) / static_cast<double>(n_plus) +
                  static_cast<double>(err_minus) / static_cast<double>(n_minus));
}

double prediction_error(std::span<const double> theta, const EvalSet& eval) {
    ErrorTally t;
    t.add(theta, eval);
    return t.value();
}

std::vector<ReportRow> aggregate(const std::vector<ReplicateRow>& reps) {
    using Key = std::tuple<std::string, std::string, int, double, double>;  // model, method, has_b, b, N
    std::map<Key, std::vector<const ReplicateRow*>> groups;
    std::vector<Key> order;
    for (const auto& r : reps) {
        if (r.failed) continue;
        const Key k{r.model, r.method, r.b ? 1 : 0, r.b.value_or(0.0), r.N};
        auto [it, inserted] = groups.try_emplace(k);
        if (inserted) order.push_back(k);
        it->second.push_back(&r);
    }
    static const char* metrics[] = {"l1", "l2", "linf", "pred_err"};
    std::vector<ReportRow> out;
    for (const auto& k : order) {
        const auto& g = groups[k];
        for (int m = 0; m < 4; ++m) {
            std::vector<double> v;
            for (const auto* r : g) v.push_back(m == 0 ? r->l1 : m == 1 ? r->l2 : m == 2 ? r->linf : r->pred_err);
            ReportRow row;
            row.model = std::get<0>(k);
            row.method = std::get<1>(k);
            if (std::get<2>(k)) row.b = std::get<3>(k);
            row.N = std::get<4>(k);
            row.metric = metrics[m];
            row.reps = static_cast<int>(v.size());
            double sum = 0.0;
            for (double x : v) sum += x;
            row.mean = sum / static_cast<double>(v.size());
            if (v.size() >= 2) {
                double ss = 0.0;
                for (double x : v) ss += (x - row.mean) * (x - row.mean);
                row.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
            } else {
                row.sd = 0.0;
                row.sd_degenerate = true;
            }
            out.push_back(std::move(row));
        }
    }
    return out;
}

BenchmarkReport run_comparison(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<Arm> arms;
    for (Method m : cfg.methods) arms.push_back(Arm{m, std::nullopt});
    return run_replicates(cfg, cfg.budget, arms);
}

BenchmarkReport run_b_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    if (!cfg.sweep) throw ConfigError("sweep.b_grid: a sweep needs a b grid");
    const std::vector<double> grid = pilot_b_grid(cfg, *cfg.sweep);

    std::vector<Arm> arms;
    for (Method m : cfg.methods) {
        if (!is_two_step(m)) arms.push_back(Arm{m, std::nullopt});
    }
    for (double b : grid) {
        for (Method m : cfg.methods) {
            if (is_two_step(m)) arms.push_back(Arm{m, b});
        }
    }
    BenchmarkReport report = run_replicates(cfg, cfg.budget, arms);

    // Passive arms do not depend on b: computed once, reported against every grid value.
    std::vector<ReplicateRow> expanded;
    for (const auto& r : report.replicates) {
        if (r.b) {
            expanded.push_back(r);
            continue;
        }
        for (double b : grid) {
            ReplicateRow copy = r;
            copy.b = b;
            expanded.push_back(std::move(copy));
        }
    }
    report.replicates = std::move(expanded);
    report.rows = aggregate(report.replicates);
    report.b_grid = grid;
    return report;
}

std::pair<double, double> ls_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ArgumentError("ls_slope: need two or more paired points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw ArgumentError("ls_slope: x values are all equal");
    const double b = sxy / sxx;
    return {b, my - b * mx};
}

ScalingResult run_rate_scaling(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.scaling.size() < 3) throw ConfigError("scaling.budgets: needs at least 3 budgets");
    std::vector<Arm> arms;
    for (Method m : cfg.methods) arms.push_back(Arm{m, std::nullopt});

    ScalingResult out;
    for (double N : cfg.scaling) {
        BenchmarkReport r = run_replicates(cfg, N, arms);
        out.report.failures += r.failures;
        out.report.seconds += r.seconds;
        for (auto& row : r.replicates) out.report.replicates.push_back(std::move(row));
    }
    out.report.rows = aggregate(out.report.replicates);
    for (Method m : cfg.methods) {
        ScalingSlope s;
        s.method = method_name(m);
        std::vector<double> lx, ly;
        for (double N : cfg.scaling) {
            const ReportRow* row = out.report.find(s.method, "l2", std::nullopt, N);
            if (row == nullptr || !(row->mean > 0.0)) continue;
            s.N.push_back(N);
            s.mean_l2.push_back(row->mean);
            lx.push_back(std::log(N));
            ly.push_back(std::log(row->mean));
        }
        if (lx.size() >= 2) std::tie(s.slope, s.intercept) = ls_slope(lx, ly);
        else s.slope = s.intercept = std::nan("");
        out.slopes.push_back(std::move(s));
    }
    return out;
}

void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows) {
    os << "model,method,metric,b,N,mean,sd,reps\n";
    for (const auto& r : rows) {
        os << r.model << ',' << r.method << ',' << r.metric << ',' << fmt_opt(r.b) << ',' << fmt_double(r.N) << ','
           << fmt_double(r.mean) << ',' << fmt_double(r.sd) << ',' << r.reps << '\n';
    }
}

void write_detail_csv(std::ostream& os, const std::vector<ReplicateRow>& rows) {
    os << "model,method,b,N,rep,l1,l2,linf,pred_err,labels,b_hat,seconds,failed\n";
    for (const auto& r : rows) {
        os << r.model << ',' << r.method << ',' << fmt_opt(r.b) << ',' << fmt_double(r.N) << ',' << r.rep << ','
           << fmt_double(r.l1) << ',' << fmt_double(r.l2) << ',' << fmt_double(r.linf) << ','
           << fmt_double(r.pred_err) << ',' << r.labels << ',' << fmt_double(r.b_hat) << ','
           << fmt_double(r.seconds) << ',' << (r.failed ? 1 : 0) << '\n';
    }
}

std::vector<ReplicateRow> read_detail_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ArgumentError("detail CSV is empty");
    std::vector<ReplicateRow> out;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (f.size() != 13) throw ArgumentError("detail CSV line " + std::to_string(lineno) + ": expected 13 fields");
        try {
            ReplicateRow r;
            r.model = f[0];
            r.method = f[1];
            if (!f[2].empty()) r.b = std::stod(f[2]);
            r.N = std::stod(f[3]);
            r.rep = std::stoi(f[4]);
            r.l1 = std::stod(f[5]);
            r.l2 = std::stod(f[6]);
            r.linf = std::stod(f[7]);
            r.pred_err = std::stod(f[8]);
            r.labels = std::stoul(f[9]);
            r.b_hat = std::stod(f[10]);
            r.seconds = std::stod(f[11]);
            r.failed = f[12] == "1";
            out.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw ArgumentError("detail CSV line " + std::to_string(lineno) + ": malformed number");
        }
    }
    return out;
}

void write_slopes_csv(std::ostream& os, const std::vector<ScalingSlope>& slopes) {
    os << "method,slope,intercept,points\n";
    for (const auto& s : slopes) {
        os << s.method << ',' << fmt_double(s.slope) << ',' << fmt_double(s.intercept) << ',' << s.N.size() << '\n';
    }
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& task) {
    std::size_t w = workers > 0 ? static_cast<std::size_t>(workers) : std::max(1u, std::thread::hardware_concurrency());
    w = std::min(w, count);
    if (w <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < w; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard lock(err_mu);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mcid
