// mcid: simulate / fit / benchmark / sweep / schedule.
//
// Exit codes: 0 ok, 2 config or argument error, 3 runtime failure, 4 label budget.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mcid/bench_harness.hpp"
#include "mcid/config.hpp"
#include "mcid/csv_io.hpp"
#include "mcid/datagen.hpp"
#include "mcid/errors.hpp"
#include "mcid/pipeline.hpp"
#include "mcid/rng.hpp"

using namespace mcid;
using json = nlohmann::json;

namespace {

enum Exit { ok = 0, config_error = 2, runtime_error = 3, budget_error = 4 };

// Flags that are shorthand for config keys; applied after the file, before --set.
struct Shorthand {
    std::string flag;
    std::string key;
    std::string value;
};

struct Common {
    std::string config_path;
    std::vector<std::string> sets;
    std::optional<std::int64_t> seed;
    std::optional<int> workers;
    std::string out;
    std::vector<Shorthand> shorthands;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config_path, "config file ([section] key = value)");
    app->add_option("--set", c.sets, "override one config key, e.g. --set solver.eta=0.5 (repeatable)");
    app->add_option("--seed", c.seed, "master seed (run.seed)");
    app->add_option("--workers", c.workers, "worker threads (experiment.workers)");
    app->add_option("--out,-o", c.out, "output path (default: stdout)");
}

void add_short(CLI::App* app, Common& c, const std::string& flag, const std::string& key, const std::string& help) {
    c.shorthands.push_back({flag, key, {}});
    const std::size_t idx = c.shorthands.size() - 1;
    app->add_option_function<std::string>(
        flag, [&c, idx](const std::string& v) { c.shorthands[idx].value = v; }, help + " (" + key + ")");
}

Config build_config(const Common& c) {
    Config cfg = c.config_path.empty() ? Config{} : Config::load(c.config_path);
    for (const auto& s : c.shorthands) {
        if (!s.value.empty()) cfg.set(s.key, s.value);
    }
    if (c.seed) cfg.set("run.seed", std::to_string(*c.seed));
    if (c.workers) cfg.set("experiment.workers", std::to_string(*c.workers));
    for (const auto& s : c.sets) cfg.set_assignment(s);
    return cfg;
}

// Writes to --out or stdout.
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw std::runtime_error("cannot write '" + path + "'");
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }
    void close() {
        stream().flush();
        if (file_ && !*file_) throw std::runtime_error("write failed");
    }

private:
    std::unique_ptr<std::ofstream> file_;
};

std::string keys_help() {
    std::ostringstream os;
    os << "Config keys (file sections or --set section.key=value):\n";
    for (const auto& k : known_keys()) {
        os << "  " << k.key << " <" << k.type << ">";
        if (!k.fallback.empty()) os << " = " << k.fallback;
        os << "\n      " << k.help << "\n";
    }
    os << "\nExit codes: 0 ok, 2 config error, 3 runtime error, 4 label budget error\n";
    return os.str();
}

int cmd_simulate(const Common& c) {
    const Config cfg = build_config(c);
    const auto n = cfg.get_int("data.n");
    const auto d = cfg.get_int("data.d");
    const auto s = cfg.get_int("data.s");
    if (n <= 0) throw ConfigError("data.n: must be positive");
    if (d <= 0) throw ConfigError("data.d: must be positive");
    if (s <= 0 || s > d) throw ConfigError("data.s: must lie in [1, d]");
    const ModelSpec model = model_from(cfg);
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("run.seed"));

    const TruthSpec truth = make_truth(model, static_cast<std::size_t>(d), static_cast<std::size_t>(s),
                                       derive_key(seed, StreamTag::theta, {}));
    Output out(c.out);
    auto& os = out.stream();
    write_dataset_header(os, truth.d, true);
    generate_rows(truth, derive_key(seed, StreamTag::pool_rows, {}), 0, static_cast<std::size_t>(n),
                  [&](double x, std::span<const double> z, int y) { write_dataset_row(os, x, z, y, true); });
    out.close();
    return ok;
}

json cv_json(const CvResult& cv) {
    json curve = json::array();
    for (const auto& p : cv.cv_curve) curve.push_back({{"lambda", p.lambda}, {"mean_cv", p.mean_cv}, {"fold_scores", p.fold_scores}});
    return {{"lambda_hat", cv.lambda_hat}, {"lambda_bar", cv.lambda_bar}, {"cv_min", cv.cv_min},
            {"se_min", cv.se_min},         {"cv_at_hat", cv.cv_at_hat},   {"curve", curve}};
}

json report_json(const FitReport& r) {
    json its = json::array();
    for (const auto& it : r.iterations) {
        json stages = json::array();
        for (const auto& st : it.path.per_stage) {
            stages.push_back({{"lambda", st.lambda}, {"omega", st.omega}, {"iters", st.inner_iters},
                              {"objective", st.objective}, {"support", st.support_size}, {"converged", st.converged}});
        }
        json j = {{"k", it.k},
                  {"labels_used", it.labels_used},
                  {"batch_rows", it.batch_rows},
                  {"p_hat", it.p_hat},
                  {"c", it.c},
                  {"c_clamped", it.c_clamped},
                  {"expected_labels", it.expected_labels},
                  {"delta", it.delta},
                  {"lambda", it.lambda},
                  {"support", support_size(it.theta)},
                  {"seconds", it.seconds},
                  {"path", {{"lambda0", it.path.lambda0}, {"phi", it.path.phi}, {"converged", it.path.converged},
                            {"degenerate", it.path.degenerate}, {"stages", stages}}}};
        j["b"] = it.b ? json(*it.b) : json(nullptr);
        if (it.cv) j["cv"] = cv_json(*it.cv);
        its.push_back(std::move(j));
    }
    json cands = json::array();
    for (const auto& b : r.b_candidates) {
        cands.push_back({{"b", b.b}, {"p_hat", b.p_hat}, {"c", b.c}, {"labels", b.labels},
                         {"cv_score", b.skipped ? json(nullptr) : json(b.cv_score)}, {"lambda_opt", b.lambda_opt},
                         {"skipped", b.skipped}});
    }
    return {{"algorithm", r.algorithm},
            {"budget", r.budget},
            {"labels_total", r.labels_total},
            {"weights", {{"plus", r.weights.w_plus}, {"minus", r.weights.w_minus}}},
            {"notes", r.notes},
            {"b_candidates", cands},
            {"iterations", its},
            {"theta_hat", r.theta_hat()}};
}

int cmd_fit(const Common& c, const std::string& theta_path) {
    const Config cfg = build_config(c);
    const std::string path = cfg.get_string("data.path");
    if (path.empty()) throw ConfigError("data.path: fit needs a dataset (--data)");
    Dataset ds = load_dataset_csv(path);
    if (!ds.has_label_column) throw BudgetError("dataset '" + path + "' has no y column, so no label can be requested");

    auto labels = LabelSource::with_missing(ds.y);
    const double budget = cfg.get_real("pipeline.budget");
    if (!(budget > 0.0)) throw ConfigError("pipeline.budget: must be positive");
    if (budget > static_cast<double>(labels->count_available())) {
        throw BudgetError("budget " + std::to_string(budget) + " exceeds the " +
                          std::to_string(labels->count_available()) + " labeled rows available");
    }
    LabelOracle oracle(labels, budget);

    const std::string mode = cfg.get_string("pipeline.mode");
    FitReport report;
    if (mode == "theory") {
        const double beta = cfg.get_real("theory.beta");
        const TheoryConstants tc{cfg.get_real("theory.c1"), cfg.get_real("theory.c2"), cfg.get_real("theory.c3")};
        const auto sched = theory_schedule(beta, cfg.get_real("theory.s"), static_cast<double>(ds.pool.dim()),
                                           static_cast<double>(ds.pool.size()), budget, tc);
        const auto pc = pipeline_from_schedule(sched, budget, fit_from(cfg),
                                               static_cast<std::uint64_t>(cfg.get_int("run.seed")));
        report = k_step_fit(ds.pool, oracle, pc);
    } else if (mode == "cv") {
        const auto k = cfg.get_int("pipeline.k");
        if (cfg.has("pipeline.b") || k != 2) {
            report = k_step_fit(ds.pool, oracle, k_step_from(cfg));
        } else {
            report = two_step_cv_fit(ds.pool, oracle, two_step_from(cfg));
        }
    } else {
        throw ConfigError("pipeline.mode: expected cv or theory, got '" + mode + "'");
    }

    Output out(c.out);
    out.stream() << report_json(report).dump(2) << '\n';
    out.close();
    if (!theta_path.empty()) {
        Output th(theta_path);
        th.stream() << "j,theta\n";
        char buf[64];
        const auto& theta = report.theta_hat();
        for (std::size_t j = 0; j < theta.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%zu,%.17g\n", j + 1, theta[j]);
            th.stream() << buf;
        }
        th.close();
    }
    return ok;
}

void write_detail_if_asked(const Config& cfg, const BenchmarkReport& rep) {
    const std::string path = cfg.get_string("experiment.detail");
    if (path.empty()) return;
    Output d(path);
    write_detail_csv(d.stream(), rep.replicates);
    d.close();
}

void log_failures(const BenchmarkReport& rep) {
    if (rep.failures > 0) std::cerr << "mcid: " << rep.failures << " replicate arm(s) failed and were skipped\n";
}

int cmd_benchmark(const Common& c, bool scaling, const std::string& slopes_path) {
    const Config cfg = build_config(c);
    ExperimentConfig e = experiment_from(cfg);
    e.sweep.reset();
    Output out(c.out);
    if (scaling) {
        if (e.scaling.empty()) e.scaling = Config{}.get_reals("scaling.budgets");
        const ScalingResult r = run_rate_scaling(e);
        write_report_csv(out.stream(), r.report.rows);
        write_detail_if_asked(cfg, r.report);
        log_failures(r.report);
        if (!slopes_path.empty()) {
            Output s(slopes_path);
            write_slopes_csv(s.stream(), r.slopes);
            s.close();
        } else {
            write_slopes_csv(std::cerr, r.slopes);
        }
    } else {
        const BenchmarkReport r = run_comparison(e);
        write_report_csv(out.stream(), r.rows);
        write_detail_if_asked(cfg, r);
        log_failures(r);
    }
    out.close();
    return ok;
}

int cmd_sweep(const Common& c) {
    Config cfg = build_config(c);
    ExperimentConfig e = experiment_from(cfg);
    if (!e.sweep) e.sweep = b_grid_from_text(cfg.get_string("sweep.b_grid"));
    const BenchmarkReport r = run_b_sweep(e);
    Output out(c.out);
    write_report_csv(out.stream(), r.rows);
    out.close();
    write_detail_if_asked(cfg, r);
    log_failures(r);
    std::cerr << "mcid: b grid";
    for (double b : r.b_grid) std::cerr << ' ' << b;
    std::cerr << '\n';
    return ok;
}

int cmd_schedule(const Common& c) {
    const Config cfg = build_config(c);
    const TheoryConstants tc{cfg.get_real("theory.c1"), cfg.get_real("theory.c2"), cfg.get_real("theory.c3")};
    const auto sched = theory_schedule(cfg.get_real("theory.beta"), cfg.get_real("theory.s"),
                                       static_cast<double>(cfg.get_int("data.d")),
                                       static_cast<double>(cfg.get_int("data.n")), cfg.get_real("pipeline.budget"), tc);
    Output out(c.out);
    auto& os = out.stream();
    os << "# regime " << regime_name(sched.regime) << ", K = " << sched.K << '\n';
    os << "k,N_k,delta,lambda,b_prev\n";
    char buf[256];
    for (const auto& st : sched.steps) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,", st.k, st.N_k, st.delta, st.lambda);
        os << buf;
        if (st.b_prev) {
            std::snprintf(buf, sizeof buf, "%.17g", *st.b_prev);
            os << buf;
        }
        os << '\n';
    }
    out.close();
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Individualized threshold estimation under a label budget"};
    app.require_subcommand(1);
    app.footer(keys_help());

    Common sim_c, fit_c, bench_c, sweep_c, sched_c;

    auto* sim = app.add_subcommand("simulate", "write a simulated pool as CSV (x,z1..zd,y)");
    add_common(sim, sim_c);
    add_short(sim, sim_c, "--model", "model.name", "simulation model");
    add_short(sim, sim_c, "--n", "data.n", "rows");
    add_short(sim, sim_c, "--d", "data.d", "dimension");
    add_short(sim, sim_c, "--s", "data.s", "sparsity");

    std::string theta_path;
    auto* fit = app.add_subcommand("fit", "fit theta on a dataset CSV under a label budget; writes a JSON report");
    add_common(fit, fit_c);
    add_short(fit, fit_c, "--data", "data.path", "dataset CSV");
    add_short(fit, fit_c, "--budget", "pipeline.budget", "label budget");
    add_short(fit, fit_c, "--k", "pipeline.k", "iterations");
    add_short(fit, fit_c, "--mode", "pipeline.mode", "cv or theory");
    add_short(fit, fit_c, "--beta", "theory.beta", "smoothness for theory mode");
    add_short(fit, fit_c, "--b-grid", "pipeline.b_grid", "candidate b values or autoM");
    add_short(fit, fit_c, "--lambda", "pipeline.lambda", "cv or a fixed penalty");
    fit->add_option("--theta", theta_path, "also write theta_hat as CSV (j,theta)");

    bool scaling = false;
    std::string slopes_path;
    auto* bench = app.add_subcommand("benchmark", "replicated method comparison; CSV model,method,metric,b,N,mean,sd,reps");
    add_common(bench, bench_c);
    add_short(bench, bench_c, "--model", "model.name", "simulation model");
    add_short(bench, bench_c, "--reps", "experiment.reps", "replicates");
    add_short(bench, bench_c, "--budget", "pipeline.budget", "label budget");
    add_short(bench, bench_c, "--methods", "experiment.methods", "comma separated methods");
    add_short(bench, bench_c, "--detail", "experiment.detail", "per-replicate detail CSV");
    bench->add_flag("--scaling", scaling, "run every budget in scaling.budgets and fit log-log slopes");
    bench->add_option("--slopes", slopes_path, "slopes CSV path for --scaling (default: stderr)");

    auto* sweep = app.add_subcommand("sweep", "fixed-b two-step runs over a b grid plus passive baselines");
    add_common(sweep, sweep_c);
    add_short(sweep, sweep_c, "--model", "model.name", "simulation model");
    add_short(sweep, sweep_c, "--reps", "experiment.reps", "replicates");
    add_short(sweep, sweep_c, "--b-grid", "sweep.b_grid", "b values or autoM");
    add_short(sweep, sweep_c, "--detail", "experiment.detail", "per-replicate detail CSV");

    auto* sched = app.add_subcommand("schedule", "theory tuning schedule (k, N_k, delta_k, lambda_k, b_{k-1})");
    add_common(sched, sched_c);
    add_short(sched, sched_c, "--beta", "theory.beta", "smoothness");
    add_short(sched, sched_c, "--s", "theory.s", "sparsity");
    add_short(sched, sched_c, "--d", "data.d", "dimension");
    add_short(sched, sched_c, "--n", "data.n", "pool size");
    add_short(sched, sched_c, "--budget", "pipeline.budget", "label budget");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim_c);
        if (fit->parsed()) return cmd_fit(fit_c, theta_path);
        if (bench->parsed()) return cmd_benchmark(bench_c, scaling, slopes_path);
        if (sweep->parsed()) return cmd_sweep(sweep_c);
        if (sched->parsed()) return cmd_schedule(sched_c);
    } catch (const ConfigError& e) {
        std::cerr << "mcid: config error: " << e.what() << '\n';
        return config_error;
    } catch (const ArgumentError& e) {
        std::cerr << "mcid: argument error: " << e.what() << '\n';
        return config_error;
    } catch (const BudgetError& e) {
        std::cerr << "mcid: budget error: " << e.what() << '\n';
        return budget_error;
    } catch (const std::exception& e) {
        std::cerr << "mcid: error: " << e.what() << '\n';
        return runtime_error;
    }
    return ok;
}
