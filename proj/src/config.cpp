#include "mcid/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mcid/errors.hpp"

namespace mcid {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

// Drops a trailing "# comment" that is not inside quotes.
std::string strip_comment(std::string_view s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        if (!quoted && s[i] == '#') return trim(s.substr(0, i));
    }
    return trim(s);
}

}  // namespace

const std::vector<KeyInfo>& known_keys() {
    static const std::vector<KeyInfo> keys = {
        {"run.seed", "int", "1", "master seed; every random stream is derived from it"},
        {"model.name", "string", "conditional_mean", "simulation model: logistic, binary_response, conditional_mean"},
        {"model.sigma", "real", "0.5", "binary_response noise scale"},
        {"model.mu", "real", "2", "conditional_mean class separation"},
        {"model.eps_sd", "real", "0.1", "conditional_mean noise sd"},
        {"data.n", "int", "20000", "pool size"},
        {"data.d", "int", "200", "dimension of Z"},
        {"data.s", "int", "10", "support size of theta*"},
        {"data.path", "string", "", "dataset CSV for fit (header x,z1..zd,y)"},
        {"pipeline.mode", "string", "cv", "cv: data-driven two-step (or fixed b when pipeline.b is set); theory: schedule"},
        {"pipeline.k", "int", "2", "number of iterations K"},
        {"pipeline.budget", "real", "2000", "expected label budget N (hard cap 2N)"},
        {"pipeline.split", "reals", "[0.125, 0.25, 0.625]",
         "budget fractions; three (N1, Ncv, N2) for two-step CV, K for fixed b (default 1/8, 7/8 when K = 2)"},
        {"pipeline.delta", "reals", "[1]", "bandwidth per iteration, or one value for all"},
        {"pipeline.b", "reals", "", "fixed band half-widths b_1..b_{K-1}"},
        {"pipeline.b_grid", "reals", "auto10", "candidate b values for CV, or autoM for M margin quantiles"},
        {"pipeline.lambda", "string", "cv", "cv or a fixed positive penalty"},
        {"pipeline.min_batch", "int", "50", "smallest labeled batch accepted without a warning note"},
        {"theory.beta", "real", "2", "smoothness beta >= 1"},
        {"theory.s", "real", "10", "sparsity used by the theory schedule"},
        {"theory.c1", "real", "1", "delta constant"},
        {"theory.c2", "real", "1", "lambda constant"},
        {"theory.c3", "real", "1", "b constant"},
        {"kernel.name", "string", "gaussian", "gaussian, epanechnikov or higher_order"},
        {"kernel.order", "int", "3", "order of the higher_order kernel"},
        {"solver.loss", "string", "smoothed", "smoothed or logistic"},
        {"solver.eta", "real", "1", "initial step size per labeled record, halved on a failed model check"},
        {"solver.nu", "real", "0.25", "intermediate-stage precision factor"},
        {"solver.stages", "int", "20", "number of path stages T"},
        {"solver.max_inner_iters", "int", "500", "proximal iterations per stage"},
        {"solver.max_backtracks", "int", "30", "step halvings per iteration"},
        {"solver.eps_rel", "real", "0.001", "final precision relative to lambda"},
        {"solver.warm_start", "bool", "false", "start iteration k >= 2 from the previous estimate"},
        {"solver.ball_radius", "real", "inf", "l2 ball constraint radius"},
        {"cv.folds", "int", "5", "cross-validation folds"},
        {"cv.grid_size", "int", "20", "lambda grid points"},
        {"cv.grid_ratio", "real", "1000", "lambda_0 / smallest grid lambda"},
        {"experiment.methods", "strings", "[passive_pf, twostep_pf]",
         "subset of passive_pf, twostep_pf, passive_lr, twostep_lr"},
        {"experiment.reps", "int", "50", "replicates"},
        {"experiment.eval_n", "int", "100000", "evaluation rows per replicate"},
        {"experiment.workers", "int", "0", "threads; 0 uses every available core"},
        {"experiment.detail", "string", "", "path for the per-replicate detail CSV"},
        {"sweep.b_grid", "reals", "auto10", "fixed b values for the sweep, or autoM"},
        {"sweep.split", "reals", "[0.125, 0.875]", "budget split of the fixed-b two-step runs"},
        {"scaling.budgets", "reals", "[500, 1000, 2000, 4000]", "budgets for rate scaling"},
    };
    return keys;
}

const KeyInfo* find_key(std::string_view key) {
    for (const auto& k : known_keys()) {
        if (k.key == key) return &k;
    }
    return nullptr;
}

Config Config::parse(std::istream& is, const std::string& source) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(source + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    Config cfg;
    for (const auto& [section, child] : tree) {
        if (child.empty()) {
            cfg.set(section, child.data());
            continue;
        }
        for (const auto& [key, leaf] : child) {
            if (!leaf.empty()) throw ConfigError(source + ": nested key under " + section + "." + key);
            cfg.set(section + "." + key, leaf.data());
        }
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse(in, path);
}

void Config::set(const std::string& key, const std::string& value) {
    if (!find_key(key)) throw ConfigError("unknown config key '" + key + "'");
    entries_[key] = strip_comment(value);
}

void Config::set_assignment(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
    set(trim(std::string_view(assignment).substr(0, eq)), trim(std::string_view(assignment).substr(eq + 1)));
}

bool Config::has(std::string_view key) const { return entries_.find(key) != entries_.end(); }

const std::string& Config::raw(std::string_view key) const {
    auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;
    const KeyInfo* info = find_key(key);
    if (!info) throw ConfigError("unknown config key '" + std::string(key) + "'");
    return info->fallback;
}

std::string unquote(std::string_view text) {
    std::string t = trim(text);
    if (t.size() >= 2 && t.front() == '"' && t.back() == '"') return t.substr(1, t.size() - 2);
    return t;
}

std::vector<std::string> split_list(std::string_view text) {
    std::string t = trim(text);
    if (!t.empty() && t.front() == '[') {
        if (t.back() != ']') throw ConfigError("unterminated list '" + t + "'");
        t = t.substr(1, t.size() - 2);
    }
    std::vector<std::string> out;
    if (trim(t).empty()) return out;
    std::string item;
    bool quoted = false;
    for (char ch : t) {
        if (ch == '"') quoted = !quoted;
        if (ch == ',' && !quoted) {
            out.push_back(unquote(item));
            item.clear();
        } else {
            item += ch;
        }
    }
    out.push_back(unquote(item));
    return out;
}

namespace {

double to_real(const std::string& text, std::string_view key) {
    const std::string t = trim(text);
    if (t == "inf") return std::numeric_limits<double>::infinity();
    double v = 0.0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || p != t.data() + t.size() || !std::isfinite(v)) {
        throw ConfigError(std::string(key) + ": '" + t + "' is not a number");
    }
    return v;
}

}  // namespace

std::string Config::get_string(std::string_view key) const { return unquote(raw(key)); }

double Config::get_real(std::string_view key) const { return to_real(unquote(raw(key)), key); }

std::int64_t Config::get_int(std::string_view key) const {
    const std::string t = unquote(raw(key));
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || p != t.data() + t.size()) {
        throw ConfigError(std::string(key) + ": '" + t + "' is not an integer");
    }
    return v;
}

bool Config::get_bool(std::string_view key) const {
    const std::string t = unquote(raw(key));
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError(std::string(key) + ": '" + t + "' is not a boolean");
}

std::vector<double> Config::get_reals(std::string_view key) const {
    std::vector<double> out;
    for (const auto& item : split_list(raw(key))) out.push_back(to_real(item, key));
    return out;
}

std::vector<std::string> Config::get_strings(std::string_view key) const { return split_list(raw(key)); }

namespace {

std::size_t get_size(const Config& cfg, std::string_view key) {
    const auto v = cfg.get_int(key);
    if (v < 0) throw ConfigError(std::string(key) + ": must not be negative");
    return static_cast<std::size_t>(v);
}

LambdaChoice lambda_from(const Config& cfg) {
    LambdaChoice l;
    const std::string text = cfg.get_string("pipeline.lambda");
    if (text != "cv") l.fixed = cfg.get_real("pipeline.lambda");
    l.grid_size = get_size(cfg, "cv.grid_size");
    l.grid_ratio = cfg.get_real("cv.grid_ratio");
    return l;
}

}  // namespace

BGrid b_grid_from_text(std::string_view text) {
    BGrid g;
    const std::string t = unquote(text);
    if (t.rfind("auto", 0) == 0) {
        const std::string n = t.substr(4);
        std::size_t m = 0;
        auto [p, ec] = std::from_chars(n.data(), n.data() + n.size(), m);
        if (n.empty() || ec != std::errc() || p != n.data() + n.size() || m == 0) {
            throw ConfigError("b grid '" + t + "' must be autoM with M >= 1 or a list of values");
        }
        g.auto_points = m;
        return g;
    }
    for (const auto& item : split_list(t)) g.values.push_back(to_real(item, "b_grid"));
    if (g.values.empty()) throw ConfigError("b grid is empty");
    return g;
}

ModelSpec model_from(const Config& cfg) {
    ModelSpec m = ModelSpec::from_name(cfg.get_string("model.name"));
    m.sigma = cfg.get_real("model.sigma");
    m.mu = cfg.get_real("model.mu");
    m.eps_sd = cfg.get_real("model.eps_sd");
    try {
        m.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
    return m;
}

FitSettings fit_from(const Config& cfg) {
    FitSettings f;
    const std::string loss = cfg.get_string("solver.loss");
    if (loss == "smoothed") {
        f.loss = LossType::smoothed;
    } else if (loss == "logistic") {
        f.loss = LossType::logistic;
    } else {
        throw ConfigError("solver.loss: expected smoothed or logistic, got '" + loss + "'");
    }
    const auto order = cfg.get_int("kernel.order");
    try {
        f.kernel = KernelSpec::from_name(cfg.get_string("kernel.name"), static_cast<int>(order));
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("kernel: ") + e.what());
    }
    f.solver.eta = cfg.get_real("solver.eta");
    f.solver.nu = cfg.get_real("solver.nu");
    f.solver.stages = static_cast<int>(cfg.get_int("solver.stages"));
    f.solver.max_inner_iters = static_cast<int>(cfg.get_int("solver.max_inner_iters"));
    f.solver.max_backtracks = static_cast<int>(cfg.get_int("solver.max_backtracks"));
    f.solver.ball_radius = cfg.get_real("solver.ball_radius");
    f.eps_rel = cfg.get_real("solver.eps_rel");
    f.warm_start = cfg.get_bool("solver.warm_start");
    f.cv_folds = static_cast<int>(cfg.get_int("cv.folds"));
    return f;
}

TwoStepConfig two_step_from(const Config& cfg) {
    TwoStepConfig t;
    t.budget = cfg.get_real("pipeline.budget");
    t.split = cfg.get_reals("pipeline.split");
    t.b_grid = b_grid_from_text(cfg.get_string("pipeline.b_grid"));
    const auto delta = cfg.get_reals("pipeline.delta");
    if (delta.empty() || delta.size() > 2) throw ConfigError("pipeline.delta: two-step CV takes one or two values");
    t.delta1 = delta.front();
    t.delta2 = delta.back();
    t.lambda = lambda_from(cfg);
    t.fit = fit_from(cfg);
    t.seed = static_cast<std::uint64_t>(cfg.get_int("run.seed"));
    t.validate();
    return t;
}

PipelineConfig k_step_from(const Config& cfg) {
    PipelineConfig p;
    p.K = static_cast<int>(cfg.get_int("pipeline.k"));
    if (p.K < 1) throw ConfigError("pipeline.k: must be at least 1");
    p.budget = cfg.get_real("pipeline.budget");
    if (cfg.has("pipeline.split")) {
        p.budget_split = cfg.get_reals("pipeline.split");
    } else if (p.K == 2) {
        p.budget_split = {0.125, 0.875};
    } else {
        p.budget_split.assign(static_cast<std::size_t>(p.K), 1.0 / p.K);
    }
    p.delta = cfg.get_reals("pipeline.delta");
    p.lambda = {lambda_from(cfg)};
    p.b = cfg.get_reals("pipeline.b");
    p.fit = fit_from(cfg);
    p.seed = static_cast<std::uint64_t>(cfg.get_int("run.seed"));
    p.min_batch = get_size(cfg, "pipeline.min_batch");
    p.validate();
    return p;
}

ExperimentConfig experiment_from(const Config& cfg) {
    ExperimentConfig e;
    e.model = model_from(cfg);
    e.n = get_size(cfg, "data.n");
    e.d = get_size(cfg, "data.d");
    e.s = get_size(cfg, "data.s");
    e.budget = cfg.get_real("pipeline.budget");
    e.methods.clear();
    for (const auto& m : cfg.get_strings("experiment.methods")) e.methods.push_back(method_from_name(m));
    e.reps = static_cast<int>(cfg.get_int("experiment.reps"));
    e.seed = static_cast<std::uint64_t>(cfg.get_int("run.seed"));
    e.workers = static_cast<int>(cfg.get_int("experiment.workers"));
    e.eval_n = get_size(cfg, "experiment.eval_n");
    e.fit = fit_from(cfg);
    e.two_step = two_step_from(cfg);
    if (cfg.has("sweep.b_grid")) e.sweep = b_grid_from_text(cfg.get_string("sweep.b_grid"));
    e.sweep_split = cfg.get_reals("sweep.split");
    if (cfg.has("scaling.budgets")) e.scaling = cfg.get_reals("scaling.budgets");
    e.validate();
    return e;
}

}  // namespace mcid
