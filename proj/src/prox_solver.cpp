#include "mcid/prox_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mcid/errors.hpp"

namespace mcid {
namespace {

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool all_zero(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

}  // namespace

void SolverConfig::validate() const {
    if (!(eta > 0.0)) throw ArgumentError("solver eta must be positive");
    if (!(nu > 0.0 && nu < 1.0)) throw ArgumentError("solver nu must lie in (0, 1)");
    if (phi && !(*phi > 0.0 && *phi < 1.0)) throw ArgumentError("solver phi must lie in (0, 1)");
    if (!phi && stages < 1) throw ArgumentError("solver stage count T must be positive");
    if (!(lambda_tgt > 0.0)) throw ArgumentError("solver lambda_tgt must be positive");
    if (!(eps_tgt > 0.0)) throw ArgumentError("solver eps_tgt must be positive");
    if (max_inner_iters < 1) throw ArgumentError("solver max_inner_iters must be positive");
    if (max_backtracks < 0) throw ArgumentError("solver max_backtracks must be non-negative");
    if (!(ball_radius > 0.0)) throw ArgumentError("solver ball_radius must be positive");
}

double l1_norm(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0, [](double s, double x) { return s + std::abs(x); });
}

double linf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double l2_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

int support_size(std::span<const double> v) {
    return static_cast<int>(std::count_if(v.begin(), v.end(), [](double x) { return x != 0.0; }));
}

std::vector<double> soft_threshold(std::span<const double> v, double t, double ball_radius) {
    if (!(t >= 0.0)) throw ArgumentError("soft_threshold: threshold must be non-negative");
    std::vector<double> out(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
        const double a = std::abs(v[j]) - t;
        out[j] = a > 0.0 ? std::copysign(a, v[j]) : 0.0;
    }
    if (std::isfinite(ball_radius)) {
        const double norm = l2_norm(out);
        if (norm > ball_radius) {
            const double f = ball_radius / norm;
            for (double& x : out) x *= f;
        }
    }
    return out;
}

double omega_criterion(std::span<const double> theta, std::span<const double> grad, double lambda) {
    if (theta.size() != grad.size()) throw ArgumentError("omega_criterion: theta and grad differ in dimension");
    double worst = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) {
        double gap;
        if (theta[j] != 0.0) {
            gap = std::abs(grad[j] + std::copysign(lambda, theta[j]));
        } else {
            gap = std::max(std::abs(grad[j]) - lambda, 0.0);
        }
        worst = std::max(worst, gap);
    }
    return worst;
}

ProxResult proximal_gradient(const SmoothLoss& loss, double lambda, double eps, std::span<const double> theta0,
                             const SolverConfig& cfg, std::size_t stage) {
    if (!(eps > 0.0)) throw ArgumentError("proximal_gradient: eps must be positive");
    if (!(lambda >= 0.0)) throw ArgumentError("proximal_gradient: lambda must be non-negative");
    const std::size_t d = loss.dim();
    if (theta0.size() != d) throw ArgumentError("proximal_gradient: theta0 has the wrong dimension");

    ProxResult res;
    res.theta.assign(theta0.begin(), theta0.end());
    std::vector<double> grad(d);
    double f = loss.value_and_gradient(res.theta, grad);
    if (!std::isfinite(f) || !all_finite(grad)) throw NumericalError("non-finite loss or gradient", stage);

    double eta = cfg.eta;
    res.objective = f + lambda * l1_norm(res.theta);
    res.objective_trace.push_back(res.objective);
    res.omega = omega_criterion(res.theta, grad, lambda);
    if (res.omega <= eps) {
        res.converged = true;
        res.final_eta = eta;
        return res;
    }

    std::vector<double> step(d);
    std::vector<double> cand_grad(d);
    for (int it = 0; it < cfg.max_inner_iters; ++it) {
        std::vector<double> cand;
        double fc = 0.0;
        bool accepted = false;
        for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
            for (std::size_t j = 0; j < d; ++j) step[j] = res.theta[j] - eta * grad[j];
            cand = soft_threshold(step, lambda * eta, cfg.ball_radius);
            fc = loss.value_and_gradient(cand, cand_grad);
            if (!std::isfinite(fc) || !all_finite(cand_grad)) {
                throw NumericalError("non-finite loss or gradient", stage);
            }
            double lin = 0.0;
            double sq = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = cand[j] - res.theta[j];
                lin += grad[j] * diff;
                sq += diff * diff;
            }
            const double model = f + lin + sq / (2.0 * eta);
            if (fc <= model + 1e-13 * std::max(1.0, std::abs(f))) {
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if (!accepted) break;

        const bool moved = !std::equal(cand.begin(), cand.end(), res.theta.begin());
        res.theta = std::move(cand);
        f = fc;
        grad.swap(cand_grad);
        ++res.iters;
        res.objective = f + lambda * l1_norm(res.theta);
        res.objective_trace.push_back(res.objective);
        res.omega = omega_criterion(res.theta, grad, lambda);
        if (res.omega <= eps) {
            res.converged = true;
            break;
        }
        if (!moved) break;
    }
    res.final_eta = eta;
    return res;
}

PathResult path_following(const SmoothLoss& loss, const SolverConfig& cfg, std::span<const double> theta_init) {
    cfg.validate();
    const std::size_t d = loss.dim();
    if (!theta_init.empty() && theta_init.size() != d) {
        throw ArgumentError("path_following: theta_init has the wrong dimension");
    }
    const bool warm = !theta_init.empty() && !all_zero(theta_init);
    std::vector<double> theta = warm ? std::vector<double>(theta_init.begin(), theta_init.end())
                                     : std::vector<double>(d, 0.0);

    std::vector<double> grad(d);
    const double f0 = loss.value_and_gradient(theta, grad);
    if (!std::isfinite(f0) || !all_finite(grad)) throw NumericalError("non-finite loss or gradient", 0);

    PathResult result;
    result.lambda0 = warm ? linf_norm(grad) + cfg.lambda_tgt : linf_norm(grad);

    SolverConfig stage_cfg = cfg;
    auto run_stage = [&](double lambda, double eps, std::size_t index) {
        ProxResult pr = proximal_gradient(loss, lambda, eps, theta, stage_cfg, index);
        stage_cfg.eta = pr.final_eta;
        StageDiagnostics diag;
        diag.lambda = lambda;
        diag.omega = pr.omega;
        diag.inner_iters = pr.iters;
        diag.objective = pr.objective;
        diag.support_size = support_size(pr.theta);
        diag.converged = pr.converged;
        diag.objective_trace = std::move(pr.objective_trace);
        result.per_stage.push_back(std::move(diag));
        theta = std::move(pr.theta);
    };

    if (cfg.lambda_tgt >= result.lambda0) {
        result.degenerate = true;
        result.phi = 1.0;
        run_stage(cfg.lambda_tgt, cfg.eps_tgt, 1);
    } else {
        const double ratio = cfg.lambda_tgt / result.lambda0;
        int stages;
        if (cfg.phi) {
            result.phi = *cfg.phi;
            stages = std::max(1, static_cast<int>(std::ceil(std::log(ratio) / std::log(result.phi) - 1e-12)));
        } else {
            stages = cfg.stages;
            result.phi = std::pow(ratio, 1.0 / stages);
        }
        for (int t = 1; t < stages; ++t) {
            const double lambda_t = std::pow(result.phi, t) * result.lambda0;
            if (lambda_t <= cfg.lambda_tgt) break;
            run_stage(lambda_t, cfg.nu * lambda_t, static_cast<std::size_t>(t));
        }
        run_stage(cfg.lambda_tgt, cfg.eps_tgt, static_cast<std::size_t>(stages));
    }
    result.theta_hat = std::move(theta);
    result.converged = result.per_stage.back().converged;
    result.final_eta = stage_cfg.eta;
    return result;
}

}  // namespace mcid
