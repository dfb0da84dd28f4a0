#pragma once

// l1-regularised first-order solver for
//
//     minimise  loss(theta) + lambda * ||theta||_1   over Omega,
//
// where Omega is R^d or an l2 ball. proximal_gradient solves one lambda with
// backtracking on the quadratic model; path_following walks a geometric
// lambda sequence from ||grad loss(0)||_inf down to the target, warm-starting
// each stage from the previous one.

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "mcid/surrogate_risk.hpp"

namespace mcid {

struct SolverConfig {
    double eta = 1.0;                 // initial step size, halved on a failed model check
    double nu = 0.25;                 // intermediate-stage precision: eps_t = nu * lambda_t
    std::optional<double> phi;        // lambda decay; when set the stage count is derived from it
    int stages = 20;                  // T, used when phi is unset: phi = (lambda_tgt/lambda_0)^(1/T)
    double lambda_tgt = 1e-3;
    double eps_tgt = 1e-5;            // final-stage precision on omega
    int max_inner_iters = 500;
    int max_backtracks = 30;
    double ball_radius = std::numeric_limits<double>::infinity();

    /// Throws ArgumentError when a field is out of range.
    void validate() const;
};

struct StageDiagnostics {
    double lambda = 0.0;
    double omega = 0.0;
    int inner_iters = 0;
    double objective = 0.0;
    int support_size = 0;
    bool converged = false;
    std::vector<double> objective_trace;  // penalised objective at the start and after every accepted step
};

struct PathResult {
    std::vector<double> theta_hat;
    std::vector<StageDiagnostics> per_stage;
    bool converged = false;
    bool degenerate = false;  // lambda_tgt >= lambda_0: a single stage was solved
    double lambda0 = 0.0;
    double phi = 0.0;
    double final_eta = 0.0;
};

struct ProxResult {
    std::vector<double> theta;
    int iters = 0;
    double objective = 0.0;
    double omega = 0.0;
    bool converged = false;
    double final_eta = 0.0;
    std::vector<double> objective_trace;
};

/// sign(v_j) max(|v_j| - t, 0), then projected onto the l2 ball when ball_radius is finite.
std::vector<double> soft_threshold(std::span<const double> v, double t,
                                   double ball_radius = std::numeric_limits<double>::infinity());

/// l_inf distance from -grad to lambda * subdifferential of ||theta||_1 (sign(0) := 0).
double omega_criterion(std::span<const double> theta, std::span<const double> grad, double lambda);

/// Proximal-gradient iterations at a fixed lambda until omega <= eps (checked after each update)
/// or cfg.max_inner_iters. Throws NumericalError (tagged with `stage`) on a non-finite loss.
ProxResult proximal_gradient(const SmoothLoss& loss, double lambda, double eps, std::span<const double> theta0,
                             const SolverConfig& cfg, std::size_t stage = 0);

/// Path-following to cfg.lambda_tgt. theta_init empty or all-zero means a cold start.
PathResult path_following(const SmoothLoss& loss, const SolverConfig& cfg, std::span<const double> theta_init = {});

double l1_norm(std::span<const double> v);
double linf_norm(std::span<const double> v);
double l2_norm(std::span<const double> v);
int support_size(std::span<const double> v);

}  // namespace mcid
