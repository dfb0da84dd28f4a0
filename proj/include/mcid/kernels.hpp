#pragma once

// Smoothing kernels K of order l and the surrogate loss they induce,
//
//     L_delta(u) = integral_{u/delta}^{inf} K(t) dt,
//
// a smooth stand-in for the 0-1 loss 1{u < 0}. All shipped kernels are
// symmetric and have closed-form tail integrals.

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace mcid {

enum class KernelFamily { gaussian, epanechnikov, higher_order };

class KernelSpec {
public:
    /// Standard normal density (order 1). tail_coefficient defaults to sqrt(log N) for N = 2000.
    static KernelSpec gaussian();
    /// 0.75 (1 - t^2) on [-1, 1] (order 1).
    static KernelSpec epanechnikov();
    /// P(t^2) * phi(t) with the polynomial chosen so moments 1..order vanish.
    static KernelSpec higher_order(int order);
    /// "gaussian", "epanechnikov" or "higher_order" (the latter uses `order`).
    static KernelSpec from_name(std::string_view name, int order = 3);

    KernelFamily family() const noexcept { return family_; }
    int order() const noexcept { return order_; }
    bool bounded() const noexcept { return family_ == KernelFamily::epanechnikov; }
    /// Support interval for bounded kernels; (-inf, inf) otherwise.
    double support_lo() const noexcept { return bounded() ? -1.0 : -INFINITY; }
    double support_hi() const noexcept { return bounded() ? 1.0 : INFINITY; }
    /// C_N in the tail condition  int_{C_N/2}^inf |K| <= C delta^beta.
    double tail_coefficient() const noexcept { return tail_coefficient_; }
    KernelSpec with_tail_coefficient(double c) const;
    /// Coefficients a_k of P(t^2) = sum_k a_k t^{2k} (gaussian-based families only).
    const std::vector<double>& poly_coefficients() const noexcept { return poly_; }
    std::string name() const;

    double density(double t) const noexcept;
    /// integral_t^inf K(s) ds
    double upper_tail(double t) const noexcept;

private:
    KernelSpec(KernelFamily family, int order, std::vector<double> poly, double tail_coefficient);

    KernelFamily family_;
    int order_;
    std::vector<double> poly_;
    double tail_coefficient_;
};

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double KernelSpec::density(double t) const noexcept {
    switch (family_) {
        case KernelFamily::gaussian:
            return kInvSqrt2Pi * std::exp(-0.5 * t * t);
        case KernelFamily::epanechnikov:
            return std::abs(t) <= 1.0 ? 0.75 * (1.0 - t * t) : 0.0;
        case KernelFamily::higher_order: {
            const double t2 = t * t;
            double p = 0.0;
            for (auto it = poly_.rbegin(); it != poly_.rend(); ++it) p = p * t2 + *it;
            return p * kInvSqrt2Pi * std::exp(-0.5 * t2);
        }
    }
    return 0.0;
}

/// L_delta(u). Throws ArgumentError for delta <= 0.
double surrogate_loss(double u, double delta, const KernelSpec& kernel);
/// dL_delta/du = -K(u/delta)/delta. Throws ArgumentError for delta <= 0.
double surrogate_loss_deriv(double u, double delta, const KernelSpec& kernel);

struct MomentCheck {
    int power;       // j in  int t^j K(t) dt
    double value;
    double target;
    double residual() const { return std::abs(value - target); }
};

struct KernelReport {
    std::string kernel;
    MomentCheck mass;                  // j = 0, target 1
    std::vector<MomentCheck> moments;  // j = 1..order, target 0
    double l2_norm_sq;                 // int K^2
    double tail_mass;                  // int_{C_N/2}^inf |K|
    double sup_abs;                    // sup |K| (grid + analytic candidates)
    double max_residual() const;
};

/// Adaptive Gauss-Kronrod estimates of the kernel's moments and norms.
KernelReport verify_kernel(const KernelSpec& kernel);

}  // namespace mcid
